//! Canonical in-memory protein complexes.
//!
//! Structures are parsed from PDB or mmCIF text into a [`Complex`]: ordered
//! chains of densely re-indexed residues (1-based within each chain) holding
//! the atoms that survived alt-loc selection. Only amino-acid polymer
//! residues are kept; waters, ligands and nucleotides are dropped and
//! nonstandard amino acids collapse to `X`.

pub mod aa;
mod annotation;
pub mod build;
mod mmcif;
mod pdb;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec3;

pub use annotation::{
    apply_cdr_mask, load_cdr_annotations, validate_hotspots, AnnotationDoc, AnnotationError,
    CdrAnnotation, CdrLoop, LoopInterval, ResidueRef,
};

#[derive(Debug, Error)]
pub enum StructureError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("structure {0} contains no polymer residues")]
    EmptyComplex(String),
    #[error("invalid canonical complex: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceFormat {
    Mmcif,
    Pdb,
}

impl SourceFormat {
    /// Guesses the format from a file extension (`.cif`, `.mmcif`, `.pdb`, `.ent`).
    pub fn from_extension(ext: &str) -> Option<Self> {
        match ext.to_ascii_lowercase().as_str() {
            "cif" | "mmcif" => Some(SourceFormat::Mmcif),
            "pdb" | "ent" => Some(SourceFormat::Pdb),
            _ => None,
        }
    }
}

/// A (chain, 1-based position) address.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ResidueId {
    pub chain: String,
    pub pos: usize,
}

impl ResidueId {
    pub fn new(chain: impl Into<String>, pos: usize) -> Self {
        ResidueId {
            chain: chain.into(),
            pos,
        }
    }
}

impl fmt::Display for ResidueId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.chain, self.pos)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomRecord {
    pub name: String,
    pub element: String,
    pub pos: Vec3,
    pub alt_loc: Option<char>,
    pub occupancy: f64,
}

impl AtomRecord {
    pub fn is_hydrogen(&self) -> bool {
        matches!(self.element.as_str(), "H" | "D")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residue {
    pub chain_id: String,
    pub pos: usize,
    pub aa: char,
    /// Residue name as found in the file (three-letter component id).
    pub name: String,
    /// Author numbering, kept for diagnostics only.
    pub auth_seq: i32,
    pub ins_code: Option<char>,
    pub atoms: Vec<AtomRecord>,
    pub complete_backbone: bool,
}

impl Residue {
    pub fn atom(&self, name: &str) -> Option<&AtomRecord> {
        self.atoms.iter().find(|a| a.name == name)
    }

    pub fn atom_pos(&self, name: &str) -> Option<Vec3> {
        self.atom(name).map(|a| a.pos)
    }

    pub fn id(&self) -> ResidueId {
        ResidueId::new(self.chain_id.clone(), self.pos)
    }

    /// Cβ position, or Cα for glycine.
    pub fn reference_atom(&self) -> Option<Vec3> {
        if self.aa == 'G' {
            self.atom_pos("CA")
        } else {
            self.atom_pos("CB")
        }
    }

    pub fn heavy_atoms(&self) -> impl Iterator<Item = &AtomRecord> {
        self.atoms.iter().filter(|a| !a.is_hydrogen())
    }

    fn has_backbone(atoms: &[AtomRecord]) -> bool {
        ["N", "CA", "C", "O"]
            .iter()
            .all(|n| atoms.iter().any(|a| a.name == *n))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub chain_id: String,
    pub residues: Vec<Residue>,
}

impl Chain {
    pub fn sequence(&self) -> String {
        self.residues.iter().map(|r| r.aa).collect()
    }

    pub fn residue(&self, pos: usize) -> Option<&Residue> {
        pos.checked_sub(1).and_then(|i| self.residues.get(i))
    }

    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }

    /// Map from author numbering `(auth_seq, ins_code)` to dense position.
    pub fn author_index(&self) -> HashMap<(i32, Option<char>), usize> {
        self.residues
            .iter()
            .map(|r| ((r.auth_seq, r.ins_code), r.pos))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Complex {
    pub id: String,
    pub source_format: SourceFormat,
    pub chains: Vec<Chain>,
}

impl Complex {
    pub fn chain(&self, chain_id: &str) -> Option<&Chain> {
        self.chains.iter().find(|c| c.chain_id == chain_id)
    }

    pub fn chain_index(&self, chain_id: &str) -> Option<usize> {
        self.chains.iter().position(|c| c.chain_id == chain_id)
    }

    /// Residue lookup by `(chain, pos)`. Positions are dense so this is an
    /// index into the chain's residue vector.
    pub fn residue(&self, chain_id: &str, pos: usize) -> Option<&Residue> {
        self.chain(chain_id).and_then(|c| c.residue(pos))
    }

    pub fn residue_by_id(&self, id: &ResidueId) -> Option<&Residue> {
        self.residue(&id.chain, id.pos)
    }

    pub fn residues(&self) -> impl Iterator<Item = &Residue> {
        self.chains.iter().flat_map(|c| c.residues.iter())
    }

    pub fn num_residues(&self) -> usize {
        self.chains.iter().map(|c| c.residues.len()).sum()
    }

    pub fn chain_ids(&self) -> Vec<&str> {
        self.chains.iter().map(|c| c.chain_id.as_str()).collect()
    }

    /// Checks the structural invariants: at least one chain, unique chain
    /// ids, dense 1-based positions, finite coordinates, valid alphabet.
    pub fn validate(&self) -> Result<(), StructureError> {
        if self.chains.is_empty() {
            return Err(StructureError::EmptyComplex(self.id.clone()));
        }
        let mut seen = std::collections::HashSet::new();
        for chain in &self.chains {
            if !seen.insert(chain.chain_id.as_str()) {
                return Err(StructureError::Invalid(format!(
                    "duplicate chain id {}",
                    chain.chain_id
                )));
            }
            for (i, r) in chain.residues.iter().enumerate() {
                if r.pos != i + 1 || r.chain_id != chain.chain_id {
                    return Err(StructureError::Invalid(format!(
                        "residue {}{} out of canonical order",
                        r.chain_id, r.pos
                    )));
                }
                if !aa::is_task_symbol(r.aa) {
                    return Err(StructureError::Invalid(format!("bad residue code {}", r.aa)));
                }
                for a in &r.atoms {
                    if !a.pos.iter().all(|v| v.is_finite()) || !(0.0..=1.0).contains(&a.occupancy) {
                        return Err(StructureError::Invalid(format!(
                            "bad atom {} in {}{}",
                            a.name, r.chain_id, r.pos
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Canonical JSON: fixed key order, one document per complex.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("complex serialization cannot fail")
    }

    pub fn from_canonical_json(text: &str) -> Result<Self, StructureError> {
        let c: Complex =
            serde_json::from_str(text).map_err(|e| StructureError::Invalid(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }
}

/// Parses a structure file. The structure id is taken from the file header
/// when present (`data_` block or `HEADER` record), else `"unknown"`.
pub fn parse_structure(bytes: &[u8], format: SourceFormat) -> Result<Complex, StructureError> {
    parse_structure_with_id(bytes, format, None)
}

pub fn parse_structure_with_id(
    bytes: &[u8],
    format: SourceFormat,
    id: Option<&str>,
) -> Result<Complex, StructureError> {
    if bytes.iter().all(|b| b.is_ascii_whitespace()) {
        return Err(StructureError::Parse("empty input".into()));
    }
    let text = String::from_utf8_lossy(bytes);
    let (header_id, sites) = match format {
        SourceFormat::Pdb => pdb::read_sites(&text)?,
        SourceFormat::Mmcif => mmcif::read_sites(&text)?,
    };
    let id = id
        .map(str::to_string)
        .or(header_id)
        .unwrap_or_else(|| "unknown".to_string());
    assemble(id, format, sites)
}

/// One coordinate record as read from either file format.
#[derive(Debug, Clone)]
pub(crate) struct AtomSite {
    pub hetero: bool,
    pub atom_name: String,
    pub element: String,
    pub alt_loc: Option<char>,
    pub res_name: String,
    pub chain: String,
    pub seq: i32,
    pub ins_code: Option<char>,
    pub pos: Vec3,
    pub occupancy: f64,
    pub model: i32,
    /// `Some(true)` when the file declares the residue's entity as a polymer.
    pub polymer: Option<bool>,
}

pub(crate) fn element_from_name(atom_name: &str) -> String {
    let letters: String = atom_name
        .trim()
        .chars()
        .skip_while(|c| c.is_ascii_digit())
        .take_while(|c| c.is_ascii_alphabetic())
        .collect();
    letters.chars().next().map(|c| c.to_ascii_uppercase().to_string()).unwrap_or_default()
}

fn assemble(id: String, format: SourceFormat, sites: Vec<AtomSite>) -> Result<Complex, StructureError> {
    if sites.is_empty() {
        return Err(StructureError::Parse("no coordinate records".into()));
    }
    let first_model = sites[0].model;

    // Group by residue key in order of first appearance.
    type Key = (String, i32, Option<char>);
    let mut order: Vec<Key> = Vec::new();
    let mut groups: HashMap<Key, Vec<AtomSite>> = HashMap::new();
    for s in sites {
        if s.model != first_model || aa::is_water(&s.res_name) {
            continue;
        }
        if s.polymer == Some(false) {
            continue;
        }
        if !s.pos.iter().all(|v| v.is_finite()) {
            return Err(StructureError::Parse(format!(
                "non-finite coordinate for atom {}",
                s.atom_name
            )));
        }
        let key = (s.chain.clone(), s.seq, s.ins_code);
        groups
            .entry(key.clone())
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(s);
    }

    let mut chains: Vec<Chain> = Vec::new();
    for key in order {
        let sites = groups.remove(&key).unwrap_or_default();
        let Some(residue) = select_residue(&key.0, key.1, key.2, sites) else {
            continue;
        };
        match chains.iter_mut().find(|c| c.chain_id == key.0) {
            Some(c) => c.residues.push(residue),
            None => chains.push(Chain {
                chain_id: key.0.clone(),
                residues: vec![residue],
            }),
        }
    }
    for chain in &mut chains {
        for (i, r) in chain.residues.iter_mut().enumerate() {
            r.pos = i + 1;
        }
    }
    chains.retain(|c| !c.residues.is_empty());
    if chains.is_empty() {
        return Err(StructureError::EmptyComplex(id));
    }
    let complex = Complex {
        id,
        source_format: format,
        chains,
    };
    complex.validate()?;
    Ok(complex)
}

/// Alt-loc resolution plus the amino-acid polymer filter for one residue.
fn select_residue(
    chain: &str,
    seq: i32,
    ins_code: Option<char>,
    sites: Vec<AtomSite>,
) -> Option<Residue> {
    let declared_polymer = sites.iter().any(|s| s.polymer == Some(true));
    let all_hetero = sites.iter().all(|s| s.hetero);

    let mut names: Vec<&str> = Vec::new();
    for s in &sites {
        if !names.contains(&s.atom_name.as_str()) {
            names.push(&s.atom_name);
        }
    }
    let mut atoms = Vec::new();
    let mut res_name: Option<String> = None;
    for name in names {
        let best = sites
            .iter()
            .filter(|s| s.atom_name == name)
            .filter(|s| !(s.alt_loc.is_some() && s.occupancy <= 0.0))
            .max_by(|a, b| {
                a.occupancy
                    .partial_cmp(&b.occupancy)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    // lower alt-loc id wins ties; max_by keeps the last max, so invert
                    .then_with(|| b.alt_loc.cmp(&a.alt_loc))
            });
        let Some(best) = best else { continue };
        if name == "CA" || res_name.is_none() {
            res_name = Some(best.res_name.clone());
        }
        atoms.push(AtomRecord {
            name: best.atom_name.clone(),
            element: if best.element.is_empty() {
                element_from_name(&best.atom_name)
            } else {
                best.element.clone()
            },
            pos: best.pos,
            alt_loc: best.alt_loc,
            occupancy: best.occupancy.clamp(0.0, 1.0),
        });
    }
    let res_name = res_name?;
    let code = aa::three_to_one(&res_name);
    let has_ca = atoms.iter().any(|a| a.name == "CA");
    let amino_like = has_ca
        && atoms.iter().any(|a| a.name == "N")
        && atoms.iter().any(|a| a.name == "C");
    let keep = if code != aa::UNKNOWN {
        // standard residue name: needs to be polymer (declared or ATOM record)
        declared_polymer || !all_hetero || amino_like
    } else {
        // nonstandard: keep only amino-acid-like residues inside a polymer
        amino_like && (declared_polymer || !all_hetero || sites.iter().all(|s| s.polymer.is_none()))
    };
    if !keep {
        return None;
    }
    let complete_backbone = Residue::has_backbone(&atoms);
    Some(Residue {
        chain_id: chain.to_string(),
        pos: 0,
        aa: code,
        name: res_name.trim().to_string(),
        auth_seq: seq,
        ins_code,
        atoms,
        complete_backbone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_GLY_PDB: &str = "\
HEADER    TEST                                    01-JAN-00   TEST
ATOM      1  N   GLY A   1      -0.966   0.493   1.500  1.00  0.00           N
ATOM      2  CA  GLY A   1       0.257   0.418   0.692  1.00  0.00           C
ATOM      3  C   GLY A   1      -0.094   0.017  -0.716  1.00  0.00           C
ATOM      4  O   GLY A   1      -1.056  -0.682  -0.923  1.00  0.00           O
ATOM      5  N   GLY A   3       0.697   0.478  -1.667  1.00  0.00           N
ATOM      6  CA  GLY A   3       0.435   0.111  -3.058  1.00  0.00           C
ATOM      7  C   GLY A   3       1.551  -0.739  -3.634  1.00  0.00           C
ATOM      8  O   GLY A   3       2.541  -0.970  -2.965  1.00  0.00           O
HETATM    9  O   HOH A 101      10.000  10.000  10.000  1.00  0.00           O
END
";

    #[test]
    fn pdb_gap_is_reindexed_densely() {
        let c = parse_structure(TWO_GLY_PDB.as_bytes(), SourceFormat::Pdb).unwrap();
        assert_eq!(c.id, "TEST");
        assert_eq!(c.chains.len(), 1);
        let chain = &c.chains[0];
        assert_eq!(chain.sequence(), "GG");
        assert_eq!(chain.residues[1].pos, 2);
        assert_eq!(chain.residues[1].auth_seq, 3);
        assert!(chain.residues.iter().all(|r| r.complete_backbone));
        assert_eq!(chain.author_index()[&(3, None)], 2);
    }

    #[test]
    fn empty_input_is_parse_error() {
        assert!(matches!(
            parse_structure(b"", SourceFormat::Pdb),
            Err(StructureError::Parse(_))
        ));
        assert!(matches!(
            parse_structure(b"  \n", SourceFormat::Mmcif),
            Err(StructureError::Parse(_))
        ));
    }

    #[test]
    fn waters_only_is_empty_complex() {
        let text = "HETATM    9  O   HOH A 101      10.000  10.000  10.000  1.00  0.00           O\n";
        assert!(matches!(
            parse_structure(text.as_bytes(), SourceFormat::Pdb),
            Err(StructureError::EmptyComplex(_))
        ));
    }

    #[test]
    fn canonical_json_round_trip() {
        let c = parse_structure(TWO_GLY_PDB.as_bytes(), SourceFormat::Pdb).unwrap();
        let text = c.to_canonical_json();
        assert!(text.starts_with("{\"id\":\"TEST\",\"source_format\":\"pdb\",\"chains\""));
        assert_eq!(Complex::from_canonical_json(&text).unwrap(), c);
    }

    #[test]
    fn lookup_by_chain_and_pos() {
        let c = parse_structure(TWO_GLY_PDB.as_bytes(), SourceFormat::Pdb).unwrap();
        assert_eq!(c.residue("A", 2).unwrap().auth_seq, 3);
        assert!(c.residue("A", 0).is_none());
        assert!(c.residue("A", 3).is_none());
        assert!(c.residue("B", 1).is_none());
    }

    #[test]
    fn element_guess_from_atom_name() {
        assert_eq!(element_from_name(" CA "), "C");
        assert_eq!(element_from_name("1HB"), "H");
        assert_eq!(element_from_name("OXT"), "O");
    }
}
