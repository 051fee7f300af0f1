//! Sparse residue-aligned anchoring: identity clamping at key CDR residues
//! plus an additive projected hidden-state term on their embeddings.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::structure::aa::{self, STANDARD, UNKNOWN};
use crate::structure::{CdrAnnotation, Complex, ResidueId};

pub const INIT_RANGE: f64 = 0.02;
const MASK_LABEL: &str = "<X>";

#[derive(Debug, Error)]
pub enum AnchorError {
    #[error("key residue {0} lies outside the CDR set")]
    KeyOutsideCdr(ResidueId),
    #[error("no hidden vector for key residue {0}")]
    MissingHidden(ResidueId),
    #[error("no predicted identity for key residue {0}")]
    MissingIdentity(ResidueId),
    #[error("hidden vector or identity given for non-key residue {0}")]
    NotAKey(ResidueId),
    #[error("{0:?} is not one of the twenty standard amino acids")]
    InvalidIdentity(char),
    #[error("residue {0} is not part of the complex")]
    UnknownResidue(ResidueId),
    #[error("{what}: expected {expected}, found {found}")]
    DimMismatch {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("parse error: {0}")]
    ParseError(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn mismatch(what: &str, expected: usize, found: usize) -> AnchorError {
    AnchorError::DimMismatch {
        what: what.to_string(),
        expected,
        found,
    }
}

/// Identity embeddings e(.) for the twenty residues plus the unknown-token row.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub dim: usize,
    /// Rows in `aa::STANDARD` order.
    pub rows: Vec<Vec<f64>>,
    pub mask_row: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(rows: Vec<Vec<f64>>, mask_row: Vec<f64>) -> Result<Self, AnchorError> {
        let dim = mask_row.len();
        if rows.len() != STANDARD.len() {
            return Err(mismatch("embedding rows", STANDARD.len(), rows.len()));
        }
        for r in &rows {
            if r.len() != dim {
                return Err(mismatch("embedding width", dim, r.len()));
            }
        }
        if rows.iter().flatten().chain(&mask_row).any(|x| !x.is_finite()) {
            return Err(AnchorError::ParseError("non-finite embedding value".into()));
        }
        Ok(EmbeddingTable { dim, rows, mask_row })
    }

    /// e(aa); nonstandard or masked identities map to the unknown-token row.
    pub fn row(&self, c: char) -> &[f64] {
        match aa::standard_index(c) {
            Some(i) => &self.rows[i],
            None => &self.mask_row,
        }
    }
}

/// Row-major d_gen x d_llm matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix {
    pub d_gen: usize,
    pub d_llm: usize,
    pub values: Vec<f64>,
}

impl ProjectionMatrix {
    pub fn new(d_gen: usize, d_llm: usize, values: Vec<f64>) -> Result<Self, AnchorError> {
        if values.len() != d_gen * d_llm {
            return Err(mismatch("projection entries", d_gen * d_llm, values.len()));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(AnchorError::ParseError("non-finite projection value".into()));
        }
        Ok(ProjectionMatrix { d_gen, d_llm, values })
    }

    pub fn zeros(d_gen: usize, d_llm: usize) -> Self {
        ProjectionMatrix {
            d_gen,
            d_llm,
            values: vec![0.0; d_gen * d_llm],
        }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        ProjectionMatrix {
            values: self.values.iter().map(|v| v * alpha).collect(),
            ..self.clone()
        }
    }

    pub fn apply(&self, h: &[f64]) -> Result<Vec<f64>, AnchorError> {
        if h.len() != self.d_llm {
            return Err(mismatch("hidden vector length", self.d_llm, h.len()));
        }
        Ok(self
            .values
            .chunks_exact(self.d_llm)
            .map(|row| row.iter().zip(h).map(|(w, x)| w * x).sum())
            .collect())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnchorSpec {
    pub cdr_set: BTreeSet<ResidueId>,
    pub key_set: BTreeSet<ResidueId>,
    pub identities: BTreeMap<ResidueId, char>,
    pub hidden: BTreeMap<ResidueId, Vec<f64>>,
}

impl AnchorSpec {
    pub fn from_cdrs(cdrs: &CdrAnnotation) -> Self {
        AnchorSpec {
            cdr_set: cdrs.residue_ids().into_iter().collect(),
            ..Default::default()
        }
    }

    pub fn add_key(&mut self, id: ResidueId, aa: char, h: Vec<f64>) {
        self.key_set.insert(id.clone());
        self.identities.insert(id.clone(), aa);
        self.hidden.insert(id, h);
    }

    pub fn validate(&self) -> Result<(), AnchorError> {
        for k in &self.key_set {
            if !self.cdr_set.contains(k) {
                return Err(AnchorError::KeyOutsideCdr(k.clone()));
            }
            let aa = *self
                .identities
                .get(k)
                .ok_or_else(|| AnchorError::MissingIdentity(k.clone()))?;
            if !aa::is_standard(aa) {
                return Err(AnchorError::InvalidIdentity(aa));
            }
            if !self.hidden.contains_key(k) {
                return Err(AnchorError::MissingHidden(k.clone()));
            }
        }
        if let Some(extra) = self
            .identities
            .keys()
            .chain(self.hidden.keys())
            .find(|k| !self.key_set.contains(*k))
        {
            return Err(AnchorError::NotAKey(extra.clone()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchoredResidue {
    pub chain: String,
    pub pos: usize,
    pub k_gen: char,
    pub e_gen: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnchorOutput {
    pub residues: Vec<AnchoredResidue>,
}

impl AnchorOutput {
    pub fn get(&self, id: &ResidueId) -> Option<&AnchoredResidue> {
        self.residues.iter().find(|r| r.chain == id.chain && r.pos == id.pos)
    }

    pub fn write_jsonl(&self, mut w: impl Write) -> std::io::Result<()> {
        for r in &self.residues {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// (residue, native identity) for every residue of the complex, in order.
pub fn residue_universe(complex: &Complex) -> Vec<(ResidueId, char)> {
    complex.residues().map(|r| (r.id(), r.aa)).collect()
}

pub fn build_anchors(
    residues: &[(ResidueId, char)],
    spec: &AnchorSpec,
    table: &EmbeddingTable,
    proj: &ProjectionMatrix,
) -> Result<AnchorOutput, AnchorError> {
    spec.validate()?;
    if proj.d_gen != table.dim {
        return Err(mismatch("projection rows vs embedding dim", table.dim, proj.d_gen));
    }
    let known: BTreeSet<&ResidueId> = residues.iter().map(|(id, _)| id).collect();
    if let Some(k) = spec.key_set.iter().find(|k| !known.contains(k)) {
        return Err(AnchorError::UnknownResidue(k.clone()));
    }
    let mut out = Vec::with_capacity(residues.len());
    for (id, native) in residues {
        let (k_gen, e_gen) = if spec.key_set.contains(id) {
            let k = spec.identities[id];
            let delta = proj.apply(&spec.hidden[id])?;
            let e: Vec<f64> = table.row(k).iter().zip(&delta).map(|(a, b)| a + b).collect();
            (k, e)
        } else if spec.cdr_set.contains(id) {
            (UNKNOWN, table.mask_row.clone())
        } else {
            (*native, table.row(*native).to_vec())
        };
        out.push(AnchoredResidue {
            chain: id.chain.clone(),
            pos: id.pos,
            k_gen,
            e_gen,
        });
    }
    Ok(AnchorOutput { residues: out })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F32,
    F64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TensorHeader {
    d_gen: usize,
    #[serde(rename = "d_LLM")]
    d_llm: usize,
    row_order: Vec<String>,
    dtype: Dtype,
}

fn row_order() -> Vec<String> {
    STANDARD
        .iter()
        .map(|c| c.to_string())
        .chain(std::iter::once(MASK_LABEL.to_string()))
        .collect()
}

/// Writes the parameter file: u64 LE header length, JSON header, then the
/// 21 embedding rows (standard order, unknown token last) followed by the
/// projection matrix in row-major order, all little endian.
pub fn save_params(
    mut w: impl Write,
    table: &EmbeddingTable,
    proj: &ProjectionMatrix,
    dtype: Dtype,
) -> Result<(), AnchorError> {
    let header = TensorHeader {
        d_gen: table.dim,
        d_llm: proj.d_llm,
        row_order: row_order(),
        dtype,
    };
    let h = serde_json::to_vec(&header).expect("header serializes");
    w.write_all(&(h.len() as u64).to_le_bytes())?;
    w.write_all(&h)?;
    let values = table.rows.iter().flatten().chain(&table.mask_row).chain(&proj.values);
    for &v in values {
        match dtype {
            Dtype::F64 => w.write_all(&v.to_le_bytes())?,
            Dtype::F32 => w.write_all(&(v as f32).to_le_bytes())?,
        }
    }
    Ok(())
}

pub fn load_params(mut r: impl Read) -> Result<(EmbeddingTable, ProjectionMatrix), AnchorError> {
    let parse = |m: &str| AnchorError::ParseError(m.to_string());
    let mut len = [0u8; 8];
    r.read_exact(&mut len).map_err(|_| parse("truncated header length"))?;
    let n = u64::from_le_bytes(len) as usize;
    if n > 1 << 20 {
        return Err(parse("header too large"));
    }
    let mut h = vec![0u8; n];
    r.read_exact(&mut h).map_err(|_| parse("truncated header"))?;
    let header: TensorHeader = serde_json::from_slice(&h).map_err(|e| AnchorError::ParseError(e.to_string()))?;
    if header.row_order != row_order() {
        return Err(parse("unexpected row order"));
    }
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    let width = match header.dtype {
        Dtype::F32 => 4,
        Dtype::F64 => 8,
    };
    let count = 21 * header.d_gen + header.d_gen * header.d_llm;
    if payload.len() != count * width {
        return Err(mismatch("payload bytes", count * width, payload.len()));
    }
    let values: Vec<f64> = payload
        .chunks_exact(width)
        .map(|b| match header.dtype {
            Dtype::F32 => f32::from_le_bytes(b.try_into().expect("4 bytes")) as f64,
            Dtype::F64 => f64::from_le_bytes(b.try_into().expect("8 bytes")),
        })
        .collect();
    let d = header.d_gen;
    let rows: Vec<Vec<f64>> = values[..20 * d].chunks_exact(d.max(1)).take(20).map(<[f64]>::to_vec).collect();
    let table = EmbeddingTable::new(rows, values[20 * d..21 * d].to_vec())?;
    let proj = ProjectionMatrix::new(d, header.d_llm, values[21 * d..].to_vec())?;
    Ok((table, proj))
}

/// Seeded uniform init in [-0.02, 0.02].
pub fn init_params(d_gen: usize, d_llm: usize, seed: u64) -> (EmbeddingTable, ProjectionMatrix) {
    let mut rng = crate::tasks::rng_from(seed);
    let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-INIT_RANGE..=INIT_RANGE)).collect() };
    let rows = (0..20).map(|_| draw(d_gen)).collect();
    let mask_row = draw(d_gen);
    let values = draw(d_gen * d_llm);
    (
        EmbeddingTable {
            dim: d_gen,
            rows,
            mask_row,
        },
        ProjectionMatrix { d_gen, d_llm, values },
    )
}

pub fn load_or_init_params(
    source: Option<&Path>,
    dims: (usize, usize),
    seed: u64,
) -> Result<(EmbeddingTable, ProjectionMatrix), AnchorError> {
    let (d_gen, d_llm) = dims;
    if d_gen == 0 || d_llm == 0 {
        return Err(AnchorError::ParseError("dimensions must be positive".into()));
    }
    let Some(path) = source else {
        return Ok(init_params(d_gen, d_llm, seed));
    };
    let (table, proj) = load_params(BufReader::new(File::open(path)?))?;
    if table.dim != d_gen {
        return Err(mismatch("d_gen", d_gen, table.dim));
    }
    if proj.d_llm != d_llm {
        return Err(mismatch("d_LLM", d_llm, proj.d_llm));
    }
    Ok((table, proj))
}

/// One line of the hidden-vector sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenRecord {
    pub structure_id: String,
    pub chain: String,
    pub pos: usize,
    /// Predicted identity for the key residue.
    pub aa: char,
    pub h: Vec<f64>,
}

/// Reads the sidecar, grouping records by structure id.
pub fn read_hidden(path: &Path) -> Result<BTreeMap<String, Vec<HiddenRecord>>, AnchorError> {
    let mut out: BTreeMap<String, Vec<HiddenRecord>> = BTreeMap::new();
    for (k, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: HiddenRecord = serde_json::from_str(&line)
            .map_err(|e| AnchorError::ParseError(format!("line {}: {e}", k + 1)))?;
        out.entry(rec.structure_id.clone()).or_default().push(rec);
    }
    Ok(out)
}

pub fn spec_from_records(cdrs: &CdrAnnotation, records: &[HiddenRecord]) -> AnchorSpec {
    let mut spec = AnchorSpec::from_cdrs(cdrs);
    for r in records {
        spec.add_key(ResidueId::new(r.chain.clone(), r.pos), r.aa.to_ascii_uppercase(), r.h.clone());
    }
    spec
}

#[cfg(test)]
mod tests {
    use super::*;

    fn universe() -> Vec<(ResidueId, char)> {
        "ACDEFGHIKL"
            .chars()
            .enumerate()
            .map(|(i, c)| (ResidueId::new("H", i + 1), c))
            .collect()
    }

    #[test]
    fn hand_matrix_vector_product() {
        let mut rows = vec![vec![0.0; 3]; 20];
        rows[0] = vec![1.0, 0.0, 0.0];
        let table = EmbeddingTable::new(rows, vec![9.0; 3]).unwrap();
        let proj = ProjectionMatrix::new(3, 2, vec![1.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        let mut spec = AnchorSpec {
            cdr_set: (3..=6).map(|p| ResidueId::new("H", p)).collect(),
            ..Default::default()
        };
        spec.add_key(ResidueId::new("H", 4), 'A', vec![2.0, 3.0]);
        let out = build_anchors(&universe(), &spec, &table, &proj).unwrap();
        let key = out.get(&ResidueId::new("H", 4)).unwrap();
        assert_eq!(key.k_gen, 'A');
        assert_eq!(key.e_gen, vec![3.0, 3.0, 5.0]);
        let masked = out.get(&ResidueId::new("H", 5)).unwrap();
        assert_eq!((masked.k_gen, masked.e_gen.clone()), ('X', vec![9.0; 3]));
        let native = out.get(&ResidueId::new("H", 1)).unwrap();
        assert_eq!((native.k_gen, native.e_gen.clone()), ('A', vec![1.0, 0.0, 0.0]));
    }

    #[test]
    fn key_outside_cdr_rejected() {
        let (table, proj) = init_params(4, 2, 1);
        let mut spec = AnchorSpec::default();
        spec.add_key(ResidueId::new("H", 1), 'A', vec![0.0, 0.0]);
        assert!(matches!(
            build_anchors(&universe(), &spec, &table, &proj),
            Err(AnchorError::KeyOutsideCdr(_))
        ));
        spec.cdr_set.insert(ResidueId::new("H", 1));
        spec.hidden.clear();
        assert!(matches!(
            build_anchors(&universe(), &spec, &table, &proj),
            Err(AnchorError::MissingHidden(_))
        ));
    }

    #[test]
    fn params_round_trip_and_determinism() {
        let a = init_params(8, 4, 7);
        assert_eq!(a, init_params(8, 4, 7));
        assert!(a.0.rows.iter().flatten().all(|v| v.abs() <= INIT_RANGE));
        let mut buf = Vec::new();
        save_params(&mut buf, &a.0, &a.1, Dtype::F64).unwrap();
        assert_eq!(load_params(&buf[..]).unwrap(), a);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.bin");
        std::fs::write(&path, &buf).unwrap();
        assert!(matches!(
            load_or_init_params(Some(&path), (8, 16), 0),
            Err(AnchorError::DimMismatch { .. })
        ));
        let mut buf32 = Vec::new();
        save_params(&mut buf32, &a.0, &a.1, Dtype::F32).unwrap();
        let b = load_params(&buf32[..]).unwrap();
        assert!((b.1.values[3] - a.1.values[3]).abs() < 1e-8);
    }
}
