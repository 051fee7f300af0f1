//! Cross-chain contacts: atomic interface scores, salt bridges, hotspot
//! rankings and the chain-pair interaction graph.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geom::{dist2, CellGrid, Vec3};
use crate::structure::{Chain, Complex, Residue};

use super::{LabelError, LabelRules};

/// Per-residue interface record for one chain pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterfaceScore {
    pub atomic_contact_count: usize,
    pub delta_sasa: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankMode {
    Interface,
    Hotspot,
}

/// Side-chain nitrogens of basic residues.
pub fn basic_nitrogens(aa: char) -> &'static [&'static str] {
    match aa {
        'K' => &["NZ"],
        'R' => &["NE", "NH1", "NH2"],
        'H' => &["ND1", "NE2"],
        _ => &[],
    }
}

/// Carboxylate oxygens of acidic residues.
pub fn acidic_oxygens(aa: char) -> &'static [&'static str] {
    match aa {
        'D' => &["OD1", "OD2"],
        'E' => &["OE1", "OE2"],
        _ => &[],
    }
}

/// True when one residue donates a basic N within `cutoff` of the other's
/// carboxylate O.
pub fn is_salt_bridge(a: &Residue, b: &Residue, cutoff: f64) -> bool {
    let c2 = cutoff * cutoff;
    let check = |base: &Residue, acid: &Residue| {
        basic_nitrogens(base.aa).iter().filter_map(|n| base.atom_pos(n)).any(|pn| {
            acidic_oxygens(acid.aa)
                .iter()
                .filter_map(|o| acid.atom_pos(o))
                .any(|po| dist2(pn, po) <= c2)
        })
    };
    check(a, b) || check(b, a)
}

/// Heavy-atom pairs between two residues within `cutoff`.
pub fn residue_atom_contacts(a: &Residue, b: &Residue, cutoff: f64) -> usize {
    let c2 = cutoff * cutoff;
    a.heavy_atoms()
        .map(|x| b.heavy_atoms().filter(|y| dist2(x.pos, y.pos) <= c2).count())
        .sum()
}

/// N/O to N/O heavy-atom pair within `cutoff` (a geometric hydrogen-bond proxy).
pub fn has_polar_contact(a: &Residue, b: &Residue, cutoff: f64) -> bool {
    let c2 = cutoff * cutoff;
    let polar = |r: &Residue| {
        r.heavy_atoms()
            .filter(|x| x.element == "N" || x.element == "O")
            .map(|x| x.pos)
            .collect::<Vec<_>>()
    };
    let pb = polar(b);
    polar(a).iter().any(|p| pb.iter().any(|q| dist2(*p, *q) <= c2))
}

struct ChainAtoms {
    pos: Vec<Vec3>,
    owner: Vec<usize>,
    grid: CellGrid,
}

impl ChainAtoms {
    fn new(chain: &Chain, cell: f64) -> Self {
        let mut pos = Vec::new();
        let mut owner = Vec::new();
        for (ri, r) in chain.residues.iter().enumerate() {
            for a in r.heavy_atoms() {
                pos.push(a.pos);
                owner.push(ri);
            }
        }
        let grid = CellGrid::new(&pos, cell);
        ChainAtoms { pos, owner, grid }
    }

    /// Per-residue counts of atoms in `self` within `cutoff` of any atom
    /// from `other`, tallied from the viewpoint of each side.
    fn contact_counts(&self, other: &ChainAtoms, cutoff: f64, n_self: usize, n_other: usize) -> (Vec<usize>, Vec<usize>) {
        let c2 = cutoff * cutoff;
        let mut mine = vec![0usize; n_self];
        let mut theirs = vec![0usize; n_other];
        for (i, p) in self.pos.iter().enumerate() {
            other.grid.for_each_candidate(*p, cutoff, |j| {
                if dist2(*p, other.pos[j]) <= c2 {
                    mine[self.owner[i]] += 1;
                    theirs[other.owner[j]] += 1;
                }
            });
        }
        (mine, theirs)
    }
}

/// Atomic contact counts for every residue of the two chains against the other chain.
pub fn atomic_contact_counts(complex: &Complex, pair: (&str, &str), rules: &LabelRules) -> Result<(Vec<usize>, Vec<usize>), LabelError> {
    let a = chain(complex, pair.0)?;
    let b = chain(complex, pair.1)?;
    let cut = rules.interface_cutoff;
    let aa = ChainAtoms::new(a, cut.max(1.0));
    let bb = ChainAtoms::new(b, cut.max(1.0));
    Ok(aa.contact_counts(&bb, cut, a.len(), b.len()))
}

fn chain<'a>(complex: &'a Complex, id: &str) -> Result<&'a Chain, LabelError> {
    complex
        .chain(id)
        .ok_or_else(|| LabelError::UnknownChain(id.to_string()))
}

/// Number of residue pairs across the two chains forming a salt bridge.
pub fn salt_bridge_count(complex: &Complex, pair: (&str, &str), rules: &LabelRules) -> Result<usize, LabelError> {
    let a = chain(complex, pair.0)?;
    let b = chain(complex, pair.1)?;
    let acids_or_bases = |c: &Chain| -> Vec<(usize, Vec3)> {
        c.residues
            .iter()
            .enumerate()
            .flat_map(|(i, r)| {
                basic_nitrogens(r.aa)
                    .iter()
                    .chain(acidic_oxygens(r.aa))
                    .filter_map(move |n| r.atom_pos(n).map(|p| (i, p)))
            })
            .collect()
    };
    let ga = acids_or_bases(a);
    let gb = acids_or_bases(b);
    let pts: Vec<Vec3> = gb.iter().map(|x| x.1).collect();
    let grid = CellGrid::new(&pts, rules.salt_bridge_cutoff.max(1.0));
    let mut seen = std::collections::BTreeSet::new();
    for (ia, p) in &ga {
        grid.for_each_candidate(*p, rules.salt_bridge_cutoff, |k| {
            let ib = gb[k].0;
            if !seen.contains(&(*ia, ib)) && is_salt_bridge(&a.residues[*ia], &b.residues[ib], rules.salt_bridge_cutoff) {
                seen.insert((*ia, ib));
            }
        });
    }
    Ok(seen.len())
}

pub const SALT_BRIDGE_BINS: [&str; 6] = ["0", "1-2", "3-5", "6-10", "11-20", ">20"];

pub fn salt_bridge_bin_label(count: usize) -> &'static str {
    match count {
        0 => "0",
        1..=2 => "1-2",
        3..=5 => "3-5",
        6..=10 => "6-10",
        11..=20 => "11-20",
        _ => ">20",
    }
}

pub fn salt_bridge_bin(complex: &Complex, pair: (&str, &str), rules: &LabelRules) -> Result<&'static str, LabelError> {
    salt_bridge_count(complex, pair, rules).map(salt_bridge_bin_label)
}

/// Sorts residues with at least one contact by the requested score and keeps `k`.
/// Returned values are 1-based residue positions.
pub fn rank_scores(scores: &[InterfaceScore], k: usize, mode: RankMode) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len())
        .filter(|&i| scores[i].atomic_contact_count > 0)
        .collect();
    idx.sort_by(|&x, &y| {
        let (a, b) = (&scores[x], &scores[y]);
        let primary = b.atomic_contact_count.cmp(&a.atomic_contact_count);
        let secondary = match mode {
            RankMode::Interface => std::cmp::Ordering::Equal,
            RankMode::Hotspot => b.delta_sasa.total_cmp(&a.delta_sasa),
        };
        primary.then(secondary).then(x.cmp(&y))
    });
    idx.truncate(k);
    idx.into_iter().map(|i| i + 1).collect()
}

/// Scores for both chains of a pair. `delta_sasa` is taken from `areas`
/// (indexed like `complex.chains`) when given, otherwise left at zero.
pub fn interface_scores(
    complex: &Complex,
    pair: (&str, &str),
    delta: Option<&[Vec<f64>]>,
    rules: &LabelRules,
) -> Result<(Vec<InterfaceScore>, Vec<InterfaceScore>), LabelError> {
    let (ca, cb) = atomic_contact_counts(complex, pair, rules)?;
    let build = |counts: Vec<usize>, chain_id: &str| {
        let ci = complex.chain_index(chain_id).expect("chain checked above");
        counts
            .into_iter()
            .enumerate()
            .map(|(ri, n)| InterfaceScore {
                atomic_contact_count: n,
                delta_sasa: delta.map(|d| d[ci][ri]).unwrap_or(0.0),
            })
            .collect::<Vec<_>>()
    };
    Ok((build(ca, pair.0), build(cb, pair.1)))
}

/// Top-k residues per chain. Hotspot mode needs bound/unbound areas, which
/// are computed here; callers holding a [`super::LabelSet`] should use
/// [`rank_scores`] on its cached scores instead.
pub fn rank_interface_residues(
    complex: &Complex,
    pair: (&str, &str),
    k: usize,
    mode: RankMode,
    rules: &LabelRules,
) -> Result<(Vec<usize>, Vec<usize>), LabelError> {
    let delta = match mode {
        RankMode::Interface => None,
        RankMode::Hotspot => {
            let areas = super::sasa::residue_sasa(complex, rules.sasa());
            Some(super::delta_sasa(&areas))
        }
    };
    let (a, b) = interface_scores(complex, pair, delta.as_deref(), rules)?;
    Ok((rank_scores(&a, k, mode), rank_scores(&b, k, mode)))
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChainPair {
    pub chain_i: String,
    pub chain_j: String,
}

impl ChainPair {
    pub fn new(i: &str, j: &str) -> Self {
        ChainPair {
            chain_i: i.to_string(),
            chain_j: j.to_string(),
        }
    }

    pub fn as_tuple(&self) -> (&str, &str) {
        (&self.chain_i, &self.chain_j)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainPairGraph {
    /// Residue-pair contact counts (reference-atom rule) for every pair with at least one.
    pub counts: BTreeMap<ChainPair, usize>,
    /// Pairs at or above the interaction threshold, in chain order.
    pub pairs: Vec<ChainPair>,
    pub top: Option<ChainPair>,
}

impl ChainPairGraph {
    pub fn top_pair(&self) -> Result<&ChainPair, LabelError> {
        self.top.as_ref().ok_or(LabelError::NoChainPairs)
    }
}

/// Counts Cβ-contacting residue pairs between every two chains. Pairs are
/// keyed with the earlier chain (file order) first.
pub fn chain_pair_graph(complex: &Complex, rules: &LabelRules) -> ChainPairGraph {
    let refs: Vec<Vec<Vec3>> = complex
        .chains
        .iter()
        .map(|c| c.residues.iter().filter_map(|r| r.reference_atom()).collect())
        .collect();
    let cut = rules.contact_cutoff;
    let c2 = cut * cut;
    let mut counts = BTreeMap::new();
    let mut ordered = Vec::new();
    for i in 0..complex.chains.len() {
        for j in i + 1..complex.chains.len() {
            let grid = CellGrid::new(&refs[j], cut);
            let mut n = 0usize;
            for p in &refs[i] {
                grid.for_each_candidate(*p, cut, |k| {
                    if dist2(*p, refs[j][k]) < c2 {
                        n += 1;
                    }
                });
            }
            if n > 0 {
                let key = ChainPair::new(&complex.chains[i].chain_id, &complex.chains[j].chain_id);
                counts.insert(key.clone(), n);
                ordered.push((key, n));
            }
        }
    }
    let pairs = ordered
        .iter()
        .filter(|(_, n)| *n >= rules.chain_pair_threshold)
        .map(|(p, _)| p.clone())
        .collect();
    // strict > keeps the lexicographically first pair on ties
    let mut top: Option<(&ChainPair, usize)> = None;
    for (p, &n) in &counts {
        if top.is_none_or(|(_, best)| n > best) {
            top = Some((p, n));
        }
    }
    let top = top.map(|(p, _)| p.clone());
    ChainPairGraph { counts, pairs, top }
}
