//! Deterministic structure-derived labels.
//!
//! [`compute_labels`] runs every labeler once over a complex and caches the
//! results in a [`LabelSet`]; the task generators only read from it.

pub mod dssp;
pub mod geometry;
pub mod interface;
pub mod sasa;
pub mod summary;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec3;
use crate::structure::{Complex, ResidueId};

pub use dssp::{assign_dssp8, assign_ss3, ss3_string, Dssp8, Ss3};
pub use geometry::{pair_geometry, PairClass, PairGeometry};
pub use interface::{
    chain_pair_graph, rank_interface_residues, salt_bridge_bin, salt_bridge_count, ChainPair,
    ChainPairGraph, InterfaceScore, RankMode,
};
pub use sasa::{max_asa, residue_sasa, ResidueAreas, RsaBin, SasaParams};
pub use summary::{chain_summary, ChainSummary};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabelError {
    #[error("residue {0}{1} has no reference atom (CB, or CA for Gly)")]
    MissingReferenceAtom(String, usize),
    #[error("no residue {0}{1}")]
    UnknownResidue(String, usize),
    #[error("no chain {0}")]
    UnknownChain(String),
    #[error("complex has no interacting chain pair")]
    NoChainPairs,
}

/// Tunable thresholds. Defaults are the documented rules; they are part of
/// the corpus config hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LabelRules {
    pub contact_cutoff: f64,
    pub interface_cutoff: f64,
    pub salt_bridge_cutoff: f64,
    pub polar_contact_cutoff: f64,
    pub chain_pair_threshold: usize,
    pub rsa_buried_below: f64,
    pub rsa_exposed_above: f64,
    pub sasa_probe: f64,
    pub sasa_points: usize,
}

impl Default for LabelRules {
    fn default() -> Self {
        LabelRules {
            contact_cutoff: geometry::CONTACT_CUTOFF,
            interface_cutoff: 5.0,
            salt_bridge_cutoff: 4.0,
            polar_contact_cutoff: 3.5,
            chain_pair_threshold: 10,
            rsa_buried_below: 0.10,
            rsa_exposed_above: 0.40,
            sasa_probe: 1.4,
            sasa_points: 960,
        }
    }
}

impl LabelRules {
    pub fn sasa(&self) -> SasaParams {
        SasaParams {
            probe: self.sasa_probe,
            points: self.sasa_points,
        }
    }
}

/// Per-chain residue labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainLabels {
    pub chain_id: String,
    pub ss3: Vec<Ss3>,
    pub rsa_bin: Vec<RsaBin>,
    /// ASA / max-ASA, absent when the residue type has no reference maximum.
    pub rsa: Vec<Option<f64>>,
    pub cbeta: Vec<Option<Vec3>>,
    pub asa_bound: Vec<f64>,
    pub asa_unbound: Vec<f64>,
    pub summary: ChainSummary,
}

impl ChainLabels {
    pub fn delta_sasa(&self, pos: usize) -> f64 {
        self.asa_unbound[pos - 1] - self.asa_bound[pos - 1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceRecord {
    pub chain: String,
    pub pos: usize,
    pub atomic_contact_count: usize,
    #[serde(rename = "delta_sasa_A2")]
    pub delta_sasa: f64,
}

/// Interface residues (at least one atomic contact) of one chain pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairInterface {
    pub chain_i: String,
    pub chain_j: String,
    pub salt_bridges: usize,
    pub residues: Vec<InterfaceRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSet {
    pub structure_id: String,
    pub rules: LabelRules,
    pub chains: Vec<ChainLabels>,
    pub chain_pairs: ChainPairGraph,
    pub interfaces: Vec<PairInterface>,
}

impl LabelSet {
    pub fn chain(&self, id: &str) -> Option<&ChainLabels> {
        self.chains.iter().find(|c| c.chain_id == id)
    }

    pub fn interface(&self, a: &str, b: &str) -> Option<&PairInterface> {
        self.interfaces
            .iter()
            .find(|p| (p.chain_i == a && p.chain_j == b) || (p.chain_i == b && p.chain_j == a))
    }

    pub fn interface_score(&self, pair: (&str, &str), res: &ResidueId) -> InterfaceScore {
        let rec = self
            .interface(pair.0, pair.1)
            .and_then(|p| p.residues.iter().find(|r| r.chain == res.chain && r.pos == res.pos));
        match rec {
            Some(r) => InterfaceScore {
                atomic_contact_count: r.atomic_contact_count,
                delta_sasa: r.delta_sasa,
            },
            None => InterfaceScore {
                atomic_contact_count: 0,
                delta_sasa: self
                    .chain(&res.chain)
                    .map(|c| c.delta_sasa(res.pos))
                    .unwrap_or(0.0),
            },
        }
    }

    /// Salt bridges between two chains; zero when they share no interface.
    pub fn salt_bridges(&self, a: &str, b: &str) -> usize {
        self.interface(a, b).map(|p| p.salt_bridges).unwrap_or(0)
    }

    /// Top-k per chain for a pair, in the order `(pair.0 list, pair.1 list)`.
    pub fn ranked(&self, pair: (&str, &str), k: usize, mode: RankMode) -> (Vec<usize>, Vec<usize>) {
        let side = |chain: &str| {
            let Some(cl) = self.chain(chain) else {
                return Vec::new();
            };
            let mut scores = vec![
                InterfaceScore {
                    atomic_contact_count: 0,
                    delta_sasa: 0.0
                };
                cl.ss3.len()
            ];
            if let Some(p) = self.interface(pair.0, pair.1) {
                for r in p.residues.iter().filter(|r| r.chain == chain) {
                    scores[r.pos - 1] = InterfaceScore {
                        atomic_contact_count: r.atomic_contact_count,
                        delta_sasa: r.delta_sasa,
                    };
                }
            }
            interface::rank_scores(&scores, k, mode)
        };
        (side(pair.0), side(pair.1))
    }
}

/// `unbound − bound`, indexed like the areas.
pub fn delta_sasa(areas: &ResidueAreas) -> Vec<Vec<f64>> {
    areas
        .bound
        .iter()
        .zip(&areas.unbound)
        .map(|(b, u)| b.iter().zip(u).map(|(b, u)| u - b).collect())
        .collect()
}

/// Bound-state ASA and RSA classes for every residue.
pub fn compute_rsa(complex: &Complex, rules: &LabelRules) -> (Vec<Vec<f64>>, Vec<Vec<RsaBin>>) {
    let areas = residue_sasa(complex, rules.sasa());
    let bins = rsa_bins(complex, &areas.bound, rules).1;
    (areas.bound, bins)
}

fn rsa_bins(complex: &Complex, bound: &[Vec<f64>], rules: &LabelRules) -> (Vec<Vec<Option<f64>>>, Vec<Vec<RsaBin>>) {
    let mut rel = Vec::new();
    let mut bins = Vec::new();
    for (chain, asa) in complex.chains.iter().zip(bound) {
        let r: Vec<Option<f64>> = chain
            .residues
            .iter()
            .zip(asa)
            .map(|(res, a)| {
                if res.heavy_atoms().next().is_none() {
                    return None;
                }
                max_asa(res.aa).map(|m| a / m)
            })
            .collect();
        bins.push(
            r.iter()
                .map(|x| match x {
                    Some(v) => RsaBin::from_relative(*v, rules.rsa_buried_below, rules.rsa_exposed_above),
                    None => RsaBin::NA,
                })
                .collect(),
        );
        rel.push(r);
    }
    (rel, bins)
}

pub fn compute_labels(complex: &Complex, rules: &LabelRules) -> LabelSet {
    let (ss3, areas) = rayon::join(|| assign_ss3(complex), || residue_sasa(complex, rules.sasa()));
    let (rel, bins) = rsa_bins(complex, &areas.bound, rules);
    let delta = delta_sasa(&areas);

    let chains = complex
        .chains
        .iter()
        .enumerate()
        .map(|(ci, chain)| ChainLabels {
            chain_id: chain.chain_id.clone(),
            summary: chain_summary(&chain.chain_id, &ss3[ci]),
            ss3: ss3[ci].clone(),
            rsa_bin: bins[ci].clone(),
            rsa: rel[ci].clone(),
            cbeta: chain.residues.iter().map(|r| r.reference_atom()).collect(),
            asa_bound: areas.bound[ci].clone(),
            asa_unbound: areas.unbound[ci].clone(),
        })
        .collect();

    let mut interfaces = Vec::new();
    for i in 0..complex.chains.len() {
        for j in i + 1..complex.chains.len() {
            let (a, b) = (&complex.chains[i].chain_id, &complex.chains[j].chain_id);
            let (sa, sb) = interface::interface_scores(complex, (a, b), Some(&delta), rules)
                .expect("chains come from the complex");
            let mut residues = Vec::new();
            for (chain, scores) in [(a, sa), (b, sb)] {
                for (ri, s) in scores.into_iter().enumerate() {
                    if s.atomic_contact_count > 0 {
                        residues.push(InterfaceRecord {
                            chain: chain.clone(),
                            pos: ri + 1,
                            atomic_contact_count: s.atomic_contact_count,
                            delta_sasa: s.delta_sasa,
                        });
                    }
                }
            }
            if !residues.is_empty() {
                interfaces.push(PairInterface {
                    chain_i: a.clone(),
                    chain_j: b.clone(),
                    salt_bridges: interface::salt_bridge_count(complex, (a, b), rules)
                        .expect("chains come from the complex"),
                    residues,
                });
            }
        }
    }

    LabelSet {
        structure_id: complex.id.clone(),
        rules: rules.clone(),
        chains,
        chain_pairs: chain_pair_graph(complex, rules),
        interfaces,
    }
}
