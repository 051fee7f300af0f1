//! CDR loop annotations, hotspot references and sequence-level masking.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{aa, Complex, ResidueId};

#[derive(Debug, Error, PartialEq)]
pub enum AnnotationError {
    #[error("annotation references unknown chain {0}")]
    UnknownChain(String),
    #[error("{what} {chain}:{start}-{end} lies outside the chain (length {len})")]
    OutOfRange {
        what: String,
        chain: String,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("loops {0} and {1} overlap")]
    OverlappingLoops(CdrLoop, CdrLoop),
    #[error("unknown CDR loop name {0}")]
    UnknownLoop(String),
    #[error("malformed annotation document: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CdrLoop {
    H1,
    H2,
    H3,
    L1,
    L2,
    L3,
}

impl CdrLoop {
    pub const ALL: [CdrLoop; 6] = [
        CdrLoop::H1,
        CdrLoop::H2,
        CdrLoop::H3,
        CdrLoop::L1,
        CdrLoop::L2,
        CdrLoop::L3,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CdrLoop::H1 => "H1",
            CdrLoop::H2 => "H2",
            CdrLoop::H3 => "H3",
            CdrLoop::L1 => "L1",
            CdrLoop::L2 => "L2",
            CdrLoop::L3 => "L3",
        }
    }

    /// Tag name used in tagged sequences, e.g. `HCDR1`.
    pub fn tag(self) -> String {
        let s = self.as_str();
        format!("{}CDR{}", &s[..1], &s[1..])
    }
}

impl fmt::Display for CdrLoop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CdrLoop {
    type Err = AnnotationError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CdrLoop::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| AnnotationError::UnknownLoop(s.to_string()))
    }
}

/// Inclusive 1-based interval on one chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopInterval {
    pub chain: String,
    pub start: usize,
    pub end: usize,
}

impl LoopInterval {
    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }

    pub fn contains(&self, chain: &str, pos: usize) -> bool {
        self.chain == chain && (self.start..=self.end).contains(&pos)
    }

    pub fn positions(&self) -> impl Iterator<Item = usize> {
        self.start..=self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidueRef {
    pub chain: String,
    pub pos: usize,
}

impl From<&ResidueRef> for ResidueId {
    fn from(r: &ResidueRef) -> Self {
        ResidueId::new(r.chain.clone(), r.pos)
    }
}

/// Annotation sidecar document as stored on disk.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnnotationDoc {
    #[serde(default)]
    pub loops: BTreeMap<String, LoopInterval>,
    #[serde(default)]
    pub hotspots: Vec<ResidueRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lddt: Option<f64>,
}

impl AnnotationDoc {
    pub fn from_json(text: &str) -> Result<Self, AnnotationError> {
        serde_json::from_str(text).map_err(|e| AnnotationError::Malformed(e.to_string()))
    }
}

/// Validated CDR loop set (`I_CDR`), possibly a subset of the six loops.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CdrAnnotation {
    pub loops: BTreeMap<CdrLoop, LoopInterval>,
}

impl CdrAnnotation {
    pub fn is_empty(&self) -> bool {
        self.loops.is_empty()
    }

    /// Loop containing the residue, if any.
    pub fn loop_of(&self, chain: &str, pos: usize) -> Option<CdrLoop> {
        self.loops
            .iter()
            .find(|(_, iv)| iv.contains(chain, pos))
            .map(|(l, _)| *l)
    }

    pub fn contains(&self, chain: &str, pos: usize) -> bool {
        self.loop_of(chain, pos).is_some()
    }

    /// All CDR residues, loops in H1..L3 order, positions ascending.
    pub fn residue_ids(&self) -> Vec<ResidueId> {
        self.loops
            .values()
            .flat_map(|iv| iv.positions().map(|p| ResidueId::new(iv.chain.clone(), p)))
            .collect()
    }

    pub fn num_residues(&self) -> usize {
        self.loops.values().map(|iv| iv.len()).sum()
    }

    /// Chains carrying at least one loop.
    pub fn antibody_chains(&self) -> Vec<String> {
        let mut v: Vec<String> = self.loops.values().map(|iv| iv.chain.clone()).collect();
        v.sort();
        v.dedup();
        v
    }
}

pub fn load_cdr_annotations(complex: &Complex, doc: &AnnotationDoc) -> Result<CdrAnnotation, AnnotationError> {
    let mut loops = BTreeMap::new();
    for (name, iv) in &doc.loops {
        let lp: CdrLoop = name.parse()?;
        let chain = complex
            .chain(&iv.chain)
            .ok_or_else(|| AnnotationError::UnknownChain(iv.chain.clone()))?;
        if iv.start == 0 || iv.end < iv.start || iv.end > chain.len() {
            return Err(AnnotationError::OutOfRange {
                what: format!("loop {lp}"),
                chain: iv.chain.clone(),
                start: iv.start,
                end: iv.end,
                len: chain.len(),
            });
        }
        loops.insert(lp, iv.clone());
    }
    let entries: Vec<(&CdrLoop, &LoopInterval)> = loops.iter().collect();
    for (i, (la, a)) in entries.iter().enumerate() {
        for (lb, b) in &entries[i + 1..] {
            if a.chain == b.chain && a.start <= b.end && b.start <= a.end {
                return Err(AnnotationError::OverlappingLoops(**la, **lb));
            }
        }
    }
    Ok(CdrAnnotation { loops })
}

/// Checks that every hotspot reference resolves in the complex.
pub fn validate_hotspots(complex: &Complex, hotspots: &[ResidueRef]) -> Result<Vec<ResidueId>, AnnotationError> {
    hotspots
        .iter()
        .map(|h| {
            let chain = complex
                .chain(&h.chain)
                .ok_or_else(|| AnnotationError::UnknownChain(h.chain.clone()))?;
            if h.pos == 0 || h.pos > chain.len() {
                return Err(AnnotationError::OutOfRange {
                    what: "hotspot".into(),
                    chain: h.chain.clone(),
                    start: h.pos,
                    end: h.pos,
                    len: chain.len(),
                });
            }
            Ok(ResidueId::from(h))
        })
        .collect()
}

/// Replaces the identity of every CDR residue with `X`; coordinates and
/// all other residues are left untouched.
pub fn apply_cdr_mask(complex: &Complex, cdrs: &CdrAnnotation) -> Complex {
    let mut out = complex.clone();
    for chain in &mut out.chains {
        for r in &mut chain.residues {
            if cdrs.contains(&r.chain_id, r.pos) {
                r.aa = aa::UNKNOWN;
                r.name = "UNK".to_string();
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::build::ChainBuilder;

    fn complex() -> Complex {
        crate::structure::build::complex_from_chains(
            "toy",
            vec![
                ChainBuilder::extended("A", "EVQLVESGGGLVQPGGSLRLSCAASGFTFSSYAMS").build(),
                ChainBuilder::extended("D", "KKKKKKKKKK").offset([30.0, 0.0, 0.0]).build(),
            ],
        )
    }

    fn doc(loops: &[(&str, &str, usize, usize)]) -> AnnotationDoc {
        AnnotationDoc {
            loops: loops
                .iter()
                .map(|(n, c, s, e)| {
                    (
                        n.to_string(),
                        LoopInterval {
                            chain: c.to_string(),
                            start: *s,
                            end: *e,
                        },
                    )
                })
                .collect(),
            ..Default::default()
        }
    }

    #[test]
    fn loop_length_is_inclusive() {
        let c = complex();
        let ann = load_cdr_annotations(&c, &doc(&[("H1", "A", 26, 32)])).unwrap();
        assert_eq!(ann.loops[&CdrLoop::H1].len(), 7);
    }

    #[test]
    fn unknown_chain_rejected() {
        let c = complex();
        let err = load_cdr_annotations(&c, &doc(&[("H1", "Z", 1, 3)])).unwrap_err();
        assert_eq!(err, AnnotationError::UnknownChain("Z".into()));
    }

    #[test]
    fn out_of_range_rejected() {
        let c = complex();
        assert!(matches!(
            load_cdr_annotations(&c, &doc(&[("H1", "A", 30, 99)])),
            Err(AnnotationError::OutOfRange { .. })
        ));
        assert!(matches!(
            load_cdr_annotations(&c, &doc(&[("H1", "A", 0, 3)])),
            Err(AnnotationError::OutOfRange { .. })
        ));
    }

    #[test]
    fn overlapping_loops_rejected() {
        let c = complex();
        let err = load_cdr_annotations(&c, &doc(&[("H1", "A", 5, 10), ("H2", "A", 10, 12)])).unwrap_err();
        assert_eq!(err, AnnotationError::OverlappingLoops(CdrLoop::H1, CdrLoop::H2));
    }

    #[test]
    fn unknown_loop_name_rejected() {
        let c = complex();
        assert_eq!(
            load_cdr_annotations(&c, &doc(&[("H4", "A", 1, 2)])).unwrap_err(),
            AnnotationError::UnknownLoop("H4".into())
        );
    }

    #[test]
    fn empty_mask_is_identity() {
        let c = complex();
        assert_eq!(apply_cdr_mask(&c, &CdrAnnotation::default()), c);
    }

    #[test]
    fn mask_writes_x_run() {
        let c = complex();
        let ann = load_cdr_annotations(&c, &doc(&[("H1", "A", 26, 32)])).unwrap();
        let m = apply_cdr_mask(&c, &ann);
        let seq = m.chain("A").unwrap().sequence();
        assert_eq!(&seq[25..32], "XXXXXXX");
        assert_eq!(seq.matches('X').count(), 7);
        assert_eq!(m.chain("D").unwrap(), c.chain("D").unwrap());
        assert_eq!(apply_cdr_mask(&m, &ann), m);
    }

    #[test]
    fn hotspots_validated() {
        let c = complex();
        let ok = validate_hotspots(&c, &[ResidueRef { chain: "D".into(), pos: 3 }]).unwrap();
        assert_eq!(ok, vec![ResidueId::new("D", 3)]);
        assert!(validate_hotspots(&c, &[ResidueRef { chain: "D".into(), pos: 11 }]).is_err());
    }

    #[test]
    fn document_parses_spec_shape() {
        let d = AnnotationDoc::from_json(
            r#"{"loops":{"H1":{"chain":"A","start":26,"end":32}},"hotspots":[{"chain":"D","pos":3}],"lddt":0.74}"#,
        )
        .unwrap();
        assert_eq!(d.lddt, Some(0.74));
        assert_eq!(d.hotspots.len(), 1);
    }
}
