//! Antibody design evaluation: CDR detection, sequence recovery, geometry.

pub mod blosum;
pub mod sequence;
pub mod structure;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::structure::{CdrAnnotation, CdrLoop, Complex, ResidueId};

pub use sequence::{residue_metrics, sequence_metrics, ResidueMetrics, SequenceMetrics};
pub use structure::{
    clash_counts, jsd_backbone, jsd_backbone_pooled, rmsd_ca, ClashCounts, Frame, JsdResult, StructurePair,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DesignError {
    #[error("ground truth has no CDR residues")]
    EmptyGroundTruth,
    #[error("empty evaluation region")]
    EmptyRegion,
    #[error("residue {0} is outside the compared sequences")]
    RegionOutsideDomain(ResidueId),
    #[error("superposition needs at least 2 paired CA atoms, found {0}")]
    TooFewPoints(usize),
    #[error("not enough consecutive backbone atoms for dihedrals")]
    InsufficientBackbone,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LoopPrediction {
    /// Within-chain residue positions.
    pub indices: BTreeSet<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CdrPrediction {
    pub loops: BTreeMap<CdrLoop, LoopPrediction>,
}

impl CdrPrediction {
    pub fn from_annotation(cdrs: &CdrAnnotation, complex: &Complex) -> Self {
        let loops = cdrs
            .loops
            .iter()
            .map(|(l, iv)| {
                let indices: BTreeSet<usize> = iv.positions().collect();
                let sequence = indices
                    .iter()
                    .map(|&p| complex.residue(&iv.chain, p).map(|r| r.aa))
                    .collect::<Option<String>>();
                (*l, LoopPrediction { indices, sequence })
            })
            .collect();
        CdrPrediction { loops }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectionMetrics {
    pub recall: f64,
    pub precision: f64,
    pub set_match: f64,
    /// Loops with an empty prediction, whose precision is reported as 0.
    pub undefined_precision: usize,
}

/// Per-loop set overlap averaged over the ground-truth loops.
pub fn detection_metrics(pred: &CdrPrediction, gt: &CdrPrediction) -> Result<DetectionMetrics, DesignError> {
    if gt.loops.values().all(|l| l.indices.is_empty()) {
        return Err(DesignError::EmptyGroundTruth);
    }
    let empty = LoopPrediction::default();
    let mut m = DetectionMetrics::default();
    let mut n = 0.0;
    for (l, g) in &gt.loops {
        if g.indices.is_empty() {
            continue;
        }
        let p = pred.loops.get(l).unwrap_or(&empty);
        let hit = p.indices.intersection(&g.indices).count() as f64;
        m.recall += hit / g.indices.len() as f64;
        if p.indices.is_empty() {
            m.undefined_precision += 1;
        } else {
            m.precision += hit / p.indices.len() as f64;
        }
        m.set_match += f64::from(u8::from(p.indices == g.indices));
        n += 1.0;
    }
    m.recall /= n;
    m.precision /= n;
    m.set_match /= n;
    Ok(m)
}

/// Exact identity agreement over `region`.
pub fn aar(
    pred: &BTreeMap<ResidueId, char>,
    gt: &BTreeMap<ResidueId, char>,
    region: &BTreeSet<ResidueId>,
) -> Result<f64, DesignError> {
    if region.is_empty() {
        return Err(DesignError::EmptyRegion);
    }
    let mut same = 0usize;
    for id in region {
        match (pred.get(id), gt.get(id)) {
            (Some(a), Some(b)) => same += usize::from(a.eq_ignore_ascii_case(b)),
            _ => return Err(DesignError::RegionOutsideDomain(id.clone())),
        }
    }
    Ok(same as f64 / region.len() as f64)
}

pub fn identities(complex: &Complex) -> BTreeMap<ResidueId, char> {
    complex.residues().map(|r| (r.id(), r.aa)).collect()
}

/// Signed structure–sequence consistency gap, in the units of the inputs.
pub fn if_aar_delta(aar: f64, if_aar: f64) -> f64 {
    if_aar - aar
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopMetrics {
    pub aar: f64,
    pub rmsd: Option<f64>,
    pub sequence: SequenceMetrics,
    pub residue: ResidueMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMetrics {
    pub structure_id: String,
    pub loops: BTreeMap<CdrLoop, LoopMetrics>,
    pub loop_rmsd: Option<f64>,
    pub aar: f64,
    pub clashes: ClashCounts,
    pub jsd_bb: Option<JsdResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detection: Option<DetectionMetrics>,
}

/// All metrics for one generated design against its native complex.
pub fn evaluate_complex(
    reference: &Complex,
    generated: &Complex,
    cdrs: &CdrAnnotation,
    frame: Frame,
    predicted_cdrs: Option<&CdrPrediction>,
) -> Result<ComplexMetrics, DesignError> {
    let region: BTreeSet<ResidueId> = cdrs.residue_ids().into_iter().collect();
    if region.is_empty() {
        return Err(DesignError::EmptyGroundTruth);
    }
    let pair = StructurePair::from_complexes(reference, generated, &region);
    let native = identities(reference);
    let designed = identities(generated);
    let seq_of = |m: &BTreeMap<ResidueId, char>, ids: &BTreeSet<ResidueId>| -> String {
        ids.iter().filter_map(|id| m.get(id)).collect()
    };
    let mut loops = BTreeMap::new();
    for (l, iv) in &cdrs.loops {
        let ids: BTreeSet<ResidueId> = iv.positions().map(|p| ResidueId::new(iv.chain.clone(), p)).collect();
        let (gs, ns) = (seq_of(&designed, &ids), seq_of(&native, &ids));
        loops.insert(
            *l,
            LoopMetrics {
                aar: aar(&designed, &native, &ids)?,
                rmsd: rmsd_ca(&pair, &ids, frame).ok(),
                sequence: sequence_metrics(&gs, &ns),
                residue: residue_metrics(&gs, &ns),
            },
        );
    }
    let detection = match predicted_cdrs {
        Some(p) => Some(detection_metrics(p, &CdrPrediction::from_annotation(cdrs, reference))?),
        None => None,
    };
    Ok(ComplexMetrics {
        structure_id: reference.id.clone(),
        loops,
        loop_rmsd: rmsd_ca(&pair, &region, frame).ok(),
        aar: aar(&designed, &native, &region)?,
        clashes: clash_counts(&pair),
        jsd_bb: jsd_backbone(&pair).ok(),
        detection,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopSummary {
    pub aar: Option<f64>,
    pub rmsd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub if_aar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub frame: Frame,
    pub loops: BTreeMap<CdrLoop, LoopSummary>,
    pub loop_rmsd: Option<f64>,
    pub clash_in: f64,
    pub clash_out: f64,
    /// Mean of per-complex values.
    pub jsd_bb: Option<f64>,
    pub jsd_bb_pooled: Option<f64>,
    pub complexes: Vec<ComplexMetrics>,
}

fn mean(v: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (s, n) = v.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// Averages per-complex metrics. `if_aar` supplies externally computed
/// inverse-folding recovery per loop.
pub fn summarize(
    complexes: Vec<ComplexMetrics>,
    pairs: &[StructurePair],
    frame: Frame,
    if_aar: &BTreeMap<CdrLoop, f64>,
) -> DesignReport {
    let mut loops = BTreeMap::new();
    for l in CdrLoop::ALL {
        let ms: Vec<&LoopMetrics> = complexes.iter().filter_map(|c| c.loops.get(&l)).collect();
        if ms.is_empty() && !if_aar.contains_key(&l) {
            continue;
        }
        let a = mean(ms.iter().map(|m| m.aar));
        let f = if_aar.get(&l).copied();
        loops.insert(
            l,
            LoopSummary {
                aar: a,
                rmsd: mean(ms.iter().filter_map(|m| m.rmsd)),
                if_aar: f,
                delta: a.zip(f).map(|(a, f)| if_aar_delta(a, f)),
            },
        );
    }
    DesignReport {
        frame,
        loops,
        loop_rmsd: mean(complexes.iter().filter_map(|c| c.loop_rmsd)),
        clash_in: mean(complexes.iter().map(|c| c.clashes.clash_in)).unwrap_or(0.0),
        clash_out: mean(complexes.iter().map(|c| c.clashes.clash_out)).unwrap_or(0.0),
        jsd_bb: mean(complexes.iter().filter_map(|c| c.jsd_bb.map(|j| j.mean))),
        jsd_bb_pooled: jsd_backbone_pooled(pairs).ok().map(|j| j.mean),
        complexes,
    }
}

fn cell(v: Option<f64>, pct: bool) -> String {
    match v {
        Some(x) if pct => format!("{:.2}%", 100.0 * x),
        Some(x) => format!("{x:.2}"),
        None => "--".into(),
    }
}

/// Geometry table (per-loop RMSD, loop RMSD, clashes, JSD) and, when any
/// IF-AAR values are present, the recovery/consistency table.
pub fn render_design_tables(r: &DesignReport, label: &str) -> String {
    let mut s = String::new();
    let _ = write!(s, "{:<12}", "Method");
    for l in CdrLoop::ALL {
        let _ = write!(s, " {:>6}", l.as_str());
    }
    let _ = writeln!(s, " {:>10} {:>9} {:>10} {:>8}", "Loop-RMSD", "Clash_in", "Clash_out", "JSD_bb");
    let _ = write!(s, "{label:<12}");
    for l in CdrLoop::ALL {
        let _ = write!(s, " {:>6}", cell(r.loops.get(&l).and_then(|x| x.rmsd), false));
    }
    let _ = writeln!(
        s,
        " {:>10} {:>9} {:>10} {:>8}",
        cell(r.loop_rmsd, false),
        cell(Some(r.clash_in), true),
        cell(Some(r.clash_out), true),
        r.jsd_bb.map(|x| format!("{x:.4}")).unwrap_or_else(|| "--".into())
    );
    let _ = writeln!(s);
    let _ = writeln!(s, "{:<5} {:>8} {:>8} {:>8}", "CDR", "AAR", "IF-AAR", "Delta");
    for (l, x) in &r.loops {
        let p = |v: Option<f64>| v.map(|v| format!("{:.2}", 100.0 * v)).unwrap_or_else(|| "--".into());
        let d = x.delta.map(|v| format!("{:+.2}", 100.0 * v)).unwrap_or_else(|| "--".into());
        let _ = writeln!(s, "{:<5} {:>8} {:>8} {:>8}", l.as_str(), p(x.aar), p(x.if_aar), d);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pred(sets: &[(CdrLoop, &[usize])]) -> CdrPrediction {
        CdrPrediction {
            loops: sets
                .iter()
                .map(|(l, v)| {
                    (
                        *l,
                        LoopPrediction {
                            indices: v.iter().copied().collect(),
                            sequence: None,
                        },
                    )
                })
                .collect(),
        }
    }

    #[test]
    fn detection_examples() {
        let gt = pred(&[(CdrLoop::H3, &[1, 2, 3, 4, 5])]);
        let m = detection_metrics(&gt, &gt).unwrap();
        assert_eq!((m.recall, m.precision, m.set_match), (1.0, 1.0, 1.0));
        let p = pred(&[(CdrLoop::H3, &[1, 2, 3, 9])]);
        let m = detection_metrics(&p, &gt).unwrap();
        assert_eq!((m.recall, m.precision, m.set_match), (0.6, 0.75, 0.0));
        let m = detection_metrics(&CdrPrediction::default(), &gt).unwrap();
        assert_eq!((m.recall, m.precision, m.undefined_precision), (0.0, 0.0, 1));
        assert!(matches!(
            detection_metrics(&gt, &CdrPrediction::default()),
            Err(DesignError::EmptyGroundTruth)
        ));
    }

    #[test]
    fn aar_and_delta() {
        let ids: Vec<ResidueId> = (1..=10).map(|p| ResidueId::new("H", p)).collect();
        let gt: BTreeMap<_, _> = ids.iter().map(|i| (i.clone(), 'A')).collect();
        let pr: BTreeMap<_, _> = ids
            .iter()
            .map(|i| (i.clone(), if i.pos <= 5 { 'A' } else { 'G' }))
            .collect();
        let region: BTreeSet<_> = ids.iter().cloned().collect();
        assert_eq!(aar(&pr, &gt, &region).unwrap(), 0.5);
        assert!(matches!(aar(&pr, &gt, &BTreeSet::new()), Err(DesignError::EmptyRegion)));
        assert!((if_aar_delta(0.1506, 0.1927) - 0.0421).abs() < 1e-12);
        assert!((if_aar_delta(0.6504, 0.1973) + 0.4531).abs() < 1e-12);
    }
}
