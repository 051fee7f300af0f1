//! Structure-level design metrics: Cα RMSD, clashes, backbone dihedral JSD.

use std::collections::BTreeSet;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::DesignError;
use crate::geom::{dihedral, dist2, CellGrid, Vec3};
use crate::structure::{Complex, ResidueId};

pub const CLASH_CUTOFF: f64 = 3.6574;
pub const DIHEDRAL_BINS: usize = 36;
pub const MIN_RMSD_POINTS: usize = 2;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Backbone {
    pub n: Option<Vec3>,
    pub ca: Option<Vec3>,
    pub c: Option<Vec3>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedResidue {
    pub id: ResidueId,
    pub designed: bool,
    pub reference: Backbone,
    pub generated: Backbone,
}

/// Reference and generated structures aligned residue by residue.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StructurePair {
    pub residues: Vec<PairedResidue>,
}

fn backbone(complex: &Complex, id: &ResidueId) -> Backbone {
    complex
        .residue_by_id(id)
        .map(|r| Backbone {
            n: r.atom_pos("N"),
            ca: r.atom_pos("CA"),
            c: r.atom_pos("C"),
        })
        .unwrap_or_default()
}

impl StructurePair {
    /// Pairs residues by (chain, position); residues missing from the
    /// generated structure are skipped.
    pub fn from_complexes(reference: &Complex, generated: &Complex, designed: &BTreeSet<ResidueId>) -> Self {
        let residues = reference
            .residues()
            .map(|r| r.id())
            .filter(|id| generated.residue_by_id(id).is_some())
            .map(|id| PairedResidue {
                designed: designed.contains(&id),
                reference: backbone(reference, &id),
                generated: backbone(generated, &id),
                id,
            })
            .collect();
        StructurePair { residues }
    }

    pub fn designed_ids(&self) -> BTreeSet<ResidueId> {
        self.residues.iter().filter(|r| r.designed).map(|r| r.id.clone()).collect()
    }
}

/// Proper rotation R and translation t minimizing Σ|R·p + t − q|².
pub fn kabsch(p: &[Vec3], q: &[Vec3]) -> (Matrix3<f64>, Vector3<f64>) {
    let n = p.len() as f64;
    let v = |x: &Vec3| Vector3::new(x[0], x[1], x[2]);
    let cp = p.iter().map(v).sum::<Vector3<f64>>() / n;
    let cq = q.iter().map(v).sum::<Vector3<f64>>() / n;
    let mut h = Matrix3::zeros();
    for (a, b) in p.iter().zip(q) {
        h += (v(a) - cp) * (v(b) - cq).transpose();
    }
    let svd = h.svd(true, true);
    let u = svd.u.expect("svd computed with u");
    let vt = svd.v_t.expect("svd computed with v_t");
    let d = (vt.transpose() * u.transpose()).determinant().signum();
    let fix = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d));
    let r = vt.transpose() * fix * u.transpose();
    (r, cq - r * cp)
}

pub fn superposed_rmsd(fit_p: &[Vec3], fit_q: &[Vec3], eval_p: &[Vec3], eval_q: &[Vec3]) -> Result<f64, DesignError> {
    if fit_p.len() < MIN_RMSD_POINTS {
        return Err(DesignError::TooFewPoints(fit_p.len()));
    }
    if eval_p.is_empty() {
        return Err(DesignError::EmptyRegion);
    }
    let (r, t) = kabsch(fit_p, fit_q);
    let sum: f64 = eval_p
        .iter()
        .zip(eval_q)
        .map(|(a, b)| {
            let x = r * Vector3::new(a[0], a[1], a[2]) + t;
            (x - Vector3::new(b[0], b[1], b[2])).norm_squared()
        })
        .sum();
    Ok((sum / eval_p.len() as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    /// Superpose on the region itself.
    Region,
    /// Superpose on every paired residue, then measure the region.
    Complex,
}

/// Cα RMSD over `region` (generated moved onto reference).
pub fn rmsd_ca(pair: &StructurePair, region: &BTreeSet<ResidueId>, frame: Frame) -> Result<f64, DesignError> {
    let both = |r: &PairedResidue| Some((r.generated.ca?, r.reference.ca?));
    let pick = |inside: bool| -> (Vec<Vec3>, Vec<Vec3>) {
        pair.residues
            .iter()
            .filter(|r| !inside || region.contains(&r.id))
            .filter_map(both)
            .unzip()
    };
    let (ep, eq) = pick(true);
    match frame {
        Frame::Region => superposed_rmsd(&ep, &eq, &ep, &eq),
        Frame::Complex => {
            let (fp, fq) = pick(false);
            superposed_rmsd(&fp, &fq, &ep, &eq)
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClashCounts {
    pub clashes_in: usize,
    pub pairs_in: usize,
    pub clashes_out: usize,
    pub pairs_out: usize,
    pub clash_in: f64,
    pub clash_out: f64,
}

/// One Cα with its chain index, sequence position and region tag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaggedPoint {
    pub pos: Vec3,
    pub chain: usize,
    pub seq: usize,
    pub designed: bool,
}

fn sequence_neighbours(a: &TaggedPoint, b: &TaggedPoint) -> bool {
    a.chain == b.chain && a.seq.abs_diff(b.seq) <= 1
}

fn ratio(n: usize, d: usize) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

/// Designed–designed clashes (sequence neighbours excluded) and
/// designed–context clashes, each over its pair count.
pub fn clash_counts_points(points: &[TaggedPoint]) -> ClashCounts {
    let coords: Vec<Vec3> = points.iter().map(|p| p.pos).collect();
    let grid = CellGrid::new(&coords, CLASH_CUTOFF);
    let c2 = CLASH_CUTOFF * CLASH_CUTOFF;
    let mut out = ClashCounts::default();
    for (i, a) in points.iter().enumerate() {
        if !a.designed {
            continue;
        }
        grid.for_each_candidate(a.pos, CLASH_CUTOFF, |j| {
            let b = &points[j];
            if dist2(a.pos, b.pos) >= c2 {
                return;
            }
            if b.designed {
                if j > i && !sequence_neighbours(a, b) {
                    out.clashes_in += 1;
                }
            } else {
                out.clashes_out += 1;
            }
        });
    }
    let designed: Vec<&TaggedPoint> = points.iter().filter(|p| p.designed).collect();
    let n_ctx = points.len() - designed.len();
    let mut neighbours = 0;
    for (k, a) in designed.iter().enumerate() {
        neighbours += designed[k + 1..].iter().filter(|b| sequence_neighbours(a, b)).count();
    }
    out.pairs_in = designed.len() * designed.len().saturating_sub(1) / 2 - neighbours;
    out.pairs_out = designed.len() * n_ctx;
    out.clash_in = ratio(out.clashes_in, out.pairs_in);
    out.clash_out = ratio(out.clashes_out, out.pairs_out);
    out
}

/// Clashes in the generated structure.
pub fn clash_counts(pair: &StructurePair) -> ClashCounts {
    let mut chains: Vec<&str> = Vec::new();
    let points: Vec<TaggedPoint> = pair
        .residues
        .iter()
        .filter_map(|r| {
            let ci = match chains.iter().position(|c| *c == r.id.chain) {
                Some(k) => k,
                None => {
                    chains.push(&r.id.chain);
                    chains.len() - 1
                }
            };
            Some(TaggedPoint {
                pos: r.generated.ca?,
                chain: ci,
                seq: r.id.pos,
                designed: r.designed,
            })
        })
        .collect();
    clash_counts_points(&points)
}

pub type Histogram = [f64; DIHEDRAL_BINS];

pub fn angle_bin(deg: f64) -> usize {
    let shifted = (deg + 180.0).rem_euclid(360.0);
    ((shifted / (360.0 / DIHEDRAL_BINS as f64)) as usize).min(DIHEDRAL_BINS - 1)
}

/// Base-2 Jensen–Shannon divergence of two (unnormalized) histograms.
pub fn jsd(p: &[f64], q: &[f64]) -> f64 {
    let sp: f64 = p.iter().sum();
    let sq: f64 = q.iter().sum();
    let kl = |a: f64, m: f64| if a > 0.0 { a * (a / m).log2() } else { 0.0 };
    let mut total = 0.0;
    for (x, y) in p.iter().zip(q) {
        let (a, b) = (x / sp, y / sq);
        let m = 0.5 * (a + b);
        total += 0.5 * kl(a, m) + 0.5 * kl(b, m);
    }
    total.max(0.0)
}

/// φ and ψ histograms over designed residues whose neighbours in the same
/// chain carry complete backbones.
pub fn dihedral_histograms(pair: &StructurePair, generated: bool) -> (Histogram, Histogram, usize) {
    let mut phi = [0.0; DIHEDRAL_BINS];
    let mut psi = [0.0; DIHEDRAL_BINS];
    let mut n = 0;
    let bb = |r: &PairedResidue| if generated { r.generated } else { r.reference };
    let full = |b: Backbone| Some((b.n?, b.ca?, b.c?));
    let res = &pair.residues;
    for k in 0..res.len() {
        if !res[k].designed {
            continue;
        }
        let Some((n0, ca0, c0)) = full(bb(&res[k])) else {
            continue;
        };
        let linked = |o: usize| res[o].id.chain == res[k].id.chain && res[o].id.pos.abs_diff(res[k].id.pos) == 1;
        if k > 0 && linked(k - 1) {
            if let Some(c_prev) = bb(&res[k - 1]).c {
                phi[angle_bin(dihedral(c_prev, n0, ca0, c0))] += 1.0;
                n += 1;
            }
        }
        if k + 1 < res.len() && linked(k + 1) {
            if let Some(n_next) = bb(&res[k + 1]).n {
                psi[angle_bin(dihedral(n0, ca0, c0, n_next))] += 1.0;
            }
        }
    }
    (phi, psi, n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JsdResult {
    pub phi: f64,
    pub psi: f64,
    pub mean: f64,
}

fn jsd_pair(g: &(Histogram, Histogram), r: &(Histogram, Histogram)) -> Result<JsdResult, DesignError> {
    let empty = |h: &Histogram| h.iter().sum::<f64>() == 0.0;
    if empty(&g.0) || empty(&g.1) || empty(&r.0) || empty(&r.1) {
        return Err(DesignError::InsufficientBackbone);
    }
    let phi = jsd(&g.0, &r.0);
    let psi = jsd(&g.1, &r.1);
    Ok(JsdResult {
        phi,
        psi,
        mean: 0.5 * (phi + psi),
    })
}

pub fn jsd_backbone(pair: &StructurePair) -> Result<JsdResult, DesignError> {
    let (gp, gs, _) = dihedral_histograms(pair, true);
    let (rp, rs, _) = dihedral_histograms(pair, false);
    jsd_pair(&(gp, gs), &(rp, rs))
}

/// JSD of histograms summed over all pairs.
pub fn jsd_backbone_pooled(pairs: &[StructurePair]) -> Result<JsdResult, DesignError> {
    let mut g = ([0.0; DIHEDRAL_BINS], [0.0; DIHEDRAL_BINS]);
    let mut r = g;
    for p in pairs {
        let (a, b, _) = dihedral_histograms(p, true);
        let (c, d, _) = dihedral_histograms(p, false);
        for k in 0..DIHEDRAL_BINS {
            g.0[k] += a[k];
            g.1[k] += b[k];
            r.0[k] += c[k];
            r.1[k] += d[k];
        }
    }
    jsd_pair(&g, &r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_example() {
        let p = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]];
        let q = [[0.0, 0.0, 0.0], [3.0, 0.0, 0.0]];
        let r = superposed_rmsd(&p, &q, &p, &q).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        assert!(matches!(superposed_rmsd(&p[..1], &q[..1], &p, &q), Err(DesignError::TooFewPoints(1))));
    }

    #[test]
    fn no_reflections() {
        let p = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 1.0, 1.0]];
        let mirrored: Vec<Vec3> = p.iter().map(|x| [x[0], x[1], -x[2]]).collect();
        let (r, _) = kabsch(&p, &mirrored);
        assert!((r.determinant() - 1.0).abs() < 1e-9);
        assert!(superposed_rmsd(&p, &mirrored, &p, &mirrored).unwrap() > 0.1);
    }

    #[test]
    fn jsd_examples() {
        assert!((jsd(&[1.0, 0.0], &[0.5, 0.5]) - 0.3113).abs() < 1e-3);
        assert!((jsd(&[1.0, 0.0], &[0.0, 1.0]) - 1.0).abs() < 1e-12);
        assert_eq!(jsd(&[0.2, 0.8], &[0.2, 0.8]), 0.0);
        assert_eq!(angle_bin(180.0), 0);
        assert_eq!(angle_bin(-180.0), 0);
        assert_eq!(angle_bin(179.9), 35);
    }

    #[test]
    fn clash_boundary() {
        let pt = |x: f64, seq: usize| TaggedPoint {
            pos: [x, 0.0, 0.0],
            chain: 0,
            seq,
            designed: true,
        };
        assert_eq!(clash_counts_points(&[pt(0.0, 1)]).clashes_in, 0);
        assert_eq!(clash_counts_points(&[pt(0.0, 1), pt(3.0, 5)]).clashes_in, 1);
        assert_eq!(clash_counts_points(&[pt(0.0, 1), pt(3.66, 5)]).clashes_in, 0);
        assert_eq!(clash_counts_points(&[pt(0.0, 1), pt(3.0, 2)]).clashes_in, 0);
    }
}
