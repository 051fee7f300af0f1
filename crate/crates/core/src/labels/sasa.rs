//! Shrake–Rupley solvent-accessible surface area.
//!
//! Each heavy atom is inflated by the probe radius and sampled with a
//! golden-spiral point set; a point is accessible when no other inflated
//! sphere contains it. Bound (whole complex) and unbound (own chain only)
//! areas come out of the same pass: a point buried by its own chain is
//! buried in both, otherwise other chains decide the bound case.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geom::{dist2, CellGrid, Vec3};
use crate::structure::Complex;

/// Theoretical maximum ASA (Å²) per residue type, Tien et al. style scale.
pub fn max_asa(aa: char) -> Option<f64> {
    Some(match aa {
        'A' => 129.0,
        'R' => 274.0,
        'N' => 195.0,
        'D' => 193.0,
        'C' => 167.0,
        'E' => 223.0,
        'Q' => 225.0,
        'G' => 104.0,
        'H' => 224.0,
        'I' => 197.0,
        'L' => 201.0,
        'K' => 236.0,
        'M' => 224.0,
        'F' => 240.0,
        'P' => 159.0,
        'S' => 155.0,
        'T' => 172.0,
        'W' => 285.0,
        'Y' => 263.0,
        'V' => 174.0,
        _ => return None,
    })
}

pub fn vdw_radius(element: &str) -> f64 {
    match element {
        "C" => 1.70,
        "N" => 1.55,
        "O" => 1.52,
        "S" => 1.80,
        "SE" => 1.90,
        "P" => 1.80,
        _ => 1.80,
    }
}

/// Relative-accessibility class; `NA` when no reference maximum exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RsaBin {
    B,
    M,
    E,
    NA,
}

impl RsaBin {
    pub fn as_str(self) -> &'static str {
        match self {
            RsaBin::B => "B",
            RsaBin::M => "M",
            RsaBin::E => "E",
            RsaBin::NA => "NA",
        }
    }

    /// Long label used in reasoning traces.
    pub fn long_label(self) -> &'static str {
        match self {
            RsaBin::B => "Buried",
            RsaBin::M => "Mid",
            RsaBin::E => "Exposed",
            RsaBin::NA => "Missing",
        }
    }

    pub fn from_relative(rel: f64, buried_below: f64, exposed_above: f64) -> Self {
        if rel < buried_below {
            RsaBin::B
        } else if rel > exposed_above {
            RsaBin::E
        } else {
            RsaBin::M
        }
    }
}

/// Golden-section spiral of `n` unit vectors.
pub fn sphere_points(n: usize) -> Vec<Vec3> {
    let inc = PI * (3.0 - 5f64.sqrt());
    let off = 2.0 / n as f64;
    (0..n)
        .map(|k| {
            let y = k as f64 * off - 1.0 + off / 2.0;
            let r = (1.0 - y * y).max(0.0).sqrt();
            let phi = k as f64 * inc;
            [phi.cos() * r, y, phi.sin() * r]
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct SasaParams {
    pub probe: f64,
    pub points: usize,
}

impl Default for SasaParams {
    fn default() -> Self {
        SasaParams {
            probe: 1.4,
            points: 960,
        }
    }
}

/// Per-residue accessible areas, indexed `[chain][residue]`.
#[derive(Debug, Clone)]
pub struct ResidueAreas {
    pub bound: Vec<Vec<f64>>,
    pub unbound: Vec<Vec<f64>>,
}

struct AtomRef {
    pos: Vec3,
    radius: f64,
    chain: usize,
    residue: usize,
}

pub fn residue_sasa(complex: &Complex, params: SasaParams) -> ResidueAreas {
    let mut atoms = Vec::new();
    for (ci, chain) in complex.chains.iter().enumerate() {
        for (ri, r) in chain.residues.iter().enumerate() {
            for a in r.heavy_atoms() {
                atoms.push(AtomRef {
                    pos: a.pos,
                    radius: vdw_radius(&a.element) + params.probe,
                    chain: ci,
                    residue: ri,
                });
            }
        }
    }
    let mut bound: Vec<Vec<f64>> = complex.chains.iter().map(|c| vec![0.0; c.len()]).collect();
    let mut unbound = bound.clone();
    if atoms.is_empty() {
        return ResidueAreas { bound, unbound };
    }
    let max_r = atoms.iter().map(|a| a.radius).fold(0.0, f64::max);
    let positions: Vec<Vec3> = atoms.iter().map(|a| a.pos).collect();
    let grid = CellGrid::new(&positions, 2.0 * max_r);
    let sphere = sphere_points(params.points);

    let per_atom: Vec<(f64, f64)> = atoms
        .par_iter()
        .enumerate()
        .map(|(i, ai)| {
            let mut same: Vec<(Vec3, f64)> = Vec::new();
            let mut other: Vec<(Vec3, f64)> = Vec::new();
            grid.for_each_candidate(ai.pos, ai.radius + max_r, |j| {
                if j == i {
                    return;
                }
                let aj = &atoms[j];
                let cut = ai.radius + aj.radius;
                if dist2(ai.pos, aj.pos) < cut * cut {
                    let entry = (aj.pos, aj.radius * aj.radius);
                    if aj.chain == ai.chain {
                        same.push(entry);
                    } else {
                        other.push(entry);
                    }
                }
            });
            // closest neighbours first make early exits likelier
            let key = |e: &(Vec3, f64)| dist2(e.0, ai.pos);
            same.sort_by(|a, b| key(a).total_cmp(&key(b)));
            other.sort_by(|a, b| key(a).total_cmp(&key(b)));
            let mut free_unbound = 0usize;
            let mut free_bound = 0usize;
            let mut last_same = 0usize;
            let mut last_other = 0usize;
            for u in &sphere {
                let p = [
                    ai.pos[0] + ai.radius * u[0],
                    ai.pos[1] + ai.radius * u[1],
                    ai.pos[2] + ai.radius * u[2],
                ];
                if occluded(&same, p, &mut last_same) {
                    continue;
                }
                free_unbound += 1;
                if !occluded(&other, p, &mut last_other) {
                    free_bound += 1;
                }
            }
            let area = 4.0 * PI * ai.radius * ai.radius / sphere.len() as f64;
            (free_bound as f64 * area, free_unbound as f64 * area)
        })
        .collect();

    for (a, (b, u)) in atoms.iter().zip(per_atom) {
        bound[a.chain][a.residue] += b;
        unbound[a.chain][a.residue] += u;
    }
    ResidueAreas { bound, unbound }
}

fn occluded(neigh: &[(Vec3, f64)], p: Vec3, last: &mut usize) -> bool {
    if neigh.is_empty() {
        return false;
    }
    let start = (*last).min(neigh.len() - 1);
    if dist2(neigh[start].0, p) < neigh[start].1 {
        return true;
    }
    for (k, (q, r2)) in neigh.iter().enumerate() {
        if k != start && dist2(*q, p) < *r2 {
            *last = k;
            return true;
        }
    }
    false
}
