//! Cβ pair geometry and distance binning.

use serde::{Deserialize, Serialize};

use crate::geom::dist;
use crate::structure::{Complex, ResidueId};

use super::LabelError;

pub const CONTACT_CUTOFF: f64 = 8.0;
/// Sequence separation at or below which an intra-chain pair is "short".
pub const SHORT_RANGE_MAX_SEP: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairClass {
    CrossChain,
    Long,
    Short,
}

impl PairClass {
    pub const ALL: [PairClass; 3] = [PairClass::Short, PairClass::Long, PairClass::CrossChain];

    pub fn as_str(self) -> &'static str {
        match self {
            PairClass::CrossChain => "cross_chain",
            PairClass::Long => "long",
            PairClass::Short => "short",
        }
    }

    pub fn of(i: &ResidueId, j: &ResidueId) -> Self {
        if i.chain != j.chain {
            PairClass::CrossChain
        } else if i.pos.abs_diff(j.pos) <= SHORT_RANGE_MAX_SEP {
            PairClass::Short
        } else {
            PairClass::Long
        }
    }

    /// Interior bin edges; bins are `[e_k, e_{k+1})`.
    pub fn edges(self) -> &'static [f64] {
        match self {
            PairClass::CrossChain => &[4.0, 6.0, 8.0, 10.0, 14.0],
            PairClass::Long => &[6.0, 8.0, 10.0, 12.0, 16.0],
            PairClass::Short => &[3.5, 5.0, 7.0, 9.0, 12.0],
        }
    }

    pub fn bin_labels(self) -> &'static [&'static str] {
        match self {
            PairClass::CrossChain => &["<4", "4-6", "6-8", "8-10", "10-14", ">14"],
            PairClass::Long => &["<6", "6-8", "8-10", "10-12", "12-16", ">16"],
            PairClass::Short => &["<3.5", "3.5-5", "5-7", "7-9", "9-12", ">12"],
        }
    }

    pub fn bin(self, distance: f64) -> &'static str {
        let k = self.edges().iter().take_while(|&&e| distance >= e).count();
        self.bin_labels()[k]
    }
}

impl std::str::FromStr for PairClass {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "cross_chain" => Ok(PairClass::CrossChain),
            "long" => Ok(PairClass::Long),
            "short" => Ok(PairClass::Short),
            _ => Err(format!("unknown pair class {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairGeometry {
    pub distance: f64,
    pub contact: bool,
    pub pair_class: PairClass,
    pub dist_bin: String,
}

impl PairGeometry {
    pub fn from_distance(distance: f64, pair_class: PairClass) -> Self {
        PairGeometry {
            distance,
            contact: distance < CONTACT_CUTOFF,
            pair_class,
            dist_bin: pair_class.bin(distance).to_string(),
        }
    }
}

pub fn pair_geometry(complex: &Complex, i: &ResidueId, j: &ResidueId) -> Result<PairGeometry, LabelError> {
    let pi = reference_pos(complex, i)?;
    let pj = reference_pos(complex, j)?;
    Ok(PairGeometry::from_distance(dist(pi, pj), PairClass::of(i, j)))
}

pub(crate) fn reference_pos(complex: &Complex, id: &ResidueId) -> Result<[f64; 3], LabelError> {
    let r = complex
        .residue_by_id(id)
        .ok_or_else(|| LabelError::UnknownResidue(id.chain.clone(), id.pos))?;
    r.reference_atom()
        .ok_or_else(|| LabelError::MissingReferenceAtom(id.chain.clone(), id.pos))
}
