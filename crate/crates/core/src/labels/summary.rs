//! Chain-level secondary-structure summaries with coarse bins.

use serde::{Deserialize, Serialize};

use super::dssp::Ss3;

pub const LENGTH_BINS: [&str; 7] = ["0-50", "50-100", "100-200", "200-300", "300-500", "500-800", ">800"];
pub const FRACTION_BINS: [&str; 10] = [
    "0-10", "10-20", "20-30", "30-40", "40-50", "50-60", "60-70", "70-80", "80-90", "90-100",
];
pub const RUN_BINS: [&str; 6] = ["0", "1-4", "5-8", "9-15", "16-30", ">30"];
pub const SEGMENT_BINS: [&str; 5] = ["0", "1", "2", "3-5", ">5"];

/// Class order used for ties and for map keys in output.
pub const SS_CLASSES: [Ss3; 3] = [Ss3::H, Ss3::E, Ss3::C];

/// One bin label per class, serialized in H, E, C order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SsBins {
    #[serde(rename = "H")]
    pub h: String,
    #[serde(rename = "E")]
    pub e: String,
    #[serde(rename = "C")]
    pub c: String,
}

/// Segment counts are reported for helix and strand only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentBins {
    #[serde(rename = "H")]
    pub h: String,
    #[serde(rename = "E")]
    pub e: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub chain_id: String,
    pub length_bin: String,
    pub secondary_structure_fraction_bins: SsBins,
    pub major_secondary_structure: String,
    pub secondary_structure_longest_run_bins: SsBins,
    pub secondary_structure_segment_count_bins: SegmentBins,
}

pub fn length_bin(len: usize) -> &'static str {
    match len {
        0..50 => "0-50",
        50..100 => "50-100",
        100..200 => "100-200",
        200..300 => "200-300",
        300..500 => "300-500",
        500..800 => "500-800",
        _ => ">800",
    }
}

/// Bin for `count / total` in tenths, computed in integers so 0.3 lands in "30-40".
pub fn fraction_bin(count: usize, total: usize) -> &'static str {
    if total == 0 {
        return FRACTION_BINS[0];
    }
    FRACTION_BINS[(10 * count / total).min(9)]
}

pub fn run_bin(run: usize) -> &'static str {
    match run {
        0 => "0",
        1..=4 => "1-4",
        5..=8 => "5-8",
        9..=15 => "9-15",
        16..=30 => "16-30",
        _ => ">30",
    }
}

pub fn segment_bin(n: usize) -> &'static str {
    match n {
        0 => "0",
        1 => "1",
        2 => "2",
        3..=5 => "3-5",
        _ => ">5",
    }
}

/// Longest run and number of maximal runs of `class` in `ss`.
pub fn runs(ss: &[Ss3], class: Ss3) -> (usize, usize) {
    let mut longest = 0;
    let mut segments = 0;
    let mut cur = 0;
    for &s in ss {
        if s == class {
            if cur == 0 {
                segments += 1;
            }
            cur += 1;
            longest = longest.max(cur);
        } else {
            cur = 0;
        }
    }
    (longest, segments)
}

/// Dominant class; ties resolve H before E before C.
pub fn major_ss(ss: &[Ss3]) -> Ss3 {
    let mut best = Ss3::H;
    let mut best_n = 0usize;
    for (k, class) in SS_CLASSES.iter().enumerate() {
        let n = ss.iter().filter(|&&s| s == *class).count();
        if k == 0 || n > best_n {
            best = *class;
            best_n = n;
        }
    }
    best
}

/// Fractions use the full chain length as denominator, so NA residues dilute
/// all three classes and break runs.
pub fn chain_summary(chain_id: &str, ss: &[Ss3]) -> ChainSummary {
    let len = ss.len();
    let frac = |class| fraction_bin(ss.iter().filter(|&&s| s == class).count(), len).to_string();
    let run = |class| run_bin(runs(ss, class).0).to_string();
    let seg = |class| segment_bin(runs(ss, class).1).to_string();
    ChainSummary {
        chain_id: chain_id.to_string(),
        length_bin: length_bin(len).to_string(),
        secondary_structure_fraction_bins: SsBins {
            h: frac(Ss3::H),
            e: frac(Ss3::E),
            c: frac(Ss3::C),
        },
        major_secondary_structure: major_ss(ss).as_str().to_string(),
        secondary_structure_longest_run_bins: SsBins {
            h: run(Ss3::H),
            e: run(Ss3::E),
            c: run(Ss3::C),
        },
        secondary_structure_segment_count_bins: SegmentBins {
            h: seg(Ss3::H),
            e: seg(Ss3::E),
        },
    }
}
