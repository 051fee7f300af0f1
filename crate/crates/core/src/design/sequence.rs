//! Sequence-level and residue-level CDR metrics.

use serde::{Deserialize, Serialize};

use super::blosum;

pub const GAP_OPEN: i32 = -10;
pub const GAP_EXTEND: i32 = -1;

pub fn edit_distance(a: &[char], b: &[char]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn lcs_len(a: &[char], b: &[char]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for ca in a {
        for (j, cb) in b.iter().enumerate() {
            cur[j + 1] = if ca == cb { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequenceMetrics {
    pub emr: f64,
    pub edit_sim: f64,
    pub lcs_norm: f64,
    pub length_match: f64,
}

pub fn sequence_metrics(pred: &str, gt: &str) -> SequenceMetrics {
    let p: Vec<char> = pred.chars().collect();
    let g: Vec<char> = gt.chars().collect();
    let longest = p.len().max(g.len());
    let edit_sim = if longest == 0 {
        1.0
    } else {
        1.0 - edit_distance(&p, &g) as f64 / longest as f64
    };
    let lcs_norm = if g.is_empty() {
        if p.is_empty() {
            1.0
        } else {
            0.0
        }
    } else {
        lcs_len(&p, &g) as f64 / g.len() as f64
    };
    SequenceMetrics {
        emr: f64::from(u8::from(p == g)),
        edit_sim,
        lcs_norm,
        length_match: f64::from(u8::from(p.len() == g.len())),
    }
}

/// One alignment column; `None` is a gap.
pub type Column = (Option<char>, Option<char>);

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum State {
    Diag,
    Up,
    Left,
}

/// Global alignment with BLOSUM62 and affine gaps (first gap position
/// scores `GAP_OPEN`, each further one `GAP_EXTEND`). Ties prefer
/// diagonal, then up (gap in `b`), then left (gap in `a`).
pub fn global_align(a: &[char], b: &[char]) -> (i32, Vec<Column>) {
    const NEG: i32 = i32::MIN / 4;
    let (n, m) = (a.len(), b.len());
    let w = m + 1;
    let mut dm = vec![NEG; (n + 1) * w];
    let mut up = vec![NEG; (n + 1) * w];
    let mut left = vec![NEG; (n + 1) * w];
    dm[0] = 0;
    for i in 1..=n {
        up[i * w] = GAP_OPEN + (i as i32 - 1) * GAP_EXTEND;
    }
    for j in 1..=m {
        left[j] = GAP_OPEN + (j as i32 - 1) * GAP_EXTEND;
    }
    let best3 = |d: i32, u: i32, l: i32| -> (i32, State) {
        let mut r = (d, State::Diag);
        if u > r.0 {
            r = (u, State::Up);
        }
        if l > r.0 {
            r = (l, State::Left);
        }
        r
    };
    for i in 1..=n {
        for j in 1..=m {
            let k = i * w + j;
            let d = (i - 1) * w + j - 1;
            dm[k] = blosum::score(a[i - 1], b[j - 1]) + best3(dm[d], up[d], left[d]).0;
            let u = (i - 1) * w + j;
            up[k] = best3(dm[u] + GAP_OPEN, up[u] + GAP_EXTEND, left[u] + GAP_OPEN).0;
            let l = i * w + j - 1;
            left[k] = best3(dm[l] + GAP_OPEN, up[l] + GAP_OPEN, left[l] + GAP_EXTEND).0;
        }
    }
    let end = n * w + m;
    let (score, mut state) = best3(dm[end], up[end], left[end]);
    let (mut i, mut j) = (n, m);
    let mut cols = Vec::with_capacity(n + m);
    while i > 0 || j > 0 {
        match state {
            State::Diag => {
                cols.push((Some(a[i - 1]), Some(b[j - 1])));
                let d = (i - 1) * w + j - 1;
                state = best3(dm[d], up[d], left[d]).1;
                i -= 1;
                j -= 1;
            }
            State::Up => {
                cols.push((Some(a[i - 1]), None));
                let u = (i - 1) * w + j;
                state = best3(dm[u] + GAP_OPEN, up[u] + GAP_EXTEND, left[u] + GAP_OPEN).1;
                i -= 1;
            }
            State::Left => {
                cols.push((None, Some(b[j - 1])));
                let l = i * w + j - 1;
                state = best3(dm[l] + GAP_OPEN, up[l] + GAP_OPEN, left[l] + GAP_EXTEND).1;
                j -= 1;
            }
        }
        // the border rows have a single way out
        if i == 0 && j > 0 {
            state = State::Left;
        } else if j == 0 && i > 0 {
            state = State::Up;
        }
    }
    cols.reverse();
    (score, cols)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidueMetrics {
    /// Identical columns over all alignment columns.
    pub pos_acc: f64,
    /// Identical columns over |pred|.
    pub precision: f64,
    /// Identical columns over |gt|.
    pub recall: f64,
    pub f1: f64,
    /// Mean BLOSUM62 score over gap-free columns (0 when there are none).
    pub blosum62_mean: f64,
}

pub fn residue_metrics(pred: &str, gt: &str) -> ResidueMetrics {
    let p: Vec<char> = pred.chars().map(|c| c.to_ascii_uppercase()).collect();
    let g: Vec<char> = gt.chars().map(|c| c.to_ascii_uppercase()).collect();
    let (_, cols) = global_align(&p, &g);
    let same = cols.iter().filter(|(x, y)| x.is_some() && x == y).count() as f64;
    let scored: Vec<i32> = cols
        .iter()
        .filter_map(|c| match c {
            (Some(x), Some(y)) => Some(blosum::score(*x, *y)),
            _ => None,
        })
        .collect();
    let ratio = |n: usize| if n == 0 { 0.0 } else { same / n as f64 };
    let (precision, recall) = (ratio(p.len()), ratio(g.len()));
    ResidueMetrics {
        pos_acc: ratio(cols.len()),
        precision,
        recall,
        f1: if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        },
        blosum62_mean: if scored.is_empty() {
            0.0
        } else {
            scored.iter().sum::<i32>() as f64 / scored.len() as f64
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chars(s: &str) -> Vec<char> {
        s.chars().collect()
    }

    #[test]
    fn kitten_sitting() {
        assert_eq!(edit_distance(&chars("kitten"), &chars("sitting")), 3);
        let m = sequence_metrics("kitten", "sitting");
        assert!((m.edit_sim - (1.0 - 3.0 / 7.0)).abs() < 1e-12);
        let e = sequence_metrics("", "ACE");
        assert_eq!((e.edit_sim, e.lcs_norm, e.length_match), (0.0, 0.0, 0.0));
        let same = sequence_metrics("ARND", "ARND");
        assert_eq!((same.emr, same.edit_sim, same.lcs_norm, same.length_match), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn residue_examples() {
        assert_eq!(residue_metrics("AR", "AR").blosum62_mean, 4.5);
        let r = residue_metrics("AAAA", "AATA");
        assert_eq!(r.pos_acc, 0.75);
        let id = residue_metrics("CARDYW", "CARDYW");
        assert_eq!((id.pos_acc, id.f1), (1.0, 1.0));
    }

    #[test]
    fn alignment_consumes_both_sequences() {
        for (a, b) in [("", "AC"), ("WW", ""), ("HEAGAWGHEE", "PAWHEAE"), ("ACDEFGHIK", "ACDK")] {
            let (_, cols) = global_align(&chars(a), &chars(b));
            let left: String = cols.iter().filter_map(|c| c.0).collect();
            let right: String = cols.iter().filter_map(|c| c.1).collect();
            assert_eq!((left.as_str(), right.as_str()), (a, b));
        }
    }
}
