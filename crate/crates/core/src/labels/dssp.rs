//! Kabsch–Sander secondary-structure assignment.
//!
//! Hydrogen bonds are scored with the electrostatic model on backbone
//! N–H and C=O groups (amide H placed from the preceding carbonyl). Helices
//! come from consecutive n-turns (n = 3, 4, 5), strands and bridges from
//! ladder patterns with bulge merging. The eight DSSP states are collapsed
//! to three: H, G, I → H; E, B → E; everything else → C.

use serde::{Deserialize, Serialize};

use crate::geom::{add, dist, dist2, normalize, sub, Vec3};
use crate::structure::Complex;

// negative charge product: q1·q2·f with q1 = 0.42e, q2 = 0.20e, f = 332
const COUPLING: f64 = -0.084 * 332.0;
const MAX_HBOND_ENERGY: f64 = -0.5;
const MIN_HBOND_ENERGY: f64 = -9.9;
const MIN_DISTANCE: f64 = 0.5;
const MAX_CA_DISTANCE: f64 = 9.0;
const MAX_PEPTIDE_BOND: f64 = 2.5;

/// Reduced three-state label; `NA` when the backbone is incomplete.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ss3 {
    H,
    E,
    C,
    NA,
}

impl Ss3 {
    pub fn as_str(self) -> &'static str {
        match self {
            Ss3::H => "H",
            Ss3::E => "E",
            Ss3::C => "C",
            Ss3::NA => "NA",
        }
    }
}

/// Full eight-state DSSP code (only the ones we distinguish).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dssp8 {
    Loop,
    AlphaHelix,
    Helix310,
    PiHelix,
    Strand,
    Bridge,
}

impl Dssp8 {
    pub fn reduce(self) -> Ss3 {
        match self {
            Dssp8::AlphaHelix | Dssp8::Helix310 | Dssp8::PiHelix => Ss3::H,
            Dssp8::Strand | Dssp8::Bridge => Ss3::E,
            Dssp8::Loop => Ss3::C,
        }
    }

    pub fn code(self) -> char {
        match self {
            Dssp8::Loop => '-',
            Dssp8::AlphaHelix => 'H',
            Dssp8::Helix310 => 'G',
            Dssp8::PiHelix => 'I',
            Dssp8::Strand => 'E',
            Dssp8::Bridge => 'B',
        }
    }
}

#[derive(Clone, Copy)]
struct Backbone {
    n: Vec3,
    ca: Vec3,
    c: Vec3,
    o: Vec3,
    h: Option<Vec3>,
    chain: usize,
    pos: usize,
    proline: bool,
}

#[derive(Clone, Copy)]
struct Bond {
    partner: usize,
    energy: f64,
}

const NO_BOND: Bond = Bond {
    partner: usize::MAX,
    energy: 0.0,
};

#[derive(Clone, Copy, PartialEq, Eq)]
enum HelixFlag {
    None,
    Start,
    End,
    StartAndEnd,
    Middle,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum BridgeKind {
    Parallel,
    Antiparallel,
}

#[derive(Debug, Clone)]
struct Ladder {
    kind: BridgeKind,
    i: Vec<usize>,
    j: std::collections::VecDeque<usize>,
}

fn hbond_energy(donor: &Backbone, acceptor: &Backbone) -> f64 {
    let Some(h) = donor.h else { return 0.0 };
    if donor.proline {
        return 0.0;
    }
    let d_ho = dist(h, acceptor.o);
    let d_hc = dist(h, acceptor.c);
    let d_nc = dist(donor.n, acceptor.c);
    let d_no = dist(donor.n, acceptor.o);
    if d_ho < MIN_DISTANCE || d_hc < MIN_DISTANCE || d_nc < MIN_DISTANCE || d_no < MIN_DISTANCE {
        return MIN_HBOND_ENERGY;
    }
    let e = COUPLING / d_ho - COUPLING / d_hc + COUPLING / d_nc - COUPLING / d_no;
    // DSSP rounds to 1e-3 kcal/mol
    let e = (e * 1000.0).round() / 1000.0;
    e.max(MIN_HBOND_ENERGY)
}

struct State {
    res: Vec<Backbone>,
    /// `acceptors[d]`: best two carbonyls that residue `d`'s NH donates to.
    acceptors: Vec<[Bond; 2]>,
    donors: Vec<[Bond; 2]>,
    breaks: Vec<bool>,
}

impl State {
    /// True when there is no chain break anywhere between `a` and `b`.
    fn no_break(&self, a: usize, b: usize) -> bool {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        !(lo..hi).any(|k| self.breaks[k])
    }

    /// NH of `donor` bonded to CO of `acceptor`.
    fn test_bond(&self, donor: usize, acceptor: usize) -> bool {
        self.acceptors[donor]
            .iter()
            .any(|b| b.partner == acceptor && b.energy < MAX_HBOND_ENERGY)
    }

    fn record(&mut self, donor: usize, acceptor: usize) {
        let e = hbond_energy(&self.res[donor], &self.res[acceptor]);
        let slot = &mut self.acceptors[donor];
        if e < slot[0].energy {
            slot[1] = slot[0];
            slot[0] = Bond { partner: acceptor, energy: e };
        } else if e < slot[1].energy {
            slot[1] = Bond { partner: acceptor, energy: e };
        }
        let slot = &mut self.donors[acceptor];
        if e < slot[0].energy {
            slot[1] = slot[0];
            slot[0] = Bond { partner: donor, energy: e };
        } else if e < slot[1].energy {
            slot[1] = Bond { partner: donor, energy: e };
        }
    }

    fn bridge(&self, i: usize, j: usize) -> Option<BridgeKind> {
        let n = self.res.len();
        if i == 0 || j == 0 || i + 1 >= n || j + 1 >= n {
            return None;
        }
        let (a, b, c) = (i - 1, i, i + 1);
        let (d, e, f) = (j - 1, j, j + 1);
        if !self.no_break(a, c) || !self.no_break(d, f) {
            return None;
        }
        if (self.test_bond(c, e) && self.test_bond(e, a)) || (self.test_bond(f, b) && self.test_bond(b, d)) {
            Some(BridgeKind::Parallel)
        } else if (self.test_bond(c, d) && self.test_bond(f, a)) || (self.test_bond(e, b) && self.test_bond(b, e)) {
            Some(BridgeKind::Antiparallel)
        } else {
            None
        }
    }
}

fn backbone_list(complex: &Complex) -> (Vec<Backbone>, Vec<(usize, usize)>) {
    let mut out = Vec::new();
    let mut index = Vec::new();
    for (ci, chain) in complex.chains.iter().enumerate() {
        for (ri, r) in chain.residues.iter().enumerate() {
            if !r.complete_backbone {
                continue;
            }
            let (Some(n), Some(ca), Some(c), Some(o)) =
                (r.atom_pos("N"), r.atom_pos("CA"), r.atom_pos("C"), r.atom_pos("O"))
            else {
                continue;
            };
            out.push(Backbone {
                n,
                ca,
                c,
                o,
                h: None,
                chain: ci,
                pos: r.pos,
                proline: r.aa == 'P',
            });
            index.push((ci, ri));
        }
    }
    (out, index)
}

/// Eight-state assignment for every residue with a complete backbone, in
/// complex order; `None` for residues that cannot be assigned.
pub fn assign_dssp8(complex: &Complex) -> Vec<Vec<Option<Dssp8>>> {
    let (mut res, index) = backbone_list(complex);
    let n = res.len();
    let mut breaks = vec![false; n.saturating_sub(1)];
    for k in 0..n.saturating_sub(1) {
        let (a, b) = (&res[k], &res[k + 1]);
        breaks[k] = a.chain != b.chain || b.pos != a.pos + 1 || dist(a.c, b.n) > MAX_PEPTIDE_BOND;
    }
    for k in 1..n {
        if !breaks[k - 1] {
            let prev = res[k - 1];
            res[k].h = Some(add(res[k].n, normalize(sub(prev.c, prev.o))));
        }
    }

    let mut st = State {
        res,
        acceptors: vec![[NO_BOND; 2]; n],
        donors: vec![[NO_BOND; 2]; n],
        breaks,
    };

    // candidate pairs via CA grid
    let cas: Vec<Vec3> = st.res.iter().map(|r| r.ca).collect();
    let grid = crate::geom::CellGrid::new(&cas, MAX_CA_DISTANCE);
    let mut pairs = Vec::new();
    for i in 0..n {
        grid.for_each_candidate(cas[i], MAX_CA_DISTANCE, |j| {
            if j > i && dist2(cas[i], cas[j]) < MAX_CA_DISTANCE * MAX_CA_DISTANCE {
                pairs.push((i, j));
            }
        });
    }
    pairs.sort_unstable();
    for (i, j) in pairs {
        st.record(i, j);
        if j != i + 1 {
            st.record(j, i);
        }
    }

    let mut ss = vec![Dssp8::Loop; n];

    // bridges and ladders
    let mut ladders: Vec<Ladder> = Vec::new();
    for i in 1..n.saturating_sub(4) {
        for j in (i + 3)..n.saturating_sub(1) {
            let Some(kind) = st.bridge(i, j) else { continue };
            let mut found = false;
            for l in ladders.iter_mut() {
                if l.kind != kind || i != *l.i.last().unwrap() + 1 {
                    continue;
                }
                if kind == BridgeKind::Parallel && *l.j.back().unwrap() + 1 == j {
                    l.i.push(i);
                    l.j.push_back(j);
                    found = true;
                    break;
                }
                if kind == BridgeKind::Antiparallel && *l.j.front().unwrap() == j + 1 {
                    l.i.push(i);
                    l.j.push_front(j);
                    found = true;
                    break;
                }
            }
            if !found {
                ladders.push(Ladder {
                    kind,
                    i: vec![i],
                    j: std::collections::VecDeque::from(vec![j]),
                });
            }
        }
    }
    ladders.sort_by_key(|l| (l.i[0], l.j[0]));

    // bulge merging
    let mut a = 0;
    while a < ladders.len() {
        let mut b = a + 1;
        while b < ladders.len() {
            let (li, lj) = (&ladders[a], &ladders[b]);
            let ibi = li.i[0] as i64;
            let iei = *li.i.last().unwrap() as i64;
            let jbi = *li.j.front().unwrap() as i64;
            let jei = *li.j.back().unwrap() as i64;
            let ibj = lj.i[0] as i64;
            let iej = *lj.i.last().unwrap() as i64;
            let jbj = *lj.j.front().unwrap() as i64;
            let jej = *lj.j.back().unwrap() as i64;
            let lt = |d: i64, m: i64| d >= 0 && d < m;
            let skip = li.kind != lj.kind
                || !st.no_break(ibi.min(ibj) as usize, iei.max(iej) as usize)
                || !st.no_break(jbi.min(jbj) as usize, jei.max(jej) as usize)
                || !lt(ibj - iei, 6)
                || (iei >= ibj && ibi <= iej);
            let bulge = !skip
                && if li.kind == BridgeKind::Parallel {
                    (lt(jbj - jei, 6) && lt(ibj - iei, 3)) || lt(jbj - jei, 3)
                } else {
                    (lt(jbi - jej, 6) && lt(ibj - iei, 3)) || lt(jbi - jej, 3)
                };
            if bulge {
                let other = ladders.remove(b);
                let l = &mut ladders[a];
                l.i.extend(other.i);
                if l.kind == BridgeKind::Parallel {
                    l.j.extend(other.j);
                } else {
                    for v in other.j.into_iter().rev() {
                        l.j.push_front(v);
                    }
                }
            } else {
                b += 1;
            }
        }
        a += 1;
    }
    for l in &ladders {
        let kind = if l.i.len() > 1 { Dssp8::Strand } else { Dssp8::Bridge };
        let (i0, i1) = (l.i[0], *l.i.last().unwrap());
        let (j0, j1) = (*l.j.front().unwrap(), *l.j.back().unwrap());
        for k in (i0..=i1).chain(j0.min(j1)..=j0.max(j1)) {
            if ss[k] != Dssp8::Strand {
                ss[k] = kind;
            }
        }
    }

    // helices
    let mut flags = [vec![HelixFlag::None; n], vec![HelixFlag::None; n], vec![HelixFlag::None; n]];
    for (fi, stride) in [3usize, 4, 5].into_iter().enumerate() {
        let f = &mut flags[fi];
        for i in 0..n.saturating_sub(stride) {
            if st.no_break(i, i + stride) && st.test_bond(i + stride, i) {
                f[i + stride] = HelixFlag::End;
                for k in (i + 1)..(i + stride) {
                    if f[k] == HelixFlag::None {
                        f[k] = HelixFlag::Middle;
                    }
                }
                f[i] = if f[i] == HelixFlag::End {
                    HelixFlag::StartAndEnd
                } else {
                    HelixFlag::Start
                };
            }
        }
    }
    let is_start = |fi: usize, i: usize| matches!(flags[fi][i], HelixFlag::Start | HelixFlag::StartAndEnd);
    for i in 1..n.saturating_sub(4) {
        if is_start(1, i) && is_start(1, i - 1) {
            for s in &mut ss[i..=i + 3] {
                *s = Dssp8::AlphaHelix;
            }
        }
    }
    for i in 1..n.saturating_sub(3) {
        if is_start(0, i) && is_start(0, i - 1) {
            let empty = ss[i..=i + 2]
                .iter()
                .all(|s| matches!(s, Dssp8::Loop | Dssp8::Helix310));
            if empty {
                for s in &mut ss[i..=i + 2] {
                    *s = Dssp8::Helix310;
                }
            }
        }
    }
    for i in 1..n.saturating_sub(5) {
        if is_start(2, i) && is_start(2, i - 1) {
            let empty = ss[i..=i + 4]
                .iter()
                .all(|s| matches!(s, Dssp8::Loop | Dssp8::PiHelix));
            if empty {
                for s in &mut ss[i..=i + 4] {
                    *s = Dssp8::PiHelix;
                }
            }
        }
    }

    let mut out: Vec<Vec<Option<Dssp8>>> = complex
        .chains
        .iter()
        .map(|c| vec![None; c.residues.len()])
        .collect();
    for (k, (ci, ri)) in index.into_iter().enumerate() {
        out[ci][ri] = Some(ss[k]);
    }
    out
}

/// Per-chain three-state labels in complex order.
pub fn assign_ss3(complex: &Complex) -> Vec<Vec<Ss3>> {
    assign_dssp8(complex)
        .into_iter()
        .map(|chain| chain.into_iter().map(|s| s.map(Dssp8::reduce).unwrap_or(Ss3::NA)).collect())
        .collect()
}

pub fn ss3_string(labels: &[Ss3]) -> String {
    labels.iter().map(|s| s.as_str()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::build::{complex_from_chains, ChainBuilder};

    #[test]
    fn ideal_helix_interior_is_helical() {
        let c = complex_from_chains("h", vec![ChainBuilder::helix("A", "AAAAAAAAAAAA").build()]);
        let ss = assign_ss3(&c);
        let s = ss3_string(&ss[0]);
        assert_eq!(s.len(), 12);
        assert!(s[1..11].chars().all(|c| c == 'H'), "{s}");
    }

    #[test]
    fn missing_ca_is_na() {
        let mut chain = ChainBuilder::helix("A", "AAAAAAAA").build();
        chain.residues[3].atoms.retain(|a| a.name != "CA");
        chain.residues[3].complete_backbone = false;
        let c = complex_from_chains("h", vec![chain]);
        let ss = assign_ss3(&c);
        assert_eq!(ss[0][3], Ss3::NA);
        assert!(ss[0].iter().enumerate().all(|(i, s)| (i == 3) == (*s == Ss3::NA)));
    }

    #[test]
    fn extended_single_strand_is_coil() {
        let c = complex_from_chains("e", vec![ChainBuilder::extended("A", "VVVVVVVVVV").build()]);
        assert!(assign_ss3(&c)[0].iter().all(|s| *s == Ss3::C));
    }
}
