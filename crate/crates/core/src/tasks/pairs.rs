//! Residue-pair sampling by pair class.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::geom::{dist, dist2, CellGrid, Vec3};
use crate::labels::geometry::{PairClass, CONTACT_CUTOFF, SHORT_RANGE_MAX_SEP};
use crate::labels::PairGeometry;
use crate::structure::{Complex, ResidueId};

const MAX_REJECTIONS: usize = 10_000;

/// Residues that have a reference atom, plus precomputed contact lists.
pub(crate) struct PairIndex {
    pub ids: Vec<ResidueId>,
    pos: Vec<Vec3>,
    /// `ids` indices per chain, in residue order.
    members: Vec<Vec<usize>>,
    short: Vec<(usize, usize)>,
    contacts: [Vec<(usize, usize)>; 3],
    contact_set: HashSet<(usize, usize)>,
}

fn slot(class: PairClass) -> usize {
    match class {
        PairClass::Short => 0,
        PairClass::Long => 1,
        PairClass::CrossChain => 2,
    }
}

impl PairIndex {
    pub fn new(complex: &Complex) -> Self {
        let mut ids = Vec::new();
        let mut pos = Vec::new();
        let mut members = Vec::new();
        for chain in &complex.chains {
            let mut m = Vec::new();
            for r in &chain.residues {
                if let Some(p) = r.reference_atom() {
                    m.push(ids.len());
                    ids.push(r.id());
                    pos.push(p);
                }
            }
            members.push(m);
        }
        let mut short = Vec::new();
        for m in &members {
            for (a, &i) in m.iter().enumerate() {
                for &j in &m[a + 1..] {
                    if ids[j].pos - ids[i].pos > SHORT_RANGE_MAX_SEP {
                        break;
                    }
                    short.push((i, j));
                }
            }
        }
        let grid = CellGrid::new(&pos, CONTACT_CUTOFF);
        let c2 = CONTACT_CUTOFF * CONTACT_CUTOFF;
        let mut contacts: [Vec<(usize, usize)>; 3] = Default::default();
        let mut contact_set = HashSet::new();
        for i in 0..pos.len() {
            let mut near = Vec::new();
            grid.for_each_candidate(pos[i], CONTACT_CUTOFF, |j| {
                if j > i && dist2(pos[i], pos[j]) < c2 {
                    near.push(j);
                }
            });
            near.sort_unstable();
            for j in near {
                contacts[slot(PairClass::of(&ids[i], &ids[j]))].push((i, j));
                contact_set.insert((i, j));
            }
        }
        PairIndex {
            ids,
            pos,
            members,
            short,
            contacts,
            contact_set,
        }
    }

    /// Number of distinct unordered pairs in a class.
    pub fn capacity(&self, class: PairClass) -> usize {
        match class {
            PairClass::Short => self.short.len(),
            PairClass::Long => {
                let same: usize = self.members.iter().map(|m| m.len() * m.len().saturating_sub(1) / 2).sum();
                same - self.short.len()
            }
            PairClass::CrossChain => {
                let n: usize = self.members.iter().map(Vec::len).sum();
                let same: usize = self.members.iter().map(|m| m.len() * m.len()).sum();
                (n * n - same) / 2
            }
        }
    }

    pub fn available(&self) -> Vec<PairClass> {
        PairClass::ALL
            .into_iter()
            .filter(|&c| self.capacity(c) > 0)
            .collect()
    }

    pub fn geometry(&self, (i, j): (usize, usize)) -> PairGeometry {
        PairGeometry::from_distance(dist(self.pos[i], self.pos[j]), PairClass::of(&self.ids[i], &self.ids[j]))
    }

    pub fn is_contact(&self, (i, j): (usize, usize)) -> bool {
        self.contact_set.contains(&(i.min(j), i.max(j)))
    }

    pub fn contact_count(&self, class: PairClass) -> usize {
        self.contacts[slot(class)].len()
    }

    /// A uniformly drawn pair of the class, ordered by position in the complex.
    pub fn sample(&self, class: PairClass, rng: &mut ChaCha8Rng) -> Option<(usize, usize)> {
        if self.capacity(class) == 0 {
            return None;
        }
        match class {
            PairClass::Short => Some(self.short[rng.random_range(0..self.short.len())]),
            PairClass::Long => {
                let weights: Vec<usize> = self
                    .members
                    .iter()
                    .map(|m| m.len() * m.len().saturating_sub(1) / 2)
                    .collect();
                for _ in 0..MAX_REJECTIONS {
                    let m = &self.members[weighted(&weights, rng)];
                    let a = rng.random_range(0..m.len());
                    let b = rng.random_range(0..m.len());
                    let (i, j) = (m[a.min(b)], m[a.max(b)]);
                    if a != b && self.ids[j].pos - self.ids[i].pos > SHORT_RANGE_MAX_SEP {
                        return Some((i, j));
                    }
                }
                None
            }
            PairClass::CrossChain => {
                let n = self.ids.len();
                for _ in 0..MAX_REJECTIONS {
                    let a = rng.random_range(0..n);
                    let b = rng.random_range(0..n);
                    if self.ids[a].chain != self.ids[b].chain {
                        return Some((a.min(b), a.max(b)));
                    }
                }
                None
            }
        }
    }

    /// A pair of the class with the requested contact state, if one can be found.
    pub fn sample_with_contact(&self, class: PairClass, contact: bool, rng: &mut ChaCha8Rng) -> Option<(usize, usize)> {
        if contact {
            let c = &self.contacts[slot(class)];
            return (!c.is_empty()).then(|| c[rng.random_range(0..c.len())]);
        }
        if self.contact_count(class) == self.capacity(class) {
            return None;
        }
        (0..MAX_REJECTIONS)
            .filter_map(|_| self.sample(class, rng))
            .find(|p| !self.is_contact(*p))
    }

    /// `n` distinct pairs of one class.
    pub fn sample_distinct(&self, class: PairClass, n: usize, rng: &mut ChaCha8Rng, taken: &mut HashSet<(usize, usize)>) -> Vec<(usize, usize)> {
        let cap = self.capacity(class);
        let mut out = Vec::with_capacity(n);
        if cap <= 4 * n + 64 {
            let mut all = self.enumerate(class);
            all.retain(|p| !taken.contains(p));
            all.shuffle(rng);
            all.truncate(n);
            taken.extend(all.iter().copied());
            return all;
        }
        let mut tries = 0;
        while out.len() < n && tries < MAX_REJECTIONS {
            tries += 1;
            if let Some(p) = self.sample(class, rng) {
                if taken.insert(p) {
                    out.push(p);
                }
            }
        }
        out
    }

    fn enumerate(&self, class: PairClass) -> Vec<(usize, usize)> {
        let n = self.ids.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if PairClass::of(&self.ids[i], &self.ids[j]) == class {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

fn weighted(weights: &[usize], rng: &mut ChaCha8Rng) -> usize {
    let total: usize = weights.iter().sum();
    let mut x = rng.random_range(0..total);
    for (k, &w) in weights.iter().enumerate() {
        if x < w {
            return k;
        }
        x -= w;
    }
    weights.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::build::{complex_from_chains, ChainBuilder};
    use rand::SeedableRng;

    fn two_chains() -> Complex {
        complex_from_chains(
            "pi",
            vec![
                ChainBuilder::helix("A", "AKLEGAKLEGAKLEG").build(),
                ChainBuilder::helix("B", "EKLAGEKLAG").offset([9.0, 0.0, 0.0]).build(),
            ],
        )
    }

    #[test]
    fn capacities_partition_all_pairs() {
        let idx = PairIndex::new(&two_chains());
        let n = idx.ids.len();
        let total: usize = PairClass::ALL.iter().map(|&c| idx.capacity(c)).sum();
        assert_eq!(total, n * (n - 1) / 2);
        for c in PairClass::ALL {
            assert_eq!(idx.enumerate(c).len(), idx.capacity(c));
        }
    }

    #[test]
    fn sampled_pairs_have_requested_class() {
        let idx = PairIndex::new(&two_chains());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for c in PairClass::ALL {
            for _ in 0..50 {
                let p = idx.sample(c, &mut rng).unwrap();
                assert_eq!(idx.geometry(p).pair_class, c);
                assert!(p.0 < p.1);
            }
        }
    }

    #[test]
    fn contact_lists_agree_with_geometry() {
        let idx = PairIndex::new(&two_chains());
        for p in idx.enumerate(PairClass::Long).into_iter().chain(idx.enumerate(PairClass::CrossChain)) {
            assert_eq!(idx.geometry(p).contact, idx.is_contact(p));
        }
    }
}
