//! Stage II curriculum mixtures with replay of earlier phases.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{rng_from, TaskError, TaskInstance, TaskType};

/// Instances available for sampling, grouped by task type. Draws share
/// the pooled instances instead of copying them.
pub type Pool = BTreeMap<TaskType, Vec<Arc<TaskInstance>>>;

pub fn pool_from(instances: impl IntoIterator<Item = TaskInstance>) -> Pool {
    let mut pool = Pool::new();
    for t in instances {
        pool.entry(t.task_type).or_default().push(Arc::new(t));
    }
    pool
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumPhase {
    pub name: String,
    pub total: u64,
    pub weights: BTreeMap<TaskType, f64>,
    pub replay: BTreeMap<TaskType, f64>,
}

pub const PHASE_NAMES: [&str; 4] = ["M0", "M1", "M2", "M3"];

impl CurriculumPhase {
    /// Reference mixtures. M2 follows the percentages that sum to 100.
    pub fn standard(name: &str) -> Result<Self, TaskError> {
        use TaskType::*;
        let (total, weights, replay): (u64, Vec<(TaskType, f64)>, Vec<(TaskType, f64)>) = match name {
            "M0" => (
                2_000_000,
                vec![(ResidueRetrieval, 0.40), (DsspSeq, 0.35), (RsaSeq, 0.25)],
                vec![],
            ),
            "M1" => (
                3_000_000,
                vec![(PairDistBin, 0.45), (PairContact, 0.40), (PairBatch, 0.05)],
                vec![(DsspSeq, 0.05), (RsaSeq, 0.05)],
            ),
            "M2" => (
                2_640_000,
                vec![(PairDistBin, 0.55), (PairBatch, 0.20), (PairContact, 0.17)],
                vec![(DsspSeq, 0.04), (RsaSeq, 0.04)],
            ),
            "M3" => (
                1_450_000,
                vec![
                    (ChainPairGraph, 0.10),
                    (TopChainPair, 0.10),
                    (InterfaceTopK, 0.10),
                    (HotspotTopK, 0.10),
                    (SaltBridgeBin, 0.10),
                    (PairDistBin, 0.16),
                    (PairContact, 0.10),
                    (PairBatch, 0.18),
                ],
                vec![(DsspSeq, 0.03), (RsaSeq, 0.03)],
            ),
            other => return Err(TaskError::InvalidPhase(format!("unknown phase {other}"))),
        };
        Ok(CurriculumPhase {
            name: name.to_string(),
            total,
            weights: weights.into_iter().collect(),
            replay: replay.into_iter().collect(),
        })
    }

    pub fn all_standard() -> Vec<Self> {
        PHASE_NAMES
            .iter()
            .map(|n| Self::standard(n).expect("standard phase names"))
            .collect()
    }

    pub fn validate(&self) -> Result<(), TaskError> {
        let mut sum = 0.0;
        for (t, w) in self.weights.iter().chain(&self.replay) {
            if !(w.is_finite() && *w >= 0.0) {
                return Err(TaskError::InvalidPhase(format!("{}: bad weight {w} for {t}", self.name)));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(TaskError::InvalidPhase(format!("{}: weights sum to {sum}", self.name)));
        }
        Ok(())
    }

    /// Phase total scaled by `scale`, rounded to the nearest instance.
    pub fn scaled_total(&self, scale: f64) -> u64 {
        (self.total as f64 * scale).round() as u64
    }
}

/// Reservoir of earlier-phase instances.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    pub capacity: usize,
    entries: Vec<Arc<TaskInstance>>,
    seen: u64,
    rng: rand_chacha::ChaCha8Rng,
}

pub const DEFAULT_BUFFER_CAPACITY: usize = 100_000;

impl ReplayBuffer {
    pub fn new(capacity: usize, seed: u64) -> Self {
        ReplayBuffer {
            capacity,
            entries: Vec::new(),
            seen: 0,
            rng: rng_from(seed),
        }
    }

    pub fn entries(&self) -> &[Arc<TaskInstance>] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Reservoir insertion (Algorithm R), so every pushed item is retained
    /// with equal probability.
    pub fn push(&mut self, item: Arc<TaskInstance>) {
        self.seen += 1;
        if self.entries.len() < self.capacity {
            self.entries.push(item);
        } else {
            let k = self.rng.random_range(0..self.seen);
            if (k as usize) < self.capacity {
                self.entries[k as usize] = item;
            }
        }
    }

    pub fn extend(&mut self, items: impl IntoIterator<Item = Arc<TaskInstance>>) {
        for t in items {
            self.push(t);
        }
    }

    fn of_type(&self, t: TaskType) -> Vec<&Arc<TaskInstance>> {
        self.entries.iter().filter(|e| e.task_type == t).collect()
    }
}

enum Source<'a> {
    Fresh(&'a [Arc<TaskInstance>]),
    Replay(Vec<&'a Arc<TaskInstance>>),
}

/// Draws `n` instances: a multinomial over the phase's task weights, then a
/// uniform pick (with replacement) from the pool or, for replay categories,
/// from the buffer.
pub fn sample_curriculum(
    phase: &CurriculumPhase,
    buffer: &ReplayBuffer,
    pool: &Pool,
    n: usize,
    seed: u64,
) -> Result<Vec<Arc<TaskInstance>>, TaskError> {
    phase.validate()?;
    let mut cats: Vec<(f64, Source)> = Vec::new();
    for (t, &w) in &phase.weights {
        if w == 0.0 {
            continue;
        }
        let items = pool.get(t).filter(|v| !v.is_empty()).ok_or(TaskError::EmptyPool(*t))?;
        cats.push((w, Source::Fresh(items)));
    }
    for (t, &w) in &phase.replay {
        if w == 0.0 {
            continue;
        }
        let items = buffer.of_type(*t);
        if items.is_empty() {
            return Err(TaskError::EmptyBufferWithReplay(*t));
        }
        cats.push((w, Source::Replay(items)));
    }
    let mut cumulative = Vec::with_capacity(cats.len());
    let mut acc = 0.0;
    for (w, _) in &cats {
        acc += w;
        cumulative.push(acc);
    }
    let mut rng = rng_from(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let u = rng.random::<f64>() * acc;
        let k = cumulative.partition_point(|&c| c <= u).min(cats.len() - 1);
        let picked = match &cats[k].1 {
            Source::Fresh(items) => &items[rng.random_range(0..items.len())],
            Source::Replay(items) => items[rng.random_range(0..items.len())],
        };
        out.push(Arc::clone(picked));
    }
    Ok(out)
}

/// Runs phases in order, feeding each phase's draws into the replay buffer
/// before the next phase starts.
pub fn run_curriculum(
    phases: &[(CurriculumPhase, usize)],
    pool: &Pool,
    seed: u64,
    buffer_capacity: usize,
) -> Result<Vec<Vec<Arc<TaskInstance>>>, TaskError> {
    let mut buffer = ReplayBuffer::new(buffer_capacity, phase_seed(seed, "buffer"));
    let mut all = Vec::new();
    for (phase, n) in phases {
        let drawn = sample_curriculum(phase, &buffer, pool, *n, phase_seed(seed, &phase.name))?;
        buffer.extend(drawn.iter().cloned());
        all.push(drawn);
    }
    Ok(all)
}

pub fn phase_seed(seed: u64, name: &str) -> u64 {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(b"curriculum:");
    h.update(name.as_bytes());
    u64::from_le_bytes(h.finalize()[..8].try_into().expect("32-byte digest"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn inst(t: TaskType, k: u64) -> TaskInstance {
        TaskInstance {
            task_type: t,
            structure_id: format!("S{k}"),
            seed: k,
            prompt: json!({"ordinal": k}),
            target: json!({}),
        }
    }

    fn pool() -> Pool {
        pool_from(TaskType::STAGE2.iter().flat_map(|&t| (0..5).map(move |k| inst(t, k))))
    }

    #[test]
    fn standard_phases_sum_to_one() {
        for p in CurriculumPhase::all_standard() {
            p.validate().unwrap();
        }
    }

    #[test]
    fn replay_needs_buffer() {
        let m1 = CurriculumPhase::standard("M1").unwrap();
        let err = sample_curriculum(&m1, &ReplayBuffer::new(10, 0), &pool(), 10, 1).unwrap_err();
        assert!(matches!(err, TaskError::EmptyBufferWithReplay(_)));
    }

    #[test]
    fn degenerate_mixture() {
        let p = CurriculumPhase {
            name: "one".into(),
            total: 10,
            weights: [(TaskType::PairBatch, 1.0)].into_iter().collect(),
            replay: BTreeMap::new(),
        };
        let out = sample_curriculum(&p, &ReplayBuffer::new(1, 0), &pool(), 200, 9).unwrap();
        assert!(out.iter().all(|t| t.task_type == TaskType::PairBatch));
    }

    #[test]
    fn reservoir_keeps_capacity() {
        let mut b = ReplayBuffer::new(10, 4);
        b.extend((0..1000).map(|k| Arc::new(inst(TaskType::DsspSeq, k))));
        assert_eq!(b.entries().len(), 10);
        assert!(b.entries().iter().any(|e| e.seed >= 10));
    }

    #[test]
    fn phases_chain_through_buffer() {
        let phases: Vec<_> = CurriculumPhase::all_standard().into_iter().map(|p| (p, 500)).collect();
        let a = run_curriculum(&phases, &pool(), 3, 1000).unwrap();
        let b = run_curriculum(&phases, &pool(), 3, 1000).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
    }
}
