//! Stage II structural meta-tasks.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::pairs::PairIndex;
use super::{not_applicable, prompt, rng_from, TaskError, TaskInstance, TaskType};
use crate::labels::geometry::PairClass;
use crate::labels::interface::{salt_bridge_bin_label, SALT_BRIDGE_BINS};
use crate::labels::{LabelSet, RankMode, RsaBin, Ss3};
use crate::structure::{AnnotationDoc, Complex, ResidueId};

pub const WINDOW: usize = 5;
pub const BATCH_SIZE: usize = 30;
pub const INTERFACE_K: usize = 10;
pub const HOTSPOT_K: usize = 5;
pub const LDDT_BINS: [&str; 5] = ["<0.5", "0.5-0.6", "0.6-0.7", "0.7-0.8", ">0.8"];
const AA_OPTIONS: &str = "{A,C,D,E,F,G,H,I,K,L,M,N,P,Q,R,S,T,V,W,Y,X}";

pub fn lddt_bin(v: f64) -> &'static str {
    if v < 0.5 {
        "<0.5"
    } else if v < 0.6 {
        "0.5-0.6"
    } else if v < 0.7 {
        "0.6-0.7"
    } else if v < 0.8 {
        "0.7-0.8"
    } else {
        ">0.8"
    }
}

/// Generation inputs shared by every Stage II task of one structure.
pub struct Stage2Context<'a> {
    pub complex: &'a Complex,
    pub labels: &'a LabelSet,
    pub annotation: Option<&'a AnnotationDoc>,
    pairs: PairIndex,
}

impl<'a> Stage2Context<'a> {
    pub fn new(complex: &'a Complex, labels: &'a LabelSet, annotation: Option<&'a AnnotationDoc>) -> Self {
        Stage2Context {
            complex,
            labels,
            annotation,
            pairs: PairIndex::new(complex),
        }
    }

    pub fn generate(&self, task: TaskType, seed: u64, ordinal: u64) -> Result<TaskInstance, TaskError> {
        let mut rng = rng_from(seed);
        let (question, input, target) = match task {
            TaskType::ResidueRetrieval => self.residue_retrieval(&mut rng)?,
            TaskType::DsspSeq | TaskType::RsaSeq => self.window(task, &mut rng)?,
            TaskType::PairContact => self.contact(&mut rng)?,
            TaskType::PairDistBin => self.dist(&mut rng)?,
            TaskType::PairBatch => self.batch(&mut rng)?,
            TaskType::ChainPairGraph => self.chain_graph()?,
            TaskType::TopChainPair => self.top_pair()?,
            TaskType::InterfaceTopK | TaskType::HotspotTopK => self.topk(task)?,
            TaskType::SaltBridgeBin => self.salt()?,
            TaskType::LddtBin => self.lddt()?,
            other => return Err(self.na(other, "not a Stage II task")),
        };
        Ok(TaskInstance {
            task_type: task,
            structure_id: self.complex.id.clone(),
            seed,
            prompt: prompt(task, ordinal, &question, input),
            target,
        })
    }

    fn na(&self, task: TaskType, why: &str) -> TaskError {
        not_applicable(task, &self.complex.id, why)
    }

    fn residue_retrieval(&self, rng: &mut ChaCha8Rng) -> Result<(String, Option<Value>, Value), TaskError> {
        let n = self.complex.num_residues();
        let r = self
            .complex
            .residues()
            .nth(rng.random_range(0..n))
            .expect("index below residue count");
        let q = format!(
            "What is the amino-acid type at residue (chain {}, position {})? Choose one option: {AA_OPTIONS}.",
            r.chain_id, r.pos
        );
        Ok((q, None, json!({ "aa": r.aa.to_string() })))
    }

    fn window(&self, task: TaskType, rng: &mut ChaCha8Rng) -> Result<(String, Option<Value>, Value), TaskError> {
        let token = |c: &crate::labels::ChainLabels, i: usize| -> &'static str {
            if task == TaskType::DsspSeq {
                c.ss3[i].as_str()
            } else {
                c.rsa_bin[i].as_str()
            }
        };
        let is_na = |c: &crate::labels::ChainLabels, i: usize| {
            if task == TaskType::DsspSeq {
                c.ss3[i] == Ss3::NA
            } else {
                c.rsa_bin[i] == RsaBin::NA
            }
        };
        let mut clean = Vec::new();
        let mut partial = Vec::new();
        for (ci, c) in self.labels.chains.iter().enumerate() {
            if c.ss3.len() < WINDOW {
                continue;
            }
            for start in 0..=c.ss3.len() - WINDOW {
                let missing = (start..start + WINDOW).filter(|&i| is_na(c, i)).count();
                if missing == 0 {
                    clean.push((ci, start));
                } else if missing < WINDOW {
                    partial.push((ci, start));
                }
            }
        }
        let pool = if clean.is_empty() { &partial } else { &clean };
        if pool.is_empty() {
            return Err(self.na(task, "no 5-residue window with labels"));
        }
        let (ci, start) = pool[rng.random_range(0..pool.len())];
        let c = &self.labels.chains[ci];
        let labels: String = (start..start + WINDOW).map(|i| token(c, i)).collect();
        let q = if task == TaskType::DsspSeq {
            format!(
                "What are the secondary-structure labels for chain {} residues {} through {} (inclusive)? Output a 5-character string using {{H,E,C,NA}}.",
                c.chain_id,
                start + 1,
                start + WINDOW
            )
        } else {
            format!(
                "What are the solvent-accessibility bins for chain {} residues {} through {} (inclusive)? Output a 5-character string using {{B,M,E,NA}}.",
                c.chain_id,
                start + 1,
                start + WINDOW
            )
        };
        Ok((q, None, json!({ "labels": labels })))
    }

    fn pick_class(&self, task: TaskType, rng: &mut ChaCha8Rng) -> Result<PairClass, TaskError> {
        let avail = self.pairs.available();
        if avail.is_empty() {
            return Err(self.na(task, "fewer than two residues with reference atoms"));
        }
        Ok(avail[rng.random_range(0..avail.len())])
    }

    fn contact(&self, rng: &mut ChaCha8Rng) -> Result<(String, Option<Value>, Value), TaskError> {
        let class = self.pick_class(TaskType::PairContact, rng)?;
        let want = rng.random_bool(0.5);
        let pair = self
            .pairs
            .sample_with_contact(class, want, rng)
            .or_else(|| self.pairs.sample_with_contact(class, !want, rng))
            .ok_or_else(|| self.na(TaskType::PairContact, "pair sampling failed"))?;
        let (i, j) = (&self.pairs.ids[pair.0], &self.pairs.ids[pair.1]);
        let g = self.pairs.geometry(pair);
        let q = format!(
            "Are residue (chain {}, position {}) and residue (chain {}, position {}) in contact under the <8.0Å Cβ (Cα for Gly) rule? Choose one option: {{Contact, NotContact}}.",
            i.chain, i.pos, j.chain, j.pos
        );
        let choice = if g.contact { "Contact" } else { "NotContact" };
        Ok((q, None, json!({ "choice": choice })))
    }

    fn dist(&self, rng: &mut ChaCha8Rng) -> Result<(String, Option<Value>, Value), TaskError> {
        let class = self.pick_class(TaskType::PairDistBin, rng)?;
        let pair = self
            .pairs
            .sample(class, rng)
            .ok_or_else(|| self.na(TaskType::PairDistBin, "pair sampling failed"))?;
        let (i, j) = (&self.pairs.ids[pair.0], &self.pairs.ids[pair.1]);
        let g = self.pairs.geometry(pair);
        let q = format!(
            "What is the distance bin between residue (chain {}, position {}) and residue (chain {}, position {})? Pair class: {}. Choose one option: {{{}}}.",
            i.chain,
            i.pos,
            j.chain,
            j.pos,
            class.as_str(),
            class.bin_labels().join(", ")
        );
        Ok((q, None, json!({ "dist_bin": g.dist_bin })))
    }

    fn batch(&self, rng: &mut ChaCha8Rng) -> Result<(String, Option<Value>, Value), TaskError> {
        let classes = [PairClass::Short, PairClass::Long, PairClass::CrossChain];
        let caps: Vec<usize> = classes.iter().map(|&c| self.pairs.capacity(c)).collect();
        if caps.iter().sum::<usize>() < BATCH_SIZE {
            return Err(self.na(TaskType::PairBatch, "fewer than 30 distinct residue pairs"));
        }
        let quota = batch_quota(&caps);
        let mut taken = HashSet::new();
        let mut chosen = Vec::with_capacity(BATCH_SIZE);
        for (k, &class) in classes.iter().enumerate() {
            chosen.extend(self.pairs.sample_distinct(class, quota[k], rng, &mut taken));
        }
        // rejection sampling on huge classes can fall short; top up from any class
        for &class in &classes {
            if chosen.len() >= BATCH_SIZE {
                break;
            }
            let need = BATCH_SIZE - chosen.len();
            chosen.extend(self.pairs.sample_distinct(class, need, rng, &mut taken));
        }
        if chosen.len() < BATCH_SIZE {
            return Err(self.na(TaskType::PairBatch, "could not draw 30 distinct pairs"));
        }
        chosen.shuffle(rng);
        let mut queries = Vec::new();
        let mut answers = Vec::new();
        for (k, p) in chosen.iter().enumerate() {
            let id = format!("p{}", k + 1);
            let (i, j) = (&self.pairs.ids[p.0], &self.pairs.ids[p.1]);
            queries.push(json!({
                "pair_id": id,
                "i": {"chain": i.chain, "pos": i.pos},
                "j": {"chain": j.chain, "pos": j.pos},
            }));
            answers.push(json!({"pair_id": id, "dist_bin": self.pairs.geometry(*p).dist_bin}));
        }
        let q = "For each residue pair below, what is the distance bin (using the bin set for its pair class)? Return JSON only.";
        Ok((q.to_string(), Some(json!({ "pairs": queries })), json!({ "pairs": answers })))
    }

    fn need_chains(&self, task: TaskType) -> Result<(), TaskError> {
        if self.complex.chains.len() < 2 {
            return Err(self.na(task, "single-chain complex"));
        }
        Ok(())
    }

    fn chain_graph(&self) -> Result<(String, Option<Value>, Value), TaskError> {
        self.need_chains(TaskType::ChainPairGraph)?;
        let pairs: Vec<Value> = self
            .labels
            .chain_pairs
            .pairs
            .iter()
            .map(|p| json!({"chain_i": p.chain_i, "chain_j": p.chain_j}))
            .collect();
        let q = "Which chain pairs are interacting in this complex under the strength threshold used by the dataset generator? Return JSON only.";
        Ok((q.to_string(), None, json!({ "pairs": pairs })))
    }

    fn top(&self, task: TaskType) -> Result<(String, String), TaskError> {
        self.need_chains(task)?;
        let top = self
            .labels
            .chain_pairs
            .top_pair()
            .map_err(|_| self.na(task, "no contacting chain pair"))?;
        Ok((top.chain_i.clone(), top.chain_j.clone()))
    }

    fn top_pair(&self) -> Result<(String, Option<Value>, Value), TaskError> {
        let (a, b) = self.top(TaskType::TopChainPair)?;
        let q = "Which chain pair has the strongest interaction in this complex under the dataset generator's contact-strength rule? Return JSON only.";
        Ok((q.to_string(), None, json!({ "top_chain_pair": {"chain_i": a, "chain_j": b} })))
    }

    fn topk(&self, task: TaskType) -> Result<(String, Option<Value>, Value), TaskError> {
        let (a, b) = self.top(task)?;
        let (k, mode, q) = if task == TaskType::InterfaceTopK {
            (
                INTERFACE_K,
                RankMode::Interface,
                format!("For the chain pair ({a},{b}), which residues form the top-{INTERFACE_K} interface on each chain under the dataset generator's interface rule? Return JSON only."),
            )
        } else {
            (
                HOTSPOT_K,
                RankMode::Hotspot,
                format!("For the chain pair ({a},{b}), which residues are the top-{HOTSPOT_K} hotspots on each chain under the dataset generator's hotspot proxy rule? Return JSON only."),
            )
        };
        let (la, lb) = self.labels.ranked((&a, &b), k, mode);
        let mut t = serde_json::Map::new();
        t.insert("chain_pair".into(), json!({"chain_i": a, "chain_j": b}));
        t.insert("topk".into(), json!(k));
        t.insert(a, json!(la));
        t.insert(b, json!(lb));
        Ok((q, None, Value::Object(t)))
    }

    fn salt(&self) -> Result<(String, Option<Value>, Value), TaskError> {
        let (a, b) = self.top(TaskType::SaltBridgeBin)?;
        let q = format!(
            "For the chain pair ({a},{b}), what is the salt-bridge count bin under the dataset generator's salt-bridge rule? Choose one option: {{{}}}.",
            SALT_BRIDGE_BINS.join(", ")
        );
        let bin = salt_bridge_bin_label(self.labels.salt_bridges(&a, &b));
        Ok((q, None, json!({ "salt_bridge_bin": bin })))
    }

    fn lddt(&self) -> Result<(String, Option<Value>, Value), TaskError> {
        let v = self
            .annotation
            .and_then(|a| a.lddt)
            .ok_or_else(|| self.na(TaskType::LddtBin, "no lDDT metadata"))?;
        let q = format!(
            "Predict the CDR LDDT score bin for this antibody structure. Choose one option: {{{}}}.",
            LDDT_BINS.join(", ")
        );
        Ok((q, None, json!({ "lddt_bin": lddt_bin(v) })))
    }

    /// Residue ids referenced by a generated prompt, for consistency checks.
    pub fn residue_ids(&self) -> &[ResidueId] {
        &self.pairs.ids
    }
}

/// Splits 30 pairs 50/25/25 over short/long/cross-chain, handing the share
/// of a class that cannot fill its quota to the others in that order.
pub fn batch_quota(caps: &[usize]) -> [usize; 3] {
    let mut q = [15usize, 8, 7];
    loop {
        let mut excess = 0;
        for k in 0..3 {
            if q[k] > caps[k] {
                excess += q[k] - caps[k];
                q[k] = caps[k];
            }
        }
        if excess == 0 {
            return q;
        }
        let mut moved = false;
        for k in 0..3 {
            let room = caps[k] - q[k];
            let take = room.min(excess);
            q[k] += take;
            excess -= take;
            moved |= take > 0;
        }
        if !moved {
            return q;
        }
    }
}

/// One Stage II instance; builds a throwaway context. Prefer
/// [`Stage2Context`] when generating many tasks for one structure.
pub fn gen_stage2(
    complex: &Complex,
    labels: &LabelSet,
    annotation: Option<&AnnotationDoc>,
    task: TaskType,
    seed: u64,
    ordinal: u64,
) -> Result<TaskInstance, TaskError> {
    Stage2Context::new(complex, labels, annotation).generate(task, seed, ordinal)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quota_redistributes() {
        assert_eq!(batch_quota(&[100, 100, 100]), [15, 8, 7]);
        assert_eq!(batch_quota(&[100, 100, 0]), [22, 8, 0]);
        assert_eq!(batch_quota(&[20, 3, 0]), [20, 3, 0]);
        assert_eq!(batch_quota(&[10, 100, 100]), [10, 13, 7]);
    }

    #[test]
    fn lddt_bins_are_left_closed() {
        assert_eq!(lddt_bin(0.49), "<0.5");
        assert_eq!(lddt_bin(0.5), "0.5-0.6");
        assert_eq!(lddt_bin(0.75), "0.7-0.8");
        assert_eq!(lddt_bin(0.8), ">0.8");
    }
}
