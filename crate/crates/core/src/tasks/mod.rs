//! Supervision records for the three training stages and the curriculum sampler.

pub mod corpus;
pub mod curriculum;
mod pairs;
pub mod stage1;
pub mod stage2;
pub mod stage3;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::labels::LabelError;

pub use curriculum::{sample_curriculum, CurriculumPhase, ReplayBuffer};
pub use stage1::{gen_stage1, render_caption};
pub use stage2::gen_stage2;
pub use stage3::gen_stage3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskType {
    #[serde(rename = "ALIGNMENT_SCHEMA_B1_V2")]
    SchemaB1,
    #[serde(rename = "ALIGNMENT_SCHEMA_B2_V2")]
    SchemaB2,
    #[serde(rename = "ALIGNMENT_CAPTION_B1_V2")]
    CaptionB1,
    #[serde(rename = "ALIGNMENT_CAPTION_B2_V2")]
    CaptionB2,
    #[serde(rename = "RESIDUE_RETRIEVAL_V1")]
    ResidueRetrieval,
    #[serde(rename = "DSSP_SEQ_V1")]
    DsspSeq,
    #[serde(rename = "RSA_SEQ_V1")]
    RsaSeq,
    #[serde(rename = "PAIR_DIST_BIN_V1")]
    PairDistBin,
    #[serde(rename = "PAIR_CONTACT_YN_V1")]
    PairContact,
    #[serde(rename = "PAIR_BATCH_V1")]
    PairBatch,
    #[serde(rename = "SALTBRIDGE_BIN_V1")]
    SaltBridgeBin,
    #[serde(rename = "CHAINPAIR_GRAPH_V1")]
    ChainPairGraph,
    #[serde(rename = "TOP_CHAINPAIR_V1")]
    TopChainPair,
    #[serde(rename = "INTERFACE_TOPK_V1")]
    InterfaceTopK,
    #[serde(rename = "HOTSPOT_TOPK_V1")]
    HotspotTopK,
    #[serde(rename = "LDDT_BIN_V1")]
    LddtBin,
    #[serde(rename = "AB_CDR_REDESIGN_SFT_V1")]
    CdrRedesign,
}

impl TaskType {
    pub const ALL: [TaskType; 17] = [
        TaskType::SchemaB1,
        TaskType::SchemaB2,
        TaskType::CaptionB1,
        TaskType::CaptionB2,
        TaskType::ResidueRetrieval,
        TaskType::DsspSeq,
        TaskType::RsaSeq,
        TaskType::PairDistBin,
        TaskType::PairContact,
        TaskType::PairBatch,
        TaskType::SaltBridgeBin,
        TaskType::ChainPairGraph,
        TaskType::TopChainPair,
        TaskType::InterfaceTopK,
        TaskType::HotspotTopK,
        TaskType::LddtBin,
        TaskType::CdrRedesign,
    ];

    pub const STAGE1: [TaskType; 4] = [
        TaskType::SchemaB1,
        TaskType::SchemaB2,
        TaskType::CaptionB1,
        TaskType::CaptionB2,
    ];

    pub const STAGE2: [TaskType; 12] = [
        TaskType::ResidueRetrieval,
        TaskType::DsspSeq,
        TaskType::RsaSeq,
        TaskType::PairDistBin,
        TaskType::PairContact,
        TaskType::PairBatch,
        TaskType::SaltBridgeBin,
        TaskType::ChainPairGraph,
        TaskType::TopChainPair,
        TaskType::InterfaceTopK,
        TaskType::HotspotTopK,
        TaskType::LddtBin,
    ];

    pub fn id(self) -> &'static str {
        match self {
            TaskType::SchemaB1 => "ALIGNMENT_SCHEMA_B1_V2",
            TaskType::SchemaB2 => "ALIGNMENT_SCHEMA_B2_V2",
            TaskType::CaptionB1 => "ALIGNMENT_CAPTION_B1_V2",
            TaskType::CaptionB2 => "ALIGNMENT_CAPTION_B2_V2",
            TaskType::ResidueRetrieval => "RESIDUE_RETRIEVAL_V1",
            TaskType::DsspSeq => "DSSP_SEQ_V1",
            TaskType::RsaSeq => "RSA_SEQ_V1",
            TaskType::PairDistBin => "PAIR_DIST_BIN_V1",
            TaskType::PairContact => "PAIR_CONTACT_YN_V1",
            TaskType::PairBatch => "PAIR_BATCH_V1",
            TaskType::SaltBridgeBin => "SALTBRIDGE_BIN_V1",
            TaskType::ChainPairGraph => "CHAINPAIR_GRAPH_V1",
            TaskType::TopChainPair => "TOP_CHAINPAIR_V1",
            TaskType::InterfaceTopK => "INTERFACE_TOPK_V1",
            TaskType::HotspotTopK => "HOTSPOT_TOPK_V1",
            TaskType::LddtBin => "LDDT_BIN_V1",
            TaskType::CdrRedesign => "AB_CDR_REDESIGN_SFT_V1",
        }
    }

    /// Short name used in reports and curriculum tables.
    pub fn abbr(self) -> &'static str {
        match self {
            TaskType::SchemaB1 => "AS-B1",
            TaskType::SchemaB2 => "AS-B2",
            TaskType::CaptionB1 => "AC-B1",
            TaskType::CaptionB2 => "AC-B2",
            TaskType::ResidueRetrieval => "RR",
            TaskType::DsspSeq => "DSSP",
            TaskType::RsaSeq => "RSA",
            TaskType::PairDistBin => "DIST",
            TaskType::PairContact => "CONTACT",
            TaskType::PairBatch => "BATCH",
            TaskType::SaltBridgeBin => "SALT",
            TaskType::ChainPairGraph => "CHAIN",
            TaskType::TopChainPair => "TOP",
            TaskType::InterfaceTopK => "INTF",
            TaskType::HotspotTopK => "HOT",
            TaskType::LddtBin => "LDDT",
            TaskType::CdrRedesign => "CDR",
        }
    }

    pub fn stage(self) -> u8 {
        match self {
            TaskType::SchemaB1 | TaskType::SchemaB2 | TaskType::CaptionB1 | TaskType::CaptionB2 => 1,
            TaskType::CdrRedesign => 3,
            _ => 2,
        }
    }

    pub fn prompt_tag(self) -> String {
        format!("<TASK={}>", self.id())
    }
}

impl fmt::Display for TaskType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for TaskType {
    type Err = TaskError;

    /// Accepts the full id or the short name, case-insensitively.
    fn from_str(s: &str) -> Result<Self, TaskError> {
        let up = s.trim().to_ascii_uppercase();
        TaskType::ALL
            .into_iter()
            .find(|t| t.id() == up || t.abbr() == up)
            .ok_or_else(|| TaskError::UnknownTaskType(s.to_string()))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TaskError {
    #[error("{task} not applicable to {structure}: {reason}")]
    TaskNotApplicable {
        task: TaskType,
        structure: String,
        reason: String,
    },
    #[error("missing annotation for {0}")]
    MissingAnnotation(String),
    #[error("unknown task type {0:?}")]
    UnknownTaskType(String),
    #[error("replay requested for {0} but the buffer holds none")]
    EmptyBufferWithReplay(TaskType),
    #[error("invalid curriculum phase: {0}")]
    InvalidPhase(String),
    #[error("no instances of {0} in the sampling pool")]
    EmptyPool(TaskType),
    #[error(transparent)]
    Label(#[from] LabelError),
}

pub(crate) fn not_applicable(task: TaskType, structure: &str, reason: impl Into<String>) -> TaskError {
    TaskError::TaskNotApplicable {
        task,
        structure: structure.to_string(),
        reason: reason.into(),
    }
}

/// One supervision record. Field order is the JSONL key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub task_type: TaskType,
    pub structure_id: String,
    pub seed: u64,
    pub prompt: Value,
    pub target: Value,
}

impl TaskInstance {
    /// Per-structure running index stored in the prompt; joins model outputs.
    pub fn ordinal(&self) -> Option<u64> {
        self.prompt.get("ordinal").and_then(Value::as_u64)
    }

    pub fn prompt_text(&self) -> Option<&str> {
        self.prompt.get("text").and_then(Value::as_str)
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("task instances always serialize")
    }
}

/// Deterministic per-instance seed: first 8 bytes (little endian) of
/// SHA-256 over the global seed, structure id, task id and ordinal.
pub fn instance_seed(global_seed: u64, structure_id: &str, task: TaskType, ordinal: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(global_seed.to_le_bytes());
    h.update((structure_id.len() as u64).to_le_bytes());
    h.update(structure_id.as_bytes());
    h.update(task.id().as_bytes());
    h.update(ordinal.to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

pub fn rng_from(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

/// Prompt object: ordinal, task tag plus question text, optional structured input.
pub(crate) fn prompt(task: TaskType, ordinal: u64, question: &str, input: Option<Value>) -> Value {
    let mut m = serde_json::Map::new();
    m.insert("ordinal".into(), Value::from(ordinal));
    m.insert("text".into(), Value::from(format!("{}\n{}", task.prompt_tag(), question)));
    if let Some(i) = input {
        m.insert("input".into(), i);
    }
    Value::Object(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_distinct_ids() {
        let ids: std::collections::BTreeSet<_> = TaskType::ALL.iter().map(|t| t.id()).collect();
        assert_eq!(ids.len(), 17);
        for t in TaskType::ALL {
            assert_eq!(t.id().parse::<TaskType>().unwrap(), t);
            assert_eq!(t.abbr().parse::<TaskType>().unwrap(), t);
            let j = serde_json::to_string(&t).unwrap();
            assert_eq!(j, format!("\"{}\"", t.id()));
        }
    }

    #[test]
    fn seeds_depend_on_every_component() {
        let base = instance_seed(1, "8JRK", TaskType::ResidueRetrieval, 0);
        assert_eq!(base, instance_seed(1, "8JRK", TaskType::ResidueRetrieval, 0));
        assert_ne!(base, instance_seed(2, "8JRK", TaskType::ResidueRetrieval, 0));
        assert_ne!(base, instance_seed(1, "8JRL", TaskType::ResidueRetrieval, 0));
        assert_ne!(base, instance_seed(1, "8JRK", TaskType::DsspSeq, 0));
        assert_ne!(base, instance_seed(1, "8JRK", TaskType::ResidueRetrieval, 1));
    }

    #[test]
    fn instance_key_order_is_fixed() {
        let t = TaskInstance {
            task_type: TaskType::ResidueRetrieval,
            structure_id: "S".into(),
            seed: 3,
            prompt: prompt(TaskType::ResidueRetrieval, 0, "q", None),
            target: serde_json::json!({"aa": "E"}),
        };
        assert_eq!(
            t.to_json_line(),
            r#"{"task_type":"RESIDUE_RETRIEVAL_V1","structure_id":"S","seed":3,"prompt":{"ordinal":0,"text":"<TASK=RESIDUE_RETRIEVAL_V1>\nq"},"target":{"aa":"E"}}"#
        );
    }
}
