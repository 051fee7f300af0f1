//! Corpus generation over many structures, JSONL output and manifests.

use std::borrow::Borrow;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::stage2::Stage2Context;
use super::{gen_stage1, gen_stage3, instance_seed, CurriculumPhase, TaskError, TaskInstance, TaskType};
use crate::labels::{compute_labels, LabelRules};
use crate::structure::{load_cdr_annotations, validate_hotspots, AnnotationDoc, Complex};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{structure}: {message}")]
    Structure { structure: String, message: String },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A parsed structure with its optional annotation sidecar.
#[derive(Debug, Clone)]
pub struct StructureInput {
    pub complex: Complex,
    pub annotation: Option<AnnotationDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub global_seed: u64,
    pub tasks: Vec<TaskType>,
    /// Instances per (structure, task). Tasks without any random choice
    /// (Stage I, Stage III) are emitted once.
    pub per_task: usize,
    pub rules: LabelRules,
    pub skip_errors: bool,
}

impl CorpusSpec {
    pub fn for_stage(stage: u8, global_seed: u64, per_task: usize) -> Self {
        CorpusSpec {
            global_seed,
            tasks: TaskType::ALL.into_iter().filter(|t| t.stage() == stage).collect(),
            per_task,
            rules: LabelRules::default(),
            skip_errors: false,
        }
    }
}

fn is_deterministic(t: TaskType) -> bool {
    t.stage() != 2
        || matches!(
            t,
            TaskType::ChainPairGraph
                | TaskType::TopChainPair
                | TaskType::InterfaceTopK
                | TaskType::HotspotTopK
                | TaskType::SaltBridgeBin
                | TaskType::LddtBin
        )
}

#[derive(Debug, Default, Clone)]
pub struct StructureOutput {
    pub instances: Vec<TaskInstance>,
    /// Soft skips: the task does not apply to this structure.
    pub skipped: Vec<(TaskType, String)>,
}

/// All instances for one structure, ordinals assigned in task order. A
/// failed attempt still consumes its ordinal so later seeds do not shift.
pub fn generate_for_structure(input: &StructureInput, spec: &CorpusSpec) -> Result<StructureOutput, CorpusError> {
    let complex = &input.complex;
    let hard = |message: String| CorpusError::Structure {
        structure: complex.id.clone(),
        message,
    };
    let labels = compute_labels(complex, &spec.rules);
    let needs_cdr = spec.tasks.contains(&TaskType::CdrRedesign);
    let stage3 = match (&input.annotation, needs_cdr) {
        (Some(doc), true) if !doc.loops.is_empty() => {
            let cdrs = load_cdr_annotations(complex, doc).map_err(|e| hard(e.to_string()))?;
            let hot = validate_hotspots(complex, &doc.hotspots).map_err(|e| hard(e.to_string()))?;
            Some((cdrs, hot))
        }
        _ => None,
    };
    let ctx = Stage2Context::new(complex, &labels, input.annotation.as_ref());

    let mut out = StructureOutput::default();
    let mut ordinal = 0u64;
    for &task in &spec.tasks {
        let reps = if is_deterministic(task) { 1 } else { spec.per_task };
        for _ in 0..reps {
            let seed = instance_seed(spec.global_seed, &complex.id, task, ordinal);
            let res = match task.stage() {
                1 => gen_stage1(complex, &labels, task, seed, ordinal),
                2 => ctx.generate(task, seed, ordinal),
                _ => match &stage3 {
                    Some((cdrs, hot)) => gen_stage3(complex, &labels, cdrs, hot, seed, ordinal),
                    None => Err(TaskError::MissingAnnotation(complex.id.clone())),
                },
            };
            ordinal += 1;
            match res {
                Ok(inst) => out.instances.push(inst),
                Err(e @ (TaskError::TaskNotApplicable { .. } | TaskError::MissingAnnotation(_))) => {
                    log::debug!("{}: {e}", complex.id);
                    out.skipped.push((task, e.to_string()));
                }
                Err(e) => return Err(hard(e.to_string())),
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub instances: Vec<TaskInstance>,
    pub skipped: BTreeMap<TaskType, usize>,
    pub failed: Vec<(String, String)>,
}

impl Corpus {
    pub fn counts(&self) -> BTreeMap<TaskType, usize> {
        let mut m = BTreeMap::new();
        for t in &self.instances {
            *m.entry(t.task_type).or_insert(0) += 1;
        }
        m
    }
}

/// Parallel map over structures, then a canonical sort by
/// (structure_id, ordinal), so the result does not depend on thread count.
pub fn generate_corpus(inputs: &[StructureInput], spec: &CorpusSpec) -> Result<Corpus, CorpusError> {
    let results: Vec<(String, Result<StructureOutput, CorpusError>)> = inputs
        .par_iter()
        .map(|i| (i.complex.id.clone(), generate_for_structure(i, spec)))
        .collect();
    let mut corpus = Corpus::default();
    for (id, r) in results {
        match r {
            Ok(o) => {
                corpus.instances.extend(o.instances);
                for (t, _) in o.skipped {
                    *corpus.skipped.entry(t).or_insert(0) += 1;
                }
            }
            Err(e) if spec.skip_errors => {
                log::warn!("skipping {id}: {e}");
                corpus.failed.push((id, e.to_string()));
            }
            Err(e) => return Err(e),
        }
    }
    canonical_sort(&mut corpus.instances);
    Ok(corpus)
}

pub fn canonical_sort(instances: &mut [TaskInstance]) {
    instances.sort_by(|a, b| {
        a.structure_id
            .cmp(&b.structure_id)
            .then(a.ordinal().cmp(&b.ordinal()))
            .then(a.task_type.cmp(&b.task_type))
    });
}

pub fn write_jsonl<T: Borrow<TaskInstance>>(path: &Path, instances: &[T]) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for t in instances {
        w.write_all(t.borrow().to_json_line().as_bytes())?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn read_jsonl(path: &Path) -> Result<Vec<TaskInstance>, CorpusError> {
    let r = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (k, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            line: k + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Hex SHA-256 of a value's compact JSON serialization.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let bytes = serde_json::to_vec(config).expect("config serializes");
    hex::encode(Sha256::digest(&bytes))
}

pub fn manifest(config_hash: &str, corpus: &Corpus, phases: &[CurriculumPhase]) -> Value {
    let counts: serde_json::Map<String, Value> = corpus
        .counts()
        .into_iter()
        .map(|(t, n)| (t.id().to_string(), Value::from(n)))
        .collect();
    let skipped: serde_json::Map<String, Value> = corpus
        .skipped
        .iter()
        .map(|(t, n)| (t.id().to_string(), Value::from(*n)))
        .collect();
    let weights: serde_json::Map<String, Value> = phases
        .iter()
        .map(|p| {
            let w = |m: &BTreeMap<TaskType, f64>| -> Value {
                m.iter().map(|(t, f)| (t.id().to_string(), Value::from(*f))).collect()
            };
            (p.name.clone(), json!({"weights": w(&p.weights), "replay": w(&p.replay)}))
        })
        .collect();
    json!({
        "config_hash": config_hash,
        "num_instances": corpus.instances.len(),
        "counts": counts,
        "skipped": skipped,
        "failed_structures": corpus.failed.iter().map(|(id, _)| id.clone()).collect::<Vec<_>>(),
        "phase_weights": weights,
    })
}

pub fn write_manifest(path: &Path, manifest: &Value) -> std::io::Result<()> {
    let mut s = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    s.push('\n');
    std::fs::write(path, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::build::{complex_from_chains, ChainBuilder};

    fn input(id: &str) -> StructureInput {
        StructureInput {
            complex: complex_from_chains(
                id,
                vec![
                    ChainBuilder::helix("A", "MKLEEALKKLAEELKKAG").build(),
                    ChainBuilder::helix("B", "SPEELLKKAEELLKRAEE").offset([9.5, 0.0, 0.0]).build(),
                ],
            ),
            annotation: None,
        }
    }

    #[test]
    fn stage2_corpus_is_canonical_and_reproducible() {
        let inputs: Vec<_> = ["S2", "S1", "S3"].iter().map(|s| input(s)).collect();
        let spec = CorpusSpec::for_stage(2, 11, 2);
        let a = generate_corpus(&inputs, &spec).unwrap();
        let b = generate_corpus(&inputs, &spec).unwrap();
        assert_eq!(a.instances, b.instances);
        let keys: Vec<_> = a.instances.iter().map(|t| (t.structure_id.clone(), t.ordinal())).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        // no lDDT metadata on these structures
        assert_eq!(a.skipped.get(&TaskType::LddtBin), Some(&3));
    }
}
