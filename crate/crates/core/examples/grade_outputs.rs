//! Grades model outputs against a corpus; here half the answers are perturbed.

use proteo_taskgen::grade::{aggregate_report, grade_corpus, render_table, OutputRow};
use proteo_taskgen::structure::build::synthetic_antibody;
use proteo_taskgen::tasks::corpus::{generate_corpus, CorpusSpec, StructureInput};
use proteo_taskgen::tasks::TaskType;
use serde_json::Value;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let inputs: Vec<StructureInput> = (0..6)
        .map(|k| {
            let (complex, doc) = synthetic_antibody(&format!("AB{k}"), k, 40);
            StructureInput { complex, annotation: Some(doc) }
        })
        .collect();
    let spec = CorpusSpec { tasks: TaskType::ALL.to_vec(), ..CorpusSpec::for_stage(2, 9, 2) };
    let corpus = generate_corpus(&inputs, &spec)?.instances;

    let outputs: Vec<OutputRow> = corpus
        .iter()
        .enumerate()
        .map(|(k, t)| OutputRow {
            structure_id: t.structure_id.clone(),
            ordinal: t.ordinal().expect("corpus prompts carry an ordinal"),
            output: Value::String(if k % 2 == 0 { t.target.to_string() } else { "{}".into() }),
        })
        .collect();
    let results = grade_corpus(&corpus, &outputs)?;
    let report = aggregate_report(&results, 1)?;
    print!("{}", render_table(&report, "half-right"));
    Ok(())
}
