//! Draws the four reference mixtures with replay and reports the observed shares.

use std::collections::BTreeMap;

use proteo_taskgen::structure::build::synthetic_antibody;
use proteo_taskgen::tasks::corpus::{generate_corpus, CorpusSpec, StructureInput};
use proteo_taskgen::tasks::curriculum::{pool_from, run_curriculum, CurriculumPhase, PHASE_NAMES};
use proteo_taskgen::tasks::TaskType;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let inputs: Vec<StructureInput> = (0..10)
        .map(|k| {
            let (complex, doc) = synthetic_antibody(&format!("AB{k}"), k, 40);
            StructureInput { complex, annotation: Some(doc) }
        })
        .collect();
    let corpus = generate_corpus(&inputs, &CorpusSpec::for_stage(2, 5, 4))?;
    let pool = pool_from(corpus.instances);

    let plan: Vec<(CurriculumPhase, usize)> =
        PHASE_NAMES.iter().map(|n| Ok((CurriculumPhase::standard(n)?, 20_000))).collect::<Result<_, proteo_taskgen::tasks::TaskError>>()?;
    let drawn = run_curriculum(&plan, &pool, 1, 50_000)?;
    for ((phase, n), items) in plan.iter().zip(&drawn) {
        let mut counts: BTreeMap<TaskType, usize> = BTreeMap::new();
        for t in items {
            *counts.entry(t.task_type).or_default() += 1;
        }
        let row: Vec<String> = counts
            .iter()
            .map(|(t, c)| format!("{}={:.1}%", t.abbr(), 100.0 * *c as f64 / *n as f64))
            .collect();
        println!("{}: {}", phase.name, row.join(" "));
    }
    Ok(())
}
