//! Builds a small Stage II corpus and writes it as JSONL.

use proteo_taskgen::structure::build::synthetic_antibody;
use proteo_taskgen::tasks::corpus::{generate_corpus, write_jsonl, CorpusSpec, StructureInput};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let inputs: Vec<StructureInput> = (0..4)
        .map(|k| {
            let (complex, doc) = synthetic_antibody(&format!("AB{k}"), k, 44);
            StructureInput { complex, annotation: Some(doc) }
        })
        .collect();
    let corpus = generate_corpus(&inputs, &CorpusSpec::for_stage(2, 42, 3))?;
    for (t, n) in corpus.counts() {
        println!("{:<8} {n}", t.abbr());
    }
    let first = &corpus.instances[0];
    println!("\n{}\n", first.to_json_line());

    let path = std::env::temp_dir().join("stage2_demo.jsonl");
    write_jsonl(&path, &corpus.instances)?;
    println!("wrote {} instances to {}", corpus.instances.len(), path.display());
    Ok(())
}
