//! Injects hidden-state anchors at a few CDR positions.

use proteo_taskgen::anchor::{build_anchors, init_params, residue_universe, AnchorSpec};
use proteo_taskgen::structure::build::synthetic_antibody;
use proteo_taskgen::structure::load_cdr_annotations;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (complex, doc) = synthetic_antibody("DEMO", 3, 40);
    let cdrs = load_cdr_annotations(&complex, &doc)?;
    let (table, proj) = init_params(8, 6, 0);

    let mut spec = AnchorSpec::from_cdrs(&cdrs);
    for id in cdrs.residue_ids().into_iter().step_by(4) {
        let aa = complex.residue_by_id(&id).map_or('A', |r| r.aa);
        spec.add_key(id, aa, vec![0.5; 6]);
    }
    let out = build_anchors(&residue_universe(&complex), &spec, &table, &proj)?;
    for r in out.residues.iter().filter(|r| r.chain == "H").take(14) {
        let head: Vec<String> = r.e_gen.iter().take(3).map(|v| format!("{v:+.3}")).collect();
        println!("H{:<3} {} [{} ...]", r.pos, r.k_gen, head.join(", "));
    }
    Ok(())
}
