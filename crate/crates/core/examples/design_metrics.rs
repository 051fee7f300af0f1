//! Compares a perturbed design to its native complex: recovery, RMSD,
//! clashes and backbone dihedral JSD.

use std::collections::BTreeMap;

use proteo_taskgen::design::{evaluate_complex, render_design_tables, summarize, Frame, StructurePair};
use proteo_taskgen::structure::build::synthetic_antibody;
use proteo_taskgen::structure::load_cdr_annotations;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (native, doc) = synthetic_antibody("NAT", 21, 40);
    let cdrs = load_cdr_annotations(&native, &doc)?;

    // jitter CDR coordinates and swap every third CDR residue to glycine
    let mut design = native.clone();
    for chain in &mut design.chains {
        for r in &mut chain.residues {
            if !cdrs.contains(&r.chain_id, r.pos) {
                continue;
            }
            let shift = 0.3 * ((r.pos % 5) as f64 - 2.0);
            for a in &mut r.atoms {
                a.pos[0] += shift;
                a.pos[2] -= 0.5 * shift;
            }
            if r.pos % 3 == 0 {
                r.aa = 'G';
            }
        }
    }

    let m = evaluate_complex(&native, &design, &cdrs, Frame::Region, None)?;
    let region = cdrs.residue_ids().into_iter().collect();
    let pair = StructurePair::from_complexes(&native, &design, &region);
    let if_aar = BTreeMap::from([(proteo_taskgen::structure::CdrLoop::H3, 0.40)]);
    let report = summarize(vec![m], &[pair], Frame::Region, &if_aar);
    print!("{}", render_design_tables(&report, "jittered"));
    Ok(())
}
