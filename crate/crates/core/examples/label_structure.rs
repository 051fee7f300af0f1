//! Computes secondary structure, RSA bins and interface labels.

use proteo_taskgen::labels::{compute_labels, LabelRules, RankMode};
use proteo_taskgen::structure::build::synthetic_antibody;

fn main() {
    let (complex, _) = synthetic_antibody("DEMO", 11, 48);
    let labels = compute_labels(&complex, &LabelRules::default());
    for c in &labels.chains {
        let ss: String = c.ss3.iter().map(|s| s.as_str()).collect();
        let rsa: String = c.rsa_bin.iter().map(|s| s.as_str()).collect();
        println!("chain {} ss  {ss}", c.chain_id);
        println!("chain {} rsa {rsa}", c.chain_id);
    }
    println!("top pair {:?}", labels.chain_pairs.top.as_ref().map(|p| p.as_tuple()));
    for p in &labels.interfaces {
        let (a, b) = labels.ranked((&p.chain_i, &p.chain_j), 5, RankMode::Hotspot);
        println!(
            "{}-{}: {} interface residues, {} salt bridges, hotspots {a:?} / {b:?}",
            p.chain_i,
            p.chain_j,
            p.residues.len(),
            p.salt_bridges
        );
    }
}
