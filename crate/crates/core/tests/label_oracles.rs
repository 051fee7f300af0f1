//! Labelers checked against values frozen from independent implementations
//! (mdtraj's DSSP and Shrake-Rupley) run on the same synthetic coordinates.

use proteo_taskgen::labels::{assign_dssp8, residue_sasa, SasaParams};
use proteo_taskgen::structure::build::{complex_from_chains, ChainBuilder};
use proteo_taskgen::structure::Complex;

fn dssp_string(c: &Complex) -> String {
    assign_dssp8(c)
        .iter()
        .flatten()
        .map(|x| x.map(|d| d.code()).unwrap_or('-'))
        .collect()
}

fn hairpin(strand: (f64, f64), turn: [f64; 4]) -> Complex {
    let mut phi = vec![strand.0; 8];
    let mut psi = vec![strand.1; 8];
    phi.extend([turn[0], turn[2]]);
    psi.extend([turn[1], turn[3]]);
    phi.extend(vec![strand.0; 8]);
    psi.extend(vec![strand.1; 8]);
    let chain = ChainBuilder::new("A", "VKVTVEVRNGKVEVTVKV", phi, psi).build();
    complex_from_chains("HP", vec![chain])
}

// mdtraj reports turns and bends, which collapse to loop here.
#[test]
fn hairpins_match_reference_dssp() {
    let cases = [
        ((-120.0, 130.0), [60.0, -120.0, -80.0, 0.0], "-EEEEE-------EEEE-"),
        ((-139.0, 135.0), [60.0, -120.0, -80.0, 0.0], "--EEEEEE--EEEEEE--"),
        ((-120.0, 130.0), [60.0, 30.0, 90.0, 0.0], "------EE--EE------"),
        ((-110.0, 120.0), [60.0, -120.0, -80.0, 0.0], "-EEE---B--B----EE-"),
        ((-120.0, 130.0), [-60.0, 120.0, 80.0, 0.0], "-------B--B-------"),
    ];
    for (strand, turn, expect) in cases {
        assert_eq!(dssp_string(&hairpin(strand, turn)), expect, "{strand:?} {turn:?}");
    }
}

#[test]
fn parallel_pair_matches_reference_dssp() {
    let a = ChainBuilder::extended("A", "VKVTVEVKVT").build();
    let b = ChainBuilder::extended("B", "VKVTVEVKVT")
        .offset([4.4, 0.0, -2.4])
        .build();
    let c = complex_from_chains("PP", vec![a, b]);
    assert_eq!(dssp_string(&c), "--EEEEEEE--EEEEEEE--");
}

#[test]
fn helix_matches_reference_dssp() {
    let c = complex_from_chains("HX", vec![ChainBuilder::helix("A", "AKLEGWKRYDFMSTQ").build()]);
    let s = dssp_string(&c);
    assert_eq!(&s[1..14], "HHHHHHHHHHHHH", "{s}");
}

#[test]
fn residue_sasa_matches_reference() {
    let a = ChainBuilder::helix("A", "AKLEGWKRYDFMSTQ").build();
    let b = ChainBuilder::extended("B", "VKVTVEVKVT")
        .offset([6.0, 2.0, 1.0])
        .build();
    let c = complex_from_chains("SAS", vec![a, b]);
    let expect = [
        113.74, 85.02, 80.00, 65.69, 0.75, 62.83, 63.34, 51.26, 44.44, 62.22, 62.85, 62.62, 85.03,
        88.94, 119.78, 108.37, 45.84, 104.50, 97.00, 108.06, 107.28, 108.42, 107.70, 108.02, 154.78,
    ];
    let got: Vec<f64> = residue_sasa(&c, SasaParams::default())
        .bound
        .into_iter()
        .flatten()
        .collect();
    assert_eq!(got.len(), expect.len());
    for (g, e) in got.iter().zip(expect) {
        // reference works in single precision
        assert!((g - e).abs() < 0.5, "{g} vs {e}");
    }
}
