//! Structure-sequence consistency: inverse-folding recovery minus design recovery.

use proteo_taskgen::design::if_aar_delta;

fn main() {
    let rows = [("H1", 0.42, 0.47), ("H2", 0.38, 0.35), ("H3", 0.55, 0.21)];
    println!("{:<4} {:>7} {:>7} {:>7}", "CDR", "AAR", "IF-AAR", "Delta");
    for (cdr, aar, if_aar) in rows {
        let d = if_aar_delta(aar, if_aar);
        println!("{cdr:<4} {:>7.2} {:>7.2} {:>+7.2}", 100.0 * aar, 100.0 * if_aar, 100.0 * d);
    }
}
