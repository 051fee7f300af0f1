//! Amino-acid alphabet handling.

/// The twenty standard one-letter codes in canonical (alphabetical) order.
pub const STANDARD: [char; 20] = [
    'A', 'C', 'D', 'E', 'F', 'G', 'H', 'I', 'K', 'L', 'M', 'N', 'P', 'Q', 'R', 'S', 'T', 'V',
    'W', 'Y',
];

/// Placeholder for nonstandard and masked residues.
pub const UNKNOWN: char = 'X';

pub fn is_standard(c: char) -> bool {
    STANDARD.contains(&c)
}

/// Member of the 21-symbol task alphabet (20 standard + X).
pub fn is_task_symbol(c: char) -> bool {
    c == UNKNOWN || is_standard(c)
}

pub fn standard_index(c: char) -> Option<usize> {
    STANDARD.iter().position(|&s| s == c)
}

pub fn three_to_one(name: &str) -> char {
    match name.trim().to_ascii_uppercase().as_str() {
        "ALA" => 'A',
        "ARG" => 'R',
        "ASN" => 'N',
        "ASP" => 'D',
        "CYS" => 'C',
        "GLN" => 'Q',
        "GLU" => 'E',
        "GLY" => 'G',
        "HIS" => 'H',
        "ILE" => 'I',
        "LEU" => 'L',
        "LYS" => 'K',
        "MET" => 'M',
        "PHE" => 'F',
        "PRO" => 'P',
        "SER" => 'S',
        "THR" => 'T',
        "TRP" => 'W',
        "TYR" => 'Y',
        "VAL" => 'V',
        _ => UNKNOWN,
    }
}

pub fn one_to_three(c: char) -> &'static str {
    match c {
        'A' => "ALA",
        'R' => "ARG",
        'N' => "ASN",
        'D' => "ASP",
        'C' => "CYS",
        'Q' => "GLN",
        'E' => "GLU",
        'G' => "GLY",
        'H' => "HIS",
        'I' => "ILE",
        'L' => "LEU",
        'K' => "LYS",
        'M' => "MET",
        'F' => "PHE",
        'P' => "PRO",
        'S' => "SER",
        'T' => "THR",
        'W' => "TRP",
        'Y' => "TYR",
        'V' => "VAL",
        _ => "UNK",
    }
}

pub fn is_water(name: &str) -> bool {
    matches!(name.trim(), "HOH" | "WAT" | "DOD" | "H2O" | "TIP" | "TIP3" | "SOL")
}

/// Formal side-chain charge used in reasoning targets.
pub fn charge(c: char) -> i32 {
    match c {
        'K' | 'R' | 'H' => 1,
        'D' | 'E' => -1,
        _ => 0,
    }
}
