//! Global alignment scores frozen from an independent implementation
//! (BLOSUM62, gap open -10 on the first gap position, extend -1).

use proteo_taskgen::design::blosum;
use proteo_taskgen::design::sequence::{global_align, GAP_EXTEND, GAP_OPEN};

const CASES: &[(&str, &str, i32)] = &[
    ("HEAGAWGHEE", "PAWHEAE", 3),
    ("CARDYW", "CARDYW", 42),
    ("ARDYYGSSYWYFDV", "ARGGYFDY", 9),
    ("GFTFSSYA", "GYTFTSYW", 29),
    ("WVFNYSWD", "S", -16),
    ("VIHSVVSPF", "FTPADGWC", -22),
    ("AKSYPQPWRF", "ECFSHKQLQTPW", -5),
    ("VWQWIMAKYGMV", "HWKL", -7),
    ("DSSD", "DQFALQQECYYC", -15),
    ("WMVKTICLADEYV", "HQ", -20),
    ("YKFCMMNFPP", "TPYVEYTKQILQKTL", -18),
    ("AQWMAPYWFCM", "NNYKSAWCANKRLWY", -9),
    ("GNGMNYKLPEA", "LTIKI", -16),
    ("GQEEYMMIRGD", "HWRKIECTHMW", -15),
    ("KMDYNW", "QLTKR", -10),
    ("QLQWQCQFHASY", "VICRTLVMIDWLEI", -19),
];

fn chars(s: &str) -> Vec<char> {
    s.chars().collect()
}

/// Rescores an alignment column by column.
fn rescore(cols: &[(Option<char>, Option<char>)]) -> i32 {
    let mut score = 0;
    let mut prev: Option<u8> = None; // 1 = gap in b, 2 = gap in a
    for col in cols {
        match col {
            (Some(a), Some(b)) => {
                score += blosum::score(*a, *b);
                prev = None;
            }
            (Some(_), None) | (None, Some(_)) => {
                let kind = if col.1.is_none() { 1 } else { 2 };
                score += if prev == Some(kind) { GAP_EXTEND } else { GAP_OPEN };
                prev = Some(kind);
            }
            (None, None) => panic!("empty column"),
        }
    }
    score
}

#[test]
fn scores_match_reference() {
    for &(a, b, want) in CASES {
        let (got, _) = global_align(&chars(a), &chars(b));
        assert_eq!(got, want, "{a} vs {b}");
    }
}

#[test]
fn alignments_are_consistent_with_their_score() {
    for &(a, b, want) in CASES {
        let (_, cols) = global_align(&chars(a), &chars(b));
        let top: String = cols.iter().filter_map(|c| c.0).collect();
        let bottom: String = cols.iter().filter_map(|c| c.1).collect();
        assert_eq!((top.as_str(), bottom.as_str()), (a, b));
        assert_eq!(rescore(&cols), want, "{a} vs {b}");
    }
}
