use std::collections::BTreeSet;

use proptest::prelude::*;
use proteo_taskgen::anchor::{build_anchors, init_params, residue_universe, AnchorSpec};
use proteo_taskgen::design::sequence::{edit_distance, lcs_len};
use proteo_taskgen::design::structure::{clash_counts_points, jsd, TaggedPoint, CLASH_CUTOFF};
use proteo_taskgen::grade::grade_instance;
use proteo_taskgen::labels::geometry::{PairClass, CONTACT_CUTOFF};
use proteo_taskgen::labels::pair_geometry;
use proteo_taskgen::structure::build::synthetic_antibody;
use proteo_taskgen::structure::{apply_cdr_mask, aa, load_cdr_annotations, ResidueId};
use proteo_taskgen::tasks::corpus::{generate_corpus, CorpusSpec, StructureInput};
use proteo_taskgen::tasks::{TaskInstance, TaskType};
use serde_json::json;

fn seq() -> impl Strategy<Value = Vec<char>> {
    prop::collection::vec(prop::sample::select(vec!['A', 'C', 'D', 'G', 'W']), 0..12)
}

fn naive_edit(a: &[char], b: &[char]) -> usize {
    match (a.split_first(), b.split_first()) {
        (None, _) => b.len(),
        (_, None) => a.len(),
        (Some((x, ra)), Some((y, rb))) => {
            let sub = naive_edit(ra, rb) + usize::from(x != y);
            sub.min(naive_edit(ra, b) + 1).min(naive_edit(a, rb) + 1)
        }
    }
}

/// Longest common subsequence by enumerating subsequences of the shorter input.
fn naive_lcs(a: &[char], b: &[char]) -> usize {
    let (s, l) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let is_subseq = |sub: &[char]| {
        let mut it = l.iter();
        sub.iter().all(|c| it.any(|d| d == c))
    };
    (0u32..1 << s.len())
        .filter_map(|mask| {
            let sub: Vec<char> = (0..s.len()).filter(|i| mask >> i & 1 == 1).map(|i| s[i]).collect();
            is_subseq(&sub).then_some(sub.len())
        })
        .max()
        .unwrap_or(0)
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn window_inst(labels: &str) -> TaskInstance {
    TaskInstance {
        task_type: TaskType::DsspSeq,
        structure_id: "T".into(),
        seed: 0,
        prompt: json!({"ordinal": 0}),
        target: json!({"labels": labels}),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mask_touches_only_cdr_residues(seed in 0u64..500, len in 40usize..56) {
        let (complex, doc) = synthetic_antibody("P", seed, len);
        let cdrs = load_cdr_annotations(&complex, &doc).unwrap();
        let masked = apply_cdr_mask(&complex, &cdrs);
        for (a, b) in complex.residues().zip(masked.residues()) {
            prop_assert_eq!(&a.atoms, &b.atoms);
            if cdrs.contains(&a.chain_id, a.pos) {
                prop_assert_eq!(b.aa, aa::UNKNOWN);
            } else {
                prop_assert_eq!(a.aa, b.aa);
            }
        }
    }

    #[test]
    fn anchor_injection_scales_linearly(seed in 0u64..200, alpha in -3.0f64..3.0, h in prop::collection::vec(-1.0f64..1.0, 5)) {
        let (complex, doc) = synthetic_antibody("P", seed, 40);
        let cdrs = load_cdr_annotations(&complex, &doc).unwrap();
        let (table, proj) = init_params(7, 5, seed);
        let key = cdrs.residue_ids()[0].clone();
        let mut spec = AnchorSpec::from_cdrs(&cdrs);
        spec.add_key(key.clone(), 'W', h);
        let uni = residue_universe(&complex);
        let one = build_anchors(&uni, &spec, &table, &proj).unwrap();
        let scaled = build_anchors(&uni, &spec, &table, &proj.scaled(alpha)).unwrap();
        let row = table.row('W');
        let (e1, ea) = (&one.get(&key).unwrap().e_gen, &scaled.get(&key).unwrap().e_gen);
        for d in 0..row.len() {
            prop_assert!(((ea[d] - row[d]) - alpha * (e1[d] - row[d])).abs() < 1e-12);
        }
    }

    #[test]
    fn edit_and_lcs_match_naive(a in seq(), b in seq()) {
        prop_assert_eq!(edit_distance(&a, &b), naive_edit(&a, &b));
        prop_assert_eq!(lcs_len(&a, &b), naive_lcs(&a, &b));
    }

    #[test]
    fn clash_counts_match_pairwise_scan(
        pts in prop::collection::vec((prop::array::uniform3(0.0f64..8.0), 0usize..2, 0usize..6, any::<bool>()), 0..40)
    ) {
        let points: Vec<TaggedPoint> = pts
            .iter()
            .map(|&(pos, chain, seq, designed)| TaggedPoint { pos, chain, seq, designed })
            .collect();
        let (mut cin, mut cout) = (0, 0);
        for (i, a) in points.iter().enumerate() {
            for b in &points[i + 1..] {
                let close = dist(a.pos, b.pos) < CLASH_CUTOFF;
                if a.designed && b.designed {
                    if !(a.chain == b.chain && a.seq.abs_diff(b.seq) <= 1) {
                        cin += usize::from(close);
                    }
                } else if a.designed || b.designed {
                    cout += usize::from(close);
                }
            }
        }
        let got = clash_counts_points(&points);
        prop_assert_eq!((got.clashes_in, got.clashes_out), (cin, cout));
    }

    #[test]
    fn jsd_is_symmetric_and_bounded(
        p in prop::collection::vec(0.0f64..1.0, 6),
        q in prop::collection::vec(0.0f64..1.0, 6),
    ) {
        let norm = |v: &[f64]| {
            let s: f64 = v.iter().sum();
            if s == 0.0 { vec![1.0 / 6.0; 6] } else { v.iter().map(|x| x / s).collect::<Vec<_>>() }
        };
        let (p, q) = (norm(&p), norm(&q));
        let (a, b) = (jsd(&p, &q), jsd(&q, &p));
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&a));
        prop_assert!(jsd(&p, &p).abs() < 1e-12);
    }

    #[test]
    fn fixing_a_window_token_never_lowers_the_score(
        target in prop::collection::vec(prop::sample::select(vec!['H', 'E', 'C']), 5),
        guess in prop::collection::vec(prop::sample::select(vec!['H', 'E', 'C']), 5),
        k in 0usize..5,
    ) {
        let inst = window_inst(&target.iter().collect::<String>());
        let score = |g: &[char]| grade_instance(&inst, &json!({"labels": g.iter().collect::<String>()})).score;
        let mut fixed = guess.clone();
        fixed[k] = target[k];
        prop_assert!(score(&fixed) >= score(&guess));
        prop_assert_eq!(score(&target), 1.0);
    }

    #[test]
    fn contact_iff_reference_distance_below_cutoff(seed in 0u64..100, i in 1usize..41, j in 1usize..41, ci in 0usize..3, cj in 0usize..3) {
        let (complex, _) = synthetic_antibody("P", seed, 40);
        let chains = ["H", "L", "A"];
        let (a, b) = (ResidueId::new(chains[ci], i), ResidueId::new(chains[cj], j));
        let g = pair_geometry(&complex, &a, &b).unwrap();
        let pa = complex.residue_by_id(&a).unwrap().reference_atom().unwrap();
        let pb = complex.residue_by_id(&b).unwrap().reference_atom().unwrap();
        let d = dist(pa, pb);
        prop_assert!((g.distance - d).abs() < 1e-9);
        prop_assert_eq!(g.contact, d < CONTACT_CUTOFF);
        let class = PairClass::of(&a, &b);
        let bin = class.edges().iter().take_while(|e| d >= **e).count();
        prop_assert_eq!(g.dist_bin.as_str(), class.bin_labels()[bin]);
    }
}

#[test]
fn corpus_ignores_input_order() {
    let inputs: Vec<StructureInput> = (0..5)
        .map(|k| {
            let (complex, doc) = synthetic_antibody(&format!("S{k}"), k, 40);
            StructureInput { complex, annotation: Some(doc) }
        })
        .collect();
    let spec = CorpusSpec { tasks: TaskType::ALL.to_vec(), ..CorpusSpec::for_stage(2, 3, 2) };
    let forward = generate_corpus(&inputs, &spec).unwrap().instances;
    let mut rev = inputs.clone();
    rev.reverse();
    let backward = generate_corpus(&rev, &spec).unwrap().instances;
    assert_eq!(forward, backward);
    let ids: BTreeSet<&str> = forward.iter().map(|t| t.structure_id.as_str()).collect();
    assert_eq!(ids.len(), 5);
}
