//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criterion 6 needs real PDB entries. Point `PROTEO_FIXTURES_DIR` at a
//! directory holding 8JRK, 6SW1, 7RAN (or 7ran_E_e_BC), 8AF7 and 7ATF as
//! `.cif` or `.pdb`. Without them the line reads FAIL (unavailable) and
//! does not change the exit status; a mismatch with files present does.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::{Duration, Instant};

use proteo_taskgen::anchor::{build_anchors, init_params, residue_universe, AnchorSpec, ProjectionMatrix};
use proteo_taskgen::cli::main_with_args;
use proteo_taskgen::design::sequence::sequence_metrics;
use proteo_taskgen::design::structure::{clash_counts_points, jsd, superposed_rmsd, TaggedPoint, CLASH_CUTOFF};
use proteo_taskgen::design::{if_aar_delta, rmsd_ca, Frame, StructurePair};
use proteo_taskgen::fixtures::{run_fixtures, Status as FixtureStatus};
use proteo_taskgen::grade::{aggregate_report, grade_corpus, OutputRow};
use proteo_taskgen::labels::{compute_labels, LabelRules};
use proteo_taskgen::structure::build::{atom, synthetic_antibody, to_pdb_string};
use proteo_taskgen::structure::{aa, parse_structure, Complex, ResidueId, SourceFormat};
use proteo_taskgen::tasks::corpus::{generate_corpus, CorpusSpec, StructureInput};
use proteo_taskgen::tasks::curriculum::{pool_from, run_curriculum, CurriculumPhase, Pool, PHASE_NAMES};
use proteo_taskgen::tasks::{rng_from, TaskInstance, TaskType};
use rand::Rng;

enum Verdict {
    Pass,
    Fail,
    /// Inputs are missing; reported as a failure but not gating.
    Unavailable,
    Info,
}

struct Line {
    verdict: Verdict,
    detail: String,
}

fn check(ok: bool, detail: String) -> Line {
    Line {
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        detail,
    }
}

fn inputs(n: usize, len: usize) -> Vec<StructureInput> {
    (0..n)
        .map(|k| {
            let (complex, doc) = synthetic_antibody(&format!("SYN{k:03}"), k as u64, len);
            StructureInput {
                complex,
                annotation: Some(doc),
            }
        })
        .collect()
}

fn all_tasks_corpus() -> Vec<TaskInstance> {
    let spec = CorpusSpec {
        tasks: TaskType::ALL.to_vec(),
        ..CorpusSpec::for_stage(2, 2024, 1)
    };
    generate_corpus(&inputs(50, 40), &spec).expect("synthetic corpus").instances
}

fn c1(corpus: &[TaskInstance]) -> Line {
    let t0 = Instant::now();
    let outputs: Vec<OutputRow> = corpus
        .iter()
        .map(|t| OutputRow {
            structure_id: t.structure_id.clone(),
            ordinal: t.ordinal().unwrap(),
            output: serde_json::Value::String(t.target.to_string()),
        })
        .collect();
    let results = grade_corpus(corpus, &outputs).expect("join");
    let report = aggregate_report(&results, 1).expect("report");
    let elapsed = t0.elapsed();
    let min_count = TaskType::ALL
        .iter()
        .map(|t| report.per_task.get(t).map_or(0, |s| s.queries))
        .min()
        .unwrap();
    let worst = report.per_task.values().map(|s| s.accuracy).fold(1.0, f64::min);
    let exact = report.per_task.len() == 17 && report.per_task.values().all(|s| s.accuracy == 1.0);
    check(
        exact && min_count >= 50 && elapsed < Duration::from_secs(30),
        format!(
            "{} task types, min {} instances each, worst accuracy {worst}, {:.2?}",
            report.per_task.len(),
            min_count,
            elapsed
        ),
    )
}

fn c2(pool: &Pool) -> Line {
    let t0 = Instant::now();
    let plan: Vec<(CurriculumPhase, usize)> = PHASE_NAMES
        .iter()
        .map(|n| (CurriculumPhase::standard(n).unwrap(), 100_000))
        .collect();
    let drawn = run_curriculum(&plan, pool, 99, 100_000).expect("curriculum");
    let elapsed = t0.elapsed();
    let mut worst = 0.0f64;
    for ((phase, n), items) in plan.iter().zip(&drawn) {
        let mut counts: BTreeMap<TaskType, usize> = BTreeMap::new();
        for t in items {
            *counts.entry(t.task_type).or_default() += 1;
        }
        for (t, w) in phase.weights.iter().chain(&phase.replay) {
            let got = *counts.get(t).unwrap_or(&0) as f64 / *n as f64;
            worst = worst.max((got - w).abs());
        }
        let listed: BTreeSet<&TaskType> = phase.weights.keys().chain(phase.replay.keys()).collect();
        if counts.keys().any(|t| !listed.contains(t)) {
            return check(false, format!("{} drew an unlisted task type", phase.name));
        }
    }
    check(
        worst <= 0.005 && elapsed < Duration::from_secs(10),
        format!("max |observed - weight| {:.4} over M0-M3 at 100k draws, {:.2?}", worst, elapsed),
    )
}

fn c3() -> Line {
    let (complex, _) = synthetic_antibody("ANCH", 3, 40);
    let universe = residue_universe(&complex);
    let ids: Vec<ResidueId> = universe.iter().map(|(id, _)| id.clone()).collect();
    let (d_gen, d_llm) = (16, 12);
    let mut rng = rng_from(31);
    let mut failures = Vec::new();
    for trial in 0..1000 {
        let (table, proj) = init_params(d_gen, d_llm, trial);
        let mut spec = AnchorSpec::default();
        for id in &ids {
            if rng.random_bool(0.3) {
                spec.cdr_set.insert(id.clone());
            }
        }
        let cdr: Vec<ResidueId> = spec.cdr_set.iter().cloned().collect();
        for id in cdr {
            if rng.random_bool(0.3) {
                let k = aa::STANDARD[rng.random_range(0..20)];
                let h: Vec<f64> = (0..d_llm).map(|_| rng.random_range(-1.0..1.0)).collect();
                spec.add_key(id, k, h);
            }
        }
        let out = build_anchors(&universe, &spec, &table, &proj).unwrap();
        let base = build_anchors(&universe, &AnchorSpec::default(), &table, &proj).unwrap();
        let zero = build_anchors(&universe, &spec, &table, &ProjectionMatrix::zeros(d_gen, d_llm)).unwrap();
        for (k, r) in out.residues.iter().enumerate() {
            let id = ResidueId::new(r.chain.clone(), r.pos);
            let in_cdr = spec.cdr_set.contains(&id);
            if !in_cdr && (r != &base.residues[k]) {
                failures.push(format!("trial {trial}: (a) {id}"));
            }
            if in_cdr && ((r.e_gen != table.mask_row) != spec.key_set.contains(&id)) {
                failures.push(format!("trial {trial}: (b) {id}"));
            }
            if spec.key_set.contains(&id) {
                let k_hat = spec.identities[&id];
                let h = &spec.hidden[&id];
                for (a, e) in r.e_gen.iter().enumerate() {
                    let wh: f64 = (0..d_llm).map(|b| proj.values[a * d_llm + b] * h[b]).sum();
                    if (e - (table.row(k_hat)[a] + wh)).abs() > 1e-12 {
                        failures.push(format!("trial {trial}: (c) {id}"));
                        break;
                    }
                }
                if zero.residues[k].e_gen != table.row(k_hat) || r.k_gen != k_hat {
                    failures.push(format!("trial {trial}: (d) {id}"));
                }
            }
        }
    }
    check(
        failures.is_empty(),
        if failures.is_empty() {
            "1000 random specs: locality, sparsity, e+Wh within 1e-12, W=0 exact".into()
        } else {
            format!("{} violations, first {}", failures.len(), failures[0])
        },
    )
}

fn brute_edit(a: &[char], b: &[char]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

fn brute_lcs(a: &[char], b: &[char]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            d[i][j] = if a[i - 1] == b[j - 1] {
                d[i - 1][j - 1] + 1
            } else {
                d[i - 1][j].max(d[i][j - 1])
            };
        }
    }
    d[a.len()][b.len()]
}

fn brute_clashes(points: &[TaggedPoint]) -> (usize, usize, usize, usize) {
    let (mut cin, mut pin, mut cout, mut pout) = (0, 0, 0, 0);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let (a, b) = (&points[i], &points[j]);
            let d = ((a.pos[0] - b.pos[0]).powi(2) + (a.pos[1] - b.pos[1]).powi(2) + (a.pos[2] - b.pos[2]).powi(2)).sqrt();
            let close = d < CLASH_CUTOFF;
            if a.designed && b.designed {
                if a.chain == b.chain && a.seq.abs_diff(b.seq) <= 1 {
                    continue;
                }
                pin += 1;
                cin += usize::from(close);
            } else if a.designed || b.designed {
                pout += 1;
                cout += usize::from(close);
            }
        }
    }
    (cin, pin, cout, pout)
}

fn rotation(rng: &mut impl Rng) -> [[f64; 3]; 3] {
    // normalized random quaternion
    let mut q: [f64; 4] = [0.0; 4];
    loop {
        for v in &mut q {
            *v = rng.random_range(-1.0..1.0);
        }
        let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 0.1 && n <= 1.0 {
            q.iter_mut().for_each(|v| *v /= n);
            break;
        }
    }
    let [w, x, y, z] = q;
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - z * w), 2.0 * (x * z + y * w)],
        [2.0 * (x * y + z * w), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - x * w)],
        [2.0 * (x * z - y * w), 2.0 * (y * z + x * w), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

fn moved(c: &Complex, r: [[f64; 3]; 3], t: [f64; 3]) -> Complex {
    let mut out = c.clone();
    for chain in &mut out.chains {
        for res in &mut chain.residues {
            for a in &mut res.atoms {
                let p = a.pos;
                a.pos = [0, 1, 2].map(|i| r[i][0] * p[0] + r[i][1] * p[1] + r[i][2] * p[2] + t[i]);
            }
        }
    }
    out
}

fn c4() -> Line {
    let mut rng = rng_from(404);
    let alphabet: Vec<char> = "ACDEFG".chars().collect();
    let mut seq_bad = 0;
    for _ in 0..1000 {
        let s = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<char> {
            let n = rng.random_range(0..=12);
            (0..n).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect()
        };
        let (a, b) = (s(&mut rng), s(&mut rng));
        let m = sequence_metrics(&a.iter().collect::<String>(), &b.iter().collect::<String>());
        let longest = a.len().max(b.len());
        let edit_sim = if longest == 0 { 1.0 } else { 1.0 - brute_edit(&a, &b) as f64 / longest as f64 };
        let lcs_norm = match (a.is_empty(), b.is_empty()) {
            (_, false) => brute_lcs(&a, &b) as f64 / b.len() as f64,
            (true, true) => 1.0,
            (false, true) => 0.0,
        };
        if m.edit_sim != edit_sim || m.lcs_norm != lcs_norm {
            seq_bad += 1;
        }
    }

    let mut clash_bad = 0;
    for _ in 0..100 {
        let mut next_seq = [0usize; 3];
        let points: Vec<TaggedPoint> = (0..500)
            .map(|_| {
                let chain = rng.random_range(0..3);
                next_seq[chain] += rng.random_range(1..3);
                TaggedPoint {
                    pos: [0, 1, 2].map(|_| rng.random_range(0.0..30.0)),
                    chain,
                    seq: next_seq[chain],
                    designed: rng.random_bool(0.3),
                }
            })
            .collect();
        let c = clash_counts_points(&points);
        if (c.clashes_in, c.pairs_in, c.clashes_out, c.pairs_out) != brute_clashes(&points) {
            clash_bad += 1;
        }
    }

    let (complex, doc) = synthetic_antibody("RIGID", 8, 40);
    let region: BTreeSet<ResidueId> = doc
        .loops
        .values()
        .flat_map(|iv| iv.positions().map(|p| ResidueId::new(iv.chain.clone(), p)))
        .collect();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let t = [0, 1, 2].map(|_| rng.random_range(-50.0..50.0));
        let g = moved(&complex, rotation(&mut rng), t);
        let pair = StructurePair::from_complexes(&complex, &g, &region);
        for frame in [Frame::Region, Frame::Complex] {
            worst = worst.max(rmsd_ca(&pair, &region, frame).unwrap());
        }
    }
    let p = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]];
    let q = [[0.0, 0.0, 0.0], [3.0, 0.0, 0.0]];
    let two = superposed_rmsd(&p, &q, &p, &q).unwrap();
    check(
        seq_bad == 0 && clash_bad == 0 && worst < 1e-6 && (two - 1.0).abs() < 1e-12,
        format!(
            "sequence mismatches {seq_bad}/1000, clash mismatches {clash_bad}/100, max rigid-motion rmsd {worst:.2e} A, two-point {two}"
        ),
    )
}

fn c5() -> Line {
    let same = jsd(&[0.1, 0.2, 0.7], &[0.1, 0.2, 0.7]);
    let disjoint = jsd(&[0.5, 0.5, 0.0, 0.0], &[0.0, 0.0, 0.3, 0.7]);
    let toy = jsd(&[1.0, 0.0], &[0.5, 0.5]);
    check(
        same.abs() <= 1e-12 && (disjoint - 1.0).abs() <= 1e-12 && (toy - 0.3113).abs() <= 1e-3,
        format!("identical {same:e}, disjoint {disjoint}, toy {toy:.4}"),
    )
}

fn fixture_dir() -> Option<std::path::PathBuf> {
    std::env::var_os("PROTEO_FIXTURES_DIR").map(Into::into)
}

fn c6_c7() -> (Line, Line) {
    let Some(dir) = fixture_dir() else {
        let msg = "PROTEO_FIXTURES_DIR not set; the PDB entries cannot be downloaded here".to_string();
        return (
            Line {
                verdict: Verdict::Unavailable,
                detail: msg.clone(),
            },
            Line {
                verdict: Verdict::Info,
                detail: msg,
            },
        );
    };
    let report = run_fixtures(&dir, &LabelRules::default());
    let hard: Vec<_> = report.outcomes.iter().filter(|o| o.hard).collect();
    let passed = hard.iter().filter(|o| o.status == FixtureStatus::Pass).count();
    let missing = hard.iter().filter(|o| matches!(o.status, FixtureStatus::Missing(_))).count();
    let failed: Vec<String> = hard
        .iter()
        .filter(|o| matches!(o.status, FixtureStatus::Fail(_)))
        .map(|o| format!("{} {}", o.entry, o.check))
        .collect();
    let six = Line {
        verdict: if missing > 0 && failed.is_empty() {
            Verdict::Unavailable
        } else if passed == hard.len() {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
        detail: format!("{passed}/{} hard checks, {missing} missing, failed {failed:?}", hard.len()),
    };
    let rate = report.informational_rate();
    let seven = Line {
        verdict: Verdict::Info,
        detail: format!(
            "{:.0}% of informational fields agree ({})",
            100.0 * rate,
            if rate >= 0.6 { "meets 60%" } else { "below 60%" }
        ),
    };
    (six, seven)
}

fn c8() -> Line {
    let d = if_aar_delta(15.06, 19.27);
    check((d - 4.21).abs() <= 0.01, format!("(15.06, 19.27) -> {d:+.2}"))
}

fn c9() -> Line {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("structures");
    let a = dir.path().join("annotations");
    std::fs::create_dir_all(&s).unwrap();
    std::fs::create_dir_all(&a).unwrap();
    for input in inputs(8, 48) {
        let id = &input.complex.id;
        std::fs::write(s.join(format!("{id}.pdb")), to_pdb_string(&input.complex)).unwrap();
        std::fs::write(a.join(format!("{id}.json")), serde_json::to_string(&input.annotation).unwrap()).unwrap();
    }
    let cfg = dir.path().join("run.json");
    let body = serde_json::json!({
        "schema_version": 1,
        "structures_dir": s,
        "annotations_dir": a,
        "seed": 17,
        "per_task": 4,
        "curriculum_counts": {"M0": 300, "M1": 300, "M2": 300, "M3": 300},
    });
    std::fs::write(&cfg, body.to_string()).unwrap();
    let run = |out: &Path, workers: &str| {
        main_with_args([
            "proteo-taskgen",
            "--config",
            cfg.to_str().unwrap(),
            "--workers",
            workers,
            "--out",
            out.to_str().unwrap(),
            "generate",
            "--stage",
            "curriculum",
        ])
    };
    let outs = [("1", dir.path().join("o1")), ("4", dir.path().join("o4")), ("4", dir.path().join("o4b"))];
    for (w, o) in &outs {
        let code = run(o, w);
        if code != 0 {
            return check(false, format!("generate exited {code}"));
        }
    }
    let files = ["corpus.jsonl", "manifest.json", "curriculum_M0.jsonl", "curriculum_M3.jsonl"];
    let mut differing = Vec::new();
    for f in files {
        let first = std::fs::read(outs[0].1.join(f)).unwrap();
        for (w, o) in &outs[1..] {
            if std::fs::read(o.join(f)).unwrap() != first {
                differing.push(format!("{f} (workers {w})"));
            }
        }
    }
    check(
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} artifacts byte-identical across 3 runs (1 and 4 workers)", files.len())
        } else {
            format!("differs: {differing:?}")
        },
    )
}

/// Adds side-chain-like atoms so the atom count per residue is close to
/// a real protein's.
fn with_pseudo_sidechains(c: &mut Complex) {
    for chain in &mut c.chains {
        for r in &mut chain.residues {
            let (Some(ca), Some(cb)) = (r.atom_pos("CA"), r.atom_pos("CB")) else {
                continue;
            };
            let d = [0, 1, 2].map(|i| cb[i] - ca[i]);
            for (k, name) in ["CG", "CD", "CE"].iter().enumerate() {
                let f = 1.0 + (k + 1) as f64;
                r.atoms.push(atom(name, "C", [0, 1, 2].map(|i| ca[i] + f * d[i])));
            }
        }
    }
}

fn c10() -> Line {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let (mut big, _) = synthetic_antibody("BIG", 1, 334);
    with_pseudo_sidechains(&mut big);
    let text = to_pdb_string(&big);
    let single = pool.install(|| {
        let t0 = Instant::now();
        let c = parse_structure(text.as_bytes(), SourceFormat::Pdb).unwrap();
        let labels = compute_labels(&c, &LabelRules::default());
        assert_eq!(labels.chains.len(), 3);
        (t0.elapsed(), c.num_residues())
    });
    let eight = rayon::ThreadPoolBuilder::new().num_threads(8).build().unwrap();
    let structures = inputs(100, 60);
    let spec = CorpusSpec::for_stage(2, 7, 16);
    let (elapsed, n) = eight.install(|| {
        let t0 = Instant::now();
        let c = generate_corpus(&structures, &spec).unwrap();
        (t0.elapsed(), c.instances.len())
    });
    check(
        single.0 < Duration::from_secs(2) && elapsed < Duration::from_secs(60) && n >= 10_000,
        format!(
            "parse+label {} residues on one thread {:.2?}; stage II corpus {} instances / 100 structures on 8 workers {:.2?}",
            single.1, single.0, n, elapsed
        ),
    )
}

fn main() {
    let corpus = all_tasks_corpus();
    let pool = pool_from(corpus.iter().cloned());
    let (six, seven) = c6_c7();
    let lines = [
        ("1 self-grading oracle", c1(&corpus)),
        ("2 curriculum proportions", c2(&pool)),
        ("3 anchoring invariants", c3()),
        ("4 metric oracles", c4()),
        ("5 JSD checks", c5()),
        ("6 golden fixtures (hard)", six),
        ("7 golden fixtures (informational)", seven),
        ("8 IF-AAR delta bookkeeping", c8()),
        ("9 determinism", c9()),
        ("10 throughput", c10()),
    ];
    let mut gating_failures = 0;
    for (name, line) in &lines {
        let tag = match line.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => {
                gating_failures += 1;
                "FAIL"
            }
            Verdict::Unavailable => "FAIL (unavailable)",
            Verdict::Info => "INFO",
        };
        println!("criterion {name}: {tag} - {}", line.detail);
    }
    if gating_failures > 0 {
        std::process::exit(1);
    }
}
