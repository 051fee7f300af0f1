//! Command-line driver.
//!
//! Exit codes: 0 success, 1 fixture verification failed, 2 configuration
//! error, 3 data error, 4 join failure between corpora and outputs.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::anchor::{build_anchors, load_or_init_params, read_hidden, residue_universe, save_params, spec_from_records, Dtype};
use crate::design::{evaluate_complex, render_design_tables, summarize, Frame, StructurePair};
use crate::fixtures::{run_fixtures, Status};
use crate::grade::{aggregate_report, grade_corpus, read_outputs, render_table, GradeError};
use crate::labels::LabelRules;
use crate::structure::{load_cdr_annotations, parse_structure_with_id, AnnotationDoc, CdrLoop, Complex, SourceFormat};
use crate::tasks::corpus::{
    config_hash, generate_corpus, manifest, read_jsonl, write_jsonl, write_manifest, CorpusSpec, StructureInput,
};
use crate::tasks::curriculum::{pool_from, run_curriculum, CurriculumPhase, DEFAULT_BUFFER_CAPACITY, PHASE_NAMES};
use crate::tasks::{TaskInstance, TaskType};

pub const SCHEMA_VERSION: u32 = 1;
pub const CACHE_ENV: &str = "PROTEO_TASKGEN_CACHE";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("verification failed: {0}")]
    Verify(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("join failure: {0}")]
    Join(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verify(_) => 1,
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Join(_) => 4,
        }
    }
}

fn data(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum Stage {
    #[serde(rename = "1")]
    #[value(name = "1")]
    One,
    #[serde(rename = "2")]
    #[value(name = "2")]
    Two,
    #[serde(rename = "3")]
    #[value(name = "3")]
    Three,
    #[serde(rename = "curriculum")]
    #[value(name = "curriculum")]
    Curriculum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalMode {
    Grade,
    Design,
}

/// Versioned run configuration. Every key is optional in the file; flags
/// override whatever the file sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub structures_dir: Option<PathBuf>,
    pub annotations_dir: Option<PathBuf>,
    pub hidden_vectors: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub stage: Option<Stage>,
    /// Last curriculum phase to run; earlier phases always run first.
    pub phase: Option<String>,
    pub tasks: Option<Vec<TaskType>>,
    pub per_task: usize,
    /// Draws per curriculum phase.
    pub curriculum_counts: BTreeMap<String, usize>,
    pub buffer_capacity: usize,
    pub rules: LabelRules,
    pub workers: Option<usize>,
    pub skip_errors: bool,
    pub corpus: Option<PathBuf>,
    pub outputs: Option<PathBuf>,
    pub responses_per_query: usize,
    pub report_label: String,
    pub reference_dir: Option<PathBuf>,
    pub generated_dir: Option<PathBuf>,
    pub frame: Frame,
    pub if_aar: BTreeMap<CdrLoop, f64>,
    pub params: Option<PathBuf>,
    pub d_gen: usize,
    pub d_llm: usize,
    pub fixtures_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            structures_dir: None,
            annotations_dir: None,
            hidden_vectors: None,
            output_dir: PathBuf::from("out"),
            seed: 0,
            stage: None,
            phase: None,
            tasks: None,
            per_task: 10,
            curriculum_counts: PHASE_NAMES.iter().map(|p| (p.to_string(), 1000)).collect(),
            buffer_capacity: DEFAULT_BUFFER_CAPACITY,
            rules: LabelRules::default(),
            workers: None,
            skip_errors: false,
            corpus: None,
            outputs: None,
            responses_per_query: 1,
            report_label: "model".into(),
            reference_dir: None,
            generated_dir: None,
            frame: Frame::Region,
            if_aar: BTreeMap::new(),
            params: None,
            d_gen: 64,
            d_llm: 64,
            fixtures_dir: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        for (name, p) in [
            ("structures_dir", &self.structures_dir),
            ("annotations_dir", &self.annotations_dir),
            ("hidden_vectors", &self.hidden_vectors),
            ("corpus", &self.corpus),
            ("outputs", &self.outputs),
            ("reference_dir", &self.reference_dir),
            ("generated_dir", &self.generated_dir),
            ("params", &self.params),
        ] {
            if let Some(p) = p {
                if !p.exists() {
                    return Err(CliError::Config(format!("{name} {} does not exist", p.display())));
                }
            }
        }
        if let Some(p) = &self.phase {
            if !PHASE_NAMES.contains(&p.as_str()) {
                return Err(CliError::Config(format!("unknown phase {p:?}")));
            }
        }
        if let Some(k) = self.curriculum_counts.keys().find(|k| !PHASE_NAMES.contains(&k.as_str())) {
            return Err(CliError::Config(format!("unknown phase {k:?} in curriculum_counts")));
        }
        if self.responses_per_query == 0 {
            return Err(CliError::Config("responses_per_query must be at least 1".into()));
        }
        Ok(())
    }

    /// Hash over everything that can change an artifact. Worker count and
    /// output location are excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.workers = None;
        c.output_dir = PathBuf::new();
        config_hash(&c)
    }
}

#[derive(Debug, Parser)]
#[command(name = "proteo-taskgen", version, about = "Structure-grounded task corpora, grading and design evaluation")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub skip_errors: bool,
    /// Output directory.
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a task corpus (stage 1, 2, 3) or a curriculum mix.
    Generate {
        #[arg(long)]
        stage: Option<Stage>,
        #[arg(long)]
        phase: Option<String>,
        #[arg(long)]
        structures: Option<PathBuf>,
        #[arg(long)]
        annotations: Option<PathBuf>,
        #[arg(long)]
        per_task: Option<usize>,
    },
    /// Draw curriculum phases from an existing corpus.
    Sample {
        #[arg(long)]
        phase: Option<String>,
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Draws for every phase that is run.
        #[arg(long, short)]
        n: Option<usize>,
    },
    /// Build anchored generator inputs for key CDR residues.
    Anchors {
        #[arg(long)]
        structures: Option<PathBuf>,
        #[arg(long)]
        annotations: Option<PathBuf>,
        #[arg(long)]
        hidden: Option<PathBuf>,
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Grade model outputs against a corpus (same as `eval --mode grade`).
    Grade {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        outputs: Option<PathBuf>,
        #[arg(long)]
        responses_per_query: Option<usize>,
    },
    /// Grade outputs or evaluate generated structures against references.
    Eval {
        #[arg(long, value_enum, default_value = "design")]
        mode: EvalMode,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        outputs: Option<PathBuf>,
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        generated: Option<PathBuf>,
        #[arg(long)]
        annotations: Option<PathBuf>,
    },
    /// Check golden expectations against downloaded PDB entries.
    VerifyFixtures {
        #[arg(long)]
        dir: Option<PathBuf>,
    },
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn set_opt<T>(slot: &mut Option<T>, v: Option<T>) {
    if v.is_some() {
        *slot = v;
    }
}

/// Config file first, then flag overrides.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut c = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    set(&mut c.seed, cli.seed);
    set_opt(&mut c.workers, cli.workers);
    c.skip_errors |= cli.skip_errors;
    set(&mut c.output_dir, cli.out.clone());
    match &cli.command {
        Command::Generate {
            stage,
            phase,
            structures,
            annotations,
            per_task,
        } => {
            set_opt(&mut c.stage, *stage);
            set_opt(&mut c.phase, phase.clone());
            set_opt(&mut c.structures_dir, structures.clone());
            set_opt(&mut c.annotations_dir, annotations.clone());
            set(&mut c.per_task, *per_task);
        }
        Command::Sample { phase, corpus, n } => {
            set_opt(&mut c.phase, phase.clone());
            set_opt(&mut c.corpus, corpus.clone());
            if let Some(n) = n {
                c.curriculum_counts = PHASE_NAMES.iter().map(|p| (p.to_string(), *n)).collect();
            }
        }
        Command::Anchors {
            structures,
            annotations,
            hidden,
            params,
        } => {
            set_opt(&mut c.structures_dir, structures.clone());
            set_opt(&mut c.annotations_dir, annotations.clone());
            set_opt(&mut c.hidden_vectors, hidden.clone());
            set_opt(&mut c.params, params.clone());
        }
        Command::Grade {
            corpus,
            outputs,
            responses_per_query,
        } => {
            set_opt(&mut c.corpus, corpus.clone());
            set_opt(&mut c.outputs, outputs.clone());
            set(&mut c.responses_per_query, *responses_per_query);
        }
        Command::Eval {
            corpus,
            outputs,
            reference,
            generated,
            annotations,
            ..
        } => {
            set_opt(&mut c.corpus, corpus.clone());
            set_opt(&mut c.outputs, outputs.clone());
            set_opt(&mut c.reference_dir, reference.clone());
            set_opt(&mut c.generated_dir, generated.clone());
            set_opt(&mut c.annotations_dir, annotations.clone());
        }
        Command::VerifyFixtures { dir } => set_opt(&mut c.fixtures_dir, dir.clone()),
    }
    c.validate()?;
    Ok(c)
}

/// Parses argv, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve_config(cli)?;
    log::info!("config hash {}", cfg.hash());
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.workers {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Config(e.to_string()))?;
    pool.install(|| match &cli.command {
        Command::Generate { .. } => cmd_generate(&cfg),
        Command::Sample { .. } => cmd_sample(&cfg),
        Command::Anchors { .. } => cmd_anchors(&cfg),
        Command::Grade { .. } => cmd_grade(&cfg),
        Command::Eval { mode: EvalMode::Grade, .. } => cmd_grade(&cfg),
        Command::Eval { mode: EvalMode::Design, .. } => cmd_eval_design(&cfg),
        Command::VerifyFixtures { .. } => cmd_verify_fixtures(&cfg),
    })
}

fn ensure_out(cfg: &RunConfig) -> Result<&Path, CliError> {
    fs::create_dir_all(&cfg.output_dir).map_err(|e| CliError::Config(format!("{}: {e}", cfg.output_dir.display())))?;
    Ok(&cfg.output_dir)
}

fn require<'a>(p: &'a Option<PathBuf>, name: &str) -> Result<&'a Path, CliError> {
    p.as_deref().ok_or_else(|| CliError::Config(format!("{name} is required")))
}

/// Structure files in a directory, sorted by name, keyed by file stem.
pub fn list_structures(dir: &Path) -> Result<Vec<(String, PathBuf, SourceFormat)>, CliError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))? {
        let path = entry.map_err(data)?.path();
        let Some(ext) = path.extension().and_then(|e| e.to_str()) else {
            continue;
        };
        let Some(fmt) = SourceFormat::from_extension(ext) else {
            continue;
        };
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        out.push((stem, path, fmt));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

/// Parses a structure file, going through the canonical-JSON cache when
/// `PROTEO_TASKGEN_CACHE` names a directory.
pub fn load_structure(id: &str, path: &Path, fmt: SourceFormat) -> Result<Complex, CliError> {
    let bytes = fs::read(path).map_err(|e| data(format!("{}: {e}", path.display())))?;
    let cache = std::env::var_os(CACHE_ENV).map(PathBuf::from);
    let key = cache.as_ref().map(|dir| {
        let mut h = Sha256::new();
        h.update(id.as_bytes());
        h.update([0]);
        h.update(&bytes);
        dir.join(format!("{}.json", hex::encode(h.finalize())))
    });
    if let Some(k) = &key {
        if let Ok(text) = fs::read_to_string(k) {
            match Complex::from_canonical_json(&text) {
                Ok(c) => return Ok(c),
                Err(e) => log::warn!("ignoring cache entry {}: {e}", k.display()),
            }
        }
    }
    let c = parse_structure_with_id(&bytes, fmt, Some(id)).map_err(|e| data(format!("{}: {e}", path.display())))?;
    if let Some(k) = &key {
        let _ = fs::create_dir_all(k.parent().expect("cache file has a parent"));
        if let Err(e) = fs::write(k, c.to_canonical_json()) {
            log::warn!("cannot write cache entry {}: {e}", k.display());
        }
    }
    Ok(c)
}

fn load_annotation(dir: Option<&Path>, id: &str) -> Result<Option<AnnotationDoc>, CliError> {
    let Some(dir) = dir else { return Ok(None) };
    let p = dir.join(format!("{id}.json"));
    if !p.is_file() {
        return Ok(None);
    }
    let text = fs::read_to_string(&p).map_err(data)?;
    AnnotationDoc::from_json(&text)
        .map(Some)
        .map_err(|e| data(format!("{}: {e}", p.display())))
}

/// Parses every structure (in parallel) with its optional annotation.
/// Parse failures abort unless `skip_errors`, in which case they are
/// returned as (id, message).
pub fn load_inputs(cfg: &RunConfig, dir: &Path) -> Result<(Vec<StructureInput>, Vec<(String, String)>), CliError> {
    let files = list_structures(dir)?;
    if files.is_empty() {
        return Err(data(format!("no structure files in {}", dir.display())));
    }
    let ann = cfg.annotations_dir.as_deref();
    let loaded: Vec<(String, Result<StructureInput, CliError>)> = files
        .par_iter()
        .map(|(id, path, fmt)| {
            let r = load_structure(id, path, *fmt).and_then(|complex| {
                Ok(StructureInput {
                    annotation: load_annotation(ann, id)?,
                    complex,
                })
            });
            (id.clone(), r)
        })
        .collect();
    let mut inputs = Vec::new();
    let mut failed = Vec::new();
    for (id, r) in loaded {
        match r {
            Ok(i) => inputs.push(i),
            Err(e) if cfg.skip_errors => {
                log::warn!("skipping {id}: {e}");
                failed.push((id, e.to_string()));
            }
            Err(e) => return Err(e),
        }
    }
    Ok((inputs, failed))
}

fn phases_through(last: Option<&str>) -> Vec<CurriculumPhase> {
    let end = last
        .and_then(|p| PHASE_NAMES.iter().position(|n| *n == p))
        .unwrap_or(PHASE_NAMES.len() - 1);
    PHASE_NAMES[..=end]
        .iter()
        .map(|n| CurriculumPhase::standard(n).expect("standard phase"))
        .collect()
}

/// Runs phases up to `cfg.phase` over `instances`, writing one JSONL file
/// per phase. Returns the phases and their draw counts.
fn write_curriculum(cfg: &RunConfig, instances: Vec<TaskInstance>, out: &Path) -> Result<Vec<(CurriculumPhase, usize)>, CliError> {
    let plan: Vec<(CurriculumPhase, usize)> = phases_through(cfg.phase.as_deref())
        .into_iter()
        .map(|p| {
            let n = cfg.curriculum_counts.get(&p.name).copied().unwrap_or(0);
            (p, n)
        })
        .collect();
    let pool = pool_from(instances);
    let drawn = run_curriculum(&plan, &pool, cfg.seed, cfg.buffer_capacity).map_err(data)?;
    for ((phase, _), items) in plan.iter().zip(&drawn) {
        let p = out.join(format!("curriculum_{}.jsonl", phase.name));
        write_jsonl(&p, items).map_err(data)?;
        log::info!("{}: {} instances -> {}", phase.name, items.len(), p.display());
    }
    Ok(plan)
}

pub fn cmd_generate(cfg: &RunConfig) -> Result<(), CliError> {
    let stage = cfg.stage.ok_or_else(|| CliError::Config("--stage is required".into()))?;
    let dir = require(&cfg.structures_dir, "structures_dir")?;
    let (inputs, parse_failed) = load_inputs(cfg, dir)?;
    let tasks: Vec<TaskType> = match (&cfg.tasks, stage) {
        (Some(t), _) => t.clone(),
        (None, Stage::Curriculum) => TaskType::ALL.to_vec(),
        (None, s) => {
            let n = match s {
                Stage::One => 1,
                Stage::Two => 2,
                _ => 3,
            };
            TaskType::ALL.into_iter().filter(|t| t.stage() == n).collect()
        }
    };
    let spec = CorpusSpec {
        global_seed: cfg.seed,
        tasks,
        per_task: cfg.per_task,
        rules: cfg.rules.clone(),
        skip_errors: cfg.skip_errors,
    };
    let mut corpus = generate_corpus(&inputs, &spec).map_err(data)?;
    corpus.failed.extend(parse_failed);
    corpus.failed.sort();
    let out = ensure_out(cfg)?;
    write_jsonl(&out.join("corpus.jsonl"), &corpus.instances).map_err(data)?;
    let hash = cfg.hash();
    let phases: Vec<CurriculumPhase> = if stage == Stage::Curriculum {
        let plan = write_curriculum(cfg, corpus.instances.clone(), out)?;
        plan.into_iter().map(|(p, _)| p).collect()
    } else {
        Vec::new()
    };
    let mut m = manifest(&hash, &corpus, &phases);
    m["stage"] = serde_json::to_value(stage).expect("stage serializes");
    m["seed"] = json!(cfg.seed);
    write_manifest(&out.join("manifest.json"), &m).map_err(data)?;
    log::info!(
        "wrote {} instances from {} structures to {}",
        corpus.instances.len(),
        inputs.len(),
        out.display()
    );
    Ok(())
}

pub fn cmd_sample(cfg: &RunConfig) -> Result<(), CliError> {
    let out = ensure_out(cfg)?;
    let path = cfg.corpus.clone().unwrap_or_else(|| out.join("corpus.jsonl"));
    let instances = read_jsonl(&path).map_err(|e| data(format!("{}: {e}", path.display())))?;
    let plan = write_curriculum(cfg, instances, out)?;
    let phases: Vec<Value> = plan
        .iter()
        .map(|(p, n)| json!({"phase": p.name, "draws": n}))
        .collect();
    let m = json!({"config_hash": cfg.hash(), "corpus": path, "phases": phases});
    write_manifest(&out.join("sample_manifest.json"), &m).map_err(data)
}

pub fn cmd_anchors(cfg: &RunConfig) -> Result<(), CliError> {
    let dir = require(&cfg.structures_dir, "structures_dir")?;
    let hidden_path = require(&cfg.hidden_vectors, "hidden_vectors")?;
    require(&cfg.annotations_dir, "annotations_dir")?;
    let (inputs, _) = load_inputs(cfg, dir)?;
    let hidden = read_hidden(hidden_path).map_err(data)?;
    let (table, proj) = load_or_init_params(cfg.params.as_deref(), (cfg.d_gen, cfg.d_llm), cfg.seed).map_err(data)?;
    let out = ensure_out(cfg)?;
    if cfg.params.is_none() {
        let p = out.join("anchor_params.bin");
        let f = fs::File::create(&p).map_err(data)?;
        save_params(std::io::BufWriter::new(f), &table, &proj, Dtype::F64).map_err(data)?;
        log::info!("initialized parameters -> {}", p.display());
    }
    let mut lines = String::new();
    for input in &inputs {
        let id = &input.complex.id;
        let Some(doc) = &input.annotation else {
            log::warn!("{id}: no annotation, skipped");
            continue;
        };
        let cdrs = load_cdr_annotations(&input.complex, doc).map_err(|e| data(format!("{id}: {e}")))?;
        let records = hidden.get(id).map(Vec::as_slice).unwrap_or_default();
        let spec = spec_from_records(&cdrs, records);
        let anchored = build_anchors(&residue_universe(&input.complex), &spec, &table, &proj)
            .map_err(|e| data(format!("{id}: {e}")))?;
        for r in &anchored.residues {
            let v = json!({"structure_id": id, "chain": r.chain, "pos": r.pos, "k_gen": r.k_gen, "e_gen": r.e_gen});
            lines.push_str(&v.to_string());
            lines.push('\n');
        }
    }
    fs::write(out.join("anchors.jsonl"), lines).map_err(data)
}

pub fn cmd_grade(cfg: &RunConfig) -> Result<(), CliError> {
    let corpus_path = require(&cfg.corpus, "corpus")?;
    let outputs_path = require(&cfg.outputs, "outputs")?;
    let instances = read_jsonl(corpus_path).map_err(|e| data(format!("{}: {e}", corpus_path.display())))?;
    let outputs = read_outputs(outputs_path).map_err(|e| data(format!("{}: {e}", outputs_path.display())))?;
    let results = grade_corpus(&instances, &outputs).map_err(|e| match e {
        GradeError::Join(m) => CliError::Join(m),
        other => data(other),
    })?;
    let report = aggregate_report(&results, cfg.responses_per_query).map_err(data)?;
    let out = ensure_out(cfg)?;
    let mut doc = serde_json::to_value(&report).expect("report serializes");
    doc["config_hash"] = json!(cfg.hash());
    write_manifest(&out.join("grade_report.json"), &doc).map_err(data)?;
    let table = render_table(&report, &cfg.report_label);
    fs::write(out.join("grade_table.txt"), &table).map_err(data)?;
    print!("{table}");
    Ok(())
}

pub fn cmd_eval_design(cfg: &RunConfig) -> Result<(), CliError> {
    let ref_dir = require(&cfg.reference_dir, "reference_dir")?;
    let gen_dir = require(&cfg.generated_dir, "generated_dir")?;
    let ann_dir = require(&cfg.annotations_dir, "annotations_dir")?;
    let refs = list_structures(ref_dir)?;
    if refs.is_empty() {
        return Err(data(format!("no structure files in {}", ref_dir.display())));
    }
    let gens: BTreeMap<String, (PathBuf, SourceFormat)> = list_structures(gen_dir)?
        .into_iter()
        .map(|(id, p, f)| (id, (p, f)))
        .collect();
    if let Some(extra) = gens.keys().find(|k| !refs.iter().any(|r| &r.0 == *k)) {
        return Err(CliError::Join(format!("generated {extra} has no reference")));
    }
    let evaluated: Vec<Result<_, CliError>> = refs
        .par_iter()
        .map(|(id, rp, rf)| {
            let (gp, gf) = gens
                .get(id)
                .ok_or_else(|| CliError::Join(format!("reference {id} has no generated structure")))?;
            let reference = load_structure(id, rp, *rf)?;
            let generated = load_structure(id, gp, *gf)?;
            let doc = load_annotation(Some(ann_dir), id)?.ok_or_else(|| data(format!("{id}: no annotation")))?;
            let cdrs = load_cdr_annotations(&reference, &doc).map_err(|e| data(format!("{id}: {e}")))?;
            let metrics =
                evaluate_complex(&reference, &generated, &cdrs, cfg.frame, None).map_err(|e| data(format!("{id}: {e}")))?;
            let region = cdrs.residue_ids().into_iter().collect();
            Ok((metrics, StructurePair::from_complexes(&reference, &generated, &region)))
        })
        .collect();
    let mut metrics = Vec::new();
    let mut pairs = Vec::new();
    for r in evaluated {
        let (m, p) = r?;
        metrics.push(m);
        pairs.push(p);
    }
    let report = summarize(metrics, &pairs, cfg.frame, &cfg.if_aar);
    let out = ensure_out(cfg)?;
    let mut doc = serde_json::to_value(&report).expect("report serializes");
    doc["config_hash"] = json!(cfg.hash());
    write_manifest(&out.join("design_report.json"), &doc).map_err(data)?;
    let tables = render_design_tables(&report, &cfg.report_label);
    fs::write(out.join("design_tables.txt"), &tables).map_err(data)?;
    print!("{tables}");
    Ok(())
}

pub fn cmd_verify_fixtures(cfg: &RunConfig) -> Result<(), CliError> {
    let dir = require(&cfg.fixtures_dir, "fixtures_dir")?;
    let report = run_fixtures(dir, &cfg.rules);
    for o in &report.outcomes {
        let (tag, detail) = match &o.status {
            Status::Pass => ("PASS", String::new()),
            Status::Fail(d) => ("FAIL", format!(" ({d})")),
            Status::Missing(d) => ("MISSING", format!(" ({d})")),
        };
        let kind = if o.hard { "hard" } else { "info" };
        println!("{tag:<8} {kind} {} {}{detail}", o.entry, o.check);
    }
    println!("informational agreement {:.1}%", 100.0 * report.informational_rate());
    let out = ensure_out(cfg)?;
    let doc = json!({
        "hard_ok": report.hard_ok(),
        "informational_rate": report.informational_rate(),
        "outcomes": report.outcomes,
    });
    write_manifest(&out.join("fixtures_report.json"), &doc).map_err(data)?;
    if report.missing() > 0 {
        return Err(data(format!("{} checks had no structure file", report.missing())));
    }
    if !report.hard_ok() {
        return Err(CliError::Verify("hard fixture checks failed".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        fs::write(&p, r#"{"schema_version":1,"seed":7,"per_task":3}"#).unwrap();
        let cli = Cli::try_parse_from(["x", "--config", p.to_str().unwrap(), "--seed", "9", "generate", "--stage", "2"]).unwrap();
        let c = resolve_config(&cli).unwrap();
        assert_eq!((c.seed, c.per_task, c.stage), (9, 3, Some(Stage::Two)));
    }

    #[test]
    fn bad_config_is_exit_2() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        fs::write(&p, r#"{"schema_version":9}"#).unwrap();
        let code = main_with_args(["x", "--config", p.to_str().unwrap(), "generate", "--stage", "1"]);
        assert_eq!(code, 2);
        fs::write(&p, r#"{"no_such_key":1}"#).unwrap();
        assert_eq!(main_with_args(["x", "--config", p.to_str().unwrap(), "sample"]), 2);
    }

    #[test]
    fn empty_structures_dir_is_exit_3() {
        let dir = tempfile::tempdir().unwrap();
        let s = dir.path().join("s");
        fs::create_dir(&s).unwrap();
        let code = main_with_args([
            "x",
            "--out",
            dir.path().join("o").to_str().unwrap(),
            "generate",
            "--stage",
            "2",
            "--structures",
            s.to_str().unwrap(),
        ]);
        assert_eq!(code, 3);
    }

    #[test]
    fn hash_ignores_workers_and_output() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.workers = Some(3);
        b.output_dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }
}
