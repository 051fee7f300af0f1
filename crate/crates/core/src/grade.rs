//! Scoring model outputs against task targets.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::labels::geometry::PairClass;
use crate::labels::interface::SALT_BRIDGE_BINS;
use crate::structure::aa;
use crate::tasks::stage1::{schema_facts, ChainFacts, SchemaFacts};
use crate::tasks::stage2::LDDT_BINS;
use crate::tasks::{TaskInstance, TaskType};

#[derive(Debug, Error)]
pub enum GradeError {
    #[error("no grade results to aggregate")]
    EmptyResults,
    #[error("join failure: {0}")]
    Join(String),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub const STAGE1_FIELDS: [&str; 6] = [
    "num_chains",
    "length_bin",
    "major_ss",
    "ss_fraction",
    "longest_run",
    "segments",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradeResult {
    pub task_type: TaskType,
    pub structure_id: String,
    pub ordinal: u64,
    pub parse_ok: bool,
    pub score: f64,
    pub field_scores: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl GradeResult {
    fn failed(inst: &TaskInstance, why: String) -> Self {
        GradeResult {
            task_type: inst.task_type,
            structure_id: inst.structure_id.clone(),
            ordinal: inst.ordinal().unwrap_or(0),
            parse_ok: false,
            score: 0.0,
            field_scores: BTreeMap::new(),
            failure: Some(why),
        }
    }
}

fn upper_aa(v: &mut Value) {
    match v {
        Value::Object(m) => {
            for (k, x) in m.iter_mut() {
                match (k.as_str(), &mut *x) {
                    ("aa" | "seq", Value::String(s)) => *s = s.to_ascii_uppercase(),
                    _ => upper_aa(x),
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(upper_aa),
        _ => {}
    }
}

/// Strict parse: the text must be exactly one JSON object, optionally
/// surrounded by whitespace. Caption tasks also accept bare text.
pub fn parse_model_output(task: TaskType, text: &str) -> Result<Value, String> {
    let trimmed = text.trim();
    let parsed = serde_json::from_str::<Value>(trimmed);
    let mut v = match (parsed, task) {
        (Ok(v @ Value::Object(_)), _) => v,
        (_, TaskType::CaptionB1 | TaskType::CaptionB2) if !trimmed.starts_with('{') && !trimmed.is_empty() => {
            serde_json::json!({ "caption": trimmed })
        }
        (Ok(_), _) => return Err("output is JSON but not an object".into()),
        (Err(e), _) => return Err(format!("not a single JSON object: {e}")),
    };
    upper_aa(&mut v);
    validate_schema(task, &v)?;
    Ok(v)
}

fn str_field<'a>(v: &'a Value, key: &str) -> Result<&'a str, String> {
    v.get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| format!("missing string field {key:?}"))
}

fn one_of(v: &Value, key: &str, allowed: &[&str]) -> Result<(), String> {
    let s = str_field(v, key)?;
    if allowed.contains(&s) {
        Ok(())
    } else {
        Err(format!("{key}: {s:?} is not an allowed label"))
    }
}

fn chain_pair(v: Option<&Value>) -> Result<(String, String), String> {
    let v = v.ok_or("missing chain pair")?;
    Ok((str_field(v, "chain_i")?.to_string(), str_field(v, "chain_j")?.to_string()))
}

/// Splits a window label string into tokens; `NA` counts as one token.
pub fn window_tokens(s: &str, alphabet: &[char]) -> Option<Vec<String>> {
    let mut out = Vec::new();
    let mut it = s.chars().peekable();
    while let Some(c) = it.next() {
        if c == 'N' && it.peek() == Some(&'A') {
            it.next();
            out.push("NA".to_string());
        } else if alphabet.contains(&c) {
            out.push(c.to_string());
        } else {
            return None;
        }
    }
    Some(out)
}

fn all_dist_bins() -> BTreeSet<&'static str> {
    PairClass::ALL.iter().flat_map(|c| c.bin_labels().iter().copied()).collect()
}

pub fn validate_schema(task: TaskType, v: &Value) -> Result<(), String> {
    use TaskType::*;
    match task {
        ResidueRetrieval => {
            let s = str_field(v, "aa")?;
            let mut cs = s.chars();
            match (cs.next(), cs.next()) {
                (Some(c), None) if aa::is_task_symbol(c) => Ok(()),
                _ => Err(format!("aa: {s:?} is not a residue code")),
            }
        }
        DsspSeq | RsaSeq => {
            let alphabet: &[char] = if task == DsspSeq { &['H', 'E', 'C'] } else { &['B', 'M', 'E'] };
            let s = str_field(v, "labels")?;
            window_tokens(s, alphabet)
                .map(|_| ())
                .ok_or_else(|| format!("labels: {s:?} uses symbols outside the label set"))
        }
        PairDistBin => one_of(v, "dist_bin", &all_dist_bins().into_iter().collect::<Vec<_>>()),
        PairContact => one_of(v, "choice", &["Contact", "NotContact"]),
        PairBatch => {
            let bins: Vec<&str> = all_dist_bins().into_iter().collect();
            let pairs = v.get("pairs").and_then(Value::as_array).ok_or("missing pairs array")?;
            for p in pairs {
                str_field(p, "pair_id")?;
                one_of(p, "dist_bin", &bins)?;
            }
            Ok(())
        }
        SaltBridgeBin => one_of(v, "salt_bridge_bin", &SALT_BRIDGE_BINS),
        LddtBin => one_of(v, "lddt_bin", &LDDT_BINS),
        ChainPairGraph => {
            let pairs = v.get("pairs").and_then(Value::as_array).ok_or("missing pairs array")?;
            for p in pairs {
                chain_pair(Some(p))?;
            }
            Ok(())
        }
        TopChainPair => chain_pair(v.get("top_chain_pair")).map(|_| ()),
        InterfaceTopK | HotspotTopK => {
            let (a, b) = chain_pair(v.get("chain_pair"))?;
            for c in [a, b] {
                let list = v
                    .get(&c)
                    .and_then(Value::as_array)
                    .ok_or_else(|| format!("missing residue list for chain {c}"))?;
                if !list.iter().all(|x| x.as_u64().is_some()) {
                    return Err(format!("chain {c}: positions must be non-negative integers"));
                }
            }
            Ok(())
        }
        SchemaB1 => {
            v.get("chains").and_then(Value::as_array).ok_or("missing chains array")?;
            Ok(())
        }
        SchemaB2 => {
            v.get("chain_profile").and_then(Value::as_object).ok_or("missing chain_profile object")?;
            Ok(())
        }
        CaptionB1 | CaptionB2 => str_field(v, "caption").map(|_| ()),
        CdrRedesign => {
            let a = v.get("answer").ok_or("missing answer block")?;
            a.get("cdrs_present").and_then(Value::as_array).ok_or("missing answer.cdrs_present")?;
            let seqs = a
                .get("cdr_sequences")
                .and_then(Value::as_object)
                .ok_or("missing answer.cdr_sequences")?;
            for (k, e) in seqs {
                e.get("len").and_then(Value::as_u64).ok_or_else(|| format!("{k}: missing len"))?;
            }
            Ok(())
        }
    }
}

fn exact(a: Option<&Value>, b: Option<&Value>) -> f64 {
    if a.is_some() && a == b {
        1.0
    } else {
        0.0
    }
}

fn unordered(p: (String, String)) -> (String, String) {
    if p.0 <= p.1 {
        p
    } else {
        (p.1, p.0)
    }
}

fn window_score(task: TaskType, target: &Value, out: &Value) -> f64 {
    let alphabet: &[char] = if task == TaskType::DsspSeq { &['H', 'E', 'C'] } else { &['B', 'M', 'E'] };
    let tokens = |v: &Value| v.get("labels").and_then(Value::as_str).and_then(|s| window_tokens(s, alphabet));
    let (Some(t), Some(o)) = (tokens(target), tokens(out)) else {
        return 0.0;
    };
    if t.is_empty() {
        return if o.is_empty() { 1.0 } else { 0.0 };
    }
    let hits = t.iter().zip(&o).filter(|(a, b)| a == b).count();
    hits as f64 / t.len() as f64
}

fn batch_score(target: &Value, out: &Value) -> f64 {
    let map = |v: &Value| -> HashMap<String, String> {
        v.get("pairs")
            .and_then(Value::as_array)
            .into_iter()
            .flatten()
            .filter_map(|p| {
                Some((
                    p.get("pair_id")?.as_str()?.to_string(),
                    p.get("dist_bin")?.as_str()?.to_string(),
                ))
            })
            .collect()
    };
    let (t, o) = (map(target), map(out));
    if t.is_empty() {
        return 1.0;
    }
    t.iter().filter(|(id, bin)| o.get(*id) == Some(*bin)).count() as f64 / t.len() as f64
}

fn pair_set(v: &Value) -> BTreeSet<(String, String)> {
    v.get("pairs")
        .and_then(Value::as_array)
        .into_iter()
        .flatten()
        .filter_map(|p| chain_pair(Some(p)).ok().map(unordered))
        .collect()
}

/// Per-chain overlap |pred ∩ gt| / min(k, |gt|), averaged over the two
/// chains of the target pair. Predictions beyond the first k are ignored.
fn topk_score(target: &Value, out: &Value, fields: &mut BTreeMap<String, f64>) -> f64 {
    let Ok((a, b)) = chain_pair(target.get("chain_pair")) else {
        return 0.0;
    };
    let k = target.get("topk").and_then(Value::as_u64).unwrap_or(0) as usize;
    let list = |v: &Value, c: &str| -> Vec<u64> {
        v.get(c)
            .and_then(Value::as_array)
            .into_iter()
            .flatten()
            .filter_map(Value::as_u64)
            .collect()
    };
    let mut total = 0.0;
    for c in [&a, &b] {
        let gt: BTreeSet<u64> = list(target, c).into_iter().collect();
        let mut pred: Vec<u64> = Vec::new();
        for p in list(out, c) {
            if !pred.contains(&p) {
                pred.push(p);
            }
        }
        pred.truncate(k);
        let denom = k.min(gt.len());
        let s = if denom == 0 {
            if pred.is_empty() {
                1.0
            } else {
                0.0
            }
        } else {
            pred.iter().filter(|p| gt.contains(p)).count() as f64 / denom as f64
        };
        fields.insert(format!("chain_{c}"), s);
        total += s;
    }
    total / 2.0
}

fn array_share<const N: usize>(t: &Option<[String; N]>, o: Option<&[String; N]>) -> Option<f64> {
    let t = t.as_ref()?;
    Some(match o {
        Some(o) => t.iter().zip(o).filter(|(a, b)| a == b).count() as f64 / N as f64,
        None => 0.0,
    })
}

/// Per-field accuracies for Stage I; list-valued fields earn per-element
/// credit, and every field is averaged over the target's chains.
pub fn stage1_fields(target: &SchemaFacts, out: &SchemaFacts) -> BTreeMap<String, f64> {
    let mut f = BTreeMap::new();
    if let Some(n) = target.num_chains {
        f.insert("num_chains".to_string(), if out.num_chains == Some(n) { 1.0 } else { 0.0 });
    }
    let empty = ChainFacts::default();
    let mut sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for (id, t) in &target.chains {
        let o = out.chains.get(id).unwrap_or(&empty);
        let scalar = |tv: &Option<String>, ov: &Option<String>| tv.as_ref().map(|x| if Some(x) == ov.as_ref() { 1.0 } else { 0.0 });
        let cells = [
            ("length_bin", scalar(&t.length_bin, &o.length_bin)),
            ("major_ss", scalar(&t.major_ss, &o.major_ss)),
            ("ss_fraction", array_share(&t.ss_fraction, o.ss_fraction.as_ref())),
            ("longest_run", array_share(&t.longest_run, o.longest_run.as_ref())),
            ("segments", array_share(&t.segments, o.segments.as_ref())),
        ];
        for (name, s) in cells {
            if let Some(s) = s {
                let e = sums.entry(name).or_insert((0.0, 0));
                e.0 += s;
                e.1 += 1;
            }
        }
    }
    for (name, (s, n)) in sums {
        f.insert(name.to_string(), s / n as f64);
    }
    f
}

/// Mean of three checks: loop set, per-loop lengths, filled anchor residues.
fn cdr_score(target: &Value, out: &Value, fields: &mut BTreeMap<String, f64>) -> f64 {
    let loops = |v: &Value| -> BTreeSet<String> {
        v.pointer("/answer/cdrs_present")
            .and_then(Value::as_array)
            .into_iter()
            .flatten()
            .filter_map(|x| x.as_str().map(str::to_string))
            .collect()
    };
    fields.insert("cdrs_present".into(), if loops(target) == loops(out) { 1.0 } else { 0.0 });
    let empty = Map::new();
    let seqs = |v: &Value| v.pointer("/answer/cdr_sequences").and_then(Value::as_object).cloned();
    let ts = seqs(target).unwrap_or_default();
    let os = seqs(out).unwrap_or(empty);
    if !ts.is_empty() {
        let ok = ts
            .iter()
            .filter(|(k, e)| os.get(*k).and_then(|o| o.get("len")) == e.get("len"))
            .count();
        fields.insert("length_match".into(), ok as f64 / ts.len() as f64);
    }
    let filled = |v: &Value| -> BTreeSet<(u64, String)> {
        v.get("filled_positions")
            .and_then(Value::as_array)
            .into_iter()
            .flatten()
            .filter_map(|p| Some((p.get("pos")?.as_u64()?, p.get("aa")?.as_str()?.to_string())))
            .collect()
    };
    let (mut hit, mut total) = (0usize, 0usize);
    for (k, e) in &ts {
        let t = filled(e);
        let o = os.get(k).map(filled).unwrap_or_default();
        total += t.len();
        hit += t.intersection(&o).count();
    }
    if total > 0 {
        fields.insert("filled_positions".into(), hit as f64 / total as f64);
    }
    fields.values().sum::<f64>() / fields.len() as f64
}

/// Scores a schema-valid output against the instance target.
pub fn grade_instance(inst: &TaskInstance, out: &Value) -> GradeResult {
    use TaskType::*;
    let t = &inst.target;
    let mut fields = BTreeMap::new();
    let score = match inst.task_type {
        ResidueRetrieval => exact(t.get("aa"), out.get("aa")),
        DsspSeq | RsaSeq => window_score(inst.task_type, t, out),
        PairDistBin => exact(t.get("dist_bin"), out.get("dist_bin")),
        PairContact => exact(t.get("choice"), out.get("choice")),
        PairBatch => batch_score(t, out),
        SaltBridgeBin => exact(t.get("salt_bridge_bin"), out.get("salt_bridge_bin")),
        LddtBin => exact(t.get("lddt_bin"), out.get("lddt_bin")),
        ChainPairGraph => {
            if pair_set(t) == pair_set(out) {
                1.0
            } else {
                0.0
            }
        }
        TopChainPair => {
            let p = |v: &Value| chain_pair(v.get("top_chain_pair")).ok().map(unordered);
            if p(t).is_some() && p(t) == p(out) {
                1.0
            } else {
                0.0
            }
        }
        InterfaceTopK | HotspotTopK => topk_score(t, out, &mut fields),
        SchemaB1 | SchemaB2 | CaptionB1 | CaptionB2 => {
            let (Some(tf), Some(of)) = (schema_facts(inst.task_type, t), schema_facts(inst.task_type, out)) else {
                return GradeResult::failed(inst, "stage I payload could not be read".into());
            };
            fields = stage1_fields(&tf, &of);
            if fields.is_empty() {
                0.0
            } else {
                fields.values().sum::<f64>() / fields.len() as f64
            }
        }
        CdrRedesign => cdr_score(t, out, &mut fields),
    };
    GradeResult {
        task_type: inst.task_type,
        structure_id: inst.structure_id.clone(),
        ordinal: inst.ordinal().unwrap_or(0),
        parse_ok: true,
        score,
        field_scores: fields,
        failure: None,
    }
}

/// Parse, validate and score one raw response.
pub fn grade_text(inst: &TaskInstance, text: &str) -> GradeResult {
    match parse_model_output(inst.task_type, text) {
        Ok(v) => grade_instance(inst, &v),
        Err(e) => GradeResult::failed(inst, e),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskStats {
    pub accuracy: f64,
    pub queries: usize,
    pub responses: usize,
    pub parse_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradeReport {
    pub per_task: BTreeMap<TaskType, TaskStats>,
    /// The six Stage I field accuracies plus `overall`, their plain mean.
    pub stage1_fields: BTreeMap<String, f64>,
    pub responses_per_query: usize,
    pub total_responses: usize,
    pub parse_failures: usize,
}

/// Per-query means first, then per-task means over queries, so queries
/// with extra responses do not weigh more.
pub fn aggregate_report(results: &[GradeResult], responses_per_query: usize) -> Result<GradeReport, GradeError> {
    if results.is_empty() {
        return Err(GradeError::EmptyResults);
    }
    let mut by_query: BTreeMap<(TaskType, &str, u64), Vec<&GradeResult>> = BTreeMap::new();
    for r in results {
        by_query
            .entry((r.task_type, r.structure_id.as_str(), r.ordinal))
            .or_default()
            .push(r);
    }
    let mut per_task: BTreeMap<TaskType, TaskStats> = BTreeMap::new();
    let mut field_sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for ((task, sid, ord), rs) in &by_query {
        if responses_per_query > 0 && rs.len() != responses_per_query {
            log::warn!("{sid}#{ord}: {} responses, expected {responses_per_query}", rs.len());
        }
        let n = rs.len() as f64;
        let s = per_task.entry(*task).or_default();
        s.accuracy += rs.iter().map(|r| r.score).sum::<f64>() / n;
        s.queries += 1;
        s.responses += rs.len();
        s.parse_failures += rs.iter().filter(|r| !r.parse_ok).count();
        if task.stage() == 1 {
            for f in STAGE1_FIELDS {
                // a failed parse earns zero on every field
                let vals: Vec<f64> = rs
                    .iter()
                    .filter_map(|r| if r.parse_ok { r.field_scores.get(f).copied() } else { Some(0.0) })
                    .collect();
                if !vals.is_empty() && rs.iter().any(|r| !r.parse_ok || r.field_scores.contains_key(f)) {
                    let e = field_sums.entry(f.to_string()).or_insert((0.0, 0));
                    e.0 += vals.iter().sum::<f64>() / vals.len() as f64;
                    e.1 += 1;
                }
            }
        }
    }
    for s in per_task.values_mut() {
        s.accuracy /= s.queries as f64;
    }
    let mut stage1: BTreeMap<String, f64> = field_sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect();
    if !stage1.is_empty() {
        let overall = stage1.values().sum::<f64>() / stage1.len() as f64;
        stage1.insert("overall".into(), overall);
    }
    Ok(GradeReport {
        per_task,
        stage1_fields: stage1,
        responses_per_query,
        total_responses: results.len(),
        parse_failures: results.iter().filter(|r| !r.parse_ok).count(),
    })
}

pub const TABLE_COLUMNS: [TaskType; 10] = [
    TaskType::DsspSeq,
    TaskType::RsaSeq,
    TaskType::PairDistBin,
    TaskType::PairContact,
    TaskType::PairBatch,
    TaskType::ChainPairGraph,
    TaskType::HotspotTopK,
    TaskType::InterfaceTopK,
    TaskType::SaltBridgeBin,
    TaskType::TopChainPair,
];

fn pct(v: Option<f64>) -> String {
    v.map(|x| format!("{:.1}%", 100.0 * x)).unwrap_or_else(|| "-".into())
}

/// Plain-text tables: the Stage II accuracy row, remaining task types, and
/// Stage I field accuracies when present.
pub fn render_table(report: &GradeReport, row_label: &str) -> String {
    let acc = |t: &TaskType| report.per_task.get(t).map(|s| s.accuracy);
    let mut s = String::new();
    let _ = write!(s, "{:<10}", "Phase");
    for t in &TABLE_COLUMNS {
        let _ = write!(s, " {:>8}", t.abbr());
    }
    s.push('\n');
    let _ = write!(s, "{row_label:<10}");
    for t in &TABLE_COLUMNS {
        let _ = write!(s, " {:>8}", pct(acc(t)));
    }
    s.push('\n');
    let others: Vec<&TaskType> = report
        .per_task
        .keys()
        .filter(|t| !TABLE_COLUMNS.contains(t))
        .collect();
    if !others.is_empty() {
        s.push('\n');
        for t in others {
            let st = &report.per_task[t];
            let _ = writeln!(s, "{:<8} {:>7} ({} queries, {} parse failures)", t.abbr(), pct(Some(st.accuracy)), st.queries, st.parse_failures);
        }
    }
    if !report.stage1_fields.is_empty() {
        s.push('\n');
        let cols: Vec<&str> = STAGE1_FIELDS.iter().copied().chain(["overall"]).collect();
        for c in &cols {
            let _ = write!(s, "{c:>12}");
        }
        s.push('\n');
        for c in &cols {
            let _ = write!(s, "{:>12}", pct(report.stage1_fields.get(*c).copied()));
        }
        s.push('\n');
    }
    let _ = writeln!(
        s,
        "\n{} responses, {} parse failures, {} responses per query",
        report.total_responses, report.parse_failures, report.responses_per_query
    );
    s
}

/// One model response, joined to its instance on (structure_id, ordinal).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRow {
    pub structure_id: String,
    pub ordinal: u64,
    /// Raw response text; a JSON object is accepted and re-serialized.
    pub output: Value,
}

impl OutputRow {
    pub fn text(&self) -> String {
        match &self.output {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        }
    }
}

pub fn read_outputs(path: &Path) -> Result<Vec<OutputRow>, GradeError> {
    let mut out = Vec::new();
    for (k, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| GradeError::Malformed {
            line: k + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Grades every response. Responses naming an unknown instance and
/// instances without any response are join failures.
pub fn grade_corpus(instances: &[TaskInstance], outputs: &[OutputRow]) -> Result<Vec<GradeResult>, GradeError> {
    let index: HashMap<(&str, u64), &TaskInstance> = instances
        .iter()
        .map(|t| ((t.structure_id.as_str(), t.ordinal().unwrap_or(0)), t))
        .collect();
    let mut seen = BTreeSet::new();
    let mut results = Vec::with_capacity(outputs.len());
    for o in outputs {
        let key = (o.structure_id.as_str(), o.ordinal);
        let inst = index
            .get(&key)
            .ok_or_else(|| GradeError::Join(format!("no instance for {}#{}", o.structure_id, o.ordinal)))?;
        seen.insert(key);
        results.push(grade_text(inst, &o.text()));
    }
    if let Some(missing) = index.keys().find(|k| !seen.contains(*k)) {
        return Err(GradeError::Join(format!("no response for {}#{}", missing.0, missing.1)));
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn inst(task: TaskType, target: Value) -> TaskInstance {
        TaskInstance {
            task_type: task,
            structure_id: "S".into(),
            seed: 0,
            prompt: json!({"ordinal": 0}),
            target,
        }
    }

    #[test]
    fn parse_rules() {
        assert_eq!(parse_model_output(TaskType::ResidueRetrieval, " {\"aa\":\"e\"}\n").unwrap(), json!({"aa": "E"}));
        assert!(parse_model_output(TaskType::ResidueRetrieval, "The answer is E").is_err());
        assert!(parse_model_output(TaskType::ResidueRetrieval, "x {\"aa\":\"E\"}").is_err());
        assert!(parse_model_output(TaskType::PairDistBin, "{\"dist_bin\":\"4 - 6\"}").is_err());
        let r = grade_text(&inst(TaskType::ResidueRetrieval, json!({"aa": "E"})), "The answer is E");
        assert!(!r.parse_ok);
        assert_eq!(r.score, 0.0);
    }

    #[test]
    fn window_partial_credit() {
        let i = inst(TaskType::DsspSeq, json!({"labels": "EECCH"}));
        assert!((grade_instance(&i, &json!({"labels": "EECCC"})).score - 0.8).abs() < 1e-12);
        let i = inst(TaskType::RsaSeq, json!({"labels": "BNAMEE"}));
        assert!((grade_instance(&i, &json!({"labels": "BNAMEB"})).score - 0.8).abs() < 1e-12);
    }

    #[test]
    fn hotspot_overlap() {
        let t = json!({"chain_pair": {"chain_i": "C", "chain_j": "D"}, "topk": 5, "C": [73, 52, 82, 7, 9], "D": [1, 2, 3, 4, 5]});
        let o = json!({"chain_pair": {"chain_i": "C", "chain_j": "D"}, "topk": 5, "C": [73, 52, 1, 2, 3], "D": [1, 2, 3, 4, 5]});
        let r = grade_instance(&inst(TaskType::HotspotTopK, t), &o);
        assert!((r.field_scores["chain_C"] - 0.4).abs() < 1e-12);
        assert!((r.score - 0.7).abs() < 1e-12);
    }

    #[test]
    fn report_means() {
        let mk = |ord: u64, score: f64| GradeResult {
            task_type: TaskType::ResidueRetrieval,
            structure_id: "S".into(),
            ordinal: ord,
            parse_ok: true,
            score,
            field_scores: BTreeMap::new(),
            failure: None,
        };
        let rep = aggregate_report(&[mk(0, 1.0), mk(1, 0.0)], 1).unwrap();
        assert_eq!(rep.per_task[&TaskType::ResidueRetrieval].accuracy, 0.5);
        assert!(matches!(aggregate_report(&[], 1), Err(GradeError::EmptyResults)));
    }

    #[test]
    fn stage1_overall_is_field_mean() {
        let fields = [0.9, 0.9, 0.8, 0.7, 0.6, 0.8];
        let results: Vec<GradeResult> = vec![GradeResult {
            task_type: TaskType::SchemaB1,
            structure_id: "S".into(),
            ordinal: 0,
            parse_ok: true,
            score: 0.0,
            field_scores: STAGE1_FIELDS.iter().zip(fields).map(|(k, v)| (k.to_string(), v)).collect(),
            failure: None,
        }];
        let rep = aggregate_report(&results, 1).unwrap();
        assert!((rep.stage1_fields["overall"] - 0.783333).abs() < 1e-5);
    }
}
