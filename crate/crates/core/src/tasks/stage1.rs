//! Stage I: chain-level schema completion and captioning.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;
use serde_json::{json, Value};

use super::{prompt, TaskError, TaskInstance, TaskType};
use crate::labels::summary::{ChainSummary, SegmentBins, SsBins};
use crate::labels::LabelSet;
use crate::structure::Complex;

/// Chain-level facts a Stage I output can carry. Fields a format does not
/// mention stay `None` and are not graded.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SchemaFacts {
    pub num_chains: Option<usize>,
    pub chains: BTreeMap<String, ChainFacts>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChainFacts {
    pub length_bin: Option<String>,
    pub major_ss: Option<String>,
    /// H, E, C
    pub ss_fraction: Option<[String; 3]>,
    /// H, E, C
    pub longest_run: Option<[String; 3]>,
    /// H, E
    pub segments: Option<[String; 2]>,
}

impl ChainFacts {
    fn from_summary(s: &ChainSummary) -> Self {
        let tri = |b: &SsBins| [b.h.clone(), b.e.clone(), b.c.clone()];
        ChainFacts {
            length_bin: Some(s.length_bin.clone()),
            major_ss: Some(s.major_secondary_structure.clone()),
            ss_fraction: Some(tri(&s.secondary_structure_fraction_bins)),
            longest_run: Some(tri(&s.secondary_structure_longest_run_bins)),
            segments: Some([
                s.secondary_structure_segment_count_bins.h.clone(),
                s.secondary_structure_segment_count_bins.e.clone(),
            ]),
        }
    }
}

pub fn gen_stage1(
    complex: &Complex,
    labels: &LabelSet,
    task: TaskType,
    seed: u64,
    ordinal: u64,
) -> Result<TaskInstance, TaskError> {
    let summaries: Vec<&ChainSummary> = labels.chains.iter().map(|c| &c.summary).collect();
    let (question, target) = match task {
        TaskType::SchemaB1 => (
            "Return the schema for this structure in JSON format.",
            schema_b1(&summaries),
        ),
        TaskType::SchemaB2 => (
            "Return the compact chain profile for this structure in JSON format.",
            schema_b2(&summaries),
        ),
        TaskType::CaptionB1 => (
            "Return the alignment caption for this structure.",
            json!({ "caption": render_caption(TaskType::CaptionB1, &summaries) }),
        ),
        TaskType::CaptionB2 => (
            "Return the compact alignment caption for this structure.",
            json!({ "caption": render_caption(TaskType::CaptionB2, &summaries) }),
        ),
        other => {
            return Err(super::not_applicable(other, &complex.id, "not a Stage I task"));
        }
    };
    Ok(TaskInstance {
        task_type: task,
        structure_id: complex.id.clone(),
        seed,
        prompt: prompt(task, ordinal, question, None),
        target,
    })
}

fn schema_b1(summaries: &[&ChainSummary]) -> Value {
    json!({
        "task_type": TaskType::SchemaB1.id(),
        "global": { "num_chains": summaries.len() },
        "chains": summaries,
    })
}

fn schema_b2(summaries: &[&ChainSummary]) -> Value {
    let mut profile = serde_json::Map::new();
    for s in summaries {
        profile.insert(
            s.chain_id.clone(),
            json!({
                "length_bin": s.length_bin,
                "major_ss": s.major_secondary_structure,
                "ss_fraction": s.secondary_structure_fraction_bins,
                "longest_run": s.secondary_structure_longest_run_bins,
                "segments": s.secondary_structure_segment_count_bins,
            }),
        );
    }
    json!({
        "task_type": TaskType::SchemaB2.id(),
        "num_chains": summaries.len(),
        "chain_profile": profile,
    })
}

fn dominance(major: &str) -> &'static str {
    match major {
        "H" => "helix",
        "E" => "strand",
        _ => "coil",
    }
}

fn length_phrase(bin: &str) -> String {
    match bin.strip_prefix('>') {
        Some(n) => format!("more than {n} residues long"),
        None => format!("about {bin} residues long"),
    }
}

fn run_phrase(bin: &str) -> String {
    match bin {
        "0" => "zero residues".to_string(),
        b if b.starts_with('>') => format!("longer than {} residues", &b[1..]),
        b => format!("about {b} residues"),
    }
}

fn chain_body(s: &ChainSummary) -> String {
    let f = &s.secondary_structure_fraction_bins;
    let r = &s.secondary_structure_longest_run_bins;
    let g = &s.secondary_structure_segment_count_bins;
    format!(
        "Its secondary structure is {}-dominant, with roughly {}% helix, {}% strand, and {}% coil. \
The longest helix stretch is {}, while the longest strand stretch is {} and the longest coil stretch is {}. \
The helix segment count is {} and the strand segment count is {}.",
        dominance(&s.major_secondary_structure),
        f.h,
        f.e,
        f.c,
        run_phrase(&r.h),
        run_phrase(&r.e),
        run_phrase(&r.c),
        g.h,
        g.e,
    )
}

/// Fixed-template captions. `CaptionB1` writes one line per chain,
/// `CaptionB2` one compact line for the whole assembly.
pub fn render_caption(task: TaskType, summaries: &[&ChainSummary]) -> String {
    let ids: Vec<&str> = summaries.iter().map(|s| s.chain_id.as_str()).collect();
    match task {
        TaskType::CaptionB2 => {
            let noun = if ids.len() == 1 { "chain" } else { "chains" };
            let mut out = format!("Assembly of {} {noun}: {}.", ids.len(), ids.join(", "));
            for s in summaries {
                out.push_str(&format!(
                    " Chain {}: {} residues, {}-dominant.",
                    s.chain_id,
                    s.length_bin,
                    dominance(&s.major_secondary_structure)
                ));
            }
            out
        }
        _ => {
            if let [s] = summaries {
                return format!(
                    "This structure has a single chain (Chain {}), {}.\n{}",
                    s.chain_id,
                    length_phrase(&s.length_bin),
                    chain_body(s)
                );
            }
            let mut lines = vec![format!(
                "This structure has {} chains (Chains {}).",
                ids.len(),
                ids.join(", ")
            )];
            for s in summaries {
                lines.push(format!(
                    "Chain {} is {}. {}",
                    s.chain_id,
                    length_phrase(&s.length_bin),
                    chain_body(s)
                ));
            }
            lines.join("\n")
        }
    }
}

/// Facts carried by a Stage I target or model output.
pub fn schema_facts(task: TaskType, payload: &Value) -> Option<SchemaFacts> {
    match task {
        TaskType::SchemaB1 => facts_b1(payload),
        TaskType::SchemaB2 => facts_b2(payload),
        TaskType::CaptionB1 | TaskType::CaptionB2 => {
            let text = payload.get("caption").and_then(Value::as_str)?;
            Some(parse_caption(text))
        }
        _ => None,
    }
}

fn facts_b1(v: &Value) -> Option<SchemaFacts> {
    let num_chains = v.pointer("/global/num_chains").and_then(Value::as_u64).map(|n| n as usize);
    let mut chains = BTreeMap::new();
    for c in v.get("chains")?.as_array()? {
        let Ok(s) = serde_json::from_value::<ChainSummary>(c.clone()) else {
            // keep whatever parses so partial answers earn partial credit
            if let Some(id) = c.get("chain_id").and_then(Value::as_str) {
                chains.insert(id.to_string(), loose_chain(c, B1_KEYS));
            }
            continue;
        };
        chains.insert(s.chain_id.clone(), ChainFacts::from_summary(&s));
    }
    Some(SchemaFacts { num_chains, chains })
}

fn facts_b2(v: &Value) -> Option<SchemaFacts> {
    let num_chains = v.get("num_chains").and_then(Value::as_u64).map(|n| n as usize);
    let mut chains = BTreeMap::new();
    for (id, c) in v.get("chain_profile")?.as_object()? {
        chains.insert(id.clone(), loose_chain(c, B2_KEYS));
    }
    Some(SchemaFacts { num_chains, chains })
}

const B1_KEYS: [&str; 5] = [
    "length_bin",
    "major_secondary_structure",
    "secondary_structure_fraction_bins",
    "secondary_structure_longest_run_bins",
    "secondary_structure_segment_count_bins",
];
const B2_KEYS: [&str; 5] = ["length_bin", "major_ss", "ss_fraction", "longest_run", "segments"];

fn loose_chain(c: &Value, keys: [&str; 5]) -> ChainFacts {
    let s = |k: &str| c.get(k).and_then(Value::as_str).map(str::to_string);
    let tri = |k: &str| {
        serde_json::from_value::<SsBins>(c.get(k)?.clone())
            .ok()
            .map(|b| [b.h, b.e, b.c])
    };
    let seg = serde_json::from_value::<SegmentBins>(c.get(keys[4]).cloned().unwrap_or(Value::Null))
        .ok()
        .map(|b| [b.h, b.e]);
    ChainFacts {
        length_bin: s(keys[0]),
        major_ss: s(keys[1]),
        ss_fraction: tri(keys[2]),
        longest_run: tri(keys[3]),
        segments: seg,
    }
}

static SINGLE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"This structure has a single chain \(Chain (\S+?)\), (.+?) residues long\.").unwrap());
static MULTI: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"This structure has (\d+) chains \(Chains ([^)]*)\)\.").unwrap());
static CHAIN_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?m)^Chain (\S+) is (.+?) residues long\.(.*)$").unwrap());
static BODY: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(concat!(
        r"Its secondary structure is (\w+)-dominant, with roughly (\S+)% helix, (\S+)% strand, and (\S+)% coil\.",
        r"(?: The longest helix stretch is (.+?), while the longest strand stretch is (.+?) and the longest coil stretch is (.+?)\.)?",
        r"(?: The helix segment count is (\S+) and the strand segment count is (\S+)\.)?"
    ))
    .unwrap()
});
static COMPACT_HEAD: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"Assembly of (\d+) chains?:").unwrap());
static COMPACT_CHAIN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"Chain (\S+?): (\S+) residues, (\w+)-dominant\.").unwrap());

fn unlength(p: &str) -> String {
    match p.strip_prefix("more than ") {
        Some(n) => format!(">{n}"),
        None => p.trim_start_matches("about ").to_string(),
    }
}

fn unrun(p: &str) -> String {
    if p == "zero residues" {
        return "0".into();
    }
    let core = p.trim_end_matches(" residues");
    match core.strip_prefix("longer than ") {
        Some(n) => format!(">{n}"),
        None => core.trim_start_matches("about ").to_string(),
    }
}

fn undominance(w: &str) -> String {
    match w {
        "helix" => "H",
        "strand" => "E",
        "coil" => "C",
        other => other,
    }
    .to_string()
}

fn apply_body(f: &mut ChainFacts, text: &str) {
    let Some(b) = BODY.captures(text) else {
        return;
    };
    let g = |i: usize| b.get(i).map(|m| m.as_str().to_string());
    f.major_ss = g(1).map(|w| undominance(&w));
    f.ss_fraction = Some([g(2).unwrap(), g(3).unwrap(), g(4).unwrap()]);
    if let (Some(h), Some(e), Some(c)) = (g(5), g(6), g(7)) {
        f.longest_run = Some([unrun(&h), unrun(&e), unrun(&c)]);
    }
    if let (Some(h), Some(e)) = (g(8), g(9)) {
        f.segments = Some([h, e]);
    }
}

/// Inverse of [`render_caption`] for either caption template.
pub fn parse_caption(text: &str) -> SchemaFacts {
    let mut facts = SchemaFacts::default();
    if let Some(h) = COMPACT_HEAD.captures(text) {
        facts.num_chains = h[1].parse().ok();
        for c in COMPACT_CHAIN.captures_iter(text) {
            facts.chains.insert(
                c[1].to_string(),
                ChainFacts {
                    length_bin: Some(c[2].to_string()),
                    major_ss: Some(undominance(&c[3])),
                    ..Default::default()
                },
            );
        }
        return facts;
    }
    if let Some(s) = SINGLE.captures(text) {
        facts.num_chains = Some(1);
        let mut f = ChainFacts {
            length_bin: Some(unlength(&s[2])),
            ..Default::default()
        };
        apply_body(&mut f, text);
        facts.chains.insert(s[1].to_string(), f);
        return facts;
    }
    if let Some(m) = MULTI.captures(text) {
        facts.num_chains = m[1].parse().ok();
    }
    for c in CHAIN_LINE.captures_iter(text) {
        let mut f = ChainFacts {
            length_bin: Some(unlength(&c[2])),
            ..Default::default()
        };
        apply_body(&mut f, &c[3]);
        facts.chains.insert(c[1].to_string(), f);
    }
    facts
}

/// Facts for the reference summaries, restricted to what `task` reports.
pub fn expected_facts(task: TaskType, summaries: &[&ChainSummary]) -> SchemaFacts {
    let chains = summaries
        .iter()
        .map(|s| {
            let mut f = ChainFacts::from_summary(s);
            if task == TaskType::CaptionB2 {
                f.ss_fraction = None;
                f.longest_run = None;
                f.segments = None;
            }
            (s.chain_id.clone(), f)
        })
        .collect();
    SchemaFacts {
        num_chains: Some(summaries.len()),
        chains,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::{chain_summary, Ss3};

    fn summary(id: &str, ss: &str) -> ChainSummary {
        let v: Vec<Ss3> = ss
            .chars()
            .map(|c| match c {
                'H' => Ss3::H,
                'E' => Ss3::E,
                'C' => Ss3::C,
                _ => Ss3::NA,
            })
            .collect();
        chain_summary(id, &v)
    }

    fn long_chain() -> ChainSummary {
        let mut s = String::new();
        for _ in 0..20 {
            s.push_str(&"H".repeat(12));
            s.push_str("CCCC");
            s.push_str(&"E".repeat(6));
        }
        summary("A", &s)
    }

    #[test]
    fn single_chain_caption_wording() {
        let a = long_chain();
        let text = render_caption(TaskType::CaptionB1, &[&a]);
        assert!(text.starts_with("This structure has a single chain (Chain A), about 300-500 residues long."), "{text}");
        let b = summary("A", &"C".repeat(600));
        let text = render_caption(TaskType::CaptionB1, &[&b]);
        assert!(text.starts_with("This structure has a single chain (Chain A), about 500-800 residues long."));
    }

    #[test]
    fn captions_parse_back() {
        let a = long_chain();
        let b = summary("B", "CCCCHHHHHHHHEEEEE");
        for task in [TaskType::CaptionB1, TaskType::CaptionB2] {
            for set in [vec![&a], vec![&a, &b]] {
                let text = render_caption(task, &set);
                assert_eq!(parse_caption(&text), expected_facts(task, &set), "{text}");
            }
        }
    }

    #[test]
    fn schemas_parse_back() {
        let a = long_chain();
        let b = summary("B", "CCCCHHHHHHHHEEEEE");
        let set = vec![&a, &b];
        assert_eq!(facts_b1(&schema_b1(&set)).unwrap(), expected_facts(TaskType::SchemaB1, &set));
        assert_eq!(facts_b2(&schema_b2(&set)).unwrap(), expected_facts(TaskType::SchemaB2, &set));
    }

    #[test]
    fn b1_key_order_follows_reference_layout() {
        let a = summary("A", "HHHHCCCCEEEE");
        let text = serde_json::to_string(&schema_b1(&[&a])).unwrap();
        assert!(text.starts_with(
            r#"{"task_type":"ALIGNMENT_SCHEMA_B1_V2","global":{"num_chains":1},"chains":[{"chain_id":"A","length_bin":"0-50","secondary_structure_fraction_bins":{"H":"30-40","E":"30-40","C":"30-40"},"major_secondary_structure":"H","secondary_structure_longest_run_bins""#
        ), "{text}");
    }
}
