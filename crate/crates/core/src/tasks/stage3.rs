//! Stage III: hotspot-conditioned CDR redesign records.

use serde_json::{json, Value};

use super::{prompt, TaskError, TaskInstance, TaskType};
use crate::geom::dist;
use crate::labels::interface::{has_polar_contact, is_salt_bridge, residue_atom_contacts};
use crate::labels::LabelSet;
use crate::structure::aa::charge;
use crate::structure::{apply_cdr_mask, CdrAnnotation, CdrLoop, Complex, Residue, ResidueId};

// residues whose CA atoms are further apart than this cannot share a heavy-atom contact
const CA_PREFILTER: f64 = 30.0;

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn antigen_chains(complex: &Complex, cdrs: &CdrAnnotation) -> Vec<String> {
    let ab = cdrs.antibody_chains();
    complex
        .chain_ids()
        .into_iter()
        .filter(|c| !ab.iter().any(|a| a == c))
        .map(str::to_string)
        .collect()
}

/// CDR residues with at least one heavy-atom contact to an antigen chain.
pub fn key_residues(complex: &Complex, labels: &LabelSet, cdrs: &CdrAnnotation) -> Vec<ResidueId> {
    let antigens = antigen_chains(complex, cdrs);
    cdrs.residue_ids()
        .into_iter()
        .filter(|id| {
            antigens.iter().any(|ag| {
                labels
                    .interface_score((&id.chain, ag), id)
                    .atomic_contact_count
                    > 0
            })
        })
        .collect()
}

fn near(a: &Residue, b: &Residue) -> bool {
    match (a.atom_pos("CA"), b.atom_pos("CA")) {
        (Some(x), Some(y)) => dist(x, y) < CA_PREFILTER,
        _ => true,
    }
}

pub fn gen_stage3(
    complex: &Complex,
    labels: &LabelSet,
    cdrs: &CdrAnnotation,
    hotspots: &[ResidueId],
    seed: u64,
    ordinal: u64,
) -> Result<TaskInstance, TaskError> {
    if cdrs.is_empty() {
        return Err(TaskError::MissingAnnotation(complex.id.clone()));
    }
    let task = TaskType::CdrRedesign;
    let rules = &labels.rules;
    let ab_chains = cdrs.antibody_chains();
    let ag_chains = antigen_chains(complex, cdrs);
    let antibody: Vec<&Residue> = complex
        .residues()
        .filter(|r| ab_chains.contains(&r.chain_id))
        .collect();

    let mut design_points = Vec::new();
    let mut where_ = Vec::new();
    let mut shape = Vec::new();
    let mut chemistry = Vec::new();
    let mut binder = Vec::new();
    for h in hotspots {
        let res = complex
            .residue_by_id(h)
            .ok_or_else(|| TaskError::MissingAnnotation(format!("{}: hotspot {h}", complex.id)))?;
        let count: usize = ab_chains
            .iter()
            .map(|ab| labels.interface_score((ab, &h.chain), h).atomic_contact_count)
            .sum();
        let cl = labels
            .chain(&h.chain)
            .expect("label set covers every chain");
        design_points.push(json!({"ag_chain": h.chain, "ag_pos": h.pos}));
        where_.push(json!({
            "ag_chain": h.chain,
            "ag_pos": h.pos,
            "atomic_contact_count": count,
            "delta_sasa_A2": round2(cl.delta_sasa(h.pos)),
            "is_hotspot": count > 0,
        }));
        shape.push(json!({
            "ag_chain": h.chain,
            "ag_pos": h.pos,
            "rsa_label": cl.rsa_bin[h.pos - 1].long_label(),
        }));

        let close: Vec<&&Residue> = antibody.iter().filter(|r| near(r, res)).collect();
        let mut kinds = Vec::new();
        if close.iter().any(|r| residue_atom_contacts(r, res, rules.interface_cutoff) > 0) {
            kinds.push("Van der Waals");
        }
        if close.iter().any(|r| has_polar_contact(r, res, rules.polar_contact_cutoff)) {
            kinds.push("Hydrogen bond");
        }
        if close.iter().any(|r| is_salt_bridge(r, res, rules.salt_bridge_cutoff)) {
            kinds.push("Salt bridge");
        }
        chemistry.push(json!({
            "ag_chain": h.chain,
            "ag_pos": h.pos,
            "ag_res": res.aa.to_string(),
            "ag_charge": charge(res.aa),
            "interaction_types": kinds,
        }));

        let contacts: Vec<Value> = close
            .iter()
            .filter_map(|r| {
                let l = cdrs.loop_of(&r.chain_id, r.pos)?;
                (residue_atom_contacts(r, res, rules.interface_cutoff) > 0)
                    .then(|| json!({"ab_chain": r.chain_id, "ab_pos": r.pos, "cdr": l.as_str()}))
            })
            .collect();
        binder.push(json!({"ag_chain": h.chain, "ag_pos": h.pos, "binder_contacts": contacts}));
    }

    let keys = key_residues(complex, labels, cdrs);
    let mut present = Vec::new();
    let mut seqs = serde_json::Map::new();
    for (l, iv) in &cdrs.loops {
        present.push(l.as_str());
        let mut seq = String::new();
        let mut filled = Vec::new();
        for (k, p) in iv.positions().enumerate() {
            let aa = complex
                .residue(&iv.chain, p)
                .map(|r| r.aa)
                .expect("annotation validated against complex");
            if keys.iter().any(|id| id.chain == iv.chain && id.pos == p) {
                seq.push(aa);
                filled.push(json!({"pos": k + 1, "aa": aa.to_string()}));
            } else {
                seq.push('X');
            }
        }
        seqs.insert(
            l.as_str().to_string(),
            json!({
                "len": iv.len(),
                "seq": format!("<{0}>{seq}</{0}>", l.tag()),
                "filled_positions": filled,
            }),
        );
    }

    let target = json!({
        "task": task.id(),
        "thinking": {
            "design_points": design_points,
            "hotspots_where": where_,
            "shape_context": shape,
            "chemistry_logic": chemistry,
            "binder_solution": binder,
        },
        "answer": {
            "cdrs_present": present,
            "cdr_sequences": seqs,
        },
    });

    let points = if hotspots.is_empty() {
        "none".to_string()
    } else {
        hotspots
            .iter()
            .map(|h| format!("[{},{}]", h.chain, h.pos))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let question = format!(
        "You are redesigning masked CDR regions of an antibody to improve binding to the antigen.\n\
Design points (antigen hotspots): {points}.\n\
Output JSON with keys: task, thinking, answer."
    );
    let masked = apply_cdr_mask(complex, cdrs);
    let mut sequences = serde_json::Map::new();
    for c in &masked.chains {
        sequences.insert(c.chain_id.clone(), Value::from(c.sequence()));
    }
    let input = json!({
        "antibody_chains": ab_chains,
        "antigen_chains": ag_chains,
        "masked_sequences": sequences,
    });
    Ok(TaskInstance {
        task_type: task,
        structure_id: complex.id.clone(),
        seed,
        prompt: prompt(task, ordinal, &question, Some(input)),
        target,
    })
}

/// Loop lengths stated in a redesign target or output.
pub fn answer_lengths(v: &Value) -> Vec<(CdrLoop, usize)> {
    let Some(m) = v.pointer("/answer/cdr_sequences").and_then(Value::as_object) else {
        return Vec::new();
    };
    m.iter()
        .filter_map(|(k, e)| Some((k.parse().ok()?, e.get("len")?.as_u64()? as usize)))
        .collect()
}
