//! Fixed-column PDB reader.

use super::{AtomSite, StructureError};

fn col(line: &str, start: usize, end: usize) -> &str {
    let end = end.min(line.len());
    if start >= end {
        return "";
    }
    line.get(start..end).unwrap_or("")
}

fn parse_f64(line: &str, start: usize, end: usize, what: &str, lineno: usize) -> Result<f64, StructureError> {
    col(line, start, end)
        .trim()
        .parse::<f64>()
        .map_err(|_| StructureError::Parse(format!("line {lineno}: bad {what}")))
}

pub(super) fn read_sites(text: &str) -> Result<(Option<String>, Vec<AtomSite>), StructureError> {
    let mut id = None;
    let mut model = 1;
    let mut sites = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let record = col(line, 0, 6);
        match record.trim_end() {
            "HEADER" => {
                let code = col(line, 62, 66).trim();
                if !code.is_empty() {
                    id = Some(code.to_string());
                }
            }
            "MODEL" => {
                model = col(line, 10, 14).trim().parse().unwrap_or(model);
            }
            "ATOM" | "HETATM" => {
                if line.len() < 54 {
                    return Err(StructureError::Parse(format!(
                        "line {lineno}: truncated coordinate record"
                    )));
                }
                let x = parse_f64(line, 30, 38, "x", lineno)?;
                let y = parse_f64(line, 38, 46, "y", lineno)?;
                let z = parse_f64(line, 46, 54, "z", lineno)?;
                let occ_field = col(line, 54, 60).trim();
                let occupancy = if occ_field.is_empty() {
                    1.0
                } else {
                    occ_field
                        .parse::<f64>()
                        .map_err(|_| StructureError::Parse(format!("line {lineno}: bad occupancy")))?
                };
                let seq = col(line, 22, 26)
                    .trim()
                    .parse::<i32>()
                    .map_err(|_| StructureError::Parse(format!("line {lineno}: bad residue number")))?;
                let alt = col(line, 16, 17).chars().next().filter(|c| !c.is_whitespace());
                let icode = col(line, 26, 27).chars().next().filter(|c| !c.is_whitespace());
                let chain = col(line, 21, 22).trim();
                sites.push(AtomSite {
                    hetero: record.starts_with("HETATM"),
                    atom_name: col(line, 12, 16).trim().to_string(),
                    element: col(line, 76, 78).trim().to_ascii_uppercase(),
                    alt_loc: alt,
                    res_name: col(line, 17, 20).trim().to_string(),
                    chain: if chain.is_empty() { "A".to_string() } else { chain.to_string() },
                    seq,
                    ins_code: icode,
                    pos: [x, y, z],
                    occupancy,
                    model,
                    polymer: None,
                });
            }
            _ => {}
        }
    }
    Ok((id, sites))
}
