//! Minimal CIF tokenizer and `_atom_site` extraction.
//!
//! Handles `data_` blocks, `loop_` tables, single-item key/value pairs,
//! quoted values and semicolon-delimited text fields. Only the first data
//! block is read.

use std::collections::HashMap;

use super::{AtomSite, StructureError};

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Data(String),
    Loop,
    Tag(String),
    /// `None` for the CIF null markers `?` and `.`.
    Value(Option<String>),
}

fn tokenize(text: &str) -> Result<Vec<Token>, StructureError> {
    let mut tokens = Vec::new();
    let mut lines = text.lines().enumerate().peekable();
    while let Some((lineno, line)) = lines.next() {
        if let Some(rest) = line.strip_prefix(';') {
            let mut buf = rest.to_string();
            let mut closed = false;
            for (_, next) in lines.by_ref() {
                if next.starts_with(';') {
                    closed = true;
                    break;
                }
                buf.push('\n');
                buf.push_str(next);
            }
            if !closed {
                return Err(StructureError::Parse(format!(
                    "line {}: unterminated text field",
                    lineno + 1
                )));
            }
            tokens.push(Token::Value(Some(buf)));
            continue;
        }
        let bytes = line.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i];
            if c.is_ascii_whitespace() {
                i += 1;
                continue;
            }
            if c == b'#' {
                break;
            }
            if c == b'\'' || c == b'"' {
                // quote closes only when followed by whitespace or end of line
                let mut j = i + 1;
                loop {
                    if j >= bytes.len() {
                        return Err(StructureError::Parse(format!(
                            "line {}: unterminated quoted value",
                            lineno + 1
                        )));
                    }
                    if bytes[j] == c && (j + 1 == bytes.len() || bytes[j + 1].is_ascii_whitespace()) {
                        break;
                    }
                    j += 1;
                }
                tokens.push(Token::Value(Some(line[i + 1..j].to_string())));
                i = j + 1;
                continue;
            }
            let start = i;
            while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            let word = &line[start..i];
            let lower = word.to_ascii_lowercase();
            if lower.starts_with("data_") {
                tokens.push(Token::Data(word[5..].to_string()));
            } else if lower == "loop_" {
                tokens.push(Token::Loop);
            } else if word.starts_with('_') {
                tokens.push(Token::Tag(word.to_string()));
            } else if word == "?" || word == "." {
                tokens.push(Token::Value(None));
            } else {
                tokens.push(Token::Value(Some(word.to_string())));
            }
        }
    }
    Ok(tokens)
}

#[derive(Debug, Default)]
struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<Option<String>>>,
}

impl Table {
    fn col(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.eq_ignore_ascii_case(name))
    }
}

#[derive(Debug, Default)]
struct Block {
    name: Option<String>,
    tables: HashMap<String, Table>,
}

fn split_tag(tag: &str) -> (String, String) {
    let body = &tag[1..];
    match body.split_once('.') {
        Some((cat, item)) => (cat.to_ascii_lowercase(), item.to_string()),
        None => (body.to_ascii_lowercase(), String::new()),
    }
}

fn parse_block(tokens: Vec<Token>) -> Result<Block, StructureError> {
    let mut block = Block::default();
    let mut it = tokens.into_iter().peekable();
    let mut seen_data = false;
    while let Some(tok) = it.next() {
        match tok {
            Token::Data(name) => {
                if seen_data {
                    break;
                }
                seen_data = true;
                block.name = Some(name);
            }
            Token::Loop => {
                let mut tags = Vec::new();
                while let Some(Token::Tag(_)) = it.peek() {
                    if let Some(Token::Tag(t)) = it.next() {
                        tags.push(t);
                    }
                }
                if tags.is_empty() {
                    return Err(StructureError::Parse("loop_ without tags".into()));
                }
                let (cat, _) = split_tag(&tags[0]);
                let columns: Vec<String> = tags.iter().map(|t| split_tag(t).1).collect();
                let mut values = Vec::new();
                while let Some(Token::Value(_)) = it.peek() {
                    if let Some(Token::Value(v)) = it.next() {
                        values.push(v);
                    }
                }
                if values.len() % columns.len() != 0 {
                    return Err(StructureError::Parse(format!(
                        "loop for _{cat} has {} values for {} columns",
                        values.len(),
                        columns.len()
                    )));
                }
                let rows = values.chunks(columns.len()).map(|c| c.to_vec()).collect();
                block.tables.insert(cat, Table { columns, rows });
            }
            Token::Tag(tag) => {
                let value = match it.next() {
                    Some(Token::Value(v)) => v,
                    _ => return Err(StructureError::Parse(format!("tag {tag} has no value"))),
                };
                let (cat, item) = split_tag(&tag);
                let table = block.tables.entry(cat).or_default();
                if table.rows.is_empty() {
                    table.rows.push(Vec::new());
                }
                table.columns.push(item);
                table.rows[0].push(value);
            }
            Token::Value(_) => {
                return Err(StructureError::Parse("value outside of a loop or item".into()))
            }
        }
    }
    if !seen_data {
        return Err(StructureError::Parse("missing data_ block".into()));
    }
    Ok(block)
}

pub(super) fn read_sites(text: &str) -> Result<(Option<String>, Vec<AtomSite>), StructureError> {
    let block = parse_block(tokenize(text)?)?;
    let id = block
        .tables
        .get("entry")
        .and_then(|t| t.col("id").and_then(|c| t.rows.first().and_then(|r| r[c].clone())))
        .or(block.name.clone())
        .filter(|s| !s.is_empty());

    let polymer_entities: Option<HashMap<String, bool>> = block.tables.get("entity").and_then(|t| {
        let idc = t.col("id")?;
        let tc = t.col("type")?;
        Some(
            t.rows
                .iter()
                .filter_map(|r| {
                    let id = r[idc].clone()?;
                    let ty = r[tc].clone().unwrap_or_default();
                    Some((id, ty.eq_ignore_ascii_case("polymer")))
                })
                .collect(),
        )
    });

    let table = block
        .tables
        .get("atom_site")
        .ok_or_else(|| StructureError::Parse("no _atom_site category".into()))?;
    let need = |names: &[&str]| -> Option<usize> { names.iter().find_map(|n| table.col(n)) };
    let required = |names: &[&str]| -> Result<usize, StructureError> {
        need(names).ok_or_else(|| StructureError::Parse(format!("_atom_site missing {}", names[0])))
    };
    let c_x = required(&["Cartn_x"])?;
    let c_y = required(&["Cartn_y"])?;
    let c_z = required(&["Cartn_z"])?;
    let c_atom = required(&["auth_atom_id", "label_atom_id"])?;
    let c_res = required(&["auth_comp_id", "label_comp_id"])?;
    let c_chain = required(&["auth_asym_id", "label_asym_id"])?;
    let c_seq = required(&["auth_seq_id", "label_seq_id"])?;
    let c_group = need(&["group_PDB"]);
    let c_elem = need(&["type_symbol"]);
    let c_alt = need(&["label_alt_id"]);
    let c_icode = need(&["pdbx_PDB_ins_code"]);
    let c_occ = need(&["occupancy"]);
    let c_model = need(&["pdbx_PDB_model_num"]);
    let c_entity = need(&["label_entity_id"]);

    let mut sites = Vec::with_capacity(table.rows.len());
    for (i, row) in table.rows.iter().enumerate() {
        let get = |c: usize| row[c].as_deref();
        let num = |c: usize, what: &str| -> Result<f64, StructureError> {
            get(c)
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| StructureError::Parse(format!("_atom_site row {}: bad {what}", i + 1)))
        };
        let x = num(c_x, "Cartn_x")?;
        let y = num(c_y, "Cartn_y")?;
        let z = num(c_z, "Cartn_z")?;
        let seq = get(c_seq)
            .and_then(|v| v.parse::<i32>().ok())
            .ok_or_else(|| StructureError::Parse(format!("_atom_site row {}: bad seq id", i + 1)))?;
        let occupancy = match c_occ.and_then(get) {
            Some(v) => v
                .parse::<f64>()
                .map_err(|_| StructureError::Parse(format!("_atom_site row {}: bad occupancy", i + 1)))?,
            None => 1.0,
        };
        let polymer = match (&polymer_entities, c_entity.and_then(get)) {
            (Some(map), Some(e)) => map.get(e).copied(),
            _ => None,
        };
        sites.push(AtomSite {
            hetero: c_group.and_then(get).map(|g| g.eq_ignore_ascii_case("HETATM")).unwrap_or(false),
            atom_name: get(c_atom).unwrap_or_default().to_string(),
            element: c_elem.and_then(get).unwrap_or_default().to_ascii_uppercase(),
            alt_loc: c_alt.and_then(get).and_then(|s| s.chars().next()),
            res_name: get(c_res).unwrap_or_default().to_string(),
            chain: get(c_chain).unwrap_or("A").to_string(),
            seq,
            ins_code: c_icode.and_then(get).and_then(|s| s.chars().next()),
            pos: [x, y, z],
            occupancy,
            model: c_model.and_then(get).and_then(|v| v.parse().ok()).unwrap_or(1),
            polymer,
        });
    }
    Ok((id, sites))
}
