//! ARFF reader/writer with MULAN label extraction.
//!
//! Supported: `numeric`/`real`/`integer` and `{...}` nominal attributes,
//! dense and sparse (`{index value, ...}`) data rows, `%` comment lines,
//! single- or double-quoted names and values. Missing values (`?`),
//! `string`/`date`/`relational` attributes and instance weights are rejected.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{ColumnKind, FeatureColumn, MultilabelDataset};
use crate::error::{Error, Result};

#[derive(Debug)]
struct Attribute {
    name: String,
    kind: ColumnKind,
    line: usize,
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Arff { line, message: message.into() }
}

/// Read one (possibly quoted) token; returns it and the unconsumed rest.
fn next_token(s: &str, line: usize) -> Result<(String, &str)> {
    let s = s.trim_start();
    let mut chars = s.char_indices();
    match chars.next() {
        None => Err(err(line, "unexpected end of line")),
        Some((_, q @ ('\'' | '"'))) => {
            let mut out = String::new();
            let mut escaped = false;
            for (i, c) in chars {
                if escaped {
                    out.push(c);
                    escaped = false;
                } else if c == '\\' {
                    escaped = true;
                } else if c == q {
                    return Ok((out, &s[i + c.len_utf8()..]));
                } else {
                    out.push(c);
                }
            }
            Err(err(line, "unterminated quoted string"))
        }
        Some(_) => {
            let end = s
                .find(|c: char| c.is_whitespace() || c == '{')
                .unwrap_or(s.len());
            Ok((s[..end].to_string(), &s[end..]))
        }
    }
}

/// A value from a data row or nominal list, with whether it was quoted.
struct Value {
    text: String,
    quoted: bool,
}

/// Split on `sep` outside quotes; tokens are trimmed and unquoted.
fn split_values(s: &str, sep: char, line: usize) -> Result<Vec<Value>> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quote: Option<char> = None;
    let mut quoted = false;
    let mut escaped = false;
    for c in s.chars() {
        if let Some(q) = quote {
            if escaped {
                cur.push(c);
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == q {
                quote = None;
            } else {
                cur.push(c);
            }
            continue;
        }
        if c == sep {
            out.push(Value { text: cur.trim().to_string(), quoted });
            cur.clear();
            quoted = false;
        } else if (c == '\'' || c == '"') && cur.trim().is_empty() {
            cur.clear();
            quote = Some(c);
            quoted = true;
        } else {
            cur.push(c);
        }
    }
    if quote.is_some() {
        return Err(err(line, "unterminated quoted value"));
    }
    out.push(Value { text: cur.trim().to_string(), quoted });
    Ok(out)
}

fn parse_attribute(rest: &str, line: usize) -> Result<Attribute> {
    let (name, rest) = next_token(rest, line)?;
    if name.is_empty() {
        return Err(err(line, "attribute without a name"));
    }
    let ty = rest.trim();
    if let Some(body) = ty.strip_prefix('{') {
        let body = body
            .strip_suffix('}')
            .ok_or_else(|| err(line, format!("unterminated nominal domain for `{name}`")))?;
        let cats: Vec<String> = split_values(body, ',', line)?
            .into_iter()
            .map(|v| v.text)
            .collect();
        let column = FeatureColumn::nominal(name, cats).map_err(|e| err(line, e.to_string()))?;
        return Ok(Attribute { name: column.name, kind: column.kind, line });
    }
    match ty.to_ascii_lowercase().as_str() {
        "numeric" | "real" | "integer" => Ok(Attribute { name, kind: ColumnKind::Numeric, line }),
        other => Err(err(line, format!("unsupported attribute type `{other}` for `{name}`"))),
    }
}

/// Parse a data cell for `attr` into its stored value.
fn parse_cell(attr: &Attribute, v: &Value, line: usize) -> Result<f64> {
    if !v.quoted && v.text == "?" {
        return Err(err(line, format!("missing value for `{}` is not supported", attr.name)));
    }
    match &attr.kind {
        ColumnKind::Numeric => {
            let x: f64 = v
                .text
                .parse()
                .map_err(|_| err(line, format!("`{}` is not a number (attribute `{}`)", v.text, attr.name)))?;
            if !x.is_finite() {
                return Err(err(line, format!("non-finite value for `{}`", attr.name)));
            }
            Ok(x)
        }
        ColumnKind::Nominal(cats) => cats
            .iter()
            .position(|c| *c == v.text)
            .map(|i| i as f64)
            .ok_or_else(|| {
                err(line, format!("`{}` is not a category of `{}`", v.text, attr.name))
            }),
    }
}

/// Stored value for an attribute omitted from a sparse row.
fn sparse_default(attr: &Attribute) -> f64 {
    match &attr.kind {
        ColumnKind::Numeric => 0.0,
        ColumnKind::Nominal(cats) => cats.iter().position(|c| c == "0").unwrap_or(0) as f64,
    }
}

/// Parse ARFF text, moving the attributes named in `label_names` into the
/// label matrix (in `label_names` order).
pub fn parse_arff(arff_text: &str, label_names: &[String]) -> Result<MultilabelDataset> {
    let mut relation = String::new();
    let mut attrs: Vec<Attribute> = Vec::new();
    let mut in_data = false;
    let mut data_line = 0;
    let mut rows: Vec<Vec<f64>> = Vec::new();

    for (idx, raw) in arff_text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        if !in_data {
            let Some(decl) = trimmed.strip_prefix('@') else {
                return Err(err(line, "expected an `@` declaration in the header"));
            };
            let kw_end = decl.find(char::is_whitespace).unwrap_or(decl.len());
            let keyword = decl[..kw_end].to_ascii_lowercase();
            let rest = &decl[kw_end..];
            match keyword.as_str() {
                "relation" => relation = next_token(rest, line)?.0,
                "attribute" => {
                    let a = parse_attribute(rest, line)?;
                    if attrs.iter().any(|b| b.name == a.name) {
                        return Err(err(line, format!("duplicate attribute `{}`", a.name)));
                    }
                    attrs.push(a);
                }
                "data" => {
                    in_data = true;
                    data_line = line;
                }
                other => return Err(err(line, format!("unknown declaration `@{other}`"))),
            }
            continue;
        }

        let row = if let Some(body) = trimmed.strip_prefix('{') {
            let close = body
                .find('}')
                .ok_or_else(|| err(line, "unterminated sparse row"))?;
            if !body[close + 1..].trim().is_empty() {
                return Err(err(line, "instance weights are not supported"));
            }
            let mut row: Vec<f64> = attrs.iter().map(sparse_default).collect();
            let mut seen = vec![false; attrs.len()];
            let body = body[..close].trim();
            if !body.is_empty() {
                for entry in split_values(body, ',', line)? {
                    let text = entry.text.trim();
                    let split = text
                        .find(char::is_whitespace)
                        .ok_or_else(|| err(line, format!("sparse entry `{text}` lacks a value")))?;
                    let index: usize = text[..split]
                        .parse()
                        .map_err(|_| err(line, format!("bad sparse index in `{text}`")))?;
                    if index >= attrs.len() {
                        return Err(err(line, format!("sparse index {index} out of range")));
                    }
                    if std::mem::replace(&mut seen[index], true) {
                        return Err(err(line, format!("sparse index {index} repeated")));
                    }
                    let value = split_values(text[split..].trim(), ',', line)?
                        .pop()
                        .expect("split yields at least one value");
                    row[index] = parse_cell(&attrs[index], &value, line)?;
                }
            }
            row
        } else {
            let values = split_values(trimmed, ',', line)?;
            if values.len() != attrs.len() {
                return Err(err(
                    line,
                    format!("row has {} values, {} attributes declared", values.len(), attrs.len()),
                ));
            }
            attrs
                .iter()
                .zip(&values)
                .map(|(a, v)| parse_cell(a, v, line))
                .collect::<Result<Vec<_>>>()?
        };
        rows.push(row);
    }

    if !in_data {
        return Err(err(arff_text.lines().count().max(1), "missing `@data` section"));
    }

    // locate label attributes and their "present" category
    let by_name: HashMap<&str, usize> =
        attrs.iter().enumerate().map(|(i, a)| (a.name.as_str(), i)).collect();
    let mut label_slots = Vec::with_capacity(label_names.len());
    for name in label_names {
        let &i = by_name.get(name.as_str()).ok_or_else(|| {
            err(data_line, format!("label `{name}` is not a declared attribute"))
        })?;
        let present = match &attrs[i].kind {
            ColumnKind::Nominal(c) if c.len() == 2 && c.contains(&"0".into()) && c.contains(&"1".into()) => {
                c.iter().position(|x| x == "1").unwrap() as f64
            }
            _ => {
                return Err(err(
                    attrs[i].line,
                    format!("label attribute `{name}` must have domain {{0,1}}"),
                ))
            }
        };
        label_slots.push((i, present));
    }
    let is_label: Vec<bool> = {
        let mut v = vec![false; attrs.len()];
        for &(i, _) in &label_slots {
            v[i] = true;
        }
        v
    };

    let columns: Vec<FeatureColumn> = attrs
        .iter()
        .zip(&is_label)
        .filter(|(_, &l)| !l)
        .map(|(a, _)| FeatureColumn { name: a.name.clone(), kind: a.kind.clone() })
        .collect();
    let mut features = Vec::with_capacity(rows.len() * columns.len());
    let mut labelsets = Vec::with_capacity(rows.len() * label_slots.len());
    for row in &rows {
        features.extend(row.iter().zip(&is_label).filter(|(_, &l)| !l).map(|(v, _)| *v));
        labelsets.extend(label_slots.iter().map(|&(i, present)| row[i] == present));
    }
    MultilabelDataset::new(relation, columns, label_names.to_vec(), features, labelsets)
}

fn needs_quotes(s: &str) -> bool {
    s.is_empty()
        || s == "?"
        || s.chars().any(|c| {
            c.is_whitespace() || matches!(c, ',' | '{' | '}' | '%' | '\'' | '"' | '\\')
        })
}

fn quote(s: &str) -> String {
    if needs_quotes(s) {
        format!("'{}'", s.replace('\\', "\\\\").replace('\'', "\\'"))
    } else {
        s.to_string()
    }
}

/// Dense ARFF with features first, then one `{0,1}` attribute per label.
/// Numbers are written with 17 significant digits.
pub fn write_arff(ds: &MultilabelDataset) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "@relation {}\n", quote(ds.name()));
    for c in ds.columns() {
        match &c.kind {
            ColumnKind::Numeric => {
                let _ = writeln!(out, "@attribute {} numeric", quote(&c.name));
            }
            ColumnKind::Nominal(cats) => {
                let cats: Vec<String> = cats.iter().map(|s| quote(s)).collect();
                let _ = writeln!(out, "@attribute {} {{{}}}", quote(&c.name), cats.join(","));
            }
        }
    }
    for l in ds.labels() {
        let _ = writeln!(out, "@attribute {} {{0,1}}", quote(l));
    }
    out.push_str("\n@data\n");
    for i in 0..ds.len() {
        let mut first = true;
        for (v, c) in ds.row(i).iter().zip(ds.columns()) {
            if !first {
                out.push(',');
            }
            first = false;
            match &c.kind {
                ColumnKind::Numeric => {
                    let _ = write!(out, "{v:.16e}");
                }
                ColumnKind::Nominal(cats) => out.push_str(&quote(&cats[*v as usize])),
            }
        }
        for &on in ds.labelset(i) {
            if !first {
                out.push(',');
            }
            first = false;
            out.push(if on { '1' } else { '0' });
        }
        out.push('\n');
    }
    out
}
