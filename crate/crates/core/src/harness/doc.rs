//! Structured-text documents: TOML with every float written to 17
//! significant digits, keys sorted, and selected sections moved to the end.

use std::fmt::Write as _;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use toml::{Table, Value};

use crate::error::{Error, Result};

/// Top-level section holding wall-clock data; always emitted last so that
/// documents can be compared byte-for-byte up to [`strip_timing`].
pub const TIMING_SECTION: &str = "timing";

const PER_LINE: usize = 4;

pub fn to_document<T: Serialize>(value: &T) -> Result<String> {
    let table = Table::try_from(value).map_err(|e| Error::Parse(e.to_string()))?;
    let mut out = String::new();
    let mut trailer = None;
    let mut body = table;
    if let Some(t) = body.remove(TIMING_SECTION) {
        trailer = Some(t);
    }
    emit_table(&mut out, &[], &body);
    if let Some(Value::Table(t)) = trailer {
        emit_table(&mut out, &[TIMING_SECTION.to_string()], &t);
    }
    Ok(out)
}

pub fn from_document<T: DeserializeOwned>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn write_document<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, to_document(value)?)?;
    Ok(())
}

pub fn read_document<T: DeserializeOwned>(path: &Path) -> Result<T> {
    from_document(&std::fs::read_to_string(path)?)
}

/// The document without its timing section.
pub fn strip_timing(text: &str) -> &str {
    let marker = format!("\n[{TIMING_SECTION}]\n");
    match text.find(&marker) {
        Some(i) => &text[..i + 1],
        None => text,
    }
}

pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:.16e}")
    }
}

fn is_table_array(v: &Value) -> bool {
    matches!(v, Value::Array(a) if !a.is_empty() && a.iter().all(|e| matches!(e, Value::Table(_))))
}

fn emit_table(out: &mut String, path: &[String], table: &Table) {
    let mut keys: Vec<&String> = table.keys().collect();
    keys.sort();
    let header = |out: &mut String, brackets: (&str, &str), full: &[String]| {
        if !out.is_empty() {
            out.push('\n');
        }
        let name: Vec<String> = full.iter().map(|k| key(k)).collect();
        let _ = writeln!(out, "{}{}{}", brackets.0, name.join("."), brackets.1);
    };
    if !path.is_empty() {
        header(out, ("[", "]"), path);
    }
    for k in &keys {
        let v = &table[k.as_str()];
        if !matches!(v, Value::Table(_)) && !is_table_array(v) {
            let _ = writeln!(out, "{} = {}", key(k), inline(v, true));
        }
    }
    for k in &keys {
        let mut full = path.to_vec();
        full.push(k.to_string());
        match &table[k.as_str()] {
            Value::Table(t) => emit_table(out, &full, t),
            v @ Value::Array(items) if is_table_array(v) => {
                for item in items {
                    if let Value::Table(t) = item {
                        header(out, ("[[", "]]"), &full);
                        emit_table_body(out, t);
                    }
                }
            }
            _ => {}
        }
    }
}

/// Table contents for an array-of-tables element (header already written).
fn emit_table_body(out: &mut String, table: &Table) {
    let mut keys: Vec<&String> = table.keys().collect();
    keys.sort();
    for k in &keys {
        let v = &table[k.as_str()];
        if !matches!(v, Value::Table(_)) && !is_table_array(v) {
            let _ = writeln!(out, "{} = {}", key(k), inline(v, true));
        }
    }
    for k in &keys {
        let v = &table[k.as_str()];
        if matches!(v, Value::Table(_)) || is_table_array(v) {
            // nested structure inside an array element stays inline
            let _ = writeln!(out, "{} = {}", key(k), inline(v, false));
        }
    }
}

fn inline(v: &Value, top: bool) -> String {
    match v {
        Value::String(s) => quote(s),
        Value::Integer(i) => i.to_string(),
        Value::Float(x) => format_float(*x),
        Value::Boolean(b) => b.to_string(),
        Value::Datetime(d) => d.to_string(),
        Value::Array(items) => {
            let parts: Vec<String> = items.iter().map(|e| inline(e, false)).collect();
            let scalar = items.iter().all(|e| !matches!(e, Value::Array(_) | Value::Table(_)));
            if top && scalar && parts.len() > PER_LINE {
                let mut s = String::from("[\n");
                for chunk in parts.chunks(PER_LINE) {
                    let _ = writeln!(s, "    {},", chunk.join(", "));
                }
                s.push(']');
                s
            } else {
                format!("[{}]", parts.join(", "))
            }
        }
        Value::Table(t) => {
            let mut keys: Vec<&String> = t.keys().collect();
            keys.sort();
            let parts: Vec<String> = keys
                .iter()
                .map(|k| format!("{} = {}", key(k), inline(&t[k.as_str()], false)))
                .collect();
            if parts.is_empty() {
                "{}".into()
            } else {
                format!("{{ {} }}", parts.join(", "))
            }
        }
    }
}

fn key(k: &str) -> String {
    if !k.is_empty() && k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
        k.to_string()
    } else {
        quote(k)
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if c.is_control() => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
