use std::io::Write;

use serde::Serialize;
use serde_json::Value;

use crate::args::Format;

/// Arrays longer than this are summarized in table mode.
const TABLE_ARRAY_LIMIT: usize = 12;

/// `%g`-style rendering with six significant digits.
pub fn sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        let s = format!("{v:.5e}");
        let (mantissa, exponent) = s.split_once('e').expect("scientific format");
        format!("{}e{exponent}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => "-".into(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.to_string(),
            (_, Some(u)) => u.to_string(),
            _ => sig6(n.as_f64().unwrap_or(f64::NAN)),
        },
        Value::String(s) => s.clone(),
        Value::Array(items) if items.len() > TABLE_ARRAY_LIMIT => format!("<{} values>", items.len()),
        Value::Array(items) => format!("[{}]", items.iter().map(scalar).collect::<Vec<_>>().join(", ")),
        Value::Object(_) => unreachable!("objects are flattened"),
    }
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, child, rows);
            }
        }
        // Arrays of records (e.g. overlap strata) are one row each.
        Value::Array(items) if items.iter().any(Value::is_object) => {
            for (i, item) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), item, rows);
            }
        }
        other => rows.push((prefix.to_string(), scalar(other))),
    }
}

pub struct Emitter<W: Write> {
    format: Format,
    out: W,
    emitted: usize,
}

impl<W: Write> Emitter<W> {
    pub fn new(format: Format, out: W) -> Self {
        Emitter {
            format,
            out,
            emitted: 0,
        }
    }

    /// Writes `report` under the heading `kind`.
    pub fn emit<T: Serialize>(&mut self, kind: &str, report: &T) -> std::io::Result<()> {
        let value = serde_json::to_value(report).map_err(std::io::Error::other)?;
        match self.format {
            Format::Jsonl => {
                let mut object = serde_json::Map::new();
                object.insert("report".into(), Value::String(kind.into()));
                match value {
                    Value::Object(map) => object.extend(map),
                    other => {
                        object.insert("value".into(), other);
                    }
                }
                writeln!(self.out, "{}", Value::Object(object))?;
            }
            Format::Table => {
                if self.emitted > 0 {
                    writeln!(self.out)?;
                }
                let mut rows = Vec::new();
                flatten("", &value, &mut rows);
                let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
                writeln!(self.out, "{kind}")?;
                for (k, v) in rows {
                    writeln!(self.out, "  {k:<width$}  {v}")?;
                }
            }
        }
        self.emitted += 1;
        self.out.flush()
    }
}
