//! Row serialization. Rows are ordered maps so CSV columns and JSON keys
//! follow insertion order.

use std::io::Write;

use serde_json::{Map, Value};

use crate::config::Format;
use crate::error::CliError;

pub type Row = Map<String, Value>;

pub const SCHEMA_LINE: &str = "# schema=1";

/// Non-finite floats become `null` in JSON and an empty CSV field.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn write_rows<W: Write>(mut w: W, rows: &[Row], format: Format) -> Result<(), CliError> {
    match format {
        Format::Json => {
            let arr = Value::Array(rows.iter().cloned().map(Value::Object).collect());
            serde_json::to_writer_pretty(&mut w, &arr).map_err(|e| CliError::Io { path: "output".into(), source: e.into() })?;
            writeln!(w).map_err(CliError::io("output"))?;
        }
        Format::Csv => {
            writeln!(w, "{SCHEMA_LINE}").map_err(CliError::io("output"))?;
            let mut out = csv::Writer::from_writer(w);
            // Union of keys in first-seen order; optional columns may be absent
            // from some rows.
            let mut header: Vec<&str> = Vec::new();
            for row in rows {
                for k in row.keys() {
                    if !header.contains(&k.as_str()) {
                        header.push(k);
                    }
                }
            }
            out.write_record(&header)?;
            for row in rows {
                out.write_record(header.iter().map(|k| row.get(*k).map(cell).unwrap_or_default()))?;
            }
            out.flush().map_err(CliError::io("output"))?;
        }
    }
    Ok(())
}
