//! CSV and JSON writers with a fixed column order.

use std::io::Write;

use serde::Serialize;

use super::lemma::LemmaReport;
use super::run::TraceRow;
use super::simulate::Observation;
use super::{HarnessError, OutputFormat};

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Hyperparameter column names: a, b for two-parameter states, a1…aJ otherwise.
pub fn hyperparameter_columns(width: usize, dirichlet: bool) -> Vec<String> {
    if width == 2 && !dirichlet {
        vec!["a".into(), "b".into()]
    } else {
        (1..=width).map(|j| format!("a{j}")).collect()
    }
}

/// Trace as CSV: method, n, hyperparameters…, E, V, L, w1, epsilon, mass_increment.
pub fn write_trace_csv<W: Write>(rows: &[TraceRow], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    let width = rows
        .iter()
        .map(|r| r.hyperparameters.len())
        .max()
        .unwrap_or(2);
    let dirichlet = rows
        .iter()
        .any(|r| r.method == super::Method::DirichletPe || r.hyperparameters.len() != 2);
    let mut header = vec!["method".to_string(), "n".to_string()];
    header.extend(hyperparameter_columns(width, dirichlet));
    header.extend(["E", "V", "L", "w1", "epsilon", "mass_increment"].map(String::from));
    w.write_record(&header)?;
    for r in rows {
        let mut record = vec![r.method.name().to_string(), r.n.to_string()];
        record.extend(r.hyperparameters.iter().map(|a| a.to_string()));
        record.extend(std::iter::repeat_n(
            String::new(),
            width - r.hyperparameters.len(),
        ));
        record.extend([r.e, r.v, r.l].map(|x| x.to_string()));
        record.extend([r.w1, r.epsilon, r.mass_increment].map(cell));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_data_csv<W: Write>(data: &[Observation], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["i", "x", "z"])?;
    for (i, o) in data.iter().enumerate() {
        w.write_record([(i + 1).to_string(), o.x.to_string(), o.z.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_lemma_csv<W: Write>(report: &LemmaReport, out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["pair", "beta", "fisher", "pe", "violation", "exact_zero"])?;
    for r in &report.rows {
        w.write_record([
            r.pair.to_string(),
            r.beta.to_string(),
            r.fisher.to_string(),
            r.pe.to_string(),
            r.violation.to_string(),
            r.exact_zero.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Flattens a JSON object into `key,value` rows, joining nested keys with '.'.
pub fn write_json_as_csv<W: Write, T: Serialize>(value: &T, out: W) -> Result<(), HarnessError> {
    fn walk(prefix: &str, v: &serde_json::Value, rows: &mut Vec<(String, String)>) {
        match v {
            serde_json::Value::Object(map) => {
                for (k, v) in map {
                    let key = if prefix.is_empty() {
                        k.clone()
                    } else {
                        format!("{prefix}.{k}")
                    };
                    walk(&key, v, rows);
                }
            }
            serde_json::Value::Array(items) => {
                for (i, v) in items.iter().enumerate() {
                    walk(&format!("{prefix}.{i}"), v, rows);
                }
            }
            serde_json::Value::Null => rows.push((prefix.to_string(), String::new())),
            serde_json::Value::String(s) => rows.push((prefix.to_string(), s.clone())),
            other => rows.push((prefix.to_string(), other.to_string())),
        }
    }
    let mut rows = Vec::new();
    walk("", &serde_json::to_value(value)?, &mut rows);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["quantity", "value"])?;
    for (k, v) in rows {
        w.write_record([k, v])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write, T: Serialize>(value: &T, mut out: W) -> Result<(), HarnessError> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

/// Writes `value` in `format`, using `csv` for the CSV rendering.
pub fn write_as<W: Write, T: Serialize>(
    value: &T,
    format: OutputFormat,
    out: W,
    csv: impl FnOnce(W) -> Result<(), HarnessError>,
) -> Result<(), HarnessError> {
    match format {
        OutputFormat::Json => write_json(value, out),
        OutputFormat::Csv => csv(out),
    }
}
