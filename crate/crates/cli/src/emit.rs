//! Writing bundles to disk as CSV, JSON or gnuplot data blocks.
//!
//! Table files never contain the timestamp, so two runs of the same config
//! produce identical table files; run metadata lives in `manifest.json`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{json, Value};

use crate::bundle::{Cell, ResultBundle, Table};
use crate::config::Format;

pub const SCHEMA_VERSION: u32 = 1;

/// `%.15g`: 15 significant digits, trailing zeros trimmed.
pub fn fmt_g15(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.14e}");
    let (mant, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-4..15).contains(&exp) {
        let decimals = (14 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        let m = trim_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn cell_text(c: &Cell) -> String {
    match c {
        Cell::Float(x) => fmt_g15(*x),
        Cell::Int(i) => i.to_string(),
        Cell::Text(s) => s.clone(),
        Cell::Empty => String::new(),
    }
}

fn cell_json(c: &Cell) -> Value {
    match c {
        Cell::Float(x) if x.is_finite() => json!(x),
        Cell::Float(_) | Cell::Empty => Value::Null,
        Cell::Int(i) => json!(i),
        Cell::Text(s) => json!(s),
    }
}

pub fn write_csv<W: Write>(table: &Table, w: W) -> Result<()> {
    let mut wr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    wr.write_record(&table.columns)?;
    for row in &table.rows {
        wr.write_record(row.iter().map(cell_text))?;
    }
    wr.flush()?;
    Ok(())
}

pub fn csv_string(table: &Table) -> String {
    let mut buf = Vec::new();
    write_csv(table, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("CSV is UTF-8")
}

/// Parses a CSV written by [`write_csv`]. Cells that parse as numbers come
/// back as floats, empty cells as `Empty`.
pub fn read_csv(name: &str, text: &str) -> Result<Table> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let columns: Vec<String> = rd.headers()?.iter().map(String::from).collect();
    let mut table = Table::with_columns(name, columns);
    for rec in rd.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                if s.is_empty() {
                    Cell::Empty
                } else if let Ok(x) = s.parse::<f64>() {
                    Cell::Float(x)
                } else {
                    Cell::Text(s.to_string())
                }
            })
            .collect();
        table.push(row);
    }
    Ok(table)
}

fn table_json(t: &Table) -> Value {
    json!({
        "name": t.name,
        "columns": t.columns,
        "rows": t.rows.iter().map(|r| r.iter().map(cell_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
    })
}

/// Gnuplot data block; a blank line separates runs of equal first-column
/// values so `splot` sees a matrix.
pub fn gnuplot_string(t: &Table) -> String {
    let mut s = format!("# {}\n", t.columns.join(" "));
    let mut last: Option<String> = None;
    for row in &t.rows {
        let key = row.first().map(cell_text);
        if last.is_some() && key != last {
            s.push('\n');
        }
        last = key;
        let fields: Vec<String> = row
            .iter()
            .map(|c| match c {
                Cell::Empty => "NaN".to_string(),
                Cell::Text(x) => format!("\"{x}\""),
                other => cell_text(other),
            })
            .collect();
        s.push_str(&fields.join(" "));
        s.push('\n');
    }
    s
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

pub fn manifest_json(bundle: &ResultBundle, status: &str, error: Option<&str>, files: &[String]) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "status": status,
        "error": error,
        "meta": {
            "config_hash": bundle.meta.config_hash,
            "timestamp": bundle.meta.timestamp,
            "version": bundle.meta.version,
            "task": bundle.meta.task,
            "model": bundle.meta.model,
        },
        "diagnostics": {
            "warnings": bundle.diagnostics.warnings,
            "converged": bundle.diagnostics.converged,
        },
        "files": files,
    })
}

/// Writes every table plus `manifest.json` into `dir`. Returns the table
/// file names.
pub fn emit(bundle: &ResultBundle, format: Format, dir: &Path, error: Option<&str>) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    let mut written = Vec::new();
    match format {
        Format::Csv => {
            for t in &bundle.tables {
                let p = dir.join(format!("{}.csv", t.name));
                write_file(&p, csv_string(t).as_bytes())?;
                written.push(p);
            }
        }
        Format::Gnuplot => {
            for t in &bundle.tables {
                let p = dir.join(format!("{}.dat", t.name));
                write_file(&p, gnuplot_string(t).as_bytes())?;
                written.push(p);
            }
        }
        Format::Json => {
            let doc = json!({
                "schema_version": SCHEMA_VERSION,
                "config_hash": bundle.meta.config_hash,
                "task": bundle.meta.task,
                "tables": bundle.tables.iter().map(table_json).collect::<Vec<_>>(),
            });
            let p = dir.join("results.json");
            write_file(&p, serde_json::to_string_pretty(&doc)?.as_bytes())?;
            written.push(p);
        }
    }
    let names: Vec<String> =
        written.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    let status = if error.is_some() { "failed" } else { "ok" };
    let manifest = manifest_json(bundle, status, error, &names);
    write_file(&dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    Ok(written)
}
