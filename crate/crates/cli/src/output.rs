use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::{json, Map, Value};

use crate::args::Format;

#[derive(Debug, Clone)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Cell {
    /// 17 significant digits for floats.
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) if v.is_nan() => "nan".into(),
            Cell::Float(v) if v.is_infinite() => if *v > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            // serde_json writes non-finite floats as null
            Cell::Float(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

pub struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Metadata written ahead of every table.
pub struct Meta {
    pub command: &'static str,
    pub config: Value,
    pub seed: u64,
    pub extra: Vec<(&'static str, Value)>,
}

impl Meta {
    fn pairs(&self) -> Vec<(&'static str, Value)> {
        let mut v = vec![
            ("tool", json!(format!("pinlab {}", env!("CARGO_PKG_VERSION")))),
            ("command", json!(self.command)),
            ("config", self.config.clone()),
            ("seed", json!(self.seed)),
            ("rng", json!(pinlab_core::sampler::RNG_ID)),
        ];
        v.extend(self.extra.iter().cloned());
        v
    }
}

pub fn render(table: &Table, meta: &Meta, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Csv => {
            let mut buf = Vec::new();
            for (k, v) in meta.pairs() {
                writeln!(buf, "# {k}: {v}")?;
            }
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(&table.columns)?;
            for row in &table.rows {
                w.write_record(row.iter().map(Cell::csv))?;
            }
            Ok(w.into_inner().context("flushing CSV")?)
        }
        Format::Json => {
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|r| {
                    let obj: Map<String, Value> = table.columns.iter().map(|c| c.to_string()).zip(r.iter().map(Cell::json)).collect();
                    Value::Object(obj)
                })
                .collect();
            let meta: Map<String, Value> = meta.pairs().into_iter().map(|(k, v)| (k.to_string(), v)).collect();
            let mut out = serde_json::to_vec_pretty(&json!({ "meta": meta, "columns": table.columns, "rows": rows }))?;
            out.push(b'\n');
            Ok(out)
        }
    }
}

pub fn emit(bytes: &[u8], out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => File::create(path)
            .and_then(|mut f| f.write_all(bytes))
            .with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            Ok(stdout.flush()?)
        }
    }
}
