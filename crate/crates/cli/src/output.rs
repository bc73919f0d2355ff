//! Artifact writing: CSV tables with comment headers, rounded JSON, atomic
//! file replacement.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use heatbound_core::format::sig;
use serde_json::Value;

use crate::CliError;

/// A cell is either an exact integer or a real printed with fixed precision.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self, precision: usize) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Real(v) => sig(*v, precision),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self, precision: usize) -> Value {
        match self {
            Cell::Int(v) => Value::from(*v),
            Cell::Real(v) => round_json(*v, precision),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Real)
    }
}

/// A real rounded to `precision` significant digits; non-finite values become
/// strings since JSON has no literal for them.
pub fn round_json(v: f64, precision: usize) -> Value {
    let text = sig(v, precision);
    match text.parse::<f64>() {
        Ok(x) if x.is_finite() => Value::from(x),
        _ => Value::from(text),
    }
}

/// Column-oriented table with `# key=value` metadata lines.
#[derive(Debug, Clone)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            meta: Vec::new(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl Into<String>) -> &mut Self {
        self.meta.push((key.into(), value.into()));
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Metadata lines, then a header row and the data rows. Every line ends in LF.
    pub fn to_csv(&self, precision: usize) -> Result<Vec<u8>, CliError> {
        let mut buf = Vec::new();
        for (k, v) in &self.meta {
            writeln!(buf, "# {k}={v}").expect("write to memory");
        }
        {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(&mut buf);
            w.write_record(&self.header)?;
            for row in &self.rows {
                w.write_record(row.iter().map(|c| c.render(precision)))?;
            }
            w.flush().map_err(csv::Error::from)?;
        }
        Ok(buf)
    }

    /// `{"meta": {...}, "rows": [{column: value}]}`; `config` metadata is embedded
    /// as a JSON object.
    pub fn to_json(&self, precision: usize) -> Vec<u8> {
        let mut meta = serde_json::Map::new();
        for (k, v) in &self.meta {
            let value = serde_json::from_str::<Value>(v).unwrap_or_else(|_| Value::from(v.as_str()));
            meta.insert(k.clone(), value);
        }
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj = self
                    .header
                    .iter()
                    .zip(row)
                    .map(|(h, c)| (h.clone(), c.json(precision)))
                    .collect::<serde_json::Map<_, _>>();
                Value::Object(obj)
            })
            .collect();
        let doc = serde_json::json!({ "meta": meta, "rows": rows });
        let mut text = serde_json::to_vec_pretty(&doc).expect("table serializes");
        text.push(b'\n');
        text
    }

    /// Whitespace-separated columns for plotting tools, header as a comment.
    pub fn to_dat(&self, precision: usize) -> Vec<u8> {
        let mut buf = Vec::new();
        for (k, v) in &self.meta {
            writeln!(buf, "# {k}={v}").expect("write to memory");
        }
        writeln!(buf, "# {}", self.header.join(" ")).expect("write to memory");
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Empty => "nan".to_string(),
                    other => other.render(precision),
                })
                .collect();
            writeln!(buf, "{}", cells.join(" ")).expect("write to memory");
        }
        buf
    }
}

/// Writes `contents` to `dir/name` through a temporary file in the same
/// directory followed by a rename.
pub fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let target = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| CliError::io(&target, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(&target, e))?;
    tmp.persist(&target).map_err(|e| CliError::io(&target, e.error))?;
    Ok(target)
}
