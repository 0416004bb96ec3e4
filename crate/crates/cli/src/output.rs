//! CSV tables and the run manifest.
//!
//! Every CSV starts with `# config_hash=<sha256>`, then a header row. Floats are
//! written as `{:.16e}` (17 significant digits), lines end in LF. Nothing
//! time-dependent goes into a CSV; timings live in `manifest.json` only.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x:.16e}"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

/// Builds a row from heterogeneous values.
#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$($crate::output::Cell::from($x)),*] };
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub file: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(file: &str, header: &[&'static str]) -> Self {
        Table { file: file.to_string(), header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width for {}", self.file);
        self.rows.push(row);
    }

    /// The full file contents, including the provenance line.
    pub fn render(&self, hash: &str) -> Vec<u8> {
        let mut buf = format!("# config_hash={hash}\n").into_bytes();
        {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut buf);
            w.write_record(&self.header).expect("in-memory write");
            for r in &self.rows {
                w.write_record(r.iter().map(Cell::render)).expect("in-memory write");
            }
            w.flush().expect("in-memory write");
        }
        buf
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputEntry {
    pub path: String,
    pub rows: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub tool_version: String,
    pub command: String,
    pub threads: usize,
    pub created_unix_seconds: u64,
    pub outputs: Vec<OutputEntry>,
    /// Wall-clock milliseconds per experiment stage.
    pub timings_ms: BTreeMap<String, f64>,
}

/// Writes the tables and `manifest.json` into `dir`, creating it if needed.
pub fn write_all(dir: &Path, hash: &str, tables: &[Table], mut manifest: RunManifest) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(tables.len() + 1);
    for t in tables {
        let p = dir.join(&t.file);
        fs::write(&p, t.render(hash))?;
        manifest.outputs.push(OutputEntry { path: t.file.clone(), rows: t.rows.len() });
        paths.push(p);
    }
    let p = dir.join("manifest.json");
    let mut json = serde_json::to_vec_pretty(&manifest).map_err(std::io::Error::other)?;
    json.push(b'\n');
    fs::write(&p, json)?;
    paths.push(p);
    Ok(paths)
}
