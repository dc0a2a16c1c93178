use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::ExperimentConfig;
use crate::CliError;

/// Writes artifacts into one directory; every file goes through a temporary
/// file in the same directory and a rename.
pub struct Sink {
    dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("{}: {e}", dir.display())))?;
        Ok(Sink { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        let io = |e: std::io::Error| CliError::io(format!("{}: {e}", path.display()));
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(io)?;
        tmp.write_all(contents.as_bytes()).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        tmp.persist(&path).map_err(|e| io(e.error))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(e.to_string()))?;
        self.write(name, &(text + "\n"))
    }

    /// CSV plus `<stem>.json` describing the run and each column.
    pub fn write_table(
        &mut self,
        stem: &str,
        command: &str,
        cfg: &ExperimentConfig,
        table: &Table,
        extra: Value,
    ) -> Result<PathBuf, CliError> {
        let path = self.write(&format!("{stem}.csv"), &table.to_csv())?;
        let columns: Map<String, Value> =
            table.columns.iter().map(|(name, what)| (name.clone(), Value::String(what.clone()))).collect();
        let mut side = sidecar(command, cfg);
        side["file"] = Value::String(format!("{stem}.csv"));
        side["columns"] = Value::Object(columns);
        if let (Value::Object(s), Value::Object(e)) = (&mut side, extra) {
            s.extend(e);
        }
        self.write_json(&format!("{stem}.json"), &side)?;
        Ok(path)
    }
}

/// Common header of every sidecar.
pub fn sidecar(command: &str, cfg: &ExperimentConfig) -> Value {
    json!({
        "tool": "vqlab",
        "version": vqlab_core::VERSION,
        "command": command,
        "config": cfg,
    })
}

pub enum Cell {
    Int(usize),
    Float(f64),
    Text(String),
    Empty,
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Floats are written with 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub struct Table {
    /// (name, meaning)
    pub columns: Vec<(String, String)>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[(&str, &str)]) -> Self {
        Table { columns: columns.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.iter().map(|c| c.0.as_str()).collect::<Vec<_>>().join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Int(v) => v.to_string(),
                    Cell::Float(v) => fmt_float(*v),
                    Cell::Text(s) => s.clone(),
                    Cell::Empty => String::new(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// File-name friendly form of a number.
pub fn tag(v: f64) -> String {
    format!("{v}")
}
