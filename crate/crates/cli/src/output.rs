//! Table and JSON writers. Floats are written in shortest round-trip form so
//! identical runs produce identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    F(f64),
    U(u64),
    B(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => format!("{x:e}"),
            Cell::U(n) => n.to_string(),
            Cell::B(b) => b.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::U(n)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::B(b)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

pub struct Sink {
    pub dir: PathBuf,
    pub format: Format,
}

impl Sink {
    pub fn new(dir: &Path, format: Format) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            format,
        })
    }

    /// Write `table` to `<stem>.csv` or `<stem>.json`.
    pub fn table(&self, stem: &str, table: &Table) -> Result<PathBuf, CliError> {
        let path = self.dir.join(format!("{stem}.{}", self.format.ext()));
        match self.format {
            Format::Csv => {
                let mut w = csv::Writer::from_path(&path)?;
                w.write_record(&table.columns)?;
                for row in &table.rows {
                    w.write_record(row.iter().map(Cell::render))?;
                }
                w.flush()?;
            }
            Format::Json => {
                let objs: Vec<serde_json::Map<String, serde_json::Value>> = table
                    .rows
                    .iter()
                    .map(|row| {
                        table
                            .columns
                            .iter()
                            .cloned()
                            .zip(row.iter().map(|c| serde_json::to_value(c).expect("cell")))
                            .collect()
                    })
                    .collect();
                fs::write(&path, serde_json::to_string_pretty(&objs)? + "\n")?;
            }
        }
        Ok(path)
    }

    /// Serialized records, for types whose fields are all scalar.
    pub fn records<T: Serialize>(&self, stem: &str, rows: &[T]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(format!("{stem}.{}", self.format.ext()));
        match self.format {
            Format::Csv => {
                let mut w = csv::Writer::from_path(&path)?;
                for r in rows {
                    w.serialize(r)?;
                }
                w.flush()?;
            }
            Format::Json => fs::write(&path, serde_json::to_string_pretty(rows)? + "\n")?,
        }
        Ok(path)
    }

    /// Reports are always JSON.
    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let path = self.dir.join(format!("{name}.json"));
        fs::write(&path, serde_json::to_string_pretty(value)? + "\n")?;
        Ok(path)
    }
}
