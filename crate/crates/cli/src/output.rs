use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use serde_json::Value;

use crate::args::Format;
use crate::error::CliError;

#[derive(Debug, Clone)]
pub enum Cell {
    Int(usize),
    Float(f64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(n) => n.to_string(),
            Cell::Float(x) => float(*x),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Float)
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

/// Seventeen significant digits, enough to read every `f64` back exactly.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    /// The `series, x, y` layout used by `--plot-data`.
    pub fn long() -> Self {
        Table::new(["series", "x", "y"])
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn point(&mut self, series: impl Into<String>, x: impl Into<Cell>, y: f64) {
        self.push(vec![Cell::Text(series.into()), x.into(), Cell::Float(y)]);
    }
}

/// What a subcommand produced, before it is rendered in the chosen format.
#[derive(Debug)]
pub struct Report {
    pub json: Option<Value>,
    pub lines: Option<Vec<Value>>,
    pub table: Option<Table>,
}

impl Report {
    pub fn json(value: Value) -> Self {
        Report { json: Some(value), lines: None, table: None }
    }

    pub fn with_table(mut self, table: Table) -> Self {
        self.table = Some(table);
        self
    }

    pub fn table(table: Table) -> Self {
        Report { json: None, lines: None, table: Some(table) }
    }

    pub fn lines(lines: Vec<Value>) -> Self {
        Report { json: None, lines: Some(lines), table: None }
    }

    pub fn render(&self, format: Format) -> Result<Vec<u8>, CliError> {
        let missing = || CliError::usage(format!("output format {} is not produced here", format.name()));
        match format {
            Format::Json => {
                let v = self.json.as_ref().ok_or_else(missing)?;
                let mut text = serde_json::to_string_pretty(v).map_err(|e| CliError::new("io", e.to_string()))?;
                text.push('\n');
                Ok(text.into_bytes())
            }
            Format::Jsonl => {
                let mut out = Vec::new();
                for v in self.lines.as_ref().ok_or_else(missing)? {
                    serde_json::to_writer(&mut out, v).map_err(|e| CliError::new("io", e.to_string()))?;
                    out.push(b'\n');
                }
                Ok(out)
            }
            Format::Csv => {
                let table = self.table.as_ref().ok_or_else(missing)?;
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&table.header).map_err(csv_error)?;
                for row in &table.rows {
                    w.write_record(row.iter().map(Cell::render)).map_err(csv_error)?;
                }
                w.into_inner().map_err(|e| CliError::new("io", e.to_string()))
            }
        }
    }
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::new("io", e.to_string())
}

pub fn write_bytes(bytes: &[u8], path: Option<&Path>) -> Result<(), CliError> {
    let result = match path {
        Some(p) => File::create(p).and_then(|mut f| f.write_all(bytes)),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes).and_then(|_| stdout.flush())
        }
    };
    result.map_err(|e| CliError::new("io", e.to_string()))
}
