//! Flat key/value records rendered as aligned text, CSV or JSON.

use std::io::Write;

use anyhow::Result;
use clap::ValueEnum;
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    /// Number with an optional column-specific precision.
    Num(f64, Option<usize>),
    Int(i64),
    Text(String),
}

impl Cell {
    pub fn num(x: f64) -> Self {
        Cell::Num(x, None)
    }

    fn render(&self, digits: usize, forced: bool) -> String {
        match self {
            Cell::Num(x, own) => {
                let d = if forced { digits } else { own.unwrap_or(digits) };
                if x.is_finite() {
                    format!("{x:.d$}")
                } else {
                    x.to_string()
                }
            }
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn echo(&self) -> String {
        match self {
            Cell::Num(x, _) => x.to_string(),
            _ => self.render(0, false),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Num(x, _) if x.is_finite() => json!(x),
            Cell::Num(x, _) => json!(x.to_string()),
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::num(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(b.to_string())
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

/// Command echo, parameters and result rows.
#[derive(Debug, Clone)]
pub struct Record {
    pub command: String,
    /// Precision used when `--digits` is absent.
    pub digits: usize,
    pub params: Vec<(String, Cell)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Record {
    pub fn new(command: &str) -> Self {
        Record { command: command.to_string(), digits: 6, params: Vec::new(), columns: Vec::new(), rows: Vec::new() }
    }

    pub fn digits(mut self, d: usize) -> Self {
        self.digits = d;
        self
    }

    pub fn param(mut self, key: &str, value: impl Into<Cell>) -> Self {
        self.params.push((key.to_string(), value.into()));
        self
    }

    pub fn columns(mut self, cols: &[&str]) -> Self {
        self.columns = cols.iter().map(|c| c.to_string()).collect();
        self
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        self.rows.push(cells);
    }

    /// Single-row record from key/value pairs.
    pub fn key_values(command: &str, pairs: Vec<(&str, Cell)>) -> Self {
        let mut r = Record::new(command);
        r.columns = pairs.iter().map(|(k, _)| k.to_string()).collect();
        r.rows.push(pairs.into_iter().map(|(_, v)| v).collect());
        r
    }

    /// `digits = None` keeps each column's own precision. JSON numbers are
    /// always written at full precision.
    pub fn write(&self, out: &mut dyn Write, format: Format, digits: Option<usize>) -> Result<()> {
        let (d, forced) = (digits.unwrap_or(self.digits), digits.is_some());
        match format {
            Format::Text => self.write_text(out, d, forced),
            Format::Csv => self.write_csv(out, d, forced),
            Format::Json => {
                let params: Map<String, Value> = self.params.iter().map(|(k, v)| (k.clone(), v.to_json())).collect();
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| Value::Object(self.columns.iter().cloned().zip(r.iter().map(Cell::to_json)).collect()))
                    .collect();
                let v = json!({ "command": self.command, "parameters": params, "rows": rows });
                writeln!(out, "{}", serde_json::to_string_pretty(&v)?)?;
                Ok(())
            }
        }
    }

    fn write_text(&self, out: &mut dyn Write, d: usize, forced: bool) -> Result<()> {
        let params: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={}", v.echo())).collect();
        if params.is_empty() {
            writeln!(out, "# {}", self.command)?;
        } else {
            writeln!(out, "# {} {}", self.command, params.join(" "))?;
        }
        let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(|c| c.render(d, forced)).collect()).collect();
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|i| cells.iter().map(|r| r[i].len()).chain([self.columns[i].len()]).max().unwrap_or(0))
            .collect();
        let line = |items: &[String]| {
            items.iter().zip(&widths).map(|(s, w)| format!("{s:>w$}")).collect::<Vec<_>>().join("  ")
        };
        writeln!(out, "{}", line(&self.columns))?;
        for r in &cells {
            writeln!(out, "{}", line(r))?;
        }
        Ok(())
    }

    fn write_csv(&self, out: &mut dyn Write, d: usize, forced: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|c| c.render(d, forced)))?;
        }
        w.flush()?;
        Ok(())
    }
}
