//! In-memory results: named long-format tables plus run metadata.

use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    /// Missing value, e.g. an undefined ratio.
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
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
        Cell::Int(x as i64)
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

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Float)
    }
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Float(x) => Some(*x),
            Cell::Int(i) => Some(*i as f64),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.to_string(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn with_columns(name: &str, columns: Vec<String>) -> Self {
        Table { name: name.to_string(), columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch in table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric column by name; non-numeric cells become NaN.
    pub fn floats(&self, name: &str) -> Vec<f64> {
        match self.column(name) {
            Some(k) => self.rows.iter().map(|r| r[k].as_f64().unwrap_or(f64::NAN)).collect(),
            None => Vec::new(),
        }
    }
}

/// Complex numbers are stored as `re`/`im` column pairs.
pub fn complex_cells(z: Complex64) -> [Cell; 2] {
    [Cell::Float(z.re), Cell::Float(z.im)]
}

pub fn complex_columns(name: &str) -> [String; 2] {
    [format!("{name}_re"), format!("{name}_im")]
}

#[derive(Debug, Clone, PartialEq)]
pub struct Meta {
    pub config_hash: String,
    pub timestamp: String,
    pub version: String,
    pub task: String,
    pub model: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    pub warnings: Vec<String>,
    /// Every convergence check passed.
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultBundle {
    pub meta: Meta,
    pub tables: Vec<Table>,
    pub diagnostics: Diagnostics,
}

impl ResultBundle {
    pub fn new(meta: Meta) -> Self {
        ResultBundle { meta, tables: Vec::new(), diagnostics: Diagnostics { warnings: Vec::new(), converged: true } }
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        log::warn!("{msg}");
        self.diagnostics.warnings.push(msg);
    }

    /// Records a failed convergence check.
    pub fn unconverged(&mut self, msg: impl Into<String>) {
        self.diagnostics.converged = false;
        self.warn(msg);
    }
}
