//! Rendering of command results as JSON, CSV or an aligned text table.

use std::fmt;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;

/// Output format of the data stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

/// A failure that ends the command with a non-zero exit code.
#[derive(Debug)]
pub struct CliError {
    /// Process exit code: 1 for a failed verification, 2 for invalid input.
    pub code: u8,
    pub message: String,
}

impl CliError {
    /// Invalid input (exit code 2).
    pub fn invalid(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    /// Failed verification (exit code 1).
    pub fn failed(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<cogwyn_core::Error> for CliError {
    fn from(e: cogwyn_core::Error) -> Self {
        use cogwyn_core::Error as E;
        match e {
            E::Structural(_) | E::Numerical(_) => Self::failed(e.to_string()),
            _ => Self::invalid(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::invalid(format!("JSON: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::invalid(format!("CSV: {e}"))
    }
}

/// A tabular view of a result.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Rows {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Rows {
    /// Empty table with the given column names.
    pub fn new(headers: &[&str]) -> Self {
        Self { headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    /// Appends a row; every cell is rendered with `Display`.
    pub fn push(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }
}

/// The result of one command.
#[derive(Debug)]
pub struct Report {
    /// Structured data, printed for the JSON format.
    pub data: Value,
    /// Tabular view for CSV and table output; `None` flattens `data`.
    pub rows: Option<Rows>,
    /// Format used when the caller does not choose one.
    pub default_format: Format,
    /// False when a verification failed (exit code 1).
    pub ok: bool,
    /// Human-readable notes for the diagnostic stream.
    pub diagnostics: Vec<String>,
}

impl Report {
    /// A JSON-first report of a serializable value.
    pub fn json<T: Serialize>(value: &T) -> Result<Self, CliError> {
        Ok(Self { data: serde_json::to_value(value)?, rows: None, default_format: Format::Json, ok: true, diagnostics: Vec::new() })
    }

    /// Sets the verification outcome.
    pub fn with_ok(mut self, ok: bool) -> Self {
        self.ok = ok;
        self
    }

    /// Attaches a tabular view.
    pub fn with_rows(mut self, rows: Rows) -> Self {
        self.rows = Some(rows);
        self
    }

    /// Makes CSV the default format.
    pub fn csv_by_default(mut self) -> Self {
        self.default_format = Format::Csv;
        self
    }

    /// Adds a diagnostic line.
    pub fn note(mut self, line: impl Into<String>) -> Self {
        self.diagnostics.push(line.into());
        self
    }

    /// Renders the data stream in `format` (or the default format).
    pub fn render(&self, format: Option<Format>) -> Result<String, CliError> {
        match format.unwrap_or(self.default_format) {
            Format::Json => Ok(serde_json::to_string_pretty(&self.data)? + "\n"),
            Format::Csv => render_csv(&self.table()),
            Format::Table => Ok(render_table(&self.table())),
        }
    }

    fn table(&self) -> Rows {
        self.rows.clone().unwrap_or_else(|| flatten(&self.data))
    }
}

/// Text of one JSON value as a table cell.
pub fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// One row with the top-level fields of an object (or a single `value` column).
fn flatten(v: &Value) -> Rows {
    match v {
        Value::Object(map) => Rows { headers: map.keys().cloned().collect(), rows: vec![map.values().map(cell).collect()] },
        other => Rows { headers: vec!["value".into()], rows: vec![vec![cell(other)]] },
    }
}

fn render_csv(t: &Rows) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&t.headers)?;
    for r in &t.rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::invalid(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::invalid(e.to_string()))
}

fn render_table(t: &Rows) -> String {
    let ncol = t.headers.len();
    let mut width: Vec<usize> = t.headers.iter().map(|h| h.chars().count()).collect();
    for r in &t.rows {
        for (i, c) in r.iter().enumerate().take(ncol) {
            width[i] = width[i].max(c.chars().count());
        }
    }
    let line = |cells: &[String]| -> String {
        let padded: Vec<String> = cells.iter().enumerate().map(|(i, c)| format!("{c:<w$}", w = width[i])).collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(&t.headers);
    out.push_str(&line(&width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>()));
    for r in &t.rows {
        out.push_str(&line(r));
    }
    out
}
