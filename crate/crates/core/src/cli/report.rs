use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use super::config::ReportFormat;
use super::CliError;

/// Tabular result of one command plus a one-line summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// One JSON object per row for the jsonl format.
    pub records: Vec<Value>,
    pub summary: String,
    /// Extra human-readable lines shown after the table in pretty format.
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(title: impl Into<String>, columns: &[&str]) -> Self {
        Report {
            title: title.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            records: Vec::new(),
            summary: String::new(),
            notes: Vec::new(),
        }
    }

    /// Adds a row in both tabular and structured form.
    pub fn push(&mut self, cells: Vec<String>, record: Value) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
        self.records.push(record);
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Csv => self.to_csv(),
            ReportFormat::Jsonl => self.to_jsonl(),
            ReportFormat::Pretty => self.to_pretty(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let line = |cells: &[String]| {
            cells
                .iter()
                .map(|c| csv_cell(c))
                .collect::<Vec<_>>()
                .join(",")
        };
        out.push_str(&line(&self.columns));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("json value"));
            out.push('\n');
        }
        out
    }

    pub fn to_pretty(&self) -> String {
        let mut widths: Vec<usize> = self.columns.iter().map(|c| c.len()).collect();
        for r in &self.rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut out = String::new();
        writeln!(out, "{}", self.title).unwrap();
        let fmt_row = |cells: &[String]| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_owned()
        };
        if !self.rows.is_empty() {
            writeln!(out, "{}", fmt_row(&self.columns)).unwrap();
            for r in &self.rows {
                writeln!(out, "{}", fmt_row(r)).unwrap();
            }
        }
        for n in &self.notes {
            writeln!(out, "{n}").unwrap();
        }
        if !self.summary.is_empty() {
            writeln!(out, "{}", self.summary).unwrap();
        }
        out
    }
}

fn csv_cell(c: &str) -> String {
    if c.contains([',', '"', '\n']) {
        format!("\"{}\"", c.replace('"', "\"\""))
    } else {
        c.to_owned()
    }
}

/// Writes the rendered report to `path`, or to standard output.
pub fn emit_report(
    report: &Report,
    format: ReportFormat,
    path: Option<&Path>,
) -> Result<(), CliError> {
    let text = report.render(format);
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io {
            path: p.to_owned(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
