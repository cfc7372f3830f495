//! Sectioned text reports.
//!
//! A report is a key-value header followed by named comma-separated tables:
//!
//! ```text
//! command: capacity
//! seed: 42
//!
//! [rows]
//! ratio,ell,c_bound
//! 0.275,550,24311
//! ```
//!
//! Header lines are `key: value`. A table starts with `[name]` on its own
//! line, then a header row, then data rows, and ends at a blank line or the
//! next `[name]`. Cells follow CSV quoting. The same report can be written as
//! JSON (the `obj` format); both forms parse back to an identical [`Report`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(name: impl Into<String>, columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            name: name.into(),
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<S: Into<String>>(&mut self, row: impl IntoIterator<Item = S>) {
        let row: Vec<String> = row.into_iter().map(Into::into).collect();
        debug_assert_eq!(row.len(), self.columns.len(), "row width in table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Report {
    pub header: Vec<(String, String)>,
    pub tables: Vec<Table>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Obj,
}

/// Shortest decimal that parses back to the same `f64`. Magnitudes below
/// 1e-5 or from 1e15 up use scientific notation; both zeros print as `0`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x == 0.0 {
        "0".into()
    } else if x.abs() < 1e-5 || x.abs() >= 1e15 {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_header(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.push_header(key, value);
        self
    }

    pub fn push_header(&mut self, key: impl Into<String>, value: impl ToString) {
        self.header.push((key.into(), value.to_string()));
    }

    pub fn push_table(&mut self, table: Table) {
        self.tables.push(table);
    }

    pub fn header_value(&self, key: &str) -> Option<&str> {
        self.header.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.header {
            out.push_str(k);
            out.push_str(": ");
            out.push_str(v);
            out.push('\n');
        }
        for t in &self.tables {
            if !out.is_empty() {
                out.push('\n');
            }
            out.push('[');
            out.push_str(&t.name);
            out.push_str("]\n");
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
            w.write_record(&t.columns).expect("in-memory write");
            for row in &t.rows {
                w.write_record(row).expect("in-memory write");
            }
            let bytes = w.into_inner().expect("in-memory flush");
            out.push_str(std::str::from_utf8(&bytes).expect("utf-8 cells"));
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_text(),
            OutputFormat::Obj => self.to_json(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn parse(text: &str, format: OutputFormat) -> Result<Self> {
        match format {
            OutputFormat::Csv => Self::from_text(text),
            OutputFormat::Obj => Self::from_json(text),
        }
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut report = Report::new();
        let lines: Vec<&str> = text.lines().collect();
        let mut i = 0;
        while i < lines.len() && !is_table_start(lines[i]) {
            let line = lines[i];
            i += 1;
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once(": ")
                .or_else(|| line.strip_suffix(':').map(|k| (k, "")))
                .ok_or_else(|| Error::Format(format!("line {i}: expected `key: value`, got {line:?}")))?;
            report.push_header(k, v);
        }
        while i < lines.len() {
            let line = lines[i];
            if line.is_empty() {
                i += 1;
                continue;
            }
            if !is_table_start(line) {
                return Err(Error::Format(format!("line {}: expected `[table]`, got {line:?}", i + 1)));
            }
            let name = &line[1..line.len() - 1];
            let start = i + 1;
            let mut end = start;
            while end < lines.len() && !lines[end].is_empty() && !is_table_start(lines[end]) {
                end += 1;
            }
            report.push_table(parse_table(name, &lines[start..end])?);
            i = end;
        }
        Ok(report)
    }
}

fn is_table_start(line: &str) -> bool {
    line.len() >= 2 && line.starts_with('[') && line.ends_with(']') && !line.contains(',')
}

fn parse_table(name: &str, lines: &[&str]) -> Result<Table> {
    let body = lines.join("\n");
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(body.as_bytes());
    let mut records = reader.records();
    let columns: Vec<String> = match records.next() {
        Some(r) => r.map_err(|e| Error::Format(e.to_string()))?.iter().map(String::from).collect(),
        None => return Err(Error::Format(format!("table [{name}] has no header row"))),
    };
    let mut table = Table::new(name, columns);
    for r in records {
        let r = r.map_err(|e| Error::Format(format!("table [{name}]: {e}")))?;
        table.rows.push(r.iter().map(String::from).collect());
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new().with_header("command", "subsample").with_header("seed", 7);
        let mut t = Table::new("draws", ["draw_id", "k", "indices"]);
        t.push(["0", "3", "1,5,9"]);
        t.push(["1", "0", ""]);
        r.push_table(t);
        let mut t = Table::new("curve", ["L", "premium"]);
        t.push(["0".to_string(), fmt_f64(0.1)]);
        r.push_table(t);
        r
    }

    #[test]
    fn text_round_trip() {
        let r = sample();
        let text = r.to_text();
        assert!(text.starts_with("command: subsample\nseed: 7\n\n[draws]\ndraw_id,k,indices\n0,3,\"1,5,9\"\n"));
        assert_eq!(Report::from_text(&text).unwrap(), r);
    }

    #[test]
    fn json_round_trip() {
        let r = sample();
        assert_eq!(Report::from_json(&r.to_json()).unwrap(), r);
    }

    #[test]
    fn rejects_garbage() {
        assert!(Report::from_text("no separator here\n").is_err());
        assert!(Report::from_text("a: 1\n\n[t]\n").is_err());
    }

    #[test]
    fn float_formatting_round_trips() {
        for x in [0.1, 1.0 / 3.0, 2.96e43, 1e-300, 24311.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(24311.0), "24311");
        assert_eq!(fmt_f64(2.96e43), "2.96e43");
        assert_eq!(fmt_f64(1.5e-7), "1.5e-7");
        assert_eq!(fmt_f64(-0.0), "0");
    }
}
