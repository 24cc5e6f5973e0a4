//! Report assembly and emission.
//!
//! Every command produces one [`Report`]: a schema-versioned envelope with
//! the echoed inputs, the results, and a list of named checks. Reports are
//! deliberately timestamp-free so a repeated run with the same arguments is
//! byte-identical.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;

/// Human-readable scientific notation at six significant digits.
pub fn sci(x: f64) -> String {
    format!("{x:.5e}")
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Check {
        Check {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub inputs: Value,
    pub results: Value,
    pub checks: Vec<Check>,
    /// Rows for the CSV rendering: (header, rows).
    #[serde(skip)]
    pub table: Table,
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Table {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

impl Report {
    pub fn new(command: &str, inputs: Value) -> Report {
        Report {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            inputs,
            results: json!({}),
            checks: Vec::new(),
            table: Table::default(),
        }
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    /// RFC 4180 CSV: quoted fields where needed, CRLF-free row endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let escape = |field: &str| -> String {
            if field.contains(',') || field.contains('"') || field.contains('\n') {
                format!("\"{}\"", field.replace('"', "\"\""))
            } else {
                field.to_string()
            }
        };
        out.push_str(
            &self
                .header_or_checks()
                .0
                .iter()
                .map(|f| escape(f))
                .collect::<Vec<_>>()
                .join(","),
        );
        out.push('\n');
        for row in self.header_or_checks().1 {
            out.push_str(&row.iter().map(|f| escape(f)).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }

    /// Commands without a data table fall back to the checks as CSV rows.
    fn header_or_checks(&self) -> (Vec<String>, Vec<Vec<String>>) {
        if !self.table.header.is_empty() {
            (self.table.header.clone(), self.table.rows.clone())
        } else {
            (
                vec!["check".into(), "passed".into(), "detail".into()],
                self.checks
                    .iter()
                    .map(|c| vec![c.name.clone(), c.passed.to_string(), c.detail.clone()])
                    .collect(),
            )
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# {} (schema v{})\n",
            self.command, self.schema_version
        ));
        out.push_str("inputs:\n");
        append_value(&mut out, &self.inputs, 1);
        out.push_str("results:\n");
        append_value(&mut out, &self.results, 1);
        if !self.checks.is_empty() {
            out.push_str("checks:\n");
            for check in &self.checks {
                let verdict = if check.passed { "PASS" } else { "FAIL" };
                out.push_str(&format!("  [{verdict}] {}: {}\n", check.name, check.detail));
            }
        }
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => self.to_text(),
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }

    pub fn emit(&self, format: Format, out: Option<&Path>) -> std::io::Result<()> {
        let body = self.render(format);
        match out {
            Some(path) => std::fs::write(path, body),
            None => std::io::stdout().write_all(body.as_bytes()),
        }
    }
}

fn append_value(out: &mut String, value: &Value, indent: usize) {
    let pad = "  ".repeat(indent);
    match value {
        Value::Object(map) => {
            for (key, val) in map {
                match val {
                    Value::Object(_) | Value::Array(_) => {
                        out.push_str(&format!("{pad}{key}:\n"));
                        append_value(out, val, indent + 1);
                    }
                    _ => out.push_str(&format!("{pad}{key}: {}\n", scalar(val))),
                }
            }
        }
        Value::Array(items) => {
            for item in items {
                match item {
                    Value::Object(_) | Value::Array(_) => {
                        out.push_str(&format!("{pad}-\n"));
                        append_value(out, item, indent + 1);
                    }
                    _ => out.push_str(&format!("{pad}- {}\n", scalar(item))),
                }
            }
        }
        other => out.push_str(&format!("{pad}{}\n", scalar(other))),
    }
}

fn scalar(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum, serde::Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Text,
    Json,
    Csv,
}
