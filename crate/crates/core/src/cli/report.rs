//! Report rendering: an aligned table for people and `key = value` lines
//! for programs.
//!
//! Reals are written with Rust's shortest round-trip formatting, so every
//! numeric value parses back to the same `f64`. Non-finite reals are never
//! emitted as numbers; they appear as the text `non-finite`.

use std::fmt::Write as _;

use super::config::Format;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Bool(bool),
    Int(u64),
    Real(f64),
    Text(String),
}

impl Value {
    fn render(&self) -> String {
        match self {
            Value::Bool(b) => b.to_string(),
            Value::Int(i) => i.to_string(),
            Value::Real(x) if x.is_finite() => format!("{x:?}"),
            Value::Real(_) => "non-finite".into(),
            // Keep one entry per line.
            Value::Text(s) => s.replace(['\n', '\r'], " "),
        }
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<usize> for Value {
    fn from(i: usize) -> Self {
        Value::Int(i as u64)
    }
}

impl From<u64> for Value {
    fn from(i: u64) -> Self {
        Value::Int(i)
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Real(x)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_string())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Text(s)
    }
}

/// Named columns of equal length, e.g. grid nodes next to solution values.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub columns: Vec<(String, Vec<f64>)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    entries: Vec<(String, Value)>,
    series: Vec<Series>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl Into<Value>) {
        self.entries.push((key.into(), value.into()));
    }

    pub fn push_series(&mut self, name: impl Into<String>, columns: Vec<(&str, Vec<f64>)>) {
        self.series.push(Series {
            name: name.into(),
            columns: columns.into_iter().map(|(c, v)| (c.to_string(), v)).collect(),
        });
    }

    pub fn entries(&self) -> &[(String, Value)] {
        &self.entries
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Table => self.table(),
            Format::KeyValue => self.keyvalue(),
        }
    }

    pub fn keyvalue(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {}", v.render());
        }
        for s in &self.series {
            for (c, values) in &s.columns {
                for (i, x) in values.iter().enumerate() {
                    let _ = writeln!(out, "{}.{c}.{i} = {}", s.name, Value::Real(*x).render());
                }
            }
        }
        out
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let width = self.entries.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k:<width$}  {}", v.render());
        }
        for s in &self.series {
            let _ = writeln!(out, "\n{}", s.name);
            let rows = s.columns.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
            let _ = write!(out, "{:>6}", "i");
            for (c, _) in &s.columns {
                let _ = write!(out, "  {c:>24}");
            }
            out.push('\n');
            for i in 0..rows {
                let _ = write!(out, "{i:>6}");
                for (_, v) in &s.columns {
                    match v.get(i) {
                        Some(x) => {
                            let _ = write!(out, "  {x:>24.16e}");
                        }
                        None => {
                            let _ = write!(out, "  {:>24}", "");
                        }
                    }
                }
                out.push('\n');
            }
        }
        out
    }
}
