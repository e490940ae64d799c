//! Experiment reports and CSV output.
//!
//! Every CSV starts with `#` comment lines: the schema version, the
//! experiment, the canonical command that regenerates the file, and one
//! `key=value` line per configuration entry. Floats are written with 17
//! significant digits. Nothing time-dependent is written, so reruns with the
//! same command are byte-identical.

use crate::mm::write_atomic;
use anyhow::{Context, Result};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const SCHEMA: &str = "v1";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(if v { "true" } else { "false" }.into())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_float(*v),
            Cell::Text(s) => quote(s),
        }
    }

    /// Short human-readable form for terminal tables.
    pub fn display(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v:.3e}"),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File stem of the CSV.
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Table {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Aligned plain-text rendering.
    pub fn pretty(&self) -> String {
        let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(Cell::display).collect()).collect();
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|j| cells.iter().map(|r| r[j].len()).chain([self.columns[j].len()]).max().unwrap_or(0))
            .collect();
        let mut s = String::new();
        let line = |s: &mut String, items: &[String]| {
            let parts: Vec<String> = items.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
            writeln!(s, "{}", parts.join("  ").trim_end()).unwrap();
        };
        line(&mut s, &self.columns);
        for r in &cells {
            line(&mut s, r);
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub experiment: String,
    pub matrix: Option<String>,
    /// Canonical command line that reproduces the run.
    pub command: String,
    pub config: Vec<(String, String)>,
    pub tables: Vec<Table>,
    /// Extra lines for the terminal summary.
    pub notes: Vec<String>,
    pub wall_seconds: f64,
}

impl ExperimentReport {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn render_csv(&self, table: &Table) -> String {
        let mut s = String::new();
        writeln!(s, "# schema={SCHEMA}").unwrap();
        writeln!(s, "# experiment={}", self.experiment).unwrap();
        writeln!(s, "# command={}", self.command).unwrap();
        for (k, v) in &self.config {
            writeln!(s, "# {k}={v}").unwrap();
        }
        writeln!(s, "{}", table.columns.iter().map(|c| quote(c)).collect::<Vec<_>>().join(",")).unwrap();
        for row in &table.rows {
            writeln!(s, "{}", row.iter().map(Cell::render).collect::<Vec<_>>().join(",")).unwrap();
        }
        s
    }

    /// Writes one CSV per table into `dir`, each atomically.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut out = Vec::new();
        for t in &self.tables {
            let p = dir.join(format!("{}.csv", t.name));
            write_atomic(&p, self.render_csv(t).as_bytes()).with_context(|| format!("writing {}", p.display()))?;
            out.push(p);
        }
        Ok(out)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        writeln!(s, "== {} ==", self.experiment).unwrap();
        if let Some(m) = &self.matrix {
            writeln!(s, "matrix: {m}").unwrap();
        }
        for t in &self.tables {
            if t.rows.len() <= 40 {
                writeln!(s, "\n[{}]", t.name).unwrap();
                s.push_str(&t.pretty());
            } else {
                writeln!(s, "\n[{}] {} rows", t.name, t.rows.len()).unwrap();
            }
        }
        for n in &self.notes {
            writeln!(s, "{n}").unwrap();
        }
        writeln!(s, "elapsed: {:.2} s", self.wall_seconds).unwrap();
        s
    }
}

/// Safe file-stem fragment from a matrix name.
pub fn slug(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(-2.0), "-2.0000000000000000e0");
        assert_eq!(format_float(f64::INFINITY), "inf");
        let back: f64 = format_float(1.0 / 3.0).parse().unwrap();
        assert_eq!(back, 1.0 / 3.0);
    }

    #[test]
    fn text_is_quoted_when_needed() {
        assert_eq!(Cell::from("a,b").render(), "\"a,b\"");
        assert_eq!(Cell::from("say \"hi\"").render(), "\"say \"\"hi\"\"\"");
        assert_eq!(Cell::from("plain").render(), "plain");
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new("t", &["k", "err"]);
        t.push(vec![3usize.into(), 0.5.into()]);
        let r = ExperimentReport {
            experiment: "demo".into(),
            matrix: None,
            command: "mpbal demo --seed 1".into(),
            config: vec![("seed".into(), "1".into())],
            tables: vec![t.clone()],
            notes: vec![],
            wall_seconds: 1.5,
        };
        let csv = r.render_csv(&t);
        assert_eq!(
            csv,
            "# schema=v1\n# experiment=demo\n# command=mpbal demo --seed 1\n# seed=1\nk,err\n3,5.0000000000000000e-1\n"
        );
        assert!(!csv.contains("1.5"));
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new("x", &["a"]);
        t.push(vec![1usize.into()]);
        let r = ExperimentReport {
            experiment: "e".into(),
            matrix: None,
            command: "mpbal e".into(),
            config: vec![],
            tables: vec![t],
            notes: vec![],
            wall_seconds: 0.0,
        };
        let p = r.write(dir.path()).unwrap();
        let first = std::fs::read(&p[0]).unwrap();
        r.write(dir.path()).unwrap();
        assert_eq!(std::fs::read(&p[0]).unwrap(), first);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
