//! Output rendering: aligned text tables, CSV and JSON.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Table,
    Json,
    Csv,
}

/// Overall verdict of a command.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum Verdict {
    #[default]
    Pass,
    Breach,
}

impl Verdict {
    pub fn and(self, ok: bool) -> Self {
        if ok {
            self
        } else {
            Verdict::Breach
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Breach => 2,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub title: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(title: impl Into<String>, headers: &[&str]) -> Self {
        Table { title: title.into(), headers: headers.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn write_text(&self, out: &mut dyn Write) -> io::Result<()> {
        let mut widths: Vec<usize> = self.headers.iter().map(|h| h.chars().count()).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        if !self.title.is_empty() {
            writeln!(out, "{}", self.title)?;
        }
        let line = |cells: &[String]| {
            cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect::<Vec<_>>().join("  ")
        };
        writeln!(out, "{}", line(&self.headers))?;
        writeln!(out, "{}", widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "))?;
        for row in &self.rows {
            writeln!(out, "{}", line(row))?;
        }
        Ok(())
    }

    pub fn write_csv(&self, out: &mut dyn Write) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.headers)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()
    }
}

/// Everything a subcommand produced.
#[derive(Clone, Debug, Default)]
pub struct Report {
    /// Summary lines printed before the tables in text mode.
    pub lines: Vec<String>,
    pub tables: Vec<Table>,
    pub json: Value,
    pub verdict: Verdict,
}

impl Report {
    pub fn write(&self, format: Format, out: &mut dyn Write) -> io::Result<()> {
        match format {
            Format::Json => {
                let mut v = self.json.clone();
                if let Value::Object(m) = &mut v {
                    m.insert("verdict".into(), serde_json::to_value(self.verdict).expect("verdict"));
                }
                serde_json::to_writer_pretty(&mut *out, &v)?;
                writeln!(out)
            }
            Format::Csv => {
                let many = self.tables.len() > 1;
                for (k, t) in self.tables.iter().enumerate() {
                    if k > 0 {
                        writeln!(out)?;
                    }
                    if many {
                        writeln!(out, "# {}", t.title)?;
                    }
                    t.write_csv(out)?;
                }
                Ok(())
            }
            Format::Table => {
                for l in &self.lines {
                    writeln!(out, "{l}")?;
                }
                for t in &self.tables {
                    writeln!(out)?;
                    t.write_text(out)?;
                }
                if self.verdict == Verdict::Breach {
                    writeln!(out, "\nBREACH")?;
                }
                Ok(())
            }
        }
    }
}

/// Six significant digits, `inf` for infinities, empty for `None`.
pub fn num(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let a = x.abs();
    if (1e-4..1e6).contains(&a) {
        let digits = (5 - a.log10().floor() as i32).max(0) as usize;
        let s = format!("{x:.digits$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.5e}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn flag(b: bool) -> String {
    if b { "yes" } else { "no" }.into()
}
