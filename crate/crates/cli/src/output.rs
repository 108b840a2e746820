//! CSV series and the JSON run report.

use std::path::{Path, PathBuf};

use heatlab_core::asymptotics::ErrorSeries;
use heatlab_core::regression::LineFit;
use serde::Serialize;

use crate::config::Settings;
use crate::error::{CliError, CliResult};

pub const REPORT_SCHEMA: &str = "heatlab-report/1";
pub const ERROR_HEADER: [&str; 5] = ["t", "raw_error", "renormalized_error", "norm", "attractor"];
pub const ENTROPY_HEADER: [&str; 5] = ["t", "E", "I", "F", "D"];

/// 17 significant digits, enough to round-trip every finite `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn parse_cell(s: &str) -> CliResult<f64> {
    s.parse()
        .map_err(|_| CliError::config(format!("'{s}' is not a float cell")))
}

fn parse_opt(s: &str) -> CliResult<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_cell(s).map(Some)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let io = |e: csv::Error| match e.into_kind() {
            csv::ErrorKind::Io(e) => CliError::io(path, e),
            other => CliError::config(format!("{}: {other:?}", path.display())),
        };
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let bad = |e: csv::Error| CliError::config(format!("{}: {e}", path.display()));
        let mut r = csv::Reader::from_path(path).map_err(bad)?;
        let header = r.headers().map_err(bad)?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|r| r.iter().map(String::from).collect()))
            .collect::<Result<_, _>>()
            .map_err(bad)?;
        Ok(Table { header, rows })
    }

    fn expect_header(&self, want: &[&str]) -> CliResult<()> {
        if self.header != want {
            return Err(CliError::config(format!(
                "unexpected CSV header {:?}",
                self.header
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub t: f64,
    pub raw_error: f64,
    pub renormalized_error: f64,
    pub norm: String,
    pub attractor: String,
}

pub fn error_rows(series: &ErrorSeries) -> Vec<ErrorRow> {
    (0..series.len())
        .map(|i| ErrorRow {
            t: series.times[i],
            raw_error: series.raw[i],
            renormalized_error: series.renormalized[i],
            norm: series.norm_kind.label(),
            attractor: series.attractor.label(),
        })
        .collect()
}

pub fn error_table(rows: &[ErrorRow]) -> Table {
    let mut t = Table::new(&ERROR_HEADER);
    for r in rows {
        t.push(vec![
            fmt_f64(r.t),
            fmt_f64(r.raw_error),
            fmt_f64(r.renormalized_error),
            r.norm.clone(),
            r.attractor.clone(),
        ]);
    }
    t
}

pub fn parse_error_table(t: &Table) -> CliResult<Vec<ErrorRow>> {
    t.expect_header(&ERROR_HEADER)?;
    t.rows
        .iter()
        .map(|r| {
            Ok(ErrorRow {
                t: parse_cell(&r[0])?,
                raw_error: parse_cell(&r[1])?,
                renormalized_error: parse_cell(&r[2])?,
                norm: r[3].clone(),
                attractor: r[4].clone(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyRow {
    pub t: f64,
    pub entropy: Option<f64>,
    pub fisher: Option<f64>,
    pub energy: Option<f64>,
    pub dissipation: Option<f64>,
}

pub fn entropy_table(rows: &[EntropyRow]) -> Table {
    let mut t = Table::new(&ENTROPY_HEADER);
    for r in rows {
        t.push(vec![
            fmt_f64(r.t),
            fmt_opt(r.entropy),
            fmt_opt(r.fisher),
            fmt_opt(r.energy),
            fmt_opt(r.dissipation),
        ]);
    }
    t
}

pub fn parse_entropy_table(t: &Table) -> CliResult<Vec<EntropyRow>> {
    t.expect_header(&ENTROPY_HEADER)?;
    t.rows
        .iter()
        .map(|r| {
            Ok(EntropyRow {
                t: parse_cell(&r[0])?,
                entropy: parse_opt(&r[1])?,
                fisher: parse_opt(&r[2])?,
                energy: parse_opt(&r[3])?,
                dissipation: parse_opt(&r[4])?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesEntry {
    pub name: String,
    pub path: PathBuf,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitEntry {
    pub name: String,
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

impl FitEntry {
    pub fn new(name: impl Into<String>, f: &LineFit) -> Self {
        FitEntry {
            name: name.into(),
            slope: f.slope,
            slope_stderr: f.slope_stderr,
            intercept: f.intercept,
            r_squared: f.r_squared,
            n_points: f.n_points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|value - target| <= tolerance`
    Within,
    /// `value <= tolerance`
    AtMost,
    /// `value >= tolerance`
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    pub fn within(name: impl Into<String>, value: f64, target: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            relation: Relation::Within,
            target: Some(target),
            tolerance,
            passed: (value - target).abs() <= tolerance,
        }
    }

    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            relation: Relation::AtMost,
            target: None,
            tolerance,
            passed: value <= tolerance,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            relation: Relation::AtLeast,
            target: None,
            tolerance,
            passed: value >= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stage {
    pub name: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub experiment: String,
    pub config: Settings,
    pub threads: usize,
    pub series: Vec<SeriesEntry>,
    pub fits: Vec<FitEntry>,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub stages: Vec<Stage>,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| CliError::io(path, e))
    }
}
