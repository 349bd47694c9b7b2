//! Experiment reports and their text/CSV/JSON renderings.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{GofError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    /// Canonical statistic token, e.g. `hl:5:tested`.
    pub statistic: String,
    pub label: String,
    #[serde(with = "extended_float")]
    pub observed: f64,
    pub exceed_count: u64,
    pub p_hat: f64,
    pub std_error: f64,
    /// No simulation reached the observed value: P <= 1/i.
    pub at_most_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    #[serde(default)]
    pub label: Option<String>,
    pub dataset: String,
    pub dependent: String,
    pub n: usize,
    pub l: usize,
    pub m: usize,
    pub tested: Vec<String>,
    pub full: Vec<String>,
    pub inject_uniform: usize,
    pub inject_seed: u64,
    pub master_seed: u64,
    pub num_simulations: u64,
    /// Not reproducible; leave out when comparing runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub metadata: ReportMetadata,
    pub rows: Vec<ReportRow>,
}

impl Report {
    /// Copy without the wall-time field.
    pub fn without_timing(&self) -> Report {
        let mut r = self.clone();
        r.metadata.wall_time_seconds = None;
        r
    }

    /// Column heading: the label if set, else `l=..; m=..`.
    pub fn heading(&self) -> String {
        self.metadata
            .label
            .clone()
            .unwrap_or_else(|| format!("l={}; m={}", self.metadata.l, self.metadata.m))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = GofError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "text" | "txt" | "table" => Ok(ReportFormat::Text),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(GofError::UnknownFormat(s.into())),
        }
    }
}

/// Renders one report.
pub fn emit_report(r: &Report, format: ReportFormat) -> Result<Vec<u8>> {
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(r).map_err(|e| GofError::Numerical(e.to_string()))?;
            out.push(b'\n');
            Ok(out)
        }
        _ => emit_reports(std::slice::from_ref(r), format),
    }
}

/// Renders several reports side by side (text), stacked (CSV), or as a JSON
/// array.
pub fn emit_reports(reports: &[Report], format: ReportFormat) -> Result<Vec<u8>> {
    match format {
        ReportFormat::Text => Ok(text_table(reports).into_bytes()),
        ReportFormat::Csv => csv_rows(reports),
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(reports).map_err(|e| GofError::Numerical(e.to_string()))?;
            out.push(b'\n');
            Ok(out)
        }
    }
}

/// Parses JSON produced by [`emit_report`].
pub fn parse_report_json(bytes: &[u8]) -> Result<Report> {
    serde_json::from_slice(bytes).map_err(|e| GofError::Config(e.to_string()))
}

/// A P-value cell: `p_hat` to the precision its standard error supports, or
/// `≤ 1/i†` when no simulation reached the observed value.
pub fn format_cell(row: &ReportRow, num_simulations: u64) -> String {
    if row.at_most_bound {
        return format!("≤ {}†", 1.0 / num_simulations as f64);
    }
    let digits = if row.std_error > 0.0 {
        (-row.std_error.log10()).ceil().clamp(3.0, 8.0) as usize
    } else {
        3
    };
    format!("{:.*}", digits, row.p_hat)
}

fn text_table(reports: &[Report]) -> String {
    // rows in first-appearance order across reports, matched by token
    let mut order: Vec<(&str, &str)> = Vec::new();
    for r in reports {
        for row in &r.rows {
            if !order.iter().any(|(t, _)| *t == row.statistic) {
                order.push((&row.statistic, &row.label));
            }
        }
    }
    let headings: Vec<String> = reports.iter().map(Report::heading).collect();
    let cells: Vec<Vec<String>> = order
        .iter()
        .map(|(tok, _)| {
            reports
                .iter()
                .map(|r| {
                    r.rows
                        .iter()
                        .find(|row| row.statistic == *tok)
                        .map(|row| format_cell(row, r.metadata.num_simulations))
                        .unwrap_or_else(|| "-".into())
                })
                .collect()
        })
        .collect();

    let title = match reports.first() {
        Some(r) => format!("P-values for {} (n = {})", r.metadata.dataset, r.metadata.n),
        None => "P-values".into(),
    };
    let label_w = order.iter().map(|(_, l)| l.chars().count()).max().unwrap_or(0).max(9);
    let col_w: Vec<usize> = (0..reports.len())
        .map(|c| {
            cells
                .iter()
                .map(|row| row[c].chars().count())
                .chain(std::iter::once(headings[c].chars().count()))
                .max()
                .unwrap_or(0)
        })
        .collect();

    let mut s = String::new();
    let _ = writeln!(s, "{title}");
    let mut line = format!("{:label_w$}", "");
    for (h, w) in headings.iter().zip(&col_w) {
        let _ = write!(line, "  {h:>w$}");
    }
    let _ = writeln!(s, "{}", line.trim_end());
    let total: usize = label_w + col_w.iter().map(|w| w + 2).sum::<usize>();
    let _ = writeln!(s, "{}", "-".repeat(total));
    for ((_, label), row) in order.iter().zip(&cells) {
        let mut line = format!("{label:label_w$}");
        for (c, w) in row.iter().zip(&col_w) {
            let _ = write!(line, "  {c:>w$}");
        }
        let _ = writeln!(s, "{line}");
    }
    let _ = writeln!(s);
    for (h, r) in headings.iter().zip(reports) {
        let m = &r.metadata;
        let _ = writeln!(
            s,
            "{h}: tested [{}], full [{}], i = {}, master seed = {}{}",
            m.tested.join(", "),
            m.full.join(", "),
            m.num_simulations,
            m.master_seed,
            if m.inject_uniform > 0 {
                format!(", {} injected U(0,1) (seed {})", m.inject_uniform, m.inject_seed)
            } else {
                String::new()
            }
        );
    }
    if cells.iter().flatten().any(|c| c.ends_with('†')) {
        let _ = writeln!(s, "† no simulated statistic reached the observed value; the P-value is at most 1/i");
    }
    s
}

fn csv_rows(reports: &[Report]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| GofError::Numerical(e.to_string());
    w.write_record([
        "experiment",
        "dataset",
        "n",
        "l",
        "m",
        "tested",
        "full",
        "inject_uniform",
        "inject_seed",
        "master_seed",
        "num_simulations",
        "statistic",
        "label",
        "observed",
        "exceed_count",
        "p_hat",
        "std_error",
        "at_most_bound",
    ])
    .map_err(err)?;
    for r in reports {
        let m = &r.metadata;
        for row in &r.rows {
            w.write_record([
                r.heading(),
                m.dataset.clone(),
                m.n.to_string(),
                m.l.to_string(),
                m.m.to_string(),
                m.tested.join(" "),
                m.full.join(" "),
                m.inject_uniform.to_string(),
                m.inject_seed.to_string(),
                m.master_seed.to_string(),
                m.num_simulations.to_string(),
                row.statistic.clone(),
                row.label.clone(),
                row.observed.to_string(),
                row.exceed_count.to_string(),
                row.p_hat.to_string(),
                row.std_error.to_string(),
                row.at_most_bound.to_string(),
            ])
            .map_err(err)?;
        }
    }
    w.into_inner().map_err(|e| GofError::Numerical(e.to_string()))
}

/// JSON has no infinities; HL can be +inf on degenerate groups.
mod extended_float {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}
