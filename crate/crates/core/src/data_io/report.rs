use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{Interval, ProxyEstimate, RotationResult, SubsampleCi};
use crate::identification::{DiagnosticReport, IdentificationReport};
use crate::simulation::{MonteCarloReport, TableReport};

/// One row of the per-OCP summary: role assignment, selection and estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcpRow {
    pub ocp: String,
    pub invalid_tcps: Vec<String>,
    pub valid_tcps: Vec<String>,
    pub beta_hat: Option<f64>,
    pub ci: Option<Interval>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub path: String,
    pub n: usize,
    pub dropped_missing: usize,
    pub dropped_unparseable: usize,
}

/// Everything a command produced, plus the resolved configuration that reproduces it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub estimates: Vec<ProxyEstimate>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_ocp: Vec<OcpRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary_beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsample: Option<SubsampleCi>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identification: Option<IdentificationReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<DiagnosticReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarloReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<TableReport>,
    /// Wall-clock seconds; only recorded on request so reports stay reproducible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_seconds: Option<f64>,
}

impl RunReport {
    pub fn new(command: &str, seed: u64, config: serde_json::Value) -> Self {
        RunReport {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config,
            data: None,
            estimates: Vec::new(),
            per_ocp: Vec::new(),
            summary_beta: None,
            subsample: None,
            identification: None,
            diagnostics: None,
            monte_carlo: None,
            table: None,
            timing_seconds: None,
        }
    }

    pub fn add_rotation(&mut self, rotation: &RotationResult) {
        for row in &rotation.rows {
            self.per_ocp.push(OcpRow {
                ocp: row.ocp.clone(),
                invalid_tcps: row.invalid_tcps.clone(),
                valid_tcps: row.valid_tcps.clone(),
                beta_hat: row.estimate.as_ref().map(|e| e.beta_hat),
                ci: row.estimate.as_ref().and_then(|e| e.ci),
                error: row.error.clone(),
            });
        }
        self.summary_beta = rotation.median;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    /// Pretty-printed JSON with every field.
    Structured,
    /// Plain-text tables.
    Table,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "structured" | "json" => Ok(ReportFormat::Structured),
            "table" => Ok(ReportFormat::Table),
            other => Err(format!(
                "unknown format '{other}' (expected structured or table)"
            )),
        }
    }
}

pub fn write_report(
    report: &RunReport,
    path: impl AsRef<Path>,
    format: ReportFormat,
) -> Result<()> {
    let path = path.as_ref();
    let text = match format {
        ReportFormat::Structured => serde_json::to_string_pretty(report)? + "\n",
        ReportFormat::Table => render_table(report),
    };
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_report(path: impl AsRef<Path>) -> Result<RunReport> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn set(names: &[String]) -> String {
    format!("{{{}}}", names.join(", "))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"))
}

fn fmt_ci(ci: Option<Interval>) -> String {
    ci.map_or_else(
        || "-".to_string(),
        |ci| format!("[{:.3}, {:.3}]", ci.lower, ci.upper),
    )
}

/// Column-aligned plain text with a header rule.
fn aligned(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<String>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        padded.join(" | ").trim_end().to_string() + "\n"
    };
    let mut out = line(header.iter().map(|h| h.to_string()).collect());
    out += &(widths
        .iter()
        .map(|&w| "-".repeat(w))
        .collect::<Vec<_>>()
        .join("-+-")
        + "\n");
    for row in rows {
        out += &line(row.clone());
    }
    out
}

fn per_ocp_table(rows: &[OcpRow]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| match &r.error {
            Some(e) => vec![
                r.ocp.clone(),
                "FAILED".into(),
                e.clone(),
                "-".into(),
                "-".into(),
            ],
            None => vec![
                r.ocp.clone(),
                set(&r.invalid_tcps),
                set(&r.valid_tcps),
                fmt_opt(r.beta_hat),
                fmt_ci(r.ci),
            ],
        })
        .collect();
    aligned(&["W", "Invalid TCPs", "Valid TCPs", "β̂", "CI"], &body)
}

fn monte_carlo_table(report: &MonteCarloReport) -> String {
    let body: Vec<Vec<String>> = report
        .methods
        .iter()
        .map(|m| {
            vec![
                m.method.to_string(),
                fmt_opt(m.coverage),
                fmt_opt(m.ci_length),
                format!("{:.3}", m.bias),
                fmt_opt(m.se),
                format!("{:.3}", m.rmse),
                format!("{}/{}", m.succeeded, m.succeeded + m.failed),
            ]
        })
        .collect();
    aligned(
        &["Method", "Cov", "Len", "Bias", "SE", "RMSE", "Runs"],
        &body,
    )
}

/// Plain-text rendering of whichever sections the report carries.
pub fn render_table(report: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {} (seed {})\n", report.command, report.seed);
    if !report.per_ocp.is_empty() {
        out += &per_ocp_table(&report.per_ocp);
        if let Some(m) = report.summary_beta {
            let _ = writeln!(out, "\nmedian β̂ = {m:.3}");
        }
        out.push('\n');
    }
    if !report.estimates.is_empty() {
        let body: Vec<Vec<String>> = report
            .estimates
            .iter()
            .map(|e| {
                vec![
                    e.method.to_string(),
                    format!("{:.3}", e.beta_hat),
                    fmt_opt(e.std_error),
                    fmt_ci(e.ci),
                    format!("{:?}", e.selected_invalid_tcps),
                ]
            })
            .collect();
        out += &aligned(&["Method", "β̂", "SE", "CI", "Invalid TCPs"], &body);
        out.push('\n');
    }
    if let Some(s) = &report.subsample {
        let _ = writeln!(
            out,
            "subsampling CI: {} (b = {}, {} of {} subsamples succeeded)\n",
            fmt_ci(Some(s.interval)),
            s.size,
            s.succeeded,
            s.succeeded + s.failed
        );
    }
    if let Some(mc) = &report.monte_carlo {
        out += &monte_carlo_table(mc);
        out.push('\n');
    }
    if let Some(t) = &report.table {
        for row in &t.rows {
            let _ = writeln!(out, "## {}", row.label);
            out += &monte_carlo_table(&row.report);
            out.push('\n');
        }
    }
    if let Some(id) = &report.identification {
        let _ = writeln!(
            out,
            "identified: {} ({} consistent subsets, {} distinct constants)\n",
            id.identified,
            id.subsets.len(),
            id.distinct_q_count
        );
    }
    if let Some(diag) = &report.diagnostics {
        if let Some(irr) = &diag.irrepresentable {
            let _ = writeln!(
                out,
                "irrepresentable value: {:.4} (holds: {})",
                irr.value, irr.holds
            );
        }
        if let Some(rip) = &diag.rip {
            let _ = writeln!(
                out,
                "RIP order {}: margin {:.4} (holds: {})",
                rip.order,
                rip.theorem3_margin,
                rip.holds()
            );
        }
    }
    out
}
