//! File and table output. Floats print in Rust's shortest round-trip form,
//! so parsing a printed decimal reproduces the in-memory double exactly.

use std::fmt::Write as _;
use std::path::Path;

use depcag::criteria::{CriterionReport, IntegralOutcome};
use depcag::model::ValidationReport;
use depcag::solver::{Trajectory, TrajectoryStatus};

use crate::CliError;

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| {
                CliError::Config(format!("cannot create {}: {e}", parent.display()))
            })?;
        }
    }
    std::fs::write(path, contents)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

pub fn dense_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,x,dx,interval,gamma\n");
    for s in &traj.dense {
        writeln!(out, "{},{},{},{},{}", s.t, s.x, s.v, s.k, s.gamma).unwrap();
    }
    out
}

pub fn nodes_csv(traj: &Trajectory) -> String {
    let mut out = String::from("k,t_k,zeta_k,x,dx,x_zeta,fp_iters\n");
    for n in &traj.nodes {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            n.k, n.t_k, n.zeta, n.x, n.v, n.x_at_zeta, n.fp_iterations
        )
        .unwrap();
    }
    out
}

pub fn status_line(status: &TrajectoryStatus) -> String {
    match status {
        TrajectoryStatus::Completed => "completed".to_owned(),
        TrajectoryStatus::Blowup { t } => format!("blowup at t = {t}"),
        TrajectoryStatus::FixedPointFailure { k } => {
            format!("fixed-point failure on interval k = {k}")
        }
    }
}

pub fn node_table(traj: &Trajectory, limit: usize) -> String {
    let mut out = String::new();
    writeln!(out, "{:>4}  {:>10}  {:>24}  {:>24}", "k", "t_k", "x", "dx").unwrap();
    for n in traj.nodes.iter().take(limit) {
        writeln!(out, "{:>4}  {:>10}  {:>24}  {:>24}", n.k, n.t_k, n.x, n.v).unwrap();
    }
    if traj.nodes.len() > limit {
        writeln!(out, "... {} more nodes", traj.nodes.len() - limit).unwrap();
    }
    out
}

pub fn validation_table(report: &ValidationReport) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "hypothesis checks on [tau, {}] x [-{}, {}], grid {}",
        report.t_max, report.x_range, report.x_range, report.grid
    )
    .unwrap();
    for h in &report.hypotheses {
        if h.passed {
            writeln!(out, "  {}: no violation found ({})", h.id, h.description).unwrap();
        } else {
            let w = h.witness.as_ref().unwrap();
            let at = match w.x {
                Some(x) if w.t.is_nan() => format!("u = {x}"),
                Some(x) => format!("(t, x) = ({}, {x})", w.t),
                None => format!("t = {}", w.t),
            };
            writeln!(
                out,
                "  {}: VIOLATED ({}) at {at}: {}",
                h.id, h.description, w.detail
            )
            .unwrap();
        }
    }
    out
}

pub fn criterion_table(report: &CriterionReport) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:<7} {:>10} {:>13} {:>14}  detail",
        "cond", "required", "outcome", "method"
    )
    .unwrap();
    for c in &report.conditions {
        let detail = match c.verdict.outcome {
            IntegralOutcome::Converges { value, err_bound } => {
                format!("value {value} (err <= {err_bound:.3e})")
            }
            _ => c
                .verdict
                .evidence
                .last()
                .map(|cp| format!("partial {} at {}", cp.partial, cp.t))
                .unwrap_or_default(),
        };
        let note = c.note.as_deref().unwrap_or("");
        writeln!(
            out,
            "{:<7} {:>10} {:>13} {:>14}  {}{}",
            c.label,
            c.required.word(),
            c.verdict.outcome.word(),
            c.verdict.method.word(),
            detail,
            if note.is_empty() {
                String::new()
            } else {
                format!(" [{note}]")
            }
        )
        .unwrap();
    }
    for w in &report.warnings {
        writeln!(out, "warning: {w}").unwrap();
    }
    writeln!(out, "conclusion: {}", report.conclusion.word()).unwrap();
    out
}

/// Plain-text verdict file: human table plus one machine-readable
/// `key=value` line per condition.
pub fn verdict_file(report: &CriterionReport, label: &str) -> String {
    let mut out = String::new();
    writeln!(out, "theorem {} verdict for {label}", report.theorem).unwrap();
    writeln!(out).unwrap();
    out.push_str(&criterion_table(report));
    writeln!(out).unwrap();
    writeln!(out, "[machine]").unwrap();
    writeln!(out, "theorem={}", report.theorem).unwrap();
    writeln!(out, "problem={label}").unwrap();
    for c in &report.conditions {
        writeln!(out, "{}={}", c.label, c.verdict.outcome.word()).unwrap();
        if let IntegralOutcome::Converges { value, err_bound } = c.verdict.outcome {
            writeln!(out, "{}.value={value}", c.label).unwrap();
            writeln!(out, "{}.err_bound={err_bound}", c.label).unwrap();
        }
    }
    writeln!(out, "degenerate_schedule={}", !report.warnings.is_empty()).unwrap();
    writeln!(out, "conclusion={}", report.conclusion.word()).unwrap();
    out
}
