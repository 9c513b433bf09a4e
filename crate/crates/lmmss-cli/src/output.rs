//! Deterministic artifact serialization: iterate CSV, trajectory CSV,
//! level-curve grids, and human-readable run summaries. All output is
//! UTF-8 with LF line endings and `.` as the decimal separator.

use lmmss::diagnostics::{estimate_rate, par_map};
use lmmss::problem::{eval_phi, BuiltinProblem, NlsProblem};
use lmmss::solver::{DirKind, SolveStatus, SolveTrace};
use lmmss::Vector;
use std::fmt::Write as _;

/// Exact iterate-CSV header shared by every run artifact.
pub const CSV_HEADER: &str = "k,x,phi,grad_norm,lambda,alpha,dist,step_norm,dir_kind,full_step";

/// 17 significant digits, scientific notation.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_x(x: &Vector) -> String {
    x.iter().map(|&v| fmt17(v)).collect::<Vec<_>>().join(";")
}

pub fn dir_kind_str(kind: DirKind) -> &'static str {
    match kind {
        DirKind::Scaled => "scaled",
        DirKind::SafeguardLm => "safeguard-lm",
    }
}

pub fn status_str(status: SolveStatus) -> &'static str {
    match status {
        SolveStatus::Converged => "converged",
        SolveStatus::MaxIters => "max-iters",
        SolveStatus::LinesearchFailure => "linesearch-failure",
        SolveStatus::NumericalError => "numerical-error",
    }
}

/// Process exit code for a run with this status.
pub fn status_exit_code(status: SolveStatus) -> i32 {
    match status {
        SolveStatus::Converged => 0,
        SolveStatus::MaxIters => 2,
        SolveStatus::LinesearchFailure => 3,
        SolveStatus::NumericalError => 1,
    }
}

/// Iterate CSV with the canonical header; `dist` is empty when the
/// problem has no oracle.
pub fn trace_csv(trace: &SolveTrace) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for rec in &trace.records {
        let dist = rec.dist.map(fmt17).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            rec.k,
            fmt_x(&rec.x),
            fmt17(rec.phi),
            fmt17(rec.grad_norm),
            fmt17(rec.lambda),
            fmt17(rec.alpha),
            dist,
            fmt17(rec.step_norm()),
            dir_kind_str(rec.dir_kind),
            rec.full_step_accepted,
        );
    }
    out
}

/// Trajectory CSV `k,x1,x2` for figure data.
pub fn trajectory_csv(trace: &SolveTrace) -> String {
    let mut out = String::from("k,x1,x2\n");
    for rec in &trace.records {
        let _ = writeln!(out, "{},{},{}", rec.k, fmt17(rec.x[0]), fmt17(rec.x[1]));
    }
    out
}

/// Objective samples `x1,x2,phi` on an `n×n` grid over the rectangle,
/// for external level-curve plotting.
pub fn level_curve_csv(
    problem: &(impl NlsProblem + Sync + ?Sized),
    x1_range: (f64, f64),
    x2_range: (f64, f64),
    n: usize,
) -> String {
    let pts: Vec<Vector> = (0..n * n)
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            let a = x1_range.0 + (x1_range.1 - x1_range.0) * i as f64 / (n - 1) as f64;
            let b = x2_range.0 + (x2_range.1 - x2_range.0) * j as f64 / (n - 1) as f64;
            Vector::from_column_slice(&[a, b])
        })
        .collect();
    let phis = par_map(&pts, |x| eval_phi(problem, x).unwrap_or(f64::NAN));
    let mut out = String::from("x1,x2,phi\n");
    for (x, phi) in pts.iter().zip(phis) {
        let _ = writeln!(out, "{},{},{}", fmt17(x[0]), fmt17(x[1]), fmt17(phi));
    }
    out
}

/// Human-readable run summary: status, iterations, final point, final
/// gradient norm, and a rate estimate when the distance oracle exists.
pub fn run_report(trace: &SolveTrace, problem: &BuiltinProblem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "problem: {}", problem.name());
    let _ = writeln!(out, "status: {}", status_str(trace.status));
    let _ = writeln!(out, "iterations: {}", trace.iterations());
    let _ = writeln!(out, "final_x: {}", fmt_x(&trace.final_x));
    if let Some(last) = trace.records.last() {
        let _ = writeln!(out, "final_grad_norm: {}", fmt17(last.grad_norm));
        let _ = writeln!(out, "final_phi: {}", fmt17(last.phi));
    }
    if let Some(dist) = problem.dist_oracle(&trace.final_x) {
        let _ = writeln!(out, "final_dist: {}", fmt17(dist));
        if !problem.dist_applicable(&trace.final_x) {
            let _ = writeln!(out, "dist_oracle: inapplicable (run left the oracle's stationary-set component)");
        }
    }
    if let Some(surr) = problem.surrogate_dist(&trace.final_x) {
        let _ = writeln!(out, "final_surrogate_dist: {}", fmt17(surr));
    }
    let dists: Vec<f64> = trace.dists().into_iter().flatten().collect();
    if dists.len() == trace.records.len() && !dists.is_empty() {
        match estimate_rate(&dists) {
            Ok(est) => {
                let _ = writeln!(out, "rate_classification: {}", est.classification.as_str());
                let _ = writeln!(out, "rate_order_q: {:.4}", est.order_q);
            }
            Err(e) => {
                let _ = writeln!(out, "rate_classification: unavailable ({e})");
            }
        }
    }
    out
}
