//! Preconfigured reproduction scenarios: the three reference tables and
//! the two figure datasets, compared side by side against embedded
//! reference values with per-target tolerance policies.

use crate::output::{level_curve_csv, status_str, trace_csv, trajectory_csv};
use lmmss::problem::{builtin_problem, BuiltinProblem, ScalingSpec};
use lmmss::solver::{algorithm1_solve, classic_lm_solve, pure_solve, SolveStatus, SolveTrace, SolverConfig};
use lmmss::Vector;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Table1,
    Table2,
    Table3,
    Fig1,
    Fig2,
}

impl Target {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "table1" => Some(Self::Table1),
            "table2" => Some(Self::Table2),
            "table3" => Some(Self::Table3),
            "fig1" => Some(Self::Fig1),
            "fig2" => Some(Self::Fig2),
            _ => None,
        }
    }
}

// Embedded reference data (published tables); the reproduce verdict uses
// the same tolerance policy as the acceptance gate.
const TABLE1_LEFT_GRAD: [f64; 4] = [1.2242, 1.5890e-1, 2.8982e-6, 1.0659e-13];
const TABLE1_LEFT_DIST: [f64; 4] = [1.3506e-1, 1.7762e-2, 3.2402e-7, 1.1546e-14];
const TABLE1_RIGHT_GRAD: [f64; 3] = [3.9643e-1, 1.7729e-3, 3.4523e-8];
const TABLE1_RIGHT_DIST: [f64; 3] = [4.4521e-2, 1.9821e-4, 3.8598e-9];
const TABLE2_LMM: [f64; 5] = [3.7143e-1, 6.0270e-2, 1.0055e-3, 2.4684e-7, 1.4833e-14];
const TABLE2_LMMSS: [f64; 5] = [1.5307e-1, 1.3438e-2, 1.7991e-4, 3.0097e-8, 7.5482e-16];
const TABLE3_START1: [f64; 6] =
    [2.0097, 8.0542e-1, 1.5845e-1, 1.9403e-3, 3.6524e-9, 7.4734e-17];
const TABLE3_START2: [f64; 5] = [1.2571, 3.8494e-1, 2.4840e-2, 7.6586e-6, 2.6331e-16];

struct Verdict {
    report: String,
    pass: bool,
}

impl Verdict {
    fn new(title: &str) -> Self {
        Self { report: format!("[{title}]\n"), pass: true }
    }

    fn note(&mut self, line: impl AsRef<str>) {
        self.report.push_str(line.as_ref());
        self.report.push('\n');
    }

    fn check(&mut self, ok: bool, line: String) {
        let mark = if ok { "ok  " } else { "FAIL" };
        let _ = writeln!(self.report, "{mark} {line}");
        self.pass &= ok;
    }

    /// Reference comparison: 3 significant digits at or above `floor`,
    /// order of magnitude below it (roundoff-level entries).
    fn compare(&mut self, what: &str, got: f64, want: f64, floor: f64) {
        if want.abs() >= floor {
            let rel = (got - want).abs() / want.abs();
            self.check(
                rel <= 1e-3,
                format!("{what}: computed {got:.5e}, reference {want:.5e}"),
            );
        } else {
            let ratio = got / want;
            self.check(
                (0.1..=10.0).contains(&ratio),
                format!("{what}: computed {got:.5e}, reference order {want:.5e}"),
            );
        }
    }

    fn finish(mut self) -> (String, bool) {
        let _ = writeln!(self.report, "VERDICT: {}", if self.pass { "pass" } else { "fail" });
        (self.report, self.pass)
    }
}

fn write(out_dir: &Path, name: &str, content: &str) -> Result<(), String> {
    let path = out_dir.join(name);
    std::fs::write(&path, content).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn dists(trace: &SolveTrace) -> Vec<f64> {
    trace.dists().into_iter().flatten().collect()
}

fn compare_rows(v: &mut Verdict, label: &str, got: &[f64], table: &[f64], start_k: usize, floor: f64) {
    if got.len() < table.len() + start_k {
        v.check(false, format!("{label}: run produced only {} iterates", got.len()));
        return;
    }
    for (i, want) in table.iter().enumerate() {
        v.compare(&format!("{label}[k={}]", i + start_k), got[i + start_k], *want, floor);
    }
}

/// Runs one reproduction target, writes its artifacts into `out_dir`,
/// and returns the report text (ending in the `VERDICT:` line) and the
/// verdict itself.
pub fn run_target(target: Target, out_dir: &Path) -> Result<(String, bool), String> {
    match target {
        Target::Table1 => table1(out_dir),
        Target::Table2 => table2(out_dir),
        Target::Table3 => table3(out_dir),
        Target::Fig1 => fig1(out_dir),
        Target::Fig2 => fig2(out_dir),
    }
}

fn surrogate_seq(trace: &SolveTrace, p: &BuiltinProblem) -> Vec<f64> {
    trace
        .records
        .iter()
        .map(|r| p.surrogate_dist(&r.x).unwrap())
        .collect()
}

fn table1(out_dir: &Path) -> Result<(String, bool), String> {
    let (ex1, l, starts) = builtin_problem("ex1").map_err(|e| e.to_string())?;
    let config = SolverConfig::default(); // stop at ‖∇φ‖ < 1e−8
    let left = pure_solve(&ex1, &l, &starts[0], &config).map_err(|e| e.to_string())?;
    let right = pure_solve(&ex1, &l, &starts[1], &config).map_err(|e| e.to_string())?;
    write(out_dir, "table1_left.csv", &trace_csv(&left))?;
    write(out_dir, "table1_right.csv", &trace_csv(&right))?;

    let mut v = Verdict::new("table1");
    v.note("columns: surrogate distance |x1²+x2²−5| and ‖JᵀF‖ per iterate");
    v.note("(the true distance |‖x‖−√5| is recorded in the dist CSV column)");
    v.check(
        left.iterations() == 3,
        format!("left start: {} iterations, reference 3", left.iterations()),
    );
    compare_rows(&mut v, "left ‖JᵀF‖", &left.grad_norms(), &TABLE1_LEFT_GRAD, 0, 1e-12);
    compare_rows(&mut v, "left dist", &surrogate_seq(&left, &ex1), &TABLE1_LEFT_DIST, 0, 1e-12);
    v.check(
        right.iterations() == 2,
        format!("right start: {} iterations, reference 2", right.iterations()),
    );
    compare_rows(&mut v, "right ‖JᵀF‖", &right.grad_norms(), &TABLE1_RIGHT_GRAD, 0, 1e-12);
    compare_rows(&mut v, "right dist", &surrogate_seq(&right, &ex1), &TABLE1_RIGHT_DIST, 0, 1e-12);
    let (report, pass) = v.finish();
    write(out_dir, "table1_report.txt", &report)?;
    Ok((report, pass))
}

fn table2(out_dir: &Path) -> Result<(String, bool), String> {
    let (ex2, l, starts) = builtin_problem("ex2").map_err(|e| e.to_string())?;
    let config = SolverConfig { grad_tol: 1e-10, ..Default::default() };
    let lmm = pure_solve(&ex2, &ScalingSpec::identity(2), &starts[0], &config)
        .map_err(|e| e.to_string())?;
    let lmmss = pure_solve(&ex2, &l, &starts[0], &config).map_err(|e| e.to_string())?;
    write(out_dir, "table2_lmm.csv", &trace_csv(&lmm))?;
    write(out_dir, "table2_lmmss.csv", &trace_csv(&lmmss))?;

    let mut v = Verdict::new("table2");
    v.note("column: dist |x1| to the local stationary set per iterate (rows start at k = 1)");
    compare_rows(&mut v, "LMM dist", &dists(&lmm), &TABLE2_LMM, 1, 1e-7);
    compare_rows(&mut v, "LMMSS dist", &dists(&lmmss), &TABLE2_LMMSS, 1, 1e-7);
    let (report, pass) = v.finish();
    write(out_dir, "table2_report.txt", &report)?;
    Ok((report, pass))
}

fn table3(out_dir: &Path) -> Result<(String, bool), String> {
    let (ex3, l, starts) = builtin_problem("ex3").map_err(|e| e.to_string())?;
    let config = SolverConfig { grad_tol: 1e-10, ..Default::default() };
    let a = pure_solve(&ex3, &l, &starts[0], &config).map_err(|e| e.to_string())?;
    let b = pure_solve(&ex3, &l, &starts[1], &config).map_err(|e| e.to_string())?;
    write(out_dir, "table3_start1.csv", &trace_csv(&a))?;
    write(out_dir, "table3_start2.csv", &trace_csv(&b))?;

    let mut v = Verdict::new("table3");
    v.note("column: ‖x_k‖ per iterate (rows start at k = 1)");
    compare_rows(&mut v, "start (3,3)", &dists(&a), &TABLE3_START1, 1, 1e-8);
    compare_rows(&mut v, "start (-2,-2)", &dists(&b), &TABLE3_START2, 1, 1e-8);
    for (trace, name) in [(&a, "(3,3)"), (&b, "(-2,-2)")] {
        let on_span = trace
            .records
            .iter()
            .all(|r| (r.x[0] - r.x[1]).abs() <= 1e-12);
        v.check(on_span, format!("start {name}: iterates stay in span{{(1,1)}}"));
    }
    let (report, pass) = v.finish();
    write(out_dir, "table3_report.txt", &report)?;
    Ok((report, pass))
}

fn fig1(out_dir: &Path) -> Result<(String, bool), String> {
    let (ex1, l, _) = builtin_problem("ex1").map_err(|e| e.to_string())?;
    let x0 = Vector::from_column_slice(&[2.0, 4.0]);
    let config = SolverConfig::default();
    let lmmss = algorithm1_solve(&ex1, &l, &x0, &config).map_err(|e| e.to_string())?;
    let lmm = classic_lm_solve(&ex1, &x0, &config).map_err(|e| e.to_string())?;
    write(out_dir, "fig1_lmmss_trajectory.csv", &trajectory_csv(&lmmss))?;
    write(out_dir, "fig1_lmm_trajectory.csv", &trajectory_csv(&lmm))?;
    write(out_dir, "fig1_levels.csv", &level_curve_csv(&ex1, (-3.5, 4.5), (-3.5, 4.5), 200))?;

    let mut v = Verdict::new("fig1");
    v.note("trajectories of LMM and LMMSS from (2,4), with objective level-curve samples");
    v.check(
        lmmss.status == SolveStatus::Converged,
        format!("LMMSS run: status {}", status_str(lmmss.status)),
    );
    v.check(
        lmm.status == SolveStatus::Converged,
        format!("LMM run: status {}", status_str(lmm.status)),
    );
    for (trace, name) in [(&lmmss, "LMMSS"), (&lmm, "LMM")] {
        let surr = ex1.surrogate_dist(&trace.final_x).unwrap();
        v.check(surr < 1e-6, format!("{name} limit point on X* (|x1²+x2²−5| = {surr:.2e})"));
    }
    let gap = (&lmmss.final_x - &lmm.final_x).norm();
    v.check(gap > 1e-3, format!("limit points differ (‖Δ‖ = {gap:.3e})"));
    let (report, pass) = v.finish();
    write(out_dir, "fig1_report.txt", &report)?;
    Ok((report, pass))
}

fn fig2(out_dir: &Path) -> Result<(String, bool), String> {
    let (ex1, l, _) = builtin_problem("ex1").map_err(|e| e.to_string())?;
    let x0 = Vector::from_column_slice(&[-1.0, 3.0]);
    let off = SolverConfig { safeguard_enabled: false, ..Default::default() };
    let no_safeguard = algorithm1_solve(&ex1, &l, &x0, &off).map_err(|e| e.to_string())?;
    let with_safeguard =
        algorithm1_solve(&ex1, &l, &x0, &SolverConfig::default()).map_err(|e| e.to_string())?;
    write(out_dir, "fig2_no_safeguard_trajectory.csv", &trajectory_csv(&no_safeguard))?;
    write(out_dir, "fig2_safeguard_trajectory.csv", &trajectory_csv(&with_safeguard))?;
    write(out_dir, "fig2_levels.csv", &level_curve_csv(&ex1, (-3.5, 3.5), (-3.5, 3.5), 200))?;

    let mut v = Verdict::new("fig2");
    v.note("the same start (−1,3) without and with the safeguard step");
    v.check(
        no_safeguard.status == SolveStatus::LinesearchFailure,
        format!("no-safeguard run: status {}", status_str(no_safeguard.status)),
    );
    let xf = &no_safeguard.final_x;
    v.check(
        (xf[0] + xf[1]).abs() < 0.05,
        format!("no-safeguard stall near x2 = −x1 (|x1+x2| = {:.3e})", (xf[0] + xf[1]).abs()),
    );
    v.check(
        with_safeguard.status == SolveStatus::Converged,
        format!("safeguard run: status {}", status_str(with_safeguard.status)),
    );
    let surr = ex1.surrogate_dist(&with_safeguard.final_x).unwrap();
    v.check(surr < 1e-6, format!("safeguard limit point on X* (|x1²+x2²−5| = {surr:.2e})"));
    let (report, pass) = v.finish();
    write(out_dir, "fig2_report.txt", &report)?;
    Ok((report, pass))
}
