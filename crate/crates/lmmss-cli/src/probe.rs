//! The `probe` subcommand: empirical assumption checks on the built-in
//! problems, serialized as key-value reports and grid CSV.

use lmmss::diagnostics::{
    completeness_scan, probe_error_bound, probe_linearization, probe_lipschitz,
    AssumptionReport, GridSpec, Region,
};
use lmmss::problem::{builtin_problem, BuiltinProblem, NlsProblem, ScalingSpec};
use lmmss::Vector;
use std::path::Path;

pub struct ProbeRequest {
    pub problem: String,
    pub what: String,
    pub center: Option<Vec<f64>>,
    pub radius: f64,
    pub samples: usize,
    pub seed: u64,
    pub grid: (f64, f64, f64),
    pub scaling: Option<ScalingSpec>,
}

/// Stationary-set samples for the built-ins, used by the linearization
/// probe (which requires verified points on X*).
fn stationary_samples(problem: &BuiltinProblem) -> Vec<Vector> {
    match problem.name() {
        "ex1" => {
            let sqrt5 = 5.0f64.sqrt();
            (0..12)
                .map(|i| {
                    let t = i as f64 * std::f64::consts::TAU / 12.0;
                    Vector::from_column_slice(&[sqrt5 * t.cos(), sqrt5 * t.sin()])
                })
                .collect()
        }
        "ex2" => (0..9)
            .map(|i| Vector::from_column_slice(&[0.0, 1.0 + 0.25 * i as f64]))
            .collect(),
        _ => vec![Vector::from_column_slice(&[0.0, 0.0])],
    }
}

fn default_center(problem: &BuiltinProblem) -> Vector {
    match problem.name() {
        "ex1" => Vector::from_column_slice(&[0.0, 5.0f64.sqrt()]),
        "ex2" => Vector::from_column_slice(&[0.0, 2.0]),
        _ => Vector::from_column_slice(&[0.0, 0.0]),
    }
}

/// Runs the requested probe and writes its artifact(s) under `out_dir`.
/// Returns the report text. Errors carry the process exit code.
pub fn run_probe(req: &ProbeRequest, out_dir: &Path) -> Result<String, (i32, String)> {
    let (problem, builtin_l, _) =
        builtin_problem(&req.problem).map_err(|e| (4, e.to_string()))?;
    let center = match &req.center {
        Some(c) if c.len() == problem.var_dim() => Vector::from_column_slice(c),
        Some(c) => {
            return Err((4, format!("center has {} entries, problem needs {}", c.len(), problem.var_dim())))
        }
        None => default_center(&problem),
    };
    let l = req.scaling.clone().unwrap_or(builtin_l);
    let mut report = AssumptionReport {
        sample_count: req.samples,
        region: Some(Region { center: [center[0], center[1]], radius: req.radius }),
        ..Default::default()
    };

    let out_name = match req.what.as_str() {
        "error-bound" => {
            let stats = probe_error_bound(&problem, &center, req.radius, req.samples, req.seed)
                .map_err(|e| (1, e.to_string()))?;
            report.omega = Some(stats);
            "probe_error_bound.txt"
        }
        "lipschitz" => {
            report.lipschitz_estimate =
                Some(probe_lipschitz(&problem, &center, req.radius, req.samples, req.seed));
            "probe_lipschitz.txt"
        }
        "linearization" => {
            let stationary = stationary_samples(&problem);
            let tests: Vec<Vector> = (1..=req.samples.max(4))
                .map(|i| {
                    let eps = req.radius / i as f64;
                    &center + Vector::from_column_slice(&[eps, eps])
                })
                .collect();
            let fit = probe_linearization(&problem, &stationary, &tests)
                .map_err(|e| (1, e.to_string()))?;
            report.linearization = Some(fit);
            "probe_linearization.txt"
        }
        "completeness" => {
            let (lo1, hi1, step) = req.grid;
            let scan = completeness_scan(&problem, &l, &GridSpec::square(lo1, hi1, step));
            let gamma_min = scan
                .values
                .iter()
                .map(|(_, g)| *g)
                .fold(f64::INFINITY, f64::min);
            report.gamma_min = Some(gamma_min);
            report.sample_count = scan.values.len();
            let csv_path = out_dir.join("completeness_grid.csv");
            std::fs::write(&csv_path, scan.to_csv())
                .map_err(|e| (1, format!("cannot write {}: {e}", csv_path.display())))?;
            let mut text = report.to_report();
            text.push_str(&format!("violations: {}\n", scan.violations.len()));
            let path = out_dir.join("probe_completeness.txt");
            std::fs::write(&path, &text)
                .map_err(|e| (1, format!("cannot write {}: {e}", path.display())))?;
            return Ok(text);
        }
        other => return Err((4, format!("unknown probe `{other}` (expected error-bound, lipschitz, linearization or completeness)"))),
    };

    let text = report.to_report();
    let path = out_dir.join(out_name);
    std::fs::write(&path, &text)
        .map_err(|e| (1, format!("cannot write {}: {e}", path.display())))?;
    Ok(text)
}
