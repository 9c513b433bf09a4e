//! Empirical verification of the method's convergence assumptions:
//! convergence-rate estimation, error-bound ratio probes, gradient
//! linearization fits, Jacobian Lipschitz estimates, completeness grid
//! scans, and per-run invariant auditing.
//!
//! Probes are deterministic given their seed. Grid scans and sample
//! evaluations run data-parallel under the `parallel` feature with
//! index-ordered reduction, so parallel and sequential builds produce
//! identical output.

use crate::linalg::{self, Vector};
use crate::problem::{eval_gradient, NlsProblem, ScalingSpec};
use crate::solver::{DirKind, SolveTrace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("sequence too short for rate estimation (need at least 4 entries)")]
    TooShort,
    #[error("sequence is not positive and strictly decreasing")]
    NotDecreasing,
    #[error("problem has no distance oracle")]
    NoDistOracle,
    #[error("no verified stationary samples supplied")]
    NoStationarySamples,
}

/// Index-preserving map, parallel when the `parallel` feature is on.
/// Output order equals input order in both builds.
pub fn par_map<S, T, F>(items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

// ---------------------------------------------------------------------------
// Rate estimation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateClass {
    Linear,
    Superlinear,
    Quadratic,
    Inconclusive,
}

impl RateClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            RateClass::Linear => "linear",
            RateClass::Superlinear => "superlinear",
            RateClass::Quadratic => "quadratic",
            RateClass::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RateEstimate {
    /// Estimated convergence order from the sequence tail.
    pub order_q: f64,
    /// Successive ratios `d_{k+1}/d_k` of the retained entries.
    pub ratio_tail: Vec<f64>,
    pub classification: RateClass,
}

/// Entries at or below this magnitude are roundoff-dominated and dropped
/// before rate estimation.
pub const RATE_FLOOR: f64 = 1e-15;

/// Estimates the convergence order of a positive, strictly decreasing
/// sequence: `order_q` is the median over tail triples of
/// `log(d_{k+1}/d_k) / log(d_k/d_{k−1})`.
pub fn estimate_rate(seq: &[f64]) -> Result<RateEstimate, DiagnosticsError> {
    if seq.len() < 4 {
        return Err(DiagnosticsError::TooShort);
    }
    if seq.iter().any(|&d| !(d > 0.0)) || seq.windows(2).any(|w| w[1] >= w[0]) {
        return Err(DiagnosticsError::NotDecreasing);
    }
    let kept: Vec<f64> = seq.iter().cloned().filter(|&d| d > RATE_FLOOR).collect();
    let ratio_tail: Vec<f64> = kept.windows(2).map(|w| w[1] / w[0]).collect();
    if kept.len() < 3 {
        return Ok(RateEstimate { order_q: f64::NAN, ratio_tail, classification: RateClass::Inconclusive });
    }
    let mut qs: Vec<f64> = kept
        .windows(3)
        .map(|w| (w[2] / w[1]).ln() / (w[1] / w[0]).ln())
        .collect();
    // tail: the last (up to) five triples dominate the estimate
    let tail_len = qs.len().min(5);
    let mut tail: Vec<f64> = qs.split_off(qs.len() - tail_len);
    tail.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let order_q = if tail.len() % 2 == 1 {
        tail[tail.len() / 2]
    } else {
        0.5 * (tail[tail.len() / 2 - 1] + tail[tail.len() / 2])
    };
    let ratios_monotone_to_zero =
        ratio_tail.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)) && ratio_tail.last().map_or(false, |&r| r < 0.5);
    let classification = if order_q >= 1.8 {
        RateClass::Quadratic
    } else if order_q >= 1.1 && ratios_monotone_to_zero {
        RateClass::Superlinear
    } else {
        RateClass::Linear
    };
    Ok(RateEstimate { order_q, ratio_tail, classification })
}

// ---------------------------------------------------------------------------
// Assumption probes
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct Region {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone)]
pub struct OmegaStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Samples with `dist > 1e−12` that entered the statistics.
    pub used: usize,
    pub seed: u64,
}

fn sample_ball(center: &Vector, radius: f64, samples: usize, seed: u64) -> Vec<Vector> {
    let n = center.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| {
            // uniform in the ball: gaussian direction, radius ∝ u^{1/n}
            let mut dir = Vector::from_fn(n, |_, _| {
                let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
                let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                (-2.0 * u1.ln()).sqrt() * u2.cos()
            });
            let norm = dir.norm();
            if norm > 0.0 {
                dir /= norm;
            }
            let u: f64 = rng.gen_range(0.0..1.0);
            center + dir * (radius * u.powf(1.0 / n as f64))
        })
        .collect()
}

/// Error-bound ratios `‖J(x)ᵀF(x)‖ / dist(x, X*)` at explicit points;
/// points with `dist ≤ 1e−12` are skipped.
pub fn error_bound_ratios(
    problem: &(impl NlsProblem + Sync + ?Sized),
    points: &[Vector],
) -> Result<Vec<f64>, DiagnosticsError> {
    let ratios = par_map(points, |x| {
        let dist = problem.dist_oracle(x)?;
        if dist <= 1e-12 {
            return None;
        }
        let g = eval_gradient(problem, x).ok()?;
        Some(g.norm() / dist)
    });
    if points.is_empty() || ratios.iter().all(|r| r.is_none()) && points.iter().any(|x| problem.dist_oracle(x).is_none()) {
        return Err(DiagnosticsError::NoDistOracle);
    }
    Ok(ratios.into_iter().flatten().collect())
}

/// Samples the error-bound ratio over a ball around `center`.
pub fn probe_error_bound(
    problem: &(impl NlsProblem + Sync + ?Sized),
    center: &Vector,
    radius: f64,
    samples: usize,
    seed: u64,
) -> Result<OmegaStats, DiagnosticsError> {
    if problem.dist_oracle(center).is_none() {
        return Err(DiagnosticsError::NoDistOracle);
    }
    let points = sample_ball(center, radius, samples, seed);
    let ratios = error_bound_ratios(problem, &points)?;
    let used = ratios.len();
    let (mut min, mut max, mut sum) = (f64::INFINITY, 0.0f64, 0.0f64);
    for r in &ratios {
        min = min.min(*r);
        max = max.max(*r);
        sum += r;
    }
    Ok(OmegaStats { min, max, mean: sum / used.max(1) as f64, used, seed })
}

#[derive(Debug, Clone)]
pub struct LinearizationFit {
    /// Worst-case constant `C` such that `‖(J(x)−J(z))ᵀF(z)‖ ≤ C‖x−z‖^{1+r}`
    /// over the sampled pairs, at the fitted exponent.
    pub c: f64,
    /// Fitted exponent `r` from the log-log least-squares slope `1 + r`.
    pub r: f64,
    /// True when the log-log residual spread exceeds one decade or the
    /// fitted exponent leaves `(0, 1.5]`.
    pub no_fit: bool,
    /// True when the left-hand side vanishes for every pair.
    pub degenerate_zero: bool,
    pub pairs: usize,
}

/// Fits `log‖(J(x)−J(z))ᵀF(z)‖ = log C + (1+r)·log‖x−z‖` over all pairs
/// of test points `x` and verified stationary points `z`.
pub fn probe_linearization(
    problem: &(impl NlsProblem + Sync + ?Sized),
    stationary_points: &[Vector],
    test_points: &[Vector],
) -> Result<LinearizationFit, DiagnosticsError> {
    if stationary_points.is_empty() {
        return Err(DiagnosticsError::NoStationarySamples);
    }
    for z in stationary_points {
        let g = eval_gradient(problem, z).map_err(|_| DiagnosticsError::NoStationarySamples)?;
        if g.norm() > 1e-10 {
            return Err(DiagnosticsError::NoStationarySamples);
        }
    }
    let mut samples: Vec<(f64, f64)> = Vec::new(); // (log t, log y)
    let mut pairs = 0usize;
    let mut nonzero = false;
    for x in test_points {
        // the bound is stated against the projection of x onto the
        // stationary set, so pair x with its nearest sampled point only
        let z = stationary_points
            .iter()
            .min_by(|a, b| (x - *a).norm().total_cmp(&(x - *b).norm()))
            .expect("non-empty stationary sample set");
        let t = (x - z).norm();
        if t <= 1e-14 {
            continue;
        }
        pairs += 1;
        let fz = problem.residual(z);
        let dj = problem.jacobian(x) - problem.jacobian(z);
        let y = (dj.transpose() * &fz).norm();
        // scale-aware zero test: treat catastrophic cancellation in
        // ΔJᵀF(z) (relative to ‖ΔJ‖·‖F(z)‖) as an exact zero
        let scale = linalg::spectral_norm(&dj) * fz.norm();
        if y > 1e-15 && y > 1e-12 * scale {
            nonzero = true;
            samples.push((t.ln(), y.ln()));
        }
    }
    if !nonzero {
        return Ok(LinearizationFit { c: 0.0, r: f64::NAN, no_fit: false, degenerate_zero: true, pairs });
    }
    // least-squares line log y = a + b·log t
    let n = samples.len() as f64;
    let (st, sy) = samples.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + t, b + y));
    let (mt, my) = (st / n, sy / n);
    let (mut num, mut den) = (0.0, 0.0);
    for (t, y) in &samples {
        num += (t - mt) * (y - my);
        den += (t - mt) * (t - mt);
    }
    let b = if den > 0.0 { num / den } else { f64::NAN };
    let a = my - b * mt;
    let r = b - 1.0;
    let mut resid_min = f64::INFINITY;
    let mut resid_max = f64::NEG_INFINITY;
    for (t, y) in &samples {
        let resid = y - (a + b * t);
        resid_min = resid_min.min(resid);
        resid_max = resid_max.max(resid);
    }
    // one decade in natural log
    let spread_ok = (resid_max - resid_min) <= std::f64::consts::LN_10;
    let r_ok = r > 0.0 && r <= 1.5;
    // worst-case C at the fitted exponent
    let c = samples
        .iter()
        .map(|(t, y)| (y - b * t).exp())
        .fold(0.0f64, f64::max);
    Ok(LinearizationFit { c, r, no_fit: !(spread_ok && r_ok), degenerate_zero: false, pairs })
}

/// Max over sampled pairs of `‖J(x)−J(y)‖ / ‖x−y‖` (spectral norm).
pub fn probe_lipschitz(
    problem: &(impl NlsProblem + Sync + ?Sized),
    center: &Vector,
    radius: f64,
    samples: usize,
    seed: u64,
) -> f64 {
    assert!(radius > 0.0 && samples >= 2);
    let points = sample_ball(center, radius, samples, seed);
    let jacs = par_map(&points, |x| problem.jacobian(x));
    let idx: Vec<usize> = (0..points.len()).collect();
    let per_i = par_map(&idx, |&i| {
        let mut best = 0.0f64;
        for k in i + 1..points.len() {
            let sep = (&points[i] - &points[k]).norm();
            if sep <= 1e-14 {
                continue;
            }
            best = best.max(linalg::spectral_norm(&(&jacs[i] - &jacs[k])) / sep);
        }
        best
    });
    per_i.into_iter().fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Completeness scan
// ---------------------------------------------------------------------------

/// Rectangular evaluation grid: inclusive ranges with fixed step per axis.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub x1: (f64, f64, f64), // (lo, hi, step)
    pub x2: (f64, f64, f64),
}

impl GridSpec {
    pub fn square(lo: f64, hi: f64, step: f64) -> Self {
        Self { x1: (lo, hi, step), x2: (lo, hi, step) }
    }

    fn axis(&self, which: usize) -> Vec<f64> {
        let (lo, hi, step) = if which == 0 { self.x1 } else { self.x2 };
        assert!(step > 0.0 && hi >= lo);
        let count = ((hi - lo) / step).round() as usize;
        (0..=count).map(|i| lo + i as f64 * step).collect()
    }

    pub fn points(&self) -> Vec<Vector> {
        let xs = self.axis(0);
        let ys = self.axis(1);
        let mut pts = Vec::with_capacity(xs.len() * ys.len());
        for &a in &xs {
            for &b in &ys {
                pts.push(Vector::from_column_slice(&[a, b]));
            }
        }
        pts
    }
}

#[derive(Debug, Clone)]
pub struct CompletenessScan {
    /// `(point, gamma)` in row-major grid order.
    pub values: Vec<(Vector, f64)>,
    /// Indices into `values` where the scale-relative completeness test
    /// fails.
    pub violations: Vec<usize>,
}

impl CompletenessScan {
    /// CSV with header `x1,x2,gamma`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x1,x2,gamma\n");
        for (x, g) in &self.values {
            let _ = writeln!(out, "{:.17e},{:.17e},{:.17e}", x[0], x[1], g);
        }
        out
    }
}

/// Evaluates `completeness_gamma(J(x), L)` on the grid and flags points
/// violating the scale-relative completeness test.
pub fn completeness_scan(
    problem: &(impl NlsProblem + Sync + ?Sized),
    l: &ScalingSpec,
    grid: &GridSpec,
) -> CompletenessScan {
    let pts = grid.points();
    let values: Vec<(Vector, f64, bool)> = par_map(&pts, |x| {
        let j = problem.jacobian(x);
        let gamma = linalg::completeness_gamma(&j, l.matrix()).unwrap_or(0.0);
        let violated = linalg::completeness_violated(gamma, &j, l.matrix());
        (x.clone(), gamma, violated)
    });
    let violations = values
        .iter()
        .enumerate()
        .filter_map(|(i, (_, _, v))| v.then_some(i))
        .collect();
    CompletenessScan {
        values: values.into_iter().map(|(x, g, _)| (x, g)).collect(),
        violations,
    }
}

// ---------------------------------------------------------------------------
// Trace audit
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct AuditViolation {
    pub index: usize,
    pub check: &'static str,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct AuditReport {
    pub violations: Vec<AuditViolation>,
    /// Strict-monotonicity diagnostic on φ across the whole trace; not an
    /// asserted invariant (the full-step branch guarantees gradient
    /// decrease, not φ decrease).
    pub phi_monotone: bool,
    pub checks_run: usize,
}

impl AuditReport {
    pub fn to_report(&self) -> String {
        let mut out = String::from("[audit]\n");
        let _ = writeln!(out, "checks_run: {}", self.checks_run);
        let _ = writeln!(out, "violations: {}", self.violations.len());
        let _ = writeln!(out, "phi_monotone: {}", self.phi_monotone);
        for v in &self.violations {
            let _ = writeln!(out, "violation: k={} check={} {}", v.index, v.check, v.detail);
        }
        out
    }
}

/// Recomputes, per iterate that took a step, the factorization bounds
/// `‖X_k‖ ≤ 1/√γ_k` (only when `γ_k > 1e−8`) and
/// `‖blockdiag(Γ_k, I)‖ ≤ max{1, 1/λ_k}`, plus the direction-quality
/// inequality: `∇φᵀd ≤ −γ_k·min{1, λ_k}·‖d‖²` for scaled directions and
/// `−∇φᵀd ≥ λ_k‖d‖²` for safeguard directions.
pub fn audit_trace(
    trace: &SolveTrace,
    problem: &(impl NlsProblem + Sync + ?Sized),
    l: &ScalingSpec,
) -> AuditReport {
    const SLACK: f64 = 1e-8;
    let mut violations = Vec::new();
    let mut checks_run = 0usize;
    for rec in &trace.records {
        if rec.direction.norm() == 0.0 {
            continue;
        }
        let j = problem.jacobian(&rec.x);
        let g = j.transpose() * problem.residual(&rec.x);
        let d = &rec.direction;
        let gamma = linalg::completeness_gamma(&j, l.matrix()).unwrap_or(0.0);
        match rec.dir_kind {
            DirKind::Scaled => {
                checks_run += 1;
                let lhs = g.dot(d);
                let rhs = -gamma * rec.lambda.min(1.0) * d.norm_squared();
                if lhs > rhs + SLACK * g.norm() * d.norm() {
                    violations.push(AuditViolation {
                        index: rec.k,
                        check: "angle-condition",
                        detail: format!("gᵀd = {lhs:.6e} > bound {rhs:.6e}"),
                    });
                }
            }
            DirKind::SafeguardLm => {
                checks_run += 1;
                let lhs = -g.dot(d);
                let rhs = rec.lambda * d.norm_squared();
                if lhs < rhs * (1.0 - 1e-10) - SLACK {
                    violations.push(AuditViolation {
                        index: rec.k,
                        check: "safeguard-angle",
                        detail: format!("−gᵀd = {lhs:.6e} < λ‖d‖² = {rhs:.6e}"),
                    });
                }
            }
        }
        if rec.dir_kind == DirKind::Scaled {
            if let Ok(fac) = linalg::gsvd(&j, l.matrix()) {
                if gamma > 1e-8 {
                    checks_run += 1;
                    let xnorm = linalg::spectral_norm(&fac.x);
                    let bound = 1.0 / gamma.sqrt();
                    if xnorm > bound * (1.0 + SLACK) {
                        violations.push(AuditViolation {
                            index: rec.k,
                            check: "x-norm",
                            detail: format!("‖X‖ = {xnorm:.6e} > 1/√γ = {bound:.6e}"),
                        });
                    }
                }
                checks_run += 1;
                let gmax = fac
                    .gamma_block_diagonal(rec.lambda)
                    .into_iter()
                    .fold(0.0f64, f64::max);
                let bound = 1.0f64.max(1.0 / rec.lambda);
                if gmax > bound * (1.0 + SLACK) {
                    violations.push(AuditViolation {
                        index: rec.k,
                        check: "gamma-block",
                        detail: format!("‖blockdiag(Γ,I)‖ = {gmax:.6e} > {bound:.6e}"),
                    });
                }
            }
        }
    }
    let phi_monotone = trace.records.windows(2).all(|w| w[1].phi <= w[0].phi);
    AuditReport { violations, phi_monotone, checks_run }
}

// ---------------------------------------------------------------------------
// Combined report
// ---------------------------------------------------------------------------

/// Empirical estimates for the convergence assumptions over a sampled
/// region. Fields are filled by whichever probes were requested.
#[derive(Debug, Clone, Default)]
pub struct AssumptionReport {
    pub gamma_min: Option<f64>,
    pub omega: Option<OmegaStats>,
    pub lipschitz_estimate: Option<f64>,
    pub linearization: Option<LinearizationFit>,
    pub sample_count: usize,
    pub region: Option<Region>,
}

impl AssumptionReport {
    /// `key: value` lines, one section per probe.
    pub fn to_report(&self) -> String {
        let mut out = String::new();
        if let Some(r) = &self.region {
            let _ = writeln!(out, "[region]\ncenter: {:.17e};{:.17e}\nradius: {:.17e}", r.center[0], r.center[1], r.radius);
        }
        let _ = writeln!(out, "[samples]\ncount: {}", self.sample_count);
        if let Some(g) = self.gamma_min {
            let _ = writeln!(out, "[completeness]\ngamma_min: {g:.17e}");
        }
        if let Some(o) = &self.omega {
            let _ = writeln!(
                out,
                "[error-bound]\nomega_min: {:.17e}\nomega_max: {:.17e}\nomega_mean: {:.17e}\nused: {}\nseed: {}",
                o.min, o.max, o.mean, o.used, o.seed
            );
        }
        if let Some(l0) = self.lipschitz_estimate {
            let _ = writeln!(out, "[lipschitz]\nestimate: {l0:.17e}");
        }
        if let Some(f) = &self.linearization {
            let _ = writeln!(
                out,
                "[linearization]\nc: {:.17e}\nr: {:.17e}\nno_fit: {}\ndegenerate_zero: {}\npairs: {}",
                f.c, f.r, f.no_fit, f.degenerate_zero, f.pairs
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::problem::builtin_problem;
    use crate::solver::{algorithm1_solve, SolveStatus, SolverConfig};
    use approx::assert_relative_eq;

    fn vec2(a: f64, b: f64) -> Vector {
        Vector::from_column_slice(&[a, b])
    }

    #[test]
    fn rate_exact_quadratic() {
        let est = estimate_rate(&[1e-1, 1e-2, 1e-4, 1e-8]).unwrap();
        assert_relative_eq!(est.order_q, 2.0, epsilon = 1e-12);
        assert_eq!(est.classification, RateClass::Quadratic);
    }

    #[test]
    fn rate_reference_table_sequence() {
        let est = estimate_rate(&[1.3506e-1, 1.7762e-2, 3.2402e-7, 1.1546e-14]).unwrap();
        assert_eq!(est.classification, RateClass::Quadratic);
    }

    #[test]
    fn rate_geometric_is_linear() {
        let est = estimate_rate(&[1.0, 0.5, 0.25, 0.125]).unwrap();
        assert_relative_eq!(est.order_q, 1.0, epsilon = 1e-12);
        assert_eq!(est.classification, RateClass::Linear);
    }

    #[test]
    fn rate_superlinear_classification() {
        // d_{k+1} = d_k^{1.5}
        let mut seq = vec![0.5f64];
        for _ in 0..5 {
            let last = *seq.last().unwrap();
            seq.push(last.powf(1.5));
        }
        let est = estimate_rate(&seq).unwrap();
        assert!(est.order_q > 1.1 && est.order_q < 1.8);
        assert_eq!(est.classification, RateClass::Superlinear);
    }

    #[test]
    fn rate_errors_and_scale_invariance() {
        assert!(matches!(estimate_rate(&[1.0, 0.5, 0.25]), Err(DiagnosticsError::TooShort)));
        assert!(matches!(
            estimate_rate(&[1.0, 2.0, 0.5, 0.1]),
            Err(DiagnosticsError::NotDecreasing)
        ));
        let a = estimate_rate(&[1e-1, 1e-2, 1e-4, 1e-8]).unwrap();
        let b = estimate_rate(&[7e-1, 7e-2, 7e-4, 7e-8]).unwrap();
        assert_relative_eq!(a.order_q, b.order_q, epsilon = 1e-6);
    }

    #[test]
    fn rate_drops_roundoff_entries() {
        // trailing roundoff-level entry must not flip the classification
        let est = estimate_rate(&[1e-1, 1e-2, 1e-4, 1e-8, 1e-16]).unwrap();
        assert_eq!(est.classification, RateClass::Quadratic);
    }

    #[test]
    fn error_bound_holds_on_ex1() {
        let (ex1, _, _) = builtin_problem("ex1").unwrap();
        let stats =
            probe_error_bound(&ex1, &vec2(0.0, 5.0f64.sqrt()), 0.5, 200, 7).unwrap();
        assert!(stats.used > 100);
        assert!(stats.min > 0.1, "ex1 error bound should hold, min = {}", stats.min);
    }

    #[test]
    fn error_bound_fails_along_ex3_sequence() {
        let (ex3, _, _) = builtin_problem("ex3").unwrap();
        let points: Vec<Vector> =
            (1..=50).map(|k| vec2(1.0 / k as f64, -1.0 / k as f64)).collect();
        let ratios = error_bound_ratios(&ex3, &points).unwrap();
        assert_eq!(ratios.len(), 50);
        assert!(ratios.windows(2).all(|w| w[1] < w[0]));
        assert!(ratios[49] < 1e-2);
    }

    #[test]
    fn error_bound_requires_oracle() {
        struct NoOracle;
        impl NlsProblem for NoOracle {
            fn name(&self) -> &str {
                "nooracle"
            }
            fn residual_dim(&self) -> usize {
                2
            }
            fn var_dim(&self) -> usize {
                2
            }
            fn residual(&self, x: &Vector) -> Vector {
                x.clone()
            }
        }
        assert!(matches!(
            probe_error_bound(&NoOracle, &vec2(0.0, 0.0), 1.0, 10, 1),
            Err(DiagnosticsError::NoDistOracle)
        ));
    }

    #[test]
    fn probe_determinism_across_calls() {
        let (ex1, _, _) = builtin_problem("ex1").unwrap();
        let a = probe_error_bound(&ex1, &vec2(0.0, 5.0f64.sqrt()), 0.5, 100, 3).unwrap();
        let b = probe_error_bound(&ex1, &vec2(0.0, 5.0f64.sqrt()), 0.5, 100, 3).unwrap();
        assert_eq!(a.min.to_bits(), b.min.to_bits());
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    }

    #[test]
    fn linearization_fit_ex2_r_equals_one() {
        // at z = (0, t): (J(x)−J(z))ᵀF(z) = (6x₁², 0), so the exact fit
        // is C = 6, exponent 1 + r = 2
        let (ex2, _, _) = builtin_problem("ex2").unwrap();
        let stationary: Vec<Vector> = vec![vec2(0.0, 2.0)];
        let tests: Vec<Vector> =
            (1..=20).map(|i| vec2(0.3 / i as f64, 2.0)).collect();
        let fit = probe_linearization(&ex2, &stationary, &tests).unwrap();
        assert!(!fit.degenerate_zero);
        assert!(!fit.no_fit, "fit should succeed, r = {}", fit.r);
        assert_relative_eq!(fit.r, 1.0, max_relative = 1e-6);
        assert_relative_eq!(fit.c, 6.0, max_relative = 1e-6);
    }

    #[test]
    fn linearization_degenerate_zero_on_ex1_circle() {
        // both rows of ex1's Jacobian are equal and F₁ + F₂ = 0 on the
        // stationary circle, so ΔJᵀF(z) vanishes identically; the probe
        // must report the degenerate zero case, not fit roundoff noise
        let (ex1, _, _) = builtin_problem("ex1").unwrap();
        let sqrt5 = 5.0f64.sqrt();
        let stationary: Vec<Vector> = (0..8)
            .map(|i| {
                let t = i as f64 * std::f64::consts::TAU / 8.0;
                vec2(sqrt5 * t.cos(), sqrt5 * t.sin())
            })
            .collect();
        let tests: Vec<Vector> = (1..=20)
            .map(|i| {
                let eps = 0.3 / i as f64;
                vec2(eps, sqrt5 + eps)
            })
            .collect();
        let fit = probe_linearization(&ex1, &stationary, &tests).unwrap();
        assert!(fit.degenerate_zero);
    }

    #[test]
    fn linearization_degenerate_zero_on_ex3_origin() {
        let (ex3, _, _) = builtin_problem("ex3").unwrap();
        let fit = probe_linearization(
            &ex3,
            &[vec2(0.0, 0.0)],
            &[vec2(0.5, 0.5), vec2(-1.0, 2.0), vec2(0.1, -0.1)],
        )
        .unwrap();
        assert!(fit.degenerate_zero);
        assert_eq!(fit.c, 0.0);
    }

    #[test]
    fn linearization_zero_for_affine_residual() {
        struct Affine;
        impl NlsProblem for Affine {
            fn name(&self) -> &str {
                "affine"
            }
            fn residual_dim(&self) -> usize {
                2
            }
            fn var_dim(&self) -> usize {
                2
            }
            fn residual(&self, x: &Vector) -> Vector {
                vec2(x[0] + 2.0 * x[1] + 1.0, x[0] - x[1] + 3.0)
            }
            fn jacobian(&self, _x: &Vector) -> Matrix {
                Matrix::from_row_slice(2, 2, &[1.0, 2.0, 1.0, -1.0])
            }
        }
        // stationary point of ½‖Ax+b‖²: solve AᵀAx = −Aᵀb
        let a = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 1.0, -1.0]);
        let b = vec2(1.0, 3.0);
        let z = (a.transpose() * &a).try_inverse().unwrap() * (-(a.transpose() * b));
        let fit =
            probe_linearization(&Affine, &[z], &[vec2(1.0, 1.0), vec2(-2.0, 0.5)]).unwrap();
        assert!(fit.degenerate_zero);
    }

    #[test]
    fn linearization_requires_verified_stationary_points() {
        let (ex1, _, _) = builtin_problem("ex1").unwrap();
        assert!(matches!(
            probe_linearization(&ex1, &[], &[vec2(1.0, 1.0)]),
            Err(DiagnosticsError::NoStationarySamples)
        ));
        assert!(matches!(
            probe_linearization(&ex1, &[vec2(1.0, 1.0)], &[vec2(0.5, 2.0)]),
            Err(DiagnosticsError::NoStationarySamples)
        ));
    }

    #[test]
    fn lipschitz_ex3_bounded_by_two() {
        let (ex3, _, _) = builtin_problem("ex3").unwrap();
        let est = probe_lipschitz(&ex3, &vec2(0.0, 0.0), 3.0, 120, 11);
        assert!(est <= 2.0 + 1e-6, "estimate {est}");
        assert!(est > 1.0, "estimate should approach 2, got {est}");
    }

    #[test]
    fn lipschitz_stable_across_seeds() {
        let (ex1, _, _) = builtin_problem("ex1").unwrap();
        let center = vec2(0.0, 5.0f64.sqrt());
        let a = probe_lipschitz(&ex1, &center, 1.0, 150, 5);
        let b = probe_lipschitz(&ex1, &center, 1.0, 150, 17);
        assert!((a - b).abs() <= 0.1 * a.max(b));
    }

    #[test]
    fn completeness_scan_flags_the_line() {
        let (ex1, l, _) = builtin_problem("ex1").unwrap();
        let scan = completeness_scan(&ex1, &l, &GridSpec::square(-3.0, 3.0, 0.5));
        assert!(!scan.violations.is_empty());
        for &i in &scan.violations {
            let (x, _) = &scan.values[i];
            assert!(
                (x[1] + x[0]).abs() <= 0.5 + 1e-12,
                "violation off the line x₂ = −x₁: {x:?}"
            );
        }
        // every on-line grid point is flagged
        for (i, (x, _)) in scan.values.iter().enumerate() {
            if (x[1] + x[0]).abs() < 1e-12 {
                assert!(scan.violations.contains(&i), "missed on-line point {x:?}");
            }
        }
        // symmetry of the violation set under (x₁,x₂) → (−x₂,−x₁)
        let vset: Vec<(i64, i64)> = scan
            .violations
            .iter()
            .map(|&i| {
                let (x, _) = &scan.values[i];
                ((x[0] * 2.0).round() as i64, (x[1] * 2.0).round() as i64)
            })
            .collect();
        for &(a, b) in &vset {
            assert!(vset.contains(&(-b, -a)));
        }
    }

    #[test]
    fn completeness_scan_identity_scaling_never_flags() {
        let (ex1, _, _) = builtin_problem("ex1").unwrap();
        let l = ScalingSpec::identity(2);
        let scan = completeness_scan(&ex1, &l, &GridSpec::square(-2.0, 2.0, 0.5));
        assert!(scan.violations.is_empty());
    }

    #[test]
    fn completeness_scan_ex2_clean_off_axis() {
        let (ex2, l, _) = builtin_problem("ex2").unwrap();
        let scan = completeness_scan(&ex2, &l, &GridSpec::square(0.25, 2.25, 0.25));
        assert!(scan.violations.is_empty());
    }

    #[test]
    fn scan_csv_shape() {
        let (ex1, l, _) = builtin_problem("ex1").unwrap();
        let scan = completeness_scan(&ex1, &l, &GridSpec::square(-1.0, 1.0, 1.0));
        let csv = scan.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("x1,x2,gamma"));
        assert_eq!(lines.count(), 9);
    }

    #[test]
    fn audit_clean_on_reference_runs() {
        let (ex1, l1, starts1) = builtin_problem("ex1").unwrap();
        let trace = algorithm1_solve(&ex1, &l1, &starts1[0], &SolverConfig::default()).unwrap();
        let report = audit_trace(&trace, &ex1, &l1);
        assert!(report.violations.is_empty(), "{:?}", report.violations);
        assert!(report.checks_run > 0);

        let (ex2, l2, starts2) = builtin_problem("ex2").unwrap();
        let config = SolverConfig { grad_tol: 1e-10, ..Default::default() };
        let trace2 = algorithm1_solve(&ex2, &l2, &starts2[0], &config).unwrap();
        assert_eq!(trace2.status, SolveStatus::Converged);
        let report2 = audit_trace(&trace2, &ex2, &l2);
        assert!(report2.violations.is_empty(), "{:?}", report2.violations);
    }

    #[test]
    fn audit_flags_fabricated_sign_flip() {
        let (ex1, l, starts) = builtin_problem("ex1").unwrap();
        let mut trace = algorithm1_solve(&ex1, &l, &starts[0], &SolverConfig::default()).unwrap();
        let flipped = -&trace.records[0].direction;
        trace.records[0].direction = flipped;
        let report = audit_trace(&trace, &ex1, &l);
        assert!(report
            .violations
            .iter()
            .any(|v| v.index == 0 && v.check == "angle-condition"));
    }

    #[test]
    fn report_serialization_contains_sections() {
        let (ex1, _, _) = builtin_problem("ex1").unwrap();
        let omega = probe_error_bound(&ex1, &vec2(0.0, 5.0f64.sqrt()), 0.5, 50, 7).unwrap();
        let report = AssumptionReport {
            gamma_min: Some(0.5),
            omega: Some(omega),
            lipschitz_estimate: Some(2.0),
            linearization: None,
            sample_count: 50,
            region: Some(Region { center: [0.0, 5.0f64.sqrt()], radius: 0.5 }),
        };
        let text = report.to_report();
        for needle in ["[region]", "[samples]", "[completeness]", "[error-bound]", "[lipschitz]", "seed: 7"] {
            assert!(text.contains(needle), "missing {needle} in report:\n{text}");
        }
    }

    #[test]
    fn par_map_preserves_order() {
        let items: Vec<i64> = (0..1000).collect();
        let out = par_map(&items, |&i| i * 2);
        assert_eq!(out, items.iter().map(|i| i * 2).collect::<Vec<_>>());
    }
}
