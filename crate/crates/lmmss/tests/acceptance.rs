//! Acceptance gate: one test per criterion, each emitting an explicit
//! `CRITERION <n>: pass|fail` line with per-check detail on failure.
//!
//! Reference values are embedded as data from the published tables; known
//! inconsistencies in those tables (see the repository notes) are asserted
//! as stated, so the affected sub-checks fail honestly rather than being
//! silently patched.

use lmmss::diagnostics::{
    audit_trace, completeness_scan, error_bound_ratios, estimate_rate, probe_lipschitz,
    GridSpec, RateClass,
};
use lmmss::linalg::{self, Matrix, Vector};
use lmmss::problem::{builtin_problem, NlsProblem, ScalingSpec};
use lmmss::solver::{
    algorithm1_solve, pure_solve, SolveStatus, SolveTrace, SolverConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

struct Checker {
    id: &'static str,
    failures: Vec<String>,
}

impl Checker {
    fn new(id: &'static str) -> Self {
        Self { id, failures: Vec::new() }
    }

    fn check(&mut self, ok: bool, msg: impl Into<String>) {
        if !ok {
            self.failures.push(msg.into());
        }
    }

    /// Relative agreement to 3 significant digits.
    fn check_sig3(&mut self, got: f64, want: f64, what: &str) {
        let rel = (got - want).abs() / want.abs();
        self.check(
            rel <= 1e-3,
            format!("{what}: got {got:.5e}, want {want:.5e} (rel {rel:.2e})"),
        );
    }

    /// Order-of-magnitude agreement for roundoff-level entries.
    fn check_order(&mut self, got: f64, want: f64, what: &str) {
        let ratio = got / want;
        self.check(
            (0.1..=10.0).contains(&ratio),
            format!("{what}: got {got:.5e}, want order of {want:.5e}"),
        );
    }

    fn finish(self) {
        if self.failures.is_empty() {
            println!("CRITERION {}: pass", self.id);
        } else {
            println!("CRITERION {}: fail", self.id);
            for f in &self.failures {
                println!("  - {f}");
            }
            panic!("CRITERION {}: fail ({} sub-checks)", self.id, self.failures.len());
        }
    }
}

fn vec2(a: f64, b: f64) -> Vector {
    Vector::from_column_slice(&[a, b])
}

// Embedded reference data (published Tables 1-3).
const TABLE1_LEFT_GRAD: [f64; 4] = [1.2242, 1.5890e-1, 2.8982e-6, 1.0659e-13];
const TABLE1_LEFT_DIST: [f64; 4] = [1.3506e-1, 1.7762e-2, 3.2402e-7, 1.1546e-14];
const TABLE1_RIGHT_GRAD: [f64; 3] = [3.9643e-1, 1.7729e-3, 3.4523e-8];
const TABLE1_RIGHT_DIST: [f64; 3] = [4.4521e-2, 1.9821e-4, 3.8598e-9];
const TABLE2_LMM: [f64; 5] = [3.7143e-1, 6.0270e-2, 1.0055e-3, 2.4684e-7, 1.4833e-14];
const TABLE2_LMMSS: [f64; 5] = [1.5307e-1, 1.3438e-2, 1.7991e-4, 3.0097e-8, 7.5482e-16];
const TABLE3_START1: [f64; 6] =
    [2.0097, 8.0542e-1, 1.5845e-1, 1.9403e-3, 3.6524e-9, 7.4734e-17];
const TABLE3_START2: [f64; 5] = [1.2571, 3.8494e-1, 2.4840e-2, 7.6586e-6, 2.6331e-16];

fn table1_traces() -> (SolveTrace, SolveTrace) {
    let (ex1, l, starts) = builtin_problem("ex1").unwrap();
    let config = SolverConfig::default(); // grad_tol = 1e-8, r = 1
    let left = pure_solve(&ex1, &l, &starts[0], &config).unwrap();
    let right = pure_solve(&ex1, &l, &starts[1], &config).unwrap();
    (left, right)
}

fn table2_traces() -> (SolveTrace, SolveTrace) {
    let (ex2, l, starts) = builtin_problem("ex2").unwrap();
    let config = SolverConfig { grad_tol: 1e-10, ..Default::default() };
    let lmm = pure_solve(&ex2, &ScalingSpec::identity(2), &starts[0], &config).unwrap();
    let lmmss = pure_solve(&ex2, &l, &starts[0], &config).unwrap();
    (lmm, lmmss)
}

fn table3_traces() -> (SolveTrace, SolveTrace) {
    let (ex3, l, starts) = builtin_problem("ex3").unwrap();
    let config = SolverConfig { grad_tol: 1e-10, ..Default::default() };
    let a = pure_solve(&ex3, &l, &starts[0], &config).unwrap();
    let b = pure_solve(&ex3, &l, &starts[1], &config).unwrap();
    (a, b)
}

#[test]
fn criterion_1_table1_reproduction() {
    let mut c = Checker::new("1 (table 1 reproduction)");
    let t0 = Instant::now();
    let (ex1, _, _) = builtin_problem("ex1").unwrap();
    let (left, right) = table1_traces();

    c.check(left.status == SolveStatus::Converged, "left run did not converge");
    c.check(
        left.iterations() == 3,
        format!("left run: {} iterations, want 3", left.iterations()),
    );
    let gn = left.grad_norms();
    for (k, want) in TABLE1_LEFT_GRAD[..3].iter().enumerate() {
        c.check_sig3(gn[k], *want, &format!("left grad_norm[{k}]"));
    }
    c.check_order(gn[3], TABLE1_LEFT_GRAD[3], "left grad_norm[3]");
    let sd: Vec<f64> = left
        .records
        .iter()
        .map(|r| ex1.surrogate_dist(&r.x).unwrap())
        .collect();
    for (k, want) in TABLE1_LEFT_DIST[..3].iter().enumerate() {
        c.check_sig3(sd[k], *want, &format!("left surrogate-dist[{k}]"));
    }
    c.check_order(sd[3], TABLE1_LEFT_DIST[3], "left surrogate-dist[3]");

    c.check(
        right.iterations() == 2,
        format!("right run: {} iterations, want 2", right.iterations()),
    );
    let gnr = right.grad_norms();
    let sdr: Vec<f64> = right
        .records
        .iter()
        .map(|r| ex1.surrogate_dist(&r.x).unwrap())
        .collect();
    for k in 0..2 {
        c.check_sig3(gnr[k], TABLE1_RIGHT_GRAD[k], &format!("right grad_norm[{k}]"));
        c.check_sig3(sdr[k], TABLE1_RIGHT_DIST[k], &format!("right surrogate-dist[{k}]"));
    }
    if gnr.len() > 2 {
        c.check_sig3(gnr[2], TABLE1_RIGHT_GRAD[2], "right grad_norm[2]");
        c.check_sig3(sdr[2], TABLE1_RIGHT_DIST[2], "right surrogate-dist[2]");
    }
    c.check(t0.elapsed().as_secs_f64() < 1.0, "runtime exceeded 1 s");
    c.finish();
}

#[test]
fn criterion_2_table2_reproduction() {
    let mut c = Checker::new("2 (table 2 reproduction)");
    let t0 = Instant::now();
    let (lmm, lmmss) = table2_traces();
    for (trace, table, name) in
        [(&lmm, &TABLE2_LMM, "LMM"), (&lmmss, &TABLE2_LMMSS, "LMMSS")]
    {
        c.check(
            trace.status == SolveStatus::Converged,
            format!("{name} run did not converge"),
        );
        let dists: Vec<f64> = trace.dists().into_iter().flatten().collect();
        c.check(
            dists.len() >= table.len() + 1,
            format!("{name}: only {} iterates", dists.len()),
        );
        for (k, want) in table.iter().enumerate() {
            let got = dists[k + 1]; // table rows start at k = 1
            if *want >= 1e-7 {
                c.check_sig3(got, *want, &format!("{name} dist[{}]", k + 1));
            } else {
                c.check_order(got, *want, &format!("{name} dist[{}]", k + 1));
            }
        }
    }
    c.check(t0.elapsed().as_secs_f64() < 1.0, "runtime exceeded 1 s");
    c.finish();
}

#[test]
fn criterion_3_table3_reproduction() {
    let mut c = Checker::new("3 (table 3 reproduction)");
    let t0 = Instant::now();
    let (a, b) = table3_traces();
    let refs: [(&SolveTrace, &[f64], &str); 2] =
        [(&a, &TABLE3_START1, "(3,3)"), (&b, &TABLE3_START2, "(-2,-2)")];
    for (trace, table, name) in refs {
        c.check(
            trace.status == SolveStatus::Converged,
            format!("{name} run did not converge"),
        );
        let dists: Vec<f64> = trace.dists().into_iter().flatten().collect();
        c.check(
            dists.len() == table.len() + 1,
            format!("{name}: {} rows after k=0, want {}", dists.len() - 1, table.len()),
        );
        for (k, want) in table.iter().enumerate() {
            let got = dists[k + 1];
            if *want >= 1e-8 {
                c.check_sig3(got, *want, &format!("{name} dist[{}]", k + 1));
            } else {
                c.check_order(got, *want, &format!("{name} dist[{}]", k + 1));
            }
        }
        for rec in &trace.records {
            c.check(
                (rec.x[0] - rec.x[1]).abs() <= 1e-12,
                format!("{name} iterate k={} left span{{(1,1)}}: {:?}", rec.k, rec.x),
            );
        }
    }
    c.check(t0.elapsed().as_secs_f64() < 1.0, "runtime exceeded 1 s");
    c.finish();
}

#[test]
fn criterion_4_rate_classification() {
    let mut c = Checker::new("4 (rate classification)");
    let (ex1, _, _) = builtin_problem("ex1").unwrap();
    let (left, _) = table1_traces();
    let (_, lmmss2) = table2_traces();
    let (t3a, _) = table3_traces();
    // the reproduced sequences follow the table layout: table 1 lists a
    // k = 0 row, tables 2 and 3 start at k = 1
    let seq1: Vec<f64> = left
        .records
        .iter()
        .map(|r| ex1.surrogate_dist(&r.x).unwrap())
        .collect();
    let seq2: Vec<f64> = lmmss2.dists().into_iter().flatten().skip(1).collect();
    let seq3: Vec<f64> = t3a.dists().into_iter().flatten().skip(1).collect();
    for (seq, name) in [(&seq1, "table1"), (&seq2, "table2-lmmss"), (&seq3, "table3")] {
        match estimate_rate(seq) {
            Ok(est) => c.check(
                est.classification == RateClass::Quadratic && est.order_q >= 1.8,
                format!(
                    "{name}: classified {} with order_q = {:.3}, want quadratic ≥ 1.8",
                    est.classification.as_str(),
                    est.order_q
                ),
            ),
            Err(e) => c.check(false, format!("{name}: rate estimation failed: {e}")),
        }
    }
    c.finish();
}

#[test]
fn criterion_5_safeguard_behavior() {
    let mut c = Checker::new("5 (safeguard behavior)");
    let (ex1, l, _) = builtin_problem("ex1").unwrap();
    let x0 = vec2(-1.0, 3.0);

    let t0 = Instant::now();
    let off = SolverConfig { safeguard_enabled: false, ..Default::default() };
    let stall = algorithm1_solve(&ex1, &l, &x0, &off).unwrap();
    c.check(
        stall.status == SolveStatus::LinesearchFailure,
        format!("safeguard off: status {:?}, want linesearch-failure", stall.status),
    );
    let xf = &stall.final_x;
    c.check(
        (xf[0] + xf[1]).abs() < 0.05,
        format!("safeguard off: |x₂+x₁| = {:.3e} at stall, want < 0.05", (xf[0] + xf[1]).abs()),
    );
    let gamma = linalg::completeness_gamma(&ex1.jacobian(xf), l.matrix()).unwrap();
    c.check(
        gamma < 1e-3,
        format!("safeguard off: completeness γ = {gamma:.3e} at stall, want < 1e-3"),
    );
    c.check(t0.elapsed().as_secs_f64() < 1.0, "safeguard-off runtime exceeded 1 s");

    let t1 = Instant::now();
    let on = algorithm1_solve(&ex1, &l, &x0, &SolverConfig::default()).unwrap();
    c.check(
        on.status == SolveStatus::Converged,
        format!("safeguard on: status {:?}, want converged", on.status),
    );
    let surr = ex1.surrogate_dist(&on.final_x).unwrap();
    c.check(
        surr < 1e-6,
        format!("safeguard on: |x₁²+x₂²−5| = {surr:.3e}, want < 1e-6"),
    );
    c.check(t1.elapsed().as_secs_f64() < 1.0, "safeguard-on runtime exceeded 1 s");
    c.finish();
}

#[test]
fn criterion_6_eventual_full_steps() {
    let mut c = Checker::new("6 (eventual full steps)");
    let (ex1, l1, starts1) = builtin_problem("ex1").unwrap();
    let (ex2, l2, starts2) = builtin_problem("ex2").unwrap();
    let (ex3, l3, starts3) = builtin_problem("ex3").unwrap();
    let tol8 = SolverConfig::default();
    let tol10 = SolverConfig { grad_tol: 1e-10, ..Default::default() };
    let runs: Vec<(&str, SolveTrace)> = vec![
        ("t1-left", algorithm1_solve(&ex1, &l1, &starts1[0], &tol8).unwrap()),
        ("t1-right", algorithm1_solve(&ex1, &l1, &starts1[1], &tol8).unwrap()),
        ("t2-lmm", algorithm1_solve(&ex2, &ScalingSpec::identity(2), &starts2[0], &tol10).unwrap()),
        ("t2-lmmss", algorithm1_solve(&ex2, &l2, &starts2[0], &tol10).unwrap()),
        ("t3-a", algorithm1_solve(&ex3, &l3, &starts3[0], &tol10).unwrap()),
        ("t3-b", algorithm1_solve(&ex3, &l3, &starts3[1], &tol10).unwrap()),
    ];
    for (name, trace) in &runs {
        c.check(
            trace.status == SolveStatus::Converged,
            format!("{name}: did not converge"),
        );
        // stepping records only; the terminal record takes no step
        let steps = &trace.records[..trace.records.len().saturating_sub(1)];
        for rec in steps.iter().skip(2) {
            c.check(
                rec.full_step_accepted,
                format!("{name}: iteration {} not a full step", rec.k),
            );
        }
    }
    c.finish();
}

#[test]
fn criterion_7_linear_algebra_property_suite() {
    let mut c = Checker::new("7 (linear algebra property suite)");
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20240817);
    let mut tested = 0usize;
    while tested < 200 {
        let n = rng.gen_range(1..=8usize);
        let m = rng.gen_range(n..=12usize);
        let p = rng.gen_range(1..=n);
        let a = Matrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0));
        let l = Matrix::from_fn(p, n, |_, _| rng.gen_range(-1.0..1.0));
        // keep only well-conditioned pairs
        let stacked_min = {
            let mut s = Matrix::zeros(m + p, n);
            s.view_mut((0, 0), (m, n)).copy_from(&a);
            s.view_mut((m, 0), (p, n)).copy_from(&l);
            s.svd(false, false).singular_values.iter().cloned().fold(f64::INFINITY, f64::min)
        };
        let l_min = l.clone().svd(false, false).singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
        if stacked_min < 0.3 || l_min < 0.1 {
            continue;
        }
        tested += 1;

        let fac = match linalg::gsvd(&a, &l) {
            Ok(f) => f,
            Err(e) => {
                c.check(false, format!("pair {tested} (m={m},n={n},p={p}): gsvd failed: {e}"));
                continue;
            }
        };
        let na = linalg::spectral_norm(&a).max(1e-300);
        let nl = linalg::spectral_norm(&l).max(1e-300);
        let ra = linalg::spectral_norm(&(fac.reconstruct_a() - &a)) / na;
        let rl = linalg::spectral_norm(&(fac.reconstruct_l() - &l)) / nl;
        c.check(ra <= 1e-10, format!("pair {tested}: A reconstruction residual {ra:.2e}"));
        c.check(rl <= 1e-10, format!("pair {tested}: L reconstruction residual {rl:.2e}"));
        for i in 0..p {
            let s = fac.sigma[i] * fac.sigma[i] + fac.mu[i] * fac.mu[i];
            c.check(
                (s - 1.0).abs() <= 1e-12,
                format!("pair {tested}: σ²+μ² = {s} at i={i}"),
            );
        }
        let gamma = linalg::completeness_gamma(&a, &l).unwrap();
        let xnorm = linalg::spectral_norm(&fac.x);
        c.check(
            xnorm <= (1.0 / gamma.sqrt()) * (1.0 + 1e-10),
            format!("pair {tested}: ‖X‖ = {xnorm:.6e} > 1/√γ = {:.6e}", 1.0 / gamma.sqrt()),
        );
        let xinv = fac.x.clone().try_inverse().unwrap();
        let bound = linalg::spectral_norm(&(a.transpose() * &a)) + nl * nl;
        c.check(
            linalg::spectral_norm(&xinv).powi(2) <= bound * (1.0 + 1e-10),
            format!("pair {tested}: ‖X⁻¹‖² exceeds ‖AᵀA‖+‖L‖²"),
        );

        let f = Vector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
        let lambda = 10f64.powf(rng.gen_range(-2.0..1.0));
        let d = linalg::solve_scaled_direction(&a, &f, &l, lambda).unwrap();
        let normal = (a.transpose() * &a + lambda * (l.transpose() * &l))
            .try_inverse()
            .unwrap()
            * (-(a.transpose() * &f));
        let scale = normal.norm().max(1e-300);
        c.check(
            (&d - &normal).norm() / scale <= 1e-8,
            format!("pair {tested}: solve vs normal-equation oracle diverge"),
        );
        let closed = fac.direction(lambda, &(a.transpose() * &f));
        c.check(
            (&d - &closed).norm() / scale <= 1e-8,
            format!("pair {tested}: solve vs GSVD closed form diverge"),
        );
    }
    c.check(t0.elapsed().as_secs_f64() < 10.0, "runtime exceeded 10 s");
    c.finish();
}

#[test]
fn criterion_8_assumption_probes() {
    let mut c = Checker::new("8 (assumption probes)");

    // error-bound failure on ex3 along x_k = (1/k, −1/k)
    let (ex3, _, _) = builtin_problem("ex3").unwrap();
    let points: Vec<Vector> = (1..=50).map(|k| vec2(1.0 / k as f64, -1.0 / k as f64)).collect();
    let ratios = error_bound_ratios(&ex3, &points).unwrap();
    c.check(ratios.len() == 50, "ex3 ratio sequence incomplete");
    c.check(
        ratios.windows(2).all(|w| w[1] < w[0]),
        "ex3 error-bound ratios not decreasing",
    );
    c.check(
        *ratios.last().unwrap() < 1e-2,
        format!("ex3 ratio at k=50 is {:.3e}, want < 1e-2", ratios.last().unwrap()),
    );

    // completeness scan flags exactly the grid points within one cell of
    // the line x₂ = −x₁
    let (ex1, l, _) = builtin_problem("ex1").unwrap();
    let step = 0.05;
    let scan = completeness_scan(&ex1, &l, &GridSpec::square(-3.0, 3.0, step));
    c.check(!scan.violations.is_empty(), "scan flagged nothing");
    for &i in &scan.violations {
        let (x, _) = &scan.values[i];
        c.check(
            (x[0] + x[1]).abs() <= step + 1e-9,
            format!("flag off the line at ({}, {})", x[0], x[1]),
        );
    }
    for (i, (x, _)) in scan.values.iter().enumerate() {
        if (x[0] + x[1]).abs() <= 1e-12 {
            c.check(
                scan.violations.contains(&i),
                format!("on-line grid point not flagged: ({}, {})", x[0], x[1]),
            );
        }
    }

    // Lipschitz probe on ex3
    let lip = probe_lipschitz(&ex3, &vec2(0.0, 0.0), 3.0, 150, 9);
    c.check(
        lip <= 2.0 + 1e-6,
        format!("ex3 Lipschitz estimate {lip:.8}, want ≤ 2 + 1e-6"),
    );
    c.finish();
}

#[test]
fn criterion_9_trace_audit() {
    let mut c = Checker::new("9 (trace audit)");
    let (ex1, l1, starts1) = builtin_problem("ex1").unwrap();
    let (ex2, l2, starts2) = builtin_problem("ex2").unwrap();
    let (ex3, l3, starts3) = builtin_problem("ex3").unwrap();
    let tol8 = SolverConfig::default();
    let tol10 = SolverConfig { grad_tol: 1e-10, ..Default::default() };

    let mut audits: Vec<(&str, usize)> = Vec::new();
    {
        let (left, right) = table1_traces();
        audits.push(("t1-left", audit_trace(&left, &ex1, &l1).violations.len()));
        audits.push(("t1-right", audit_trace(&right, &ex1, &l1).violations.len()));
    }
    {
        let (lmm, lmmss) = table2_traces();
        audits.push(("t2-lmm", audit_trace(&lmm, &ex2, &ScalingSpec::identity(2)).violations.len()));
        audits.push(("t2-lmmss", audit_trace(&lmmss, &ex2, &l2).violations.len()));
    }
    {
        let (a, b) = table3_traces();
        audits.push(("t3-a", audit_trace(&a, &ex3, &l3).violations.len()));
        audits.push(("t3-b", audit_trace(&b, &ex3, &l3).violations.len()));
    }
    for (name, x0, cfg) in [
        ("t1-left-glob", starts1[0].clone(), &tol8),
        ("t1-right-glob", starts1[1].clone(), &tol8),
    ] {
        let trace = algorithm1_solve(&ex1, &l1, &x0, cfg).unwrap();
        audits.push((name, audit_trace(&trace, &ex1, &l1).violations.len()));
    }
    {
        let trace = algorithm1_solve(&ex2, &l2, &starts2[0], &tol10).unwrap();
        audits.push(("t2-lmmss-glob", audit_trace(&trace, &ex2, &l2).violations.len()));
        let t3 = algorithm1_solve(&ex3, &l3, &starts3[0], &tol10).unwrap();
        audits.push(("t3-a-glob", audit_trace(&t3, &ex3, &l3).violations.len()));
    }
    {
        // safeguard-enabled degenerate run
        let trace = algorithm1_solve(&ex1, &l1, &vec2(-1.0, 3.0), &tol8).unwrap();
        audits.push(("safeguard", audit_trace(&trace, &ex1, &l1).violations.len()));
    }
    for (name, violations) in audits {
        c.check(
            violations == 0,
            format!("{name}: {violations} audit violations, want 0"),
        );
    }
    c.finish();
}
