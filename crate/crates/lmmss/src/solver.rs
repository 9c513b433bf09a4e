//! The LMMSS iterations: the pure local method `x⁺ = x + d` with
//! `(JᵀJ + λLᵀL)d = −JᵀF`, `λ = ‖JᵀF‖^r`, and the line-search-globalized
//! variant with full-step acceptance, classic-LM safeguard fallback and
//! Armijo backtracking.

use crate::linalg::{self, LinalgError, Vector};
use crate::problem::{eval_gradient, eval_phi, NlsProblem, ProblemError, ScalingSpec};
use thiserror::Error;

/// Floor for the damping parameter; keeps the system nonsingular at
/// near-stationary points before the stopping test fires.
pub const LAMBDA_FLOOR: f64 = 1e-300;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("starting point is already stationary (λ would vanish)")]
    StationaryInput,
    #[error("not a descent direction: ∇φᵀd ≥ 0")]
    NotDescent,
    #[error("line search failed within the backtrack budget")]
    LinesearchFailure,
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Pure,
    Globalized,
    ClassicLm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirKind {
    Scaled,
    SafeguardLm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIters,
    LinesearchFailure,
    NumericalError,
}

/// Algorithm parameters. Defaults: `ν = 1e−4`, `ζ = 0.5`, `ϑ = 0.9`,
/// `θ = 1e−6`, `M = 1e6`, `r = 1`, `grad_tol = 1e−8`.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Armijo slope fraction ν ∈ (0,1).
    pub nu: f64,
    /// Backtracking factor ζ ∈ (0,1).
    pub zeta: f64,
    /// Full-step gradient-decrease factor ϑ ∈ (0,1).
    pub vartheta: f64,
    /// Gradient-relatedness angle parameter θ ∈ (0,1).
    pub theta: f64,
    /// Direction-norm cap M > 0 for the safeguard test.
    pub m_cap: f64,
    /// Damping exponent r ∈ (0,1]: λ = ‖∇φ‖^r.
    pub lambda_exponent: f64,
    /// Stationarity tolerance on ‖∇φ‖.
    pub grad_tol: f64,
    pub max_iters: usize,
    pub max_backtracks: usize,
    pub mode: Mode,
    /// Test-harness switch: `false` disables the safeguard substitution
    /// entirely, exposing the stall near completeness-violating points.
    pub safeguard_enabled: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            nu: 1e-4,
            zeta: 0.5,
            vartheta: 0.9,
            theta: 1e-6,
            m_cap: 1e6,
            lambda_exponent: 1.0,
            grad_tol: 1e-8,
            max_iters: 200,
            max_backtracks: 60,
            mode: Mode::Globalized,
            safeguard_enabled: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let open01 = |v: f64, name: &str| -> Result<(), SolverError> {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(SolverError::InvalidConfig(format!("{name} must lie in (0,1), got {v}")))
            }
        };
        open01(self.nu, "nu")?;
        open01(self.zeta, "zeta")?;
        open01(self.vartheta, "vartheta")?;
        open01(self.theta, "theta")?;
        if !(self.m_cap > 0.0) {
            return Err(SolverError::InvalidConfig(format!("m_cap must be positive, got {}", self.m_cap)));
        }
        if !(self.lambda_exponent > 0.0 && self.lambda_exponent <= 1.0) {
            return Err(SolverError::InvalidConfig(format!(
                "lambda_exponent must lie in (0,1], got {}",
                self.lambda_exponent
            )));
        }
        if !(self.grad_tol > 0.0) {
            return Err(SolverError::InvalidConfig(format!("grad_tol must be positive, got {}", self.grad_tol)));
        }
        if self.max_iters == 0 {
            return Err(SolverError::InvalidConfig("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-iterate telemetry. State fields (`x`, `phi`, `grad_norm`, `dist`)
/// describe the iterate `x_k`; step fields (`direction`, `dir_kind`,
/// `alpha`, `full_step_accepted`, `backtracks`) describe the step taken
/// from it. The terminal record carries a zero direction.
#[derive(Debug, Clone)]
pub struct IterateRecord {
    pub k: usize,
    pub x: Vector,
    pub phi: f64,
    pub grad_norm: f64,
    pub lambda: f64,
    pub direction: Vector,
    pub dir_kind: DirKind,
    pub alpha: f64,
    pub full_step_accepted: bool,
    pub backtracks: usize,
    pub dist: Option<f64>,
}

impl IterateRecord {
    pub fn step_norm(&self) -> f64 {
        self.alpha * self.direction.norm()
    }
}

#[derive(Debug, Clone)]
pub struct SolveTrace {
    pub records: Vec<IterateRecord>,
    pub status: SolveStatus,
    pub final_x: Vector,
}

impl SolveTrace {
    /// Number of steps taken (records beyond the initial iterate).
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn grad_norms(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.grad_norm).collect()
    }

    pub fn dists(&self) -> Vec<Option<f64>> {
        self.records.iter().map(|r| r.dist).collect()
    }
}

fn lambda_of(grad_norm: f64, r: f64) -> f64 {
    grad_norm.powf(r).max(LAMBDA_FLOOR)
}

/// One pure LMMSS step: `d = −(JᵀJ + λLᵀL)⁻¹JᵀF` with `λ = ‖JᵀF‖^r`,
/// unit step length.
pub fn pure_step(
    problem: &(impl NlsProblem + ?Sized),
    l: &ScalingSpec,
    x: &Vector,
    r: f64,
) -> Result<(Vector, IterateRecord), SolverError> {
    let f = problem.residual(x);
    let j = problem.jacobian(x);
    let g = j.transpose() * &f;
    let grad_norm = g.norm();
    if grad_norm == 0.0 || grad_norm.powf(r) <= LAMBDA_FLOOR {
        return Err(SolverError::StationaryInput);
    }
    let lambda = lambda_of(grad_norm, r);
    let d = linalg::solve_scaled_direction(&j, &f, l.matrix(), lambda)?;
    let x_next = x + &d;
    let record = IterateRecord {
        k: 0,
        x: x.clone(),
        phi: 0.5 * f.norm_squared(),
        grad_norm,
        lambda,
        direction: d,
        dir_kind: DirKind::Scaled,
        alpha: 1.0,
        full_step_accepted: true,
        backtracks: 0,
        dist: problem.dist_oracle(x),
    };
    Ok((x_next, record))
}

/// Runs the pure iteration until `‖∇φ‖ ≤ grad_tol` or the budget runs out.
pub fn pure_solve(
    problem: &(impl NlsProblem + ?Sized),
    l: &ScalingSpec,
    x0: &Vector,
    config: &SolverConfig,
) -> Result<SolveTrace, SolverError> {
    config.validate()?;
    let mut records = Vec::new();
    let mut x = x0.clone();
    let mut status = SolveStatus::MaxIters;
    for k in 0..=config.max_iters {
        let g = eval_gradient(problem, &x)?;
        let grad_norm = g.norm();
        if !grad_norm.is_finite() {
            status = SolveStatus::NumericalError;
            break;
        }
        if grad_norm <= config.grad_tol {
            records.push(terminal_record(problem, k, &x, grad_norm, config)?);
            status = SolveStatus::Converged;
            break;
        }
        if k == config.max_iters {
            records.push(terminal_record(problem, k, &x, grad_norm, config)?);
            break;
        }
        let (x_next, mut record) = pure_step(problem, l, &x, config.lambda_exponent)?;
        record.k = k;
        records.push(record);
        x = x_next;
    }
    Ok(SolveTrace { records, status, final_x: x })
}

fn terminal_record(
    problem: &(impl NlsProblem + ?Sized),
    k: usize,
    x: &Vector,
    grad_norm: f64,
    config: &SolverConfig,
) -> Result<IterateRecord, SolverError> {
    Ok(IterateRecord {
        k,
        x: x.clone(),
        phi: eval_phi(problem, x)?,
        grad_norm,
        lambda: lambda_of(grad_norm, config.lambda_exponent),
        direction: Vector::zeros(x.len()),
        dir_kind: DirKind::Scaled,
        alpha: 1.0,
        full_step_accepted: false,
        backtracks: 0,
        dist: problem.dist_oracle(x),
    })
}

/// Armijo backtracking: smallest `m ≤ max_backtracks` with
/// `φ(x + ζ^m d) − φ(x) ≤ ν ζ^m ∇φ(x)ᵀd`; returns `(m, ζ^m)`.
pub fn armijo_backtrack(
    problem: &(impl NlsProblem + ?Sized),
    x: &Vector,
    d: &Vector,
    nu: f64,
    zeta: f64,
    max_backtracks: usize,
) -> Result<(usize, f64), SolverError> {
    let g = eval_gradient(problem, x)?;
    let slope = g.dot(d);
    if slope >= 0.0 {
        return Err(SolverError::NotDescent);
    }
    let phi0 = eval_phi(problem, x)?;
    let mut alpha = 1.0;
    for m in 0..=max_backtracks {
        let phi_trial = eval_phi(problem, &(x + alpha * d))?;
        if phi_trial - phi0 <= nu * alpha * slope {
            return Ok((m, alpha));
        }
        alpha *= zeta;
    }
    Err(SolverError::LinesearchFailure)
}

/// The line-search-globalized method:
///
/// 1. stop when `‖∇φ(x_k)‖ ≤ grad_tol`;
/// 2. scaled direction `d` from `(JᵀJ + λLᵀL)d = −JᵀF`, `λ = ‖∇φ‖^r`;
/// 3. accept the full step if `‖∇φ(x+d)‖ ≤ ϑ‖∇φ(x)‖`;
/// 4. safeguard: substitute the classic LM direction (`L = I`) when
///    `‖d‖ > M`, or `−∇φᵀd < θ‖∇φ‖²`, or the completeness constant of
///    `(J, L)` is numerically zero (scale-relative test) — the scaled
///    system is then singular and its computed direction meaningless.
///    The full-step test is re-applied to the substituted direction:
///    near a non-zero-residue stationary point the Armijo decrease sits
///    below the floating-point granularity of φ while the gradient
///    decrease remains resolvable;
/// 5. otherwise Armijo backtracking along `d`;
/// 6. `λ⁺ = ‖∇φ(x⁺)‖^r`.
pub fn algorithm1_solve(
    problem: &(impl NlsProblem + ?Sized),
    l: &ScalingSpec,
    x0: &Vector,
    config: &SolverConfig,
) -> Result<SolveTrace, SolverError> {
    config.validate()?;
    let mut records = Vec::new();
    let mut x = x0.clone();
    let mut status = SolveStatus::MaxIters;
    for k in 0..=config.max_iters {
        let f = problem.residual(&x);
        let j = problem.jacobian(&x);
        if !linalg::vec_finite(&f) || !linalg::all_finite(&j) {
            status = SolveStatus::NumericalError;
            break;
        }
        let g = j.transpose() * &f;
        let grad_norm = g.norm();
        let phi = 0.5 * f.norm_squared();
        let dist = problem.dist_oracle(&x);
        if grad_norm <= config.grad_tol {
            records.push(terminal_record(problem, k, &x, grad_norm, config)?);
            status = SolveStatus::Converged;
            break;
        }
        if k == config.max_iters {
            records.push(terminal_record(problem, k, &x, grad_norm, config)?);
            break;
        }
        let lambda = lambda_of(grad_norm, config.lambda_exponent);

        // Step 2: scaled direction. A singular solve is handled like a
        // tripped safeguard test when the safeguard is enabled.
        let mut dir_kind = DirKind::Scaled;
        let mut d = match linalg::solve_scaled_direction(&j, &f, l.matrix(), lambda) {
            Ok(d) => Some(d),
            Err(LinalgError::CompletenessViolation { .. }) if config.safeguard_enabled => None,
            Err(e) => return Err(e.into()),
        };

        // Step 3: full-step acceptance on the scaled direction.
        let mut accepted: Option<(Vector, f64, bool, usize)> = None; // (x⁺, α, full, m)
        if let Some(dv) = &d {
            if full_step_ok(problem, &x, dv, config.vartheta, grad_norm)? {
                accepted = Some((&x + dv, 1.0, true, 0));
            }
        }

        // Step 4: safeguard substitution, evaluated before the line search.
        if accepted.is_none() && config.safeguard_enabled {
            let trip = match &d {
                None => true,
                Some(dv) => {
                    let gamma = linalg::completeness_gamma(&j, l.matrix())?;
                    dv.norm() > config.m_cap
                        || -g.dot(dv) < config.theta * grad_norm * grad_norm
                        || linalg::completeness_violated(gamma, &j, l.matrix())
                }
            };
            if trip {
                let lm = linalg::solve_classic_lm_direction(&j, &f, lambda)?;
                if full_step_ok(problem, &x, &lm, config.vartheta, grad_norm)? {
                    accepted = Some((&x + &lm, 1.0, true, 0));
                }
                d = Some(lm);
                dir_kind = DirKind::SafeguardLm;
            }
        }

        let d = match d {
            Some(d) => d,
            None => {
                // singular scaled system with the safeguard disabled
                status = SolveStatus::NumericalError;
                records.push(terminal_record(problem, k, &x, grad_norm, config)?);
                break;
            }
        };

        // Step 5: Armijo backtracking.
        let (x_next, alpha, full_step, backtracks) = match accepted {
            Some(a) => a,
            None => match armijo_backtrack(problem, &x, &d, config.nu, config.zeta, config.max_backtracks)
            {
                Ok((m, alpha)) => (&x + alpha * &d, alpha, false, m),
                Err(SolverError::LinesearchFailure) | Err(SolverError::NotDescent) => {
                    status = SolveStatus::LinesearchFailure;
                    records.push(IterateRecord {
                        k,
                        x: x.clone(),
                        phi,
                        grad_norm,
                        lambda,
                        direction: d,
                        dir_kind,
                        alpha: 0.0,
                        full_step_accepted: false,
                        backtracks: config.max_backtracks,
                        dist,
                    });
                    break;
                }
                Err(e) => return Err(e),
            },
        };
        records.push(IterateRecord {
            k,
            x: x.clone(),
            phi,
            grad_norm,
            lambda,
            direction: d,
            dir_kind,
            alpha,
            full_step_accepted: full_step,
            backtracks,
            dist,
        });
        if !linalg::vec_finite(&x_next) {
            status = SolveStatus::NumericalError;
            break;
        }
        x = x_next;
        // Step 6 is implicit: λ is recomputed from ‖∇φ(x⁺)‖ at loop head.
    }
    Ok(SolveTrace { records, status, final_x: x })
}

fn full_step_ok(
    problem: &(impl NlsProblem + ?Sized),
    x: &Vector,
    d: &Vector,
    vartheta: f64,
    grad_norm: f64,
) -> Result<bool, SolverError> {
    let trial = x + d;
    if !linalg::vec_finite(&trial) {
        return Ok(false);
    }
    match eval_gradient(problem, &trial) {
        Ok(g) => Ok(g.norm() <= vartheta * grad_norm),
        Err(_) => Ok(false),
    }
}

/// The classic Levenberg-Marquardt baseline: [`algorithm1_solve`] with
/// `L = I`, under which the scaled and safeguard directions coincide.
pub fn classic_lm_solve(
    problem: &(impl NlsProblem + ?Sized),
    x0: &Vector,
    config: &SolverConfig,
) -> Result<SolveTrace, SolverError> {
    let l = ScalingSpec::identity(x0.len());
    algorithm1_solve(problem, &l, x0, config)
}

/// Dispatches on `config.mode`.
pub fn solve(
    problem: &(impl NlsProblem + ?Sized),
    l: &ScalingSpec,
    x0: &Vector,
    config: &SolverConfig,
) -> Result<SolveTrace, SolverError> {
    match config.mode {
        Mode::Pure => pure_solve(problem, l, x0, config),
        Mode::Globalized => algorithm1_solve(problem, l, x0, config),
        Mode::ClassicLm => classic_lm_solve(problem, x0, config),
    }
}
