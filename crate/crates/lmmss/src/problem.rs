//! Nonlinear least-squares problem abstraction: residual/Jacobian maps,
//! scaling matrices, finite-difference Jacobian verification, and the
//! built-in benchmark problems `ex1`, `ex2`, `ex3` with analytic
//! distance-to-stationary-set oracles.

use crate::linalg::{self, Matrix, Vector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("residual is non-finite at the evaluation point")]
    NonFiniteResidual,
    #[error("jacobian is non-finite at the evaluation point")]
    NonFiniteJacobian,
    #[error("unknown built-in problem `{0}` (expected ex1, ex2 or ex3)")]
    UnknownProblem(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("scaling matrix is rank deficient: rank {rank} < {rows} rows")]
    RankDeficientScaling { rank: usize, rows: usize },
}

/// A nonlinear least-squares instance `min ½‖F(x)‖²` with `F: Rⁿ → Rᵐ`,
/// `m ≥ n`. The stationary set is `X* = {x : J(x)ᵀF(x) = 0}`.
pub trait NlsProblem: Sync {
    fn name(&self) -> &str;
    /// Residual dimension `m`.
    fn residual_dim(&self) -> usize;
    /// Variable dimension `n`.
    fn var_dim(&self) -> usize;
    fn residual(&self, x: &Vector) -> Vector;
    /// Analytic Jacobian when available; the default falls back to forward
    /// differences with the standard step.
    fn jacobian(&self, x: &Vector) -> Matrix {
        finite_difference_jacobian_scheme(self, x, default_fd_step(x), FdScheme::Forward)
    }
    /// Distance to the (relevant component of the) stationary set, when an
    /// analytic oracle exists. Used only by diagnostics and tests, never by
    /// the solver.
    fn dist_oracle(&self, x: &Vector) -> Option<f64> {
        let _ = x;
        None
    }
}

/// `φ(x) = ½‖F(x)‖²`.
pub fn eval_phi(problem: &(impl NlsProblem + ?Sized), x: &Vector) -> Result<f64, ProblemError> {
    let f = problem.residual(x);
    if !linalg::vec_finite(&f) {
        return Err(ProblemError::NonFiniteResidual);
    }
    Ok(0.5 * f.norm_squared())
}

/// `∇φ(x) = J(x)ᵀF(x)`.
pub fn eval_gradient(
    problem: &(impl NlsProblem + ?Sized),
    x: &Vector,
) -> Result<Vector, ProblemError> {
    let f = problem.residual(x);
    if !linalg::vec_finite(&f) {
        return Err(ProblemError::NonFiniteResidual);
    }
    let j = problem.jacobian(x);
    if !linalg::all_finite(&j) {
        return Err(ProblemError::NonFiniteJacobian);
    }
    Ok(j.transpose() * f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdScheme {
    Forward,
    Central,
}

/// Standard finite-difference step: `√ε_mach · max(1, ‖x‖_∞)`.
pub fn default_fd_step(x: &Vector) -> f64 {
    f64::EPSILON.sqrt() * x.amax().max(1.0)
}

/// Forward-difference Jacobian approximation, column `i` equal to
/// `(F(x + h·eᵢ) − F(x))/h`.
pub fn finite_difference_jacobian(
    problem: &(impl NlsProblem + ?Sized),
    x: &Vector,
    h: f64,
) -> Matrix {
    finite_difference_jacobian_scheme(problem, x, h, FdScheme::Forward)
}

/// Finite-difference Jacobian with explicit scheme choice; the central
/// variant exists for the verification suite.
pub fn finite_difference_jacobian_scheme(
    problem: &(impl NlsProblem + ?Sized),
    x: &Vector,
    h: f64,
    scheme: FdScheme,
) -> Matrix {
    assert!(h > 0.0, "finite-difference step must be positive");
    let m = problem.residual_dim();
    let n = problem.var_dim();
    let mut j = Matrix::zeros(m, n);
    let f0 = match scheme {
        FdScheme::Forward => Some(problem.residual(x)),
        FdScheme::Central => None,
    };
    for i in 0..n {
        let mut xp = x.clone();
        xp[i] += h;
        let fp = problem.residual(&xp);
        let col = match scheme {
            FdScheme::Forward => (fp - f0.as_ref().unwrap()) / h,
            FdScheme::Central => {
                let mut xm = x.clone();
                xm[i] -= h;
                (fp - problem.residual(&xm)) / (2.0 * h)
            }
        };
        j.set_column(i, &col);
    }
    j
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingKind {
    Identity,
    FirstDifference,
    Custom,
}

/// A scaling matrix `L ∈ R^{p×n}` with full row rank `p ≤ n`; `LᵀL` may be
/// singular (`p < n`), which is the "singular scaling" of the method.
#[derive(Debug, Clone)]
pub struct ScalingSpec {
    matrix: Matrix,
    kind: ScalingKind,
}

impl ScalingSpec {
    /// Validates full row rank (via singular values) at construction.
    pub fn new(matrix: Matrix, kind: ScalingKind) -> Result<Self, ProblemError> {
        let (p, n) = matrix.shape();
        if p > n {
            return Err(ProblemError::DimensionMismatch(format!(
                "scaling matrix has {p} rows > {n} columns"
            )));
        }
        let rank = linalg::rank(&matrix);
        if rank < p {
            return Err(ProblemError::RankDeficientScaling { rank, rows: p });
        }
        Ok(Self { matrix, kind })
    }

    pub fn identity(n: usize) -> Self {
        Self { matrix: Matrix::identity(n, n), kind: ScalingKind::Identity }
    }

    /// The `(n−1)×n` forward-difference operator with rows `(…, −1, 1, …)`;
    /// its null space is `span{(1, …, 1)ᵀ}`. For `n = 2` this is `[−1 1]`.
    pub fn first_difference(n: usize) -> Self {
        assert!(n >= 2, "first-difference scaling needs n >= 2");
        let mut l = Matrix::zeros(n - 1, n);
        for i in 0..n - 1 {
            l[(i, i)] = -1.0;
            l[(i, i + 1)] = 1.0;
        }
        Self { matrix: l, kind: ScalingKind::FirstDifference }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn kind(&self) -> ScalingKind {
        self.kind
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Builtin {
    Ex1,
    Ex2,
    Ex3,
}

/// One of the built-in benchmark problems. All three are non-zero-residue:
/// `F` never vanishes, so `‖∇φ‖ → 0` is the convergence criterion.
#[derive(Debug, Clone)]
pub struct BuiltinProblem {
    which: Builtin,
}

impl BuiltinProblem {
    /// `ex1` only: the surrogate distance `|x₁² + x₂² − 5|`, the quantity
    /// tabulated in the reference data alongside the true distance
    /// `|‖x‖ − √5|` returned by [`NlsProblem::dist_oracle`].
    pub fn surrogate_dist(&self, x: &Vector) -> Option<f64> {
        match self.which {
            Builtin::Ex1 => Some((x[0] * x[0] + x[1] * x[1] - 5.0).abs()),
            _ => None,
        }
    }

    /// `ex2` only: its oracle measures distance to the local stationary set
    /// `{x₁ = 0}`; a run attracted to the global minimizer near `(−1, 0)`
    /// makes that oracle inapplicable.
    pub fn dist_applicable(&self, x: &Vector) -> bool {
        match self.which {
            Builtin::Ex2 => {
                let to_global = ((x[0] + 1.0).powi(2) + x[1] * x[1]).sqrt();
                x[0].abs() < to_global
            }
            _ => true,
        }
    }
}

impl NlsProblem for BuiltinProblem {
    fn name(&self) -> &str {
        match self.which {
            Builtin::Ex1 => "ex1",
            Builtin::Ex2 => "ex2",
            Builtin::Ex3 => "ex3",
        }
    }

    fn residual_dim(&self) -> usize {
        match self.which {
            Builtin::Ex1 | Builtin::Ex2 => 2,
            Builtin::Ex3 => 4,
        }
    }

    fn var_dim(&self) -> usize {
        2
    }

    fn residual(&self, x: &Vector) -> Vector {
        let (x1, x2) = (x[0], x[1]);
        match self.which {
            Builtin::Ex1 => {
                let s = x1 * x1 + x2 * x2;
                Vector::from_column_slice(&[s - 1.0, s - 9.0])
            }
            Builtin::Ex2 => {
                let c = x1 * x1 * x1;
                Vector::from_column_slice(&[c - x1 * x2 + 1.0, c + x1 * x2 + 1.0])
            }
            Builtin::Ex3 => Vector::from_column_slice(&[x1 * x1, x2 * x2, x1 + x2, 1.0]),
        }
    }

    fn jacobian(&self, x: &Vector) -> Matrix {
        let (x1, x2) = (x[0], x[1]);
        match self.which {
            Builtin::Ex1 => {
                Matrix::from_row_slice(2, 2, &[2.0 * x1, 2.0 * x2, 2.0 * x1, 2.0 * x2])
            }
            Builtin::Ex2 => Matrix::from_row_slice(
                2,
                2,
                &[3.0 * x1 * x1 - x2, -x1, 3.0 * x1 * x1 + x2, x1],
            ),
            Builtin::Ex3 => Matrix::from_row_slice(
                4,
                2,
                &[2.0 * x1, 0.0, 0.0, 2.0 * x2, 1.0, 1.0, 0.0, 0.0],
            ),
        }
    }

    fn dist_oracle(&self, x: &Vector) -> Option<f64> {
        match self.which {
            // X* = the circle ‖x‖ = √5
            Builtin::Ex1 => Some((x.norm() - 5.0f64.sqrt()).abs()),
            // local stationary set {x₁ = 0}
            Builtin::Ex2 => Some(x[0].abs()),
            // unique global minimizer at the origin
            Builtin::Ex3 => Some(x.norm()),
        }
    }
}

/// Looks up a built-in problem by name; returns the problem, its default
/// scaling matrix and the suggested starting points.
pub fn builtin_problem(
    name: &str,
) -> Result<(BuiltinProblem, ScalingSpec, Vec<Vector>), ProblemError> {
    let which = match name {
        "ex1" => Builtin::Ex1,
        "ex2" => Builtin::Ex2,
        "ex3" => Builtin::Ex3,
        other => return Err(ProblemError::UnknownProblem(other.to_string())),
    };
    let scaling = ScalingSpec::first_difference(2);
    let sqrt5 = 5.0f64.sqrt();
    let starts = match which {
        Builtin::Ex1 => vec![
            Vector::from_column_slice(&[0.0, sqrt5 + 0.03]),
            Vector::from_column_slice(&[0.01, sqrt5 - 0.01]),
            Vector::from_column_slice(&[2.0, 4.0]),
            Vector::from_column_slice(&[-1.0, 3.0]),
        ],
        Builtin::Ex2 => vec![Vector::from_column_slice(&[0.8, 2.1])],
        Builtin::Ex3 => vec![
            Vector::from_column_slice(&[3.0, 3.0]),
            Vector::from_column_slice(&[-2.0, -2.0]),
        ],
    };
    Ok((BuiltinProblem { which }, scaling, starts))
}
