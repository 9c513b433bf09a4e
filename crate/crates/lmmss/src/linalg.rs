//! Dense linear algebra for the scaled Levenberg-Marquardt direction:
//! GSVD of a matrix pair, regularized solves through the augmented
//! least-squares form, and eigenvalue/rank utilities.
//!
//! Matrices are dense, column-major, `f64`-valued ([`nalgebra::DMatrix`]);
//! problem sizes in scope are small to moderate, so exact factorizations
//! (QR, SVD) are used throughout, never norm estimates.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative threshold below which a singular value counts as zero.
pub const RANK_REL_TOL: f64 = 1e-12;

/// Completeness is declared violated when the smallest eigenvalue of
/// `AᵀA + LᵀL` falls at or below this fraction of `‖A‖² + ‖L‖²`.
pub const COMPLETENESS_REL_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("scaling matrix is rank deficient: rank {rank} < {rows}")]
    RankDeficientL { rank: usize, rows: usize },
    #[error("completeness violated: null(A) and null(L) share a direction (gamma = {gamma:.3e})")]
    CompletenessViolation { gamma: f64 },
    #[error("non-finite input")]
    NonFiniteInput,
    #[error("matrix fixture: {0}")]
    Fixture(String),
}

pub fn all_finite(m: &Matrix) -> bool {
    m.iter().all(|v| v.is_finite())
}

pub fn vec_finite(v: &Vector) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Spectral norm (largest singular value).
pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Numerical rank with the scale-relative tolerance [`RANK_REL_TOL`].
pub fn rank(m: &Matrix) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let largest = sv.max();
    if largest == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_REL_TOL * largest).count()
}

fn stack(a: &Matrix, b: &Matrix) -> Matrix {
    let mut s = Matrix::zeros(a.nrows() + b.nrows(), a.ncols());
    s.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    s.view_mut((a.nrows(), 0), (b.nrows(), b.ncols())).copy_from(b);
    s
}

/// Largest admissible completeness constant at this point: the smallest
/// eigenvalue of `JᵀJ + LᵀL`, computed as the squared smallest singular
/// value of the stacked pair `[J; L]` to avoid squaring condition numbers.
pub fn completeness_gamma(j: &Matrix, l: &Matrix) -> Result<f64, LinalgError> {
    if j.ncols() != l.ncols() {
        return Err(LinalgError::DimensionMismatch(format!(
            "J has {} columns, L has {}",
            j.ncols(),
            l.ncols()
        )));
    }
    let stacked = stack(j, l);
    if stacked.nrows() < stacked.ncols() {
        // fewer rows than columns: the stacked pair always has a null vector
        return Ok(0.0);
    }
    let sv = stacked.svd(false, false).singular_values;
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(smin * smin)
}

/// Scale-relative completeness test: `gamma <= tol * (‖J‖² + ‖L‖²)`.
pub fn completeness_violated(gamma: f64, j: &Matrix, l: &Matrix) -> bool {
    let scale = spectral_norm(j).powi(2) + spectral_norm(l).powi(2);
    gamma <= COMPLETENESS_REL_TOL * scale
}

/// Generalized singular value decomposition of a pair `(A, L)`,
/// `A ∈ R^{m×n}`, `L ∈ R^{p×n}`, `m ≥ n ≥ p`:
///
/// ```text
/// A = U · blockdiag(Σ, I_{n-p}) · X⁻¹,    L = V · [M 0] · X⁻¹,
/// ```
///
/// with `U` (m×n) and `V` (p×p) having orthonormal columns, `X` (n×n)
/// nonsingular, `0 ≤ σ₁ ≤ … ≤ σ_p ≤ 1`, `1 ≥ μ₁ ≥ … ≥ μ_p > 0` and
/// `σᵢ² + μᵢ² = 1`. Generalized singular values are `γᵢ = σᵢ/μᵢ`.
#[derive(Debug, Clone)]
pub struct GsvdFactors {
    pub u: Matrix,
    pub v: Matrix,
    pub x: Matrix,
    pub sigma: Vec<f64>,
    pub mu: Vec<f64>,
    pub generalized_values: Vec<f64>,
}

impl GsvdFactors {
    fn block_diag(&self, n: usize) -> Matrix {
        let p = self.sigma.len();
        let mut d = Matrix::identity(n, n);
        for i in 0..p {
            d[(i, i)] = self.sigma[i];
        }
        d
    }

    /// `U · blockdiag(Σ, I) · X⁻¹`; compares against the input `A`.
    pub fn reconstruct_a(&self) -> Matrix {
        let n = self.x.nrows();
        let x_inv = self.x.clone().try_inverse().expect("X is nonsingular");
        &self.u * self.block_diag(n) * x_inv
    }

    /// `V · [M 0] · X⁻¹`; compares against the input `L`.
    pub fn reconstruct_l(&self) -> Matrix {
        let p = self.mu.len();
        let n = self.x.nrows();
        let mut m0 = Matrix::zeros(p, n);
        for i in 0..p {
            m0[(i, i)] = self.mu[i];
        }
        let x_inv = self.x.clone().try_inverse().expect("X is nonsingular");
        &self.v * m0 * x_inv
    }

    /// Diagonal of `blockdiag(Γ, I_{n-p})` with `Γ = (Σ² + λM²)⁻¹`.
    pub fn gamma_block_diagonal(&self, lambda: f64) -> Vec<f64> {
        let n = self.x.nrows();
        let p = self.sigma.len();
        (0..n)
            .map(|i| {
                if i < p {
                    1.0 / (self.sigma[i].powi(2) + lambda * self.mu[i].powi(2))
                } else {
                    1.0
                }
            })
            .collect()
    }

    /// Closed-form scaled direction `d = -X · blockdiag(Γ, I) · Xᵀ · JᵀF`.
    pub fn direction(&self, lambda: f64, grad: &Vector) -> Vector {
        let diag = self.gamma_block_diagonal(lambda);
        let mut y = self.x.transpose() * grad;
        for (i, g) in diag.iter().enumerate() {
            y[i] *= g;
        }
        -(&self.x * y)
    }
}

/// Extends `k` orthonormal columns of `basis` to `total` columns by
/// Gram-Schmidt against coordinate vectors (two passes per candidate).
fn complete_orthonormal(basis: &mut Matrix, filled: &mut Vec<usize>, total: usize) {
    let dim = basis.nrows();
    let mut have: Vec<usize> = (0..basis.ncols()).filter(|i| !filled.contains(i)).collect();
    // `filled` lists columns still to be produced; `have` the valid ones.
    let mut candidates = 0usize;
    while let Some(&col) = filled.first() {
        assert!(candidates < dim, "orthonormal completion exhausted candidates");
        let mut v = Vector::zeros(dim);
        v[candidates] = 1.0;
        candidates += 1;
        for _pass in 0..2 {
            for &h in &have {
                let q = basis.column(h);
                let proj = q.dot(&v);
                v -= proj * Vector::from_column_slice(q.as_slice());
            }
        }
        let norm = v.norm();
        if norm < 1e-6 {
            continue;
        }
        v /= norm;
        basis.set_column(col, &v);
        have.push(col);
        filled.remove(0);
    }
    let _ = total;
}

/// GSVD of the pair `(a, l)` via QR of the stacked `(m+p)×n` matrix
/// followed by a CS-style step (SVD of the lower QR block), avoiding the
/// squared-conditioning of the `(AᵀA, LᵀL)` pencil.
pub fn gsvd(a: &Matrix, l: &Matrix) -> Result<GsvdFactors, LinalgError> {
    let (m, n) = a.shape();
    let (p, nl) = l.shape();
    if nl != n {
        return Err(LinalgError::DimensionMismatch(format!(
            "A has {n} columns, L has {nl}"
        )));
    }
    if !(m >= n && n >= p) {
        return Err(LinalgError::DimensionMismatch(format!(
            "need m >= n >= p, got m={m}, n={n}, p={p}"
        )));
    }
    if !all_finite(a) || !all_finite(l) {
        return Err(LinalgError::NonFiniteInput);
    }
    let l_rank = rank(l);
    if l_rank < p {
        return Err(LinalgError::RankDeficientL { rank: l_rank, rows: p });
    }
    let gamma = completeness_gamma(a, l)?;
    if completeness_violated(gamma, a, l) {
        return Err(LinalgError::CompletenessViolation { gamma });
    }

    let qr = stack(a, l).qr();
    let q = qr.q();
    let r = qr.r();
    let q1 = q.view((0, 0), (m, n)).into_owned();
    let q2 = q.view((m, 0), (p, n)).into_owned();

    // SVD of the lower block: singular values are the μᵢ in decreasing
    // order, which is exactly the normalization ordering required above.
    let svd = q2.svd(true, true);
    let v = svd.u.as_ref().expect("requested U").clone();
    let w_p = svd.v_t.as_ref().expect("requested Vᵀ").transpose();
    let mut mu: Vec<f64> = svd.singular_values.iter().cloned().collect();
    for m_i in &mut mu {
        *m_i = m_i.min(1.0);
    }
    let sigma: Vec<f64> = mu.iter().map(|&mi| (1.0 - mi * mi).max(0.0).sqrt()).collect();

    // Right factor: first p columns from the SVD, remainder completed to an
    // orthonormal basis of R^n (they span null(Q2)).
    let mut w = Matrix::zeros(n, n);
    w.view_mut((0, 0), (n, p)).copy_from(&w_p);
    let mut missing: Vec<usize> = (p..n).collect();
    complete_orthonormal(&mut w, &mut missing, n);

    // Left factor columns: Q1·wᵢ has norm σᵢ for i < p and 1 for i ≥ p.
    let q1w = &q1 * &w;
    let mut u = Matrix::zeros(m, n);
    let mut missing_u: Vec<usize> = Vec::new();
    for i in 0..n {
        let scale = if i < p { sigma[i] } else { 1.0 };
        let col = q1w.column(i);
        let norm = col.norm();
        if scale > 1e-8 && norm > 1e-12 {
            u.set_column(i, &(col / norm));
        } else {
            missing_u.push(i);
        }
    }
    complete_orthonormal(&mut u, &mut missing_u, n);

    // X solves R·X = W; R is nonsingular because [A; L] has full column
    // rank under the completeness condition.
    let rmax = (0..n).map(|i| r[(i, i)].abs()).fold(0.0f64, f64::max);
    if (0..n).any(|i| r[(i, i)].abs() <= RANK_REL_TOL * rmax) {
        return Err(LinalgError::CompletenessViolation { gamma });
    }
    let x = r
        .solve_upper_triangular(&w)
        .ok_or(LinalgError::CompletenessViolation { gamma })?;

    let generalized_values = sigma.iter().zip(&mu).map(|(s, m)| s / m).collect();
    Ok(GsvdFactors { u, v, x, sigma, mu, generalized_values })
}

/// Least-squares solve of the augmented system
///
/// ```text
/// [ J     ]       [ F ]
/// [ √λ·L  ] d = - [ 0 ],
/// ```
///
/// whose normal equation is `(JᵀJ + λLᵀL) d = -JᵀF`. The solve goes
/// through QR of the stacked matrix; `JᵀJ + λLᵀL` is never formed.
pub fn solve_scaled_direction(
    j: &Matrix,
    f: &Vector,
    l: &Matrix,
    lambda: f64,
) -> Result<Vector, LinalgError> {
    let (m, n) = j.shape();
    let (p, nl) = l.shape();
    if nl != n {
        return Err(LinalgError::DimensionMismatch(format!(
            "J has {n} columns, L has {nl}"
        )));
    }
    if f.len() != m {
        return Err(LinalgError::DimensionMismatch(format!(
            "J has {m} rows, F has {}",
            f.len()
        )));
    }
    if !lambda.is_finite() || lambda <= 0.0 || !all_finite(j) || !all_finite(l) || !vec_finite(f) {
        return Err(LinalgError::NonFiniteInput);
    }
    let mut b = stack(j, &(lambda.sqrt() * l));
    let mut c = Vector::zeros(m + p);
    c.rows_mut(0, m).copy_from(&(-f));
    let qr = std::mem::replace(&mut b, Matrix::zeros(0, 0)).qr();
    let r = qr.r();
    let rmax = (0..n).map(|i| r[(i, i)].abs()).fold(0.0f64, f64::max);
    if rmax == 0.0 || (0..n).any(|i| r[(i, i)].abs() <= RANK_REL_TOL * rmax) {
        let gamma = completeness_gamma(j, l)?;
        return Err(LinalgError::CompletenessViolation { gamma });
    }
    let qtc = qr.q().transpose() * c;
    r.solve_upper_triangular(&qtc).ok_or_else(|| LinalgError::CompletenessViolation {
        gamma: completeness_gamma(j, l).unwrap_or(0.0),
    })
}

/// Classic Levenberg-Marquardt direction: unique solution of
/// `(JᵀJ + λI) d = -JᵀF`, via the augmented solve with `L = I`.
pub fn solve_classic_lm_direction(
    j: &Matrix,
    f: &Vector,
    lambda: f64,
) -> Result<Vector, LinalgError> {
    let n = j.ncols();
    solve_scaled_direction(j, f, &Matrix::identity(n, n), lambda)
}

/// Reads a whitespace-separated matrix fixture: first line `rows cols`,
/// then one line per row.
pub fn read_matrix(text: &str) -> Result<Matrix, LinalgError> {
    let mut tokens = text.split_whitespace();
    let parse = |t: Option<&str>, what: &str| -> Result<f64, LinalgError> {
        t.ok_or_else(|| LinalgError::Fixture(format!("missing {what}")))?
            .parse::<f64>()
            .map_err(|e| LinalgError::Fixture(format!("bad {what}: {e}")))
    };
    let rows = parse(tokens.next(), "row count")? as usize;
    let cols = parse(tokens.next(), "column count")? as usize;
    let mut entries = Vec::with_capacity(rows * cols);
    for i in 0..rows * cols {
        entries.push(parse(tokens.next(), &format!("entry {i}"))?);
    }
    if tokens.next().is_some() {
        return Err(LinalgError::Fixture("trailing tokens".into()));
    }
    Ok(Matrix::from_row_slice(rows, cols, &entries))
}
