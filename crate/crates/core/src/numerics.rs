//! Dense linear-algebra kernel: solves, spectra, the discrete algebraic
//! Riccati equation and geometric decay envelopes.
//!
//! Everything here is a pure function of its inputs.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Numerical tolerances shared by the kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative change at which the Riccati fixed-point iteration stops.
    pub dare_rel_change: f64,
    pub dare_max_iter: usize,
    /// Accepted DARE residual, relative to `1 + ‖P‖`.
    pub dare_residual: f64,
    /// Accepted solve residual, relative to `1 + ‖rhs‖`.
    pub solve_residual: f64,
    pub envelope_max_power: usize,
    pub schur_max_iter: usize,
    /// Margin below one required by the step-size check.
    pub stability_margin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        TOLERANCES
    }
}

pub const TOLERANCES: Tolerances = Tolerances {
    dare_rel_change: 1e-13,
    dare_max_iter: 100_000,
    dare_residual: 1e-10,
    solve_residual: 1e-10,
    envelope_max_power: 10_000,
    schur_max_iter: 10_000,
    stability_margin: 1e-9,
};

/// Builds a matrix from row slices, rejecting ragged or non-finite input.
pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::DimensionMismatch("ragged matrix rows".into()));
    }
    let m = Matrix::from_fn(nrows, ncols, |i, j| rows[i][j]);
    ensure_finite(&m, "matrix")?;
    Ok(m)
}

pub fn matrix_to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

pub fn ensure_finite(m: &Matrix, what: &'static str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

fn ensure_square(m: &Matrix, what: &str) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

/// Largest singular value.
pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

pub fn vector_norm(v: &Vector) -> f64 {
    v.norm()
}

/// Quadratic form `vᵀ W v`.
pub fn weighted_sq_norm(v: &Vector, w: &Matrix) -> f64 {
    v.dot(&(w * v))
}

pub fn eigenvalues(w: &Matrix) -> Result<Vec<Complex64>> {
    ensure_square(w, "eigenvalue argument")?;
    if w.is_empty() {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(w.clone(), f64::EPSILON, TOLERANCES.schur_max_iter)
        .ok_or(Error::EigenFailure)?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// `max |λ(W)|`.
pub fn spectral_radius(w: &Matrix) -> Result<f64> {
    Ok(eigenvalues(w)?
        .into_iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_sym_eigenvalue(m: &Matrix) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}

pub fn max_sym_eigenvalue(m: &Matrix) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().max()
}

pub fn is_symmetric(m: &Matrix, tol: f64) -> bool {
    m.is_square() && (m - m.transpose()).amax() <= tol * (1.0 + m.amax())
}

/// Solves `M X = rhs` by partial-pivot LU and certifies the residual.
pub fn linear_solve(m: &Matrix, rhs: &Matrix) -> Result<Matrix> {
    ensure_square(m, "system matrix")?;
    if m.nrows() != rhs.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "system is {}x{} but right-hand side has {} rows",
            m.nrows(),
            m.ncols(),
            rhs.nrows()
        )));
    }
    let x = m
        .clone()
        .lu()
        .solve(rhs)
        .ok_or(Error::Singular("linear solve"))?;
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::Singular("linear solve"));
    }
    let residual = spectral_norm(&(m * &x - rhs));
    if residual > TOLERANCES.solve_residual * (1.0 + spectral_norm(rhs)) {
        return Err(Error::Singular("linear solve residual too large"));
    }
    Ok(x)
}

pub fn solve_vec(m: &Matrix, rhs: &Vector) -> Result<Vector> {
    let x = linear_solve(m, &Matrix::from_column_slice(rhs.len(), 1, rhs.as_slice()))?;
    Ok(x.column(0).into_owned())
}

/// `(R + BᵀPB)⁻¹ BᵀPA`.
pub fn lqr_gain(a: &Matrix, b: &Matrix, r: &Matrix, p: &Matrix) -> Result<Matrix> {
    let bt_p = b.transpose() * p;
    let gram = r + &bt_p * b;
    linear_solve(&gram, &(&bt_p * a)).map_err(|e| Error::IllConditioned(e.to_string()))
}

/// Right-hand side of the Riccati map evaluated at `p`.
fn riccati_map(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix, p: &Matrix) -> Result<Matrix> {
    let at_p = a.transpose() * p;
    let bt_p_a = b.transpose() * p * a;
    let gram = r + b.transpose() * p * b;
    let x = linear_solve(&gram, &bt_p_a).map_err(|e| Error::IllConditioned(e.to_string()))?;
    let next = q + &at_p * a - bt_p_a.transpose() * x;
    Ok((&next + next.transpose()) * 0.5)
}

/// `‖P − (Q + AᵀPA − AᵀPB(R+BᵀPB)⁻¹BᵀPA)‖`.
pub fn dare_residual(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix, p: &Matrix) -> Result<f64> {
    Ok(spectral_norm(&(p - riccati_map(a, b, q, r, p)?)))
}

/// Stabilising solution of `P = Q + AᵀPA − AᵀPB(R+BᵀPB)⁻¹BᵀPA` by
/// fixed-point Riccati iteration from `P₀ = Q`.
pub fn solve_dare(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix) -> Result<Matrix> {
    solve_dare_with(a, b, q, r, &TOLERANCES)
}

pub fn solve_dare_with(
    a: &Matrix,
    b: &Matrix,
    q: &Matrix,
    r: &Matrix,
    tol: &Tolerances,
) -> Result<Matrix> {
    let n = a.nrows();
    ensure_square(a, "A")?;
    ensure_square(q, "Q")?;
    ensure_square(r, "R")?;
    if b.nrows() != n || q.nrows() != n || r.nrows() != b.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "A {}x{}, B {}x{}, Q {}x{}, R {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols(),
            q.nrows(),
            q.ncols(),
            r.nrows(),
            r.ncols()
        )));
    }

    let mut p = (q + q.transpose()) * 0.5;
    let mut converged_at = None;
    for iter in 1..=tol.dare_max_iter {
        let next = riccati_map(a, b, q, r, &p)?;
        if !next.iter().all(|x| x.is_finite()) {
            return Err(Error::NonConvergent {
                iterations: iter,
                reason: "iterate diverged".into(),
            });
        }
        let change = (&next - &p).norm();
        p = next;
        if change <= tol.dare_rel_change * p.norm() {
            converged_at = Some(iter);
            break;
        }
    }
    let iterations = converged_at.ok_or_else(|| Error::NonConvergent {
        iterations: tol.dare_max_iter,
        reason: "iteration cap reached".into(),
    })?;

    let residual = dare_residual(a, b, q, r, &p)?;
    if residual > tol.dare_residual * (1.0 + spectral_norm(&p)) {
        return Err(Error::NonConvergent {
            iterations,
            reason: format!("residual {residual:e} above tolerance"),
        });
    }
    let k = lqr_gain(a, b, r, &p)?;
    let rho = spectral_radius(&(a - b * k))?;
    if rho >= 1.0 {
        return Err(Error::NonConvergent {
            iterations,
            reason: format!("closed loop not stable, ρ(A−BK) = {rho}"),
        });
    }
    Ok(p)
}

/// Geometric envelope `‖Wᵏ‖ ≤ c·λᵏ` for `k ≥ 1`, with `λ = (1+ρ(W))/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayEnvelope {
    pub lambda: f64,
    pub c: f64,
}

impl DecayEnvelope {
    /// Checks `‖Wᵏ‖ ≤ c·λᵏ` directly for `1 ≤ k ≤ horizon`.
    pub fn certify(&self, w: &Matrix, horizon: usize) -> bool {
        let mut power = w.clone();
        let mut lambda_k = self.lambda;
        for k in 1..=horizon {
            if k > 1 {
                power = &power * w;
                lambda_k *= self.lambda;
            }
            if spectral_norm(&power) > self.c * lambda_k * (1.0 + 1e-12) {
                return false;
            }
        }
        true
    }

    /// Constant valid for every `k ≥ 0`, i.e. also covering `W⁰ = I`.
    pub fn c_from_zero(&self) -> f64 {
        self.c.max(1.0)
    }
}

/// Minimal certified decay envelope of a Schur-stable matrix.
pub fn decay_envelope(w: &Matrix) -> Result<DecayEnvelope> {
    ensure_square(w, "envelope argument")?;
    let rho = spectral_radius(w)?;
    if rho >= 1.0 {
        return Err(Error::Unstable(rho));
    }
    let lambda = 0.5 * (1.0 + rho);
    let cap = TOLERANCES.envelope_max_power;

    // Scan ratios ‖(W/λ)ᵏ‖; they tend to zero, so once they drop to
    // machine precision of the running max the prefix max is global.
    let scaled = w / lambda;
    let mut power = scaled.clone();
    let mut best = 0.0_f64;
    let mut best_k = 0;
    let mut last = f64::INFINITY;
    for k in 1..=cap {
        if k > 1 {
            power = &power * &scaled;
        }
        let ratio = spectral_norm(&power);
        if ratio > best {
            best = ratio;
            best_k = k;
        }
        if ratio <= best * f64::EPSILON && k > best_k {
            break;
        }
        if k == cap && (best_k == cap || ratio >= last) {
            return Err(Error::EnvelopeScan(cap));
        }
        last = ratio;
    }

    Ok(DecayEnvelope {
        lambda,
        c: best * (1.0 + 1e-12),
    })
}

/// Complex identity scaled by `z`, minus a real matrix.
pub fn shifted_complex(z: Complex64, m: &Matrix) -> DMatrix<Complex64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        let diag = if i == j { z } else { Complex64::new(0.0, 0.0) };
        diag - Complex64::new(m[(i, j)], 0.0)
    })
}

/// `‖(zI − M)⁻¹‖ = 1/σ_min(zI − M)`; infinite when singular.
pub fn resolvent_norm(z: Complex64, m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let sigma_min = shifted_complex(z, m)
        .svd(false, false)
        .singular_values
        .min();
    if sigma_min <= 0.0 {
        f64::INFINITY
    } else {
        1.0 / sigma_min
    }
}
