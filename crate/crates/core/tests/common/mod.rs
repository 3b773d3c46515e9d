//! Random problem generation and independent oracles shared by the
//! integration tests.
#![allow(dead_code)]

use nalgebra::{Cholesky, DMatrix, DVector};
use ssogd_core::numerics::{spectral_radius, Matrix, Vector};
use ssogd_core::simulator::NormalStream;
use ssogd_core::{CostWeights, DisturbanceSequence, LinearSystem};

pub struct RandomProblem {
    pub system: LinearSystem,
    pub weights: CostWeights,
}

pub fn randn(rng: &mut NormalStream, rows: usize, cols: usize) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = rng.normal();
        }
    }
    m
}

pub fn randn_vec(rng: &mut NormalStream, len: usize) -> Vector {
    randn(rng, len, 1).column(0).into_owned()
}

/// `n ≤ 4`, `m ≤ min(n, 2)`, open-loop radius in `[0.3, 1.2]`, `Q, R ≻ 0`.
pub fn random_problem(seed: u64, index: u64) -> RandomProblem {
    let mut rng = NormalStream::new(seed, index);
    let n = 1 + (rng.uniform() * 4.0) as usize;
    let m = 1 + (rng.uniform() * n.min(2) as f64) as usize;
    let mut a = randn(&mut rng, n, n);
    let rho = spectral_radius(&a).expect("eigenvalues");
    let target = 0.3 + 0.9 * rng.uniform();
    if rho > 1e-9 {
        a *= target / rho;
    }
    let b = randn(&mut rng, n, m);
    let l = randn(&mut rng, n, n);
    let q = &l * l.transpose() / n as f64 + Matrix::identity(n, n) * 0.1;
    let mr = randn(&mut rng, m, m);
    let r = &mr * mr.transpose() / m as f64 + Matrix::identity(m, m) * 0.1;
    RandomProblem {
        system: LinearSystem::new(a, b).expect("dimensions"),
        weights: CostWeights::new(symmetrize(&q), symmetrize(&r)).expect("weights"),
    }
}

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Structure-preserving doubling for `P = AᵀPA − AᵀPB(R+BᵀPB)⁻¹BᵀPA + Q`.
pub fn doubling_dare(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix) -> Matrix {
    let n = a.nrows();
    let eye = Matrix::identity(n, n);
    let r_inv = r.clone().try_inverse().expect("R invertible");
    let mut ak = a.clone();
    let mut gk = b * r_inv * b.transpose();
    let mut hk = q.clone();
    for _ in 0..100 {
        let w = (&eye + &gk * &hk).try_inverse().expect("I + GH invertible");
        let a_next = &ak * &w * &ak;
        let g_next = &gk + &ak * &w * &gk * ak.transpose();
        let h_next = &hk + ak.transpose() * &hk * &w * &ak;
        let change = (&h_next - &hk).norm() / (1.0 + h_next.norm());
        ak = a_next;
        gk = symmetrize(&g_next);
        hk = symmetrize(&h_next);
        if change < 1e-15 {
            break;
        }
    }
    hk
}

/// Minimises `Σ_{t<T} ‖e_t‖²_Q + ‖u_t‖²_R + ‖e_T‖²_{P_T}` over stacked
/// inputs by a dense Cholesky solve of the condensed QP.
pub fn dense_qp(
    system: &LinearSystem,
    q: &Matrix,
    r: &Matrix,
    p_terminal: &Matrix,
    e0: &Vector,
    dist: &DisturbanceSequence,
) -> (Vec<Vector>, f64) {
    let (n, m) = (system.n(), system.m());
    let horizon = dist.len();
    let (a, b) = (system.a(), system.b());
    // e_t = A^t e0 + Σ_{s<t} A^{t−1−s}(B u_s + w_s)
    let mut powers = vec![Matrix::identity(n, n)];
    for _ in 0..horizon {
        let next = a * powers.last().unwrap();
        powers.push(next);
    }
    let mut gamma = DMatrix::zeros(n * (horizon + 1), m * horizon);
    let mut offset = DVector::zeros(n * (horizon + 1));
    for t in 0..=horizon {
        let mut free = &powers[t] * e0;
        for s in 0..t {
            free += &powers[t - 1 - s] * &dist.values[s];
            let block = &powers[t - 1 - s] * b;
            gamma.view_mut((t * n, s * m), (n, m)).copy_from(&block);
        }
        offset.rows_mut(t * n, n).copy_from(&free);
    }
    let mut qbig = DMatrix::zeros(n * (horizon + 1), n * (horizon + 1));
    for t in 0..horizon {
        qbig.view_mut((t * n, t * n), (n, n)).copy_from(q);
    }
    qbig.view_mut((horizon * n, horizon * n), (n, n))
        .copy_from(p_terminal);
    let mut rbig = DMatrix::zeros(m * horizon, m * horizon);
    for t in 0..horizon {
        rbig.view_mut((t * m, t * m), (m, m)).copy_from(r);
    }
    let hessian = symmetrize(&(gamma.transpose() * &qbig * &gamma + &rbig));
    let rhs = -(gamma.transpose() * &qbig * &offset);
    let u = Cholesky::new(hessian).expect("QP Hessian PD").solve(&rhs);
    let e = &gamma * &u + &offset;
    let cost = (e.transpose() * &qbig * &e)[(0, 0)] + (u.transpose() * &rbig * &u)[(0, 0)];
    let inputs = (0..horizon)
        .map(|t| u.rows(t * m, m).into_owned())
        .collect();
    (inputs, cost)
}

/// KKT system of `min ‖e‖²_Q + ‖u‖²_R` subject to `(I − A)e − Bu = w`,
/// returning `(e, v)` with `v = u + Ke`.
pub fn steady_state_kkt(
    system: &LinearSystem,
    weights: &CostWeights,
    k: &Matrix,
    w: &Vector,
) -> (Vector, Vector) {
    let (n, m) = (system.n(), system.m());
    let size = 2 * n + m;
    let mut kkt = DMatrix::zeros(size, size);
    kkt.view_mut((0, 0), (n, n)).copy_from(&(weights.q() * 2.0));
    kkt.view_mut((n, n), (m, m)).copy_from(&(weights.r() * 2.0));
    let constraint_e = Matrix::identity(n, n) - system.a();
    let constraint_u = -system.b();
    kkt.view_mut((n + m, 0), (n, n)).copy_from(&constraint_e);
    kkt.view_mut((n + m, n), (n, m)).copy_from(&constraint_u);
    kkt.view_mut((0, n + m), (n, n))
        .copy_from(&constraint_e.transpose());
    kkt.view_mut((n, n + m), (m, n))
        .copy_from(&constraint_u.transpose());
    let mut rhs = DVector::zeros(size);
    rhs.rows_mut(n + m, n).copy_from(w);
    let sol = kkt.lu().solve(&rhs).expect("KKT nonsingular");
    let e = sol.rows(0, n).into_owned();
    let u = sol.rows(n, m).into_owned();
    let v = &u + k * &e;
    (e, v)
}

pub fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

pub fn max_abs_diff(a: &Vector, b: &Vector) -> f64 {
    (a - b).amax()
}
