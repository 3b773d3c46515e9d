//! Combined plant/optimizer dynamics of the gradient-based policies.
//!
//! With `z_t = (v_t, e_t)` an OGD policy in closed loop is the linear
//! system `z_{t+1} = Ã z_t + B̃ w_t`. This module builds `Ã`, `B̃` and the
//! auxiliary blocks, checks and selects step sizes, computes steady states
//! and evaluates the explicit dynamic-regret upper bound.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::controllers::OgdUpdate;
use crate::error::{Error, Result};
use crate::model::{CostWeights, LinearSystem, SynthesizedGains};
use crate::numerics::{
    decay_envelope, linear_solve, max_sym_eigenvalue, min_sym_eigenvalue, resolvent_norm,
    spectral_norm, spectral_radius, DecayEnvelope, Matrix, Vector, TOLERANCES,
};

/// Step-size independent blocks of the combined dynamics.
#[derive(Debug, Clone, PartialEq)]
struct Blocks {
    /// `2 G_u + 2 G_e B`, i.e. `M` for the steady-state update.
    m: Matrix,
    /// `2 G_e F − 2 G_u K`, i.e. `H` for the steady-state update.
    h: Matrix,
    /// `2 G_e`, the disturbance gain into the optimizer state.
    w_gain: Matrix,
    b: Matrix,
    f: Matrix,
}

impl Blocks {
    fn new(update: &OgdUpdate, system: &LinearSystem, gains: &SynthesizedGains) -> Self {
        let m = (&update.input_coeff + &update.error_coeff * system.b()) * 2.0;
        let h = (&update.error_coeff * &gains.f - &update.input_coeff * &gains.k) * 2.0;
        Self {
            m,
            h,
            w_gain: &update.error_coeff * 2.0,
            b: system.b().clone(),
            f: gains.f.clone(),
        }
    }

    fn a_tilde(&self, alpha: f64) -> Matrix {
        let (m, n) = (self.m.nrows(), self.f.nrows());
        let mut a = Matrix::zeros(m + n, m + n);
        a.view_mut((0, 0), (m, m))
            .copy_from(&(Matrix::identity(m, m) - &self.m * alpha));
        a.view_mut((0, m), (m, n)).copy_from(&(&self.h * -alpha));
        a.view_mut((m, 0), (n, m)).copy_from(&self.b);
        a.view_mut((m, m), (n, n)).copy_from(&self.f);
        a
    }

    fn b_tilde(&self, alpha: f64) -> Matrix {
        let (m, n) = (self.m.nrows(), self.f.nrows());
        let mut b = Matrix::zeros(m + n, n);
        b.view_mut((0, 0), (m, n))
            .copy_from(&(&self.w_gain * -alpha));
        b.view_mut((m, 0), (n, n))
            .copy_from(&Matrix::identity(n, n));
        b
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CombinedDynamics {
    pub a_tilde: Matrix,
    pub b_tilde: Matrix,
    pub m: Matrix,
    pub h: Matrix,
    /// `M + HS`.
    pub m_bar: Matrix,
    pub q_tilde: Matrix,
    pub q_tilde_t: Matrix,
    /// Coordinate change `[[I, 0], [−S, I]]`.
    pub v_transform: Matrix,
    pub alpha: f64,
    s: Matrix,
    f: Matrix,
}

impl CombinedDynamics {
    pub fn m_dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn n_dim(&self) -> usize {
        self.f.nrows()
    }

    pub fn spectral_radius(&self) -> Result<f64> {
        spectral_radius(&self.a_tilde)
    }

    /// `z_{t+1} = Ã z_t + B̃ w_t`.
    pub fn step(&self, z: &Vector, w: &Vector) -> Vector {
        &self.a_tilde * z + &self.b_tilde * w
    }

    /// `(I − Ã)⁻¹B̃`.
    pub fn steady_state_gain(&self) -> Result<Matrix> {
        let p = self.a_tilde.nrows();
        linear_solve(&(Matrix::identity(p, p) - &self.a_tilde), &self.b_tilde)
    }

    /// `Ã` expressed in the transformed coordinates:
    /// `[[I − αM̄, −αH], [αSM̄, αSH + F]]`.
    pub fn transformed_block_form(&self) -> Matrix {
        let (m, n, a) = (self.m_dim(), self.n_dim(), self.alpha);
        let mut out = Matrix::zeros(m + n, m + n);
        out.view_mut((0, 0), (m, m))
            .copy_from(&(Matrix::identity(m, m) - &self.m_bar * a));
        out.view_mut((0, m), (m, n)).copy_from(&(&self.h * -a));
        out.view_mut((m, 0), (n, m))
            .copy_from(&(&self.s * &self.m_bar * a));
        out.view_mut((m, m), (n, n))
            .copy_from(&(&self.s * &self.h * a + &self.f));
        out
    }
}

/// Combined dynamics of the steady-state OGD policy.
pub fn build_combined(
    system: &LinearSystem,
    gains: &SynthesizedGains,
    weights: &CostWeights,
    alpha: f64,
) -> Result<CombinedDynamics> {
    if weights.q().nrows() != system.n() || gains.k.ncols() != system.n() {
        return Err(Error::DimensionMismatch("combined dynamics inputs".into()));
    }
    let blocks = Blocks::new(&OgdUpdate::steady_state(gains, weights), system, gains);
    let (m, n) = (system.m(), system.n());
    let m_bar = &blocks.m + &blocks.h * &gains.s;

    let rk = weights.r() * &gains.k;
    let mut q_tilde = Matrix::zeros(m + n, m + n);
    q_tilde.view_mut((0, 0), (m, m)).copy_from(weights.r());
    q_tilde.view_mut((0, m), (m, n)).copy_from(&(-&rk));
    q_tilde
        .view_mut((m, 0), (n, m))
        .copy_from(&(-rk.transpose()));
    q_tilde
        .view_mut((m, m), (n, n))
        .copy_from(&(weights.q() + gains.k.transpose() * &rk));
    let mut q_tilde_t = Matrix::zeros(m + n, m + n);
    q_tilde_t.view_mut((m, m), (n, n)).copy_from(&gains.p);

    let mut v_transform = Matrix::identity(m + n, m + n);
    v_transform.view_mut((m, 0), (n, m)).copy_from(&(-&gains.s));

    Ok(CombinedDynamics {
        a_tilde: blocks.a_tilde(alpha),
        b_tilde: blocks.b_tilde(alpha),
        m: blocks.m,
        h: blocks.h,
        m_bar,
        q_tilde,
        q_tilde_t,
        v_transform,
        alpha,
        s: gains.s.clone(),
        f: gains.f.clone(),
    })
}

/// Closed-loop matrix of the myopic OGD policy, in the same `(v, e)`
/// coordinates. Its stability is not implied by any other check.
pub fn naive_combined_matrix(
    system: &LinearSystem,
    gains: &SynthesizedGains,
    weights: &CostWeights,
    alpha: f64,
) -> Matrix {
    Blocks::new(&OgdUpdate::naive(system, weights), system, gains).a_tilde(alpha)
}

/// Step-size admissibility `ρ(Ã) < 1`, with a small safety margin.
pub fn check_step_size(cd: &CombinedDynamics) -> bool {
    cd.spectral_radius()
        .is_ok_and(|rho| rho < 1.0 - TOLERANCES.stability_margin)
}

/// Outcome of the small-gain sufficient stability test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallGainCheck {
    pub holds: bool,
    /// Left-hand side of the small-gain inequality.
    pub loop_gain: f64,
    /// `2/ρ(M̄)`.
    pub alpha_limit: f64,
}

const FREQ_GRID: usize = 2048;

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..60 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    f1.max(f2)
}

/// `max_ω ‖(e^{jω}I − W)⁻¹‖` by grid search plus golden-section refinement.
pub fn max_resolvent_norm(w: &Matrix) -> f64 {
    let eval = |omega: f64| resolvent_norm(Complex64::from_polar(1.0, omega), w);
    let step = TAU / FREQ_GRID as f64;
    let (best_k, best) = (0..FREQ_GRID).map(|k| (k, eval(k as f64 * step))).fold(
        (0, f64::NEG_INFINITY),
        |acc, x| if x.1 > acc.1 { x } else { acc },
    );
    if !best.is_finite() {
        return f64::INFINITY;
    }
    let centre = best_k as f64 * step;
    best.max(golden_max(eval, centre - step, centre + step))
}

/// Small-gain sufficient condition for `ρ(Ã) < 1`:
/// `α < 2/ρ(M̄)` and
/// `α · ‖SM̄‖‖H‖/λ_min(M̄) · max_ω ‖(e^{jω}I − αSH − F)⁻¹‖ < 1`.
pub fn sufficient_condition(cd: &CombinedDynamics) -> Result<SmallGainCheck> {
    let lambda_min = min_sym_eigenvalue(&cd.m_bar);
    if lambda_min <= 0.0 {
        return Err(Error::SingularProgram(lambda_min));
    }
    let alpha = cd.alpha;
    let alpha_limit = 2.0 / spectral_radius(&cd.m_bar)?;
    let coupling = spectral_norm(&(&cd.s * &cd.m_bar)) * spectral_norm(&cd.h) / lambda_min;
    let inner = &cd.s * &cd.h * alpha + &cd.f;
    let loop_gain = alpha * coupling * max_resolvent_norm(&inner);
    Ok(SmallGainCheck {
        holds: alpha > 0.0 && alpha < alpha_limit && loop_gain < 1.0,
        loop_gain,
        alpha_limit,
    })
}

/// Largest `α = α₀/2^k` satisfying the small-gain condition, starting at
/// `α₀ = 1/ρ(M̄)`.
pub fn halving_search(
    system: &LinearSystem,
    gains: &SynthesizedGains,
    weights: &CostWeights,
    max_halvings: usize,
) -> Result<Option<f64>> {
    let probe = build_combined(system, gains, weights, 0.0)?;
    let mut alpha = 1.0 / spectral_radius(&probe.m_bar)?;
    for _ in 0..max_halvings {
        let cd = build_combined(system, gains, weights, alpha)?;
        if sufficient_condition(&cd)?.holds {
            return Ok(Some(alpha));
        }
        alpha *= 0.5;
    }
    Ok(None)
}

const ALPHA_GRID: usize = 200;
const ALPHA_MIN: f64 = 1e-6;

/// Step size minimising `ρ(Ã(α))` over a logarithmic grid on
/// `[1e−6, 2/ρ(M̄))`, refined by ternary search.
pub fn select_step_size(
    system: &LinearSystem,
    gains: &SynthesizedGains,
    weights: &CostWeights,
) -> Result<f64> {
    let blocks = Blocks::new(&OgdUpdate::steady_state(gains, weights), system, gains);
    let m_bar = &blocks.m + &blocks.h * &gains.s;
    let rho_mbar = max_sym_eigenvalue(&m_bar);
    if rho_mbar <= 0.0 {
        return Err(Error::SingularProgram(min_sym_eigenvalue(&m_bar)));
    }
    let hi = 2.0 / rho_mbar;
    if hi <= ALPHA_MIN {
        return Err(Error::NoStableStep);
    }
    let radius =
        |log_alpha: f64| spectral_radius(&blocks.a_tilde(log_alpha.exp())).unwrap_or(f64::INFINITY);
    let (lo_log, hi_log) = (ALPHA_MIN.ln(), hi.ln());
    let grid: Vec<f64> = (0..ALPHA_GRID)
        .map(|i| lo_log + (hi_log - lo_log) * i as f64 / ALPHA_GRID as f64)
        .collect();
    let (best_i, best_rho) =
        grid.iter()
            .map(|&x| radius(x))
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (i, r)| if r < acc.1 { (i, r) } else { acc },
            );

    let mut a = grid[best_i.saturating_sub(1)];
    let mut b = grid.get(best_i + 1).copied().unwrap_or(hi_log);
    for _ in 0..80 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if radius(m1) < radius(m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    let refined = 0.5 * (a + b);
    let (log_alpha, rho) = if radius(refined) < best_rho {
        (refined, radius(refined))
    } else {
        (grid[best_i], best_rho)
    };
    if rho < 1.0 - TOLERANCES.stability_margin {
        Ok(log_alpha.exp())
    } else {
        Err(Error::NoStableStep)
    }
}

/// Steady state `ẑ = (I − Ã)⁻¹B̃w̄`, split into `(v̂, ê)`.
pub fn steady_state_z(cd: &CombinedDynamics, w_bar: &Vector) -> Result<(Vector, Vector)> {
    if w_bar.len() != cd.n_dim() {
        return Err(Error::DimensionMismatch("steady-state disturbance".into()));
    }
    let z = cd.steady_state_gain()? * w_bar;
    let m = cd.m_dim();
    Ok((
        z.rows(0, m).into_owned(),
        z.rows(m, cd.n_dim()).into_owned(),
    ))
}

/// Constants entering the dynamic-regret upper bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretBoundConstants {
    /// `‖(R+BᵀPB)⁻¹Bᵀ‖·‖P‖`.
    pub d: f64,
    pub c_f: f64,
    pub lambda_f: f64,
    pub c_at: f64,
    pub lambda_at: f64,
    /// `‖(I−Ã)⁻¹B̃‖·(‖A‖+1)`.
    pub h: f64,
    /// `(h+1)R̄ + ‖x₀‖ + ‖v₀‖`.
    pub b: f64,
    /// `c_Ã(b + 2R̄h/(1−λ_Ã))`.
    pub eps_bar: f64,
    /// `4‖R+BᵀPB‖`.
    pub p_bar: f64,
    pub s2_max: f64,
    pub s3_max: f64,
    pub norm_a: f64,
    pub rbar: f64,
    /// `‖Q̃‖`, used by the steady-state benchmark bound.
    pub norm_q_tilde: f64,
}

impl RegretBoundConstants {
    /// Envelope constants are taken valid from `k = 0` (`c ≥ 1`), since the
    /// bound also uses the zeroth powers of `F` and `Ã`.
    pub fn compute(
        system: &LinearSystem,
        gains: &SynthesizedGains,
        cd: &CombinedDynamics,
        rbar: f64,
        x0_norm: f64,
        v0_norm: f64,
    ) -> Result<Self> {
        let env_f = decay_envelope(&gains.f)?;
        let env_at = decay_envelope(&cd.a_tilde)?;
        Self::from_envelopes(system, gains, cd, env_f, env_at, rbar, x0_norm, v0_norm)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn from_envelopes(
        system: &LinearSystem,
        gains: &SynthesizedGains,
        cd: &CombinedDynamics,
        env_f: DecayEnvelope,
        env_at: DecayEnvelope,
        rbar: f64,
        x0_norm: f64,
        v0_norm: f64,
    ) -> Result<Self> {
        let gain = linear_solve(&gains.gram, &system.b().transpose())?;
        let d = spectral_norm(&gain) * spectral_norm(&gains.p);
        let norm_a = spectral_norm(system.a());
        let h = spectral_norm(&cd.steady_state_gain()?) * (norm_a + 1.0);
        let b = (h + 1.0) * rbar + x0_norm + v0_norm;
        let (c_f, lambda_f) = (env_f.c_from_zero(), env_f.lambda);
        let (c_at, lambda_at) = (env_at.c_from_zero(), env_at.lambda);
        let eps_bar = c_at * (b + 2.0 * rbar * h / (1.0 - lambda_at));
        let p_bar = 4.0 * spectral_norm(&gains.gram);
        let slope = c_f * d * (norm_a + 1.0) * rbar;
        Ok(Self {
            d,
            c_f,
            lambda_f,
            c_at,
            lambda_at,
            h,
            b,
            eps_bar,
            p_bar,
            s2_max: 2.0 * slope / (1.0 - lambda_f).powi(2),
            s3_max: slope / (1.0 - lambda_f),
            norm_a,
            rbar,
            norm_q_tilde: spectral_norm(&cd.q_tilde),
        })
    }

    /// Same problem with a different trajectory bound and start.
    pub fn with_trajectory(&self, rbar: f64, x0_norm: f64, v0_norm: f64) -> Self {
        let mut out = *self;
        out.rbar = rbar;
        out.b = (self.h + 1.0) * rbar + x0_norm + v0_norm;
        out.eps_bar = self.c_at * (out.b + 2.0 * rbar * self.h / (1.0 - self.lambda_at));
        let slope = self.c_f * self.d * (self.norm_a + 1.0) * rbar;
        out.s2_max = 2.0 * slope / (1.0 - self.lambda_f).powi(2);
        out.s3_max = slope / (1.0 - self.lambda_f);
        out
    }
}

/// Upper bound on SS-OGD dynamic regret for path length `L` and horizon `T`:
/// `P̄·[ε̄·Σs₁ + s₂·Σs₂ + s₃·Σs₃]` with the three sum bounds
/// `Σs₁ ≤ c_Ã(b + hL)/(1−λ_Ã)`,
/// `Σs₂ ≤ c_F d(‖A‖+1)L/(1−λ_F)²`,
/// `Σs₃ ≤ c_F d(‖A‖+1)R̄(1−λ_F^T)/(1−λ_F)²`.
pub fn regret_upper_bound(k: &RegretBoundConstants, path_length: f64, horizon: usize) -> f64 {
    let sum_s1 = k.c_at / (1.0 - k.lambda_at) * (k.b + k.h * path_length);
    let coeff = k.c_f * k.d * (k.norm_a + 1.0) / (1.0 - k.lambda_f).powi(2);
    let sum_s2 = coeff * path_length;
    let sum_s3 = coeff * k.rbar * (1.0 - k.lambda_f.powi(horizon.min(i32::MAX as usize) as i32));
    k.p_bar * (k.eps_bar * sum_s1 + k.s2_max * sum_s2 + k.s3_max * sum_s3)
}

/// Upper bound on SS-OGD regret against the steady-state benchmark:
/// `c_Ã‖Q̃‖(2hR̄ + ε̄)(b + hL)/(1−λ_Ã)`.
pub fn ss_regret_upper_bound(k: &RegretBoundConstants, path_length: f64) -> f64 {
    k.c_at * k.norm_q_tilde * (2.0 * k.h * k.rbar + k.eps_bar) / (1.0 - k.lambda_at)
        * (k.b + k.h * path_length)
}
