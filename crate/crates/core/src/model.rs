//! Problem definition: the known plant, quadratic weights, LQR gain
//! synthesis and the tracking-to-regulation reformulation.
//!
//! Tracking `r_t` with `x_{t+1} = A x_t + B u_t` is handled in error
//! coordinates `e_t = x_t − r_t`, where the reference enters as the
//! artificial disturbance `w_t = A r_t − r_{t+1}`.

use crate::error::{Error, Result};
use crate::numerics::{
    self, is_symmetric, linear_solve, lqr_gain, min_sym_eigenvalue, solve_dare, spectral_radius,
    weighted_sq_norm, Matrix, Vector,
};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    a: Matrix,
    b: Matrix,
}

impl LinearSystem {
    pub fn new(a: Matrix, b: Matrix) -> Result<Self> {
        if !a.is_square() || b.nrows() != a.nrows() || b.ncols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "A is {}x{}, B is {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols()
            )));
        }
        numerics::ensure_finite(&a, "A")?;
        numerics::ensure_finite(&b, "B")?;
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Input dimension.
    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    /// `A e + B u + w`.
    pub fn step(&self, e: &Vector, u: &Vector, w: &Vector) -> Vector {
        &self.a * e + &self.b * u + w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostWeights {
    q: Matrix,
    r: Matrix,
}

impl CostWeights {
    /// Validates `Q = Qᵀ ⪰ 0` and `R = Rᵀ ≻ 0`.
    pub fn new(q: Matrix, r: Matrix) -> Result<Self> {
        numerics::ensure_finite(&q, "Q")?;
        numerics::ensure_finite(&r, "R")?;
        if !q.is_square() || !r.is_square() {
            return Err(Error::DimensionMismatch("Q and R must be square".into()));
        }
        if !is_symmetric(&q, 1e-12) || min_sym_eigenvalue(&q) < -1e-12 * (1.0 + q.amax()) {
            return Err(Error::AssumptionViolated(
                "Assumption 2 violated (Q must be symmetric positive semidefinite)".into(),
            ));
        }
        if r.is_empty() || !is_symmetric(&r, 1e-12) || min_sym_eigenvalue(&r) <= 0.0 {
            return Err(Error::AssumptionViolated(
                "Assumption 2 violated (R ≻ 0)".into(),
            ));
        }
        Ok(Self { q, r })
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn r(&self) -> &Matrix {
        &self.r
    }

    fn check_against(&self, system: &LinearSystem) -> Result<()> {
        if self.q.nrows() != system.n() || self.r.nrows() != system.m() {
            return Err(Error::DimensionMismatch(format!(
                "Q is {0}x{0}, R is {1}x{1} for n = {2}, m = {3}",
                self.q.nrows(),
                self.r.nrows(),
                system.n(),
                system.m()
            )));
        }
        Ok(())
    }
}

/// LQR quantities derived once per problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesizedGains {
    /// Stabilising DARE solution.
    pub p: Matrix,
    /// `(R + BᵀPB)⁻¹BᵀPA`.
    pub k: Matrix,
    /// Closed-loop map `A − BK`.
    pub f: Matrix,
    /// Steady-state input-to-state map `(I − A + BK)⁻¹B`.
    pub s: Matrix,
    /// Steady-state disturbance-to-state map `(I − A + BK)⁻¹`.
    pub s_hat: Matrix,
    /// `R + BᵀPB`, the curvature of the optimal Q-function in `u`.
    pub gram: Matrix,
    /// Cached `ρ(F)`.
    pub closed_loop_radius: f64,
}

pub fn synthesize_gains(system: &LinearSystem, weights: &CostWeights) -> Result<SynthesizedGains> {
    weights.check_against(system)?;
    let (a, b) = (system.a(), system.b());
    let p = solve_dare(a, b, weights.q(), weights.r())?;
    let k = lqr_gain(a, b, weights.r(), &p)?;
    let f = a - b * &k;
    let closed_loop_radius = spectral_radius(&f)?;
    if closed_loop_radius >= 1.0 {
        return Err(Error::AssumptionViolated(format!(
            "Assumption 2 violated (ρ(A−BK) = {closed_loop_radius} ≥ 1)"
        )));
    }
    let n = system.n();
    let s_hat = linear_solve(&(Matrix::identity(n, n) - &f), &Matrix::identity(n, n))?;
    let s = &s_hat * b;
    let gram = weights.r() + b.transpose() * &p * b;
    Ok(SynthesizedGains {
        p,
        k,
        f,
        s,
        s_hat,
        gram,
        closed_loop_radius,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTrajectory {
    points: Vec<Vector>,
}

impl ReferenceTrajectory {
    /// `points` holds `r_0 .. r_T`.
    pub fn new(points: Vec<Vector>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::BadParams(
                "reference needs at least one point".into(),
            ));
        };
        let n = first.len();
        if points.iter().any(|p| p.len() != n) {
            return Err(Error::DimensionMismatch(
                "reference points differ in length".into(),
            ));
        }
        if points.iter().flat_map(|p| p.iter()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("reference"));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Vector] {
        &self.points
    }

    pub fn horizon(&self) -> usize {
        self.points.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// `R̄ = max_t ‖r_t‖`.
    pub fn rbar(&self) -> f64 {
        self.points.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }

    pub fn reversed(&self) -> Self {
        Self {
            points: self.points.iter().rev().cloned().collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            points: self.points.iter().map(|p| p * factor).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceSequence {
    pub values: Vec<Vector>,
}

impl DisturbanceSequence {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `w_t = A r_t − r_{t+1}` for `0 ≤ t < T`.
pub fn reference_to_disturbance(
    system: &LinearSystem,
    reference: &ReferenceTrajectory,
) -> Result<DisturbanceSequence> {
    if reference.dim() != system.n() {
        return Err(Error::DimensionMismatch(format!(
            "reference has dimension {}, system has n = {}",
            reference.dim(),
            system.n()
        )));
    }
    if reference.horizon() < 1 {
        return Err(Error::BadParams(
            "reference horizon must be at least 1".into(),
        ));
    }
    let values = reference
        .points()
        .windows(2)
        .map(|pair| system.a() * &pair[0] - &pair[1])
        .collect();
    Ok(DisturbanceSequence { values })
}

/// `L(T) = Σ_{t<T} ‖r_{t+1} − r_t‖`.
pub fn path_length(reference: &ReferenceTrajectory) -> f64 {
    reference
        .points()
        .windows(2)
        .map(|pair| (&pair[1] - &pair[0]).norm())
        .sum()
}

/// `J = ‖e_T‖²_P + Σ_{t<T} (‖e_t‖²_Q + ‖u_t‖²_R)`.
pub fn evaluate_cost(
    gains: &SynthesizedGains,
    weights: &CostWeights,
    errors: &[Vector],
    inputs: &[Vector],
) -> Result<f64> {
    if errors.len() != inputs.len() + 1 {
        return Err(Error::DimensionMismatch(format!(
            "{} error states for {} inputs",
            errors.len(),
            inputs.len()
        )));
    }
    let n = weights.q().nrows();
    let m = weights.r().nrows();
    if errors.iter().any(|e| e.len() != n) || inputs.iter().any(|u| u.len() != m) {
        return Err(Error::DimensionMismatch(
            "sequence element dimensions".into(),
        ));
    }
    let stage: f64 = errors
        .iter()
        .zip(inputs)
        .map(|(e, u)| weighted_sq_norm(e, weights.q()) + weighted_sq_norm(u, weights.r()))
        .sum();
    Ok(stage + weighted_sq_norm(errors.last().expect("non-empty"), &gains.p))
}

/// Online cost `‖A e_t + B u_t + w_t‖²_Q + ‖u_t‖²_R`, with `P` replacing
/// `Q` on the last step.
pub fn online_cost(
    system: &LinearSystem,
    gains: &SynthesizedGains,
    weights: &CostWeights,
    e: &Vector,
    u: &Vector,
    w: &Vector,
    is_last: bool,
) -> Result<f64> {
    if e.len() != system.n() || w.len() != system.n() || u.len() != system.m() {
        return Err(Error::DimensionMismatch("online cost arguments".into()));
    }
    let next = system.step(e, u, w);
    let state_weight = if is_last { &gains.p } else { weights.q() };
    Ok(weighted_sq_norm(&next, state_weight) + weighted_sq_norm(u, weights.r()))
}
