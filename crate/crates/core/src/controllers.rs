//! Tracking policies.
//!
//! Every policy uses the affine law `u_t = −K e_t + v_t` with the LQR gain
//! `K` and differs only in how the correction `v_t` is produced:
//!
//! * `ss-ogd` – gradient step on the steady-state cost, using the measured
//!   error and the previous input,
//! * `naive-ogd` – gradient step on the most recent online cost,
//! * `ce` – certainty equivalence, freezing the reference at `r_t`,
//! * `offline` – the noncausal optimum, which sees the whole disturbance,
//! * `ss-benchmark` – the per-step optimal steady pair, which sees `w_t`.
//!
//! Causal policies only ever see `(e_t, r_t)` before emitting `u_t`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{CostWeights, DisturbanceSequence, LinearSystem, SynthesizedGains};
use crate::numerics::{linear_solve, max_sym_eigenvalue, min_sym_eigenvalue, Matrix, Vector};

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    pub v: Vector,
    pub last_u: Option<Vector>,
    pub step: usize,
}

impl ControllerState {
    pub fn new(v0: Vector) -> Self {
        Self {
            v: v0,
            last_u: None,
            step: 0,
        }
    }

    pub fn zero(m: usize) -> Self {
        Self::new(Vector::zeros(m))
    }
}

/// Linear gradient update `v ← v − 2α(G_u u_{t−1} + G_e e_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OgdUpdate {
    pub input_coeff: Matrix,
    pub error_coeff: Matrix,
}

impl OgdUpdate {
    /// `G_u = (I − KS)ᵀR`, `G_e = SᵀQ`.
    pub fn steady_state(gains: &SynthesizedGains, weights: &CostWeights) -> Self {
        let m = gains.k.nrows();
        let i_ks = Matrix::identity(m, m) - &gains.k * &gains.s;
        Self {
            input_coeff: i_ks.transpose() * weights.r(),
            error_coeff: gains.s.transpose() * weights.q(),
        }
    }

    /// `G_u = R`, `G_e = BᵀQ`.
    pub fn naive(system: &LinearSystem, weights: &CostWeights) -> Self {
        Self {
            input_coeff: weights.r().clone(),
            error_coeff: system.b().transpose() * weights.q(),
        }
    }

    pub fn apply(
        &self,
        state: &ControllerState,
        k: &Matrix,
        alpha: f64,
        e_t: &Vector,
    ) -> Result<(Vector, ControllerState)> {
        if e_t.len() != self.error_coeff.ncols() || state.v.len() != self.input_coeff.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "error of length {} and bias of length {}",
                e_t.len(),
                state.v.len()
            )));
        }
        let v = match &state.last_u {
            None => state.v.clone(),
            Some(u_prev) => {
                let grad = &self.input_coeff * u_prev + &self.error_coeff * e_t;
                &state.v - grad * (2.0 * alpha)
            }
        };
        let u = -(k * e_t) + &v;
        let next = ControllerState {
            v,
            last_u: Some(u.clone()),
            step: state.step + 1,
        };
        Ok((u, next))
    }
}

pub fn ss_ogd_step(
    state: &ControllerState,
    gains: &SynthesizedGains,
    weights: &CostWeights,
    alpha: f64,
    e_t: &Vector,
) -> Result<(Vector, ControllerState)> {
    OgdUpdate::steady_state(gains, weights).apply(state, &gains.k, alpha, e_t)
}

pub fn naive_ogd_step(
    state: &ControllerState,
    system: &LinearSystem,
    gains: &SynthesizedGains,
    weights: &CostWeights,
    alpha: f64,
    e_t: &Vector,
) -> Result<(Vector, ControllerState)> {
    OgdUpdate::naive(system, weights).apply(state, &gains.k, alpha, e_t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateSolution {
    pub e_hat: Vector,
    pub v_hat: Vector,
    pub u_hat: Vector,
}

/// Linear map `w ↦ (ê, v̂)` solving the per-step steady-state program
/// `min ‖e‖²_Q + ‖−Ke + v‖²_R  s.t.  e = (A − BK)e + Bv + w`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateMap {
    v_map: Matrix,
    e_map: Matrix,
    k: Matrix,
}

impl SteadyStateMap {
    pub fn new(gains: &SynthesizedGains, weights: &CostWeights) -> Result<Self> {
        let m = gains.k.nrows();
        let i_ks = Matrix::identity(m, m) - &gains.k * &gains.s;
        let st_q = gains.s.transpose() * weights.q();
        let hessian = &st_q * &gains.s + i_ks.transpose() * weights.r() * &i_ks;
        let lambda_min = min_sym_eigenvalue(&hessian);
        if lambda_min <= 1e-12 * max_sym_eigenvalue(&hessian).max(1.0) {
            return Err(Error::SingularProgram(lambda_min));
        }
        let rhs = i_ks.transpose() * weights.r() * &gains.k * &gains.s_hat - st_q * &gains.s_hat;
        let v_map = linear_solve(&hessian, &rhs)?;
        let e_map = &gains.s * &v_map + &gains.s_hat;
        Ok(Self {
            v_map,
            e_map,
            k: gains.k.clone(),
        })
    }

    pub fn solve(&self, w: &Vector) -> Result<SteadyStateSolution> {
        if w.len() != self.v_map.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "disturbance of length {}, expected {}",
                w.len(),
                self.v_map.ncols()
            )));
        }
        let v_hat = &self.v_map * w;
        let e_hat = &self.e_map * w;
        let u_hat = -(&self.k * &e_hat) + &v_hat;
        Ok(SteadyStateSolution {
            e_hat,
            v_hat,
            u_hat,
        })
    }
}

pub fn solve_stepwise_ss(
    gains: &SynthesizedGains,
    weights: &CostWeights,
    w: &Vector,
) -> Result<SteadyStateSolution> {
    SteadyStateMap::new(gains, weights)?.solve(w)
}

/// Certainty-equivalent step: solve the steady-state program with
/// `r_{t+1} := r_t` and apply it as feedforward on top of `−K e_t`.
pub fn ce_controller_step(
    state: &ControllerState,
    system: &LinearSystem,
    gains: &SynthesizedGains,
    weights: &CostWeights,
    e_t: &Vector,
    r_t: &Vector,
) -> Result<(Vector, ControllerState)> {
    let map = SteadyStateMap::new(gains, weights)?;
    ce_step_with(&map, state, system, &gains.k, e_t, r_t)
}

fn ce_step_with(
    map: &SteadyStateMap,
    state: &ControllerState,
    system: &LinearSystem,
    k: &Matrix,
    e_t: &Vector,
    r_t: &Vector,
) -> Result<(Vector, ControllerState)> {
    if e_t.len() != system.n() || r_t.len() != system.n() {
        return Err(Error::DimensionMismatch("CE step arguments".into()));
    }
    let w_ce = system.a() * r_t - r_t;
    let v = map.solve(&w_ce)?.v_hat;
    let u = -(k * e_t) + &v;
    Ok((
        u.clone(),
        ControllerState {
            v,
            last_u: Some(u),
            step: state.step + 1,
        },
    ))
}

/// `û_t = −K ê_t + v̂_t` for every disturbance in the sequence.
pub fn steady_state_benchmark_inputs(
    gains: &SynthesizedGains,
    weights: &CostWeights,
    disturbances: &DisturbanceSequence,
) -> Result<Vec<Vector>> {
    let map = SteadyStateMap::new(gains, weights)?;
    disturbances
        .values
        .iter()
        .map(|w| map.solve(w).map(|s| s.u_hat))
        .collect()
}

/// Feedforward part of the noncausal optimum:
/// `u*_t(e) = −K e − Σ_{i=t}^{T−1} K_w^{i,t} w_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct OfflinePlan {
    k: Matrix,
    feedforward: Vec<Vector>,
}

impl OfflinePlan {
    /// Backward recursion `g_t = P w_t + Fᵀ g_{t+1}`, `g_T = 0`, so that
    /// the feedforward is `(R + BᵀPB)⁻¹Bᵀ g_t`.
    pub fn new(
        system: &LinearSystem,
        gains: &SynthesizedGains,
        disturbances: &DisturbanceSequence,
    ) -> Result<Self> {
        let n = system.n();
        if disturbances.values.iter().any(|w| w.len() != n) {
            return Err(Error::DimensionMismatch("disturbance length".into()));
        }
        let gain = linear_solve(&gains.gram, &system.b().transpose())?;
        let ft = gains.f.transpose();
        let mut g = Vector::zeros(n);
        let mut feedforward = vec![Vector::zeros(system.m()); disturbances.len()];
        for (t, w) in disturbances.values.iter().enumerate().rev() {
            g = &gains.p * w + &ft * &g;
            feedforward[t] = &gain * &g;
        }
        Ok(Self {
            k: gains.k.clone(),
            feedforward,
        })
    }

    pub fn horizon(&self) -> usize {
        self.feedforward.len()
    }

    /// Optimal input at step `t` from error state `e`.
    pub fn input(&self, t: usize, e: &Vector) -> Vector {
        -(&self.k * e) - &self.feedforward[t]
    }
}

/// `K_w^{i,t} = (R + BᵀPB)⁻¹Bᵀ(Fᵀ)^{i−t}P` for `i ≥ t`.
pub fn kw_gain(
    system: &LinearSystem,
    gains: &SynthesizedGains,
    i: usize,
    t: usize,
) -> Result<Matrix> {
    if i < t {
        return Err(Error::BadParams(format!("K_w^{{{i},{t}}} needs i ≥ t")));
    }
    let ft = gains.f.transpose();
    let mut power = Matrix::identity(system.n(), system.n());
    for _ in t..i {
        power = &ft * power;
    }
    linear_solve(&gains.gram, &(system.b().transpose() * power * &gains.p))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OfflineSolution {
    pub inputs: Vec<Vector>,
    pub errors: Vec<Vector>,
}

/// Noncausal optimal inputs and the error trajectory they generate.
pub fn offline_noncausal_inputs(
    system: &LinearSystem,
    gains: &SynthesizedGains,
    e0: &Vector,
    disturbances: &DisturbanceSequence,
) -> Result<OfflineSolution> {
    if e0.len() != system.n() {
        return Err(Error::DimensionMismatch("initial error length".into()));
    }
    let plan = OfflinePlan::new(system, gains, disturbances)?;
    let mut errors = Vec::with_capacity(plan.horizon() + 1);
    let mut inputs = Vec::with_capacity(plan.horizon());
    errors.push(e0.clone());
    for (t, w) in disturbances.values.iter().enumerate() {
        let u = plan.input(t, &errors[t]);
        let next = system.step(&errors[t], &u, w);
        inputs.push(u);
        errors.push(next);
    }
    Ok(OfflineSolution { inputs, errors })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ControllerKind {
    SsOgd,
    NaiveOgd,
    Ce,
    Offline,
    SteadyStateBenchmark,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 5] = [
        ControllerKind::SsOgd,
        ControllerKind::NaiveOgd,
        ControllerKind::Ce,
        ControllerKind::Offline,
        ControllerKind::SteadyStateBenchmark,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ControllerKind::SsOgd => "ss-ogd",
            ControllerKind::NaiveOgd => "naive-ogd",
            ControllerKind::Ce => "ce",
            ControllerKind::Offline => "offline",
            ControllerKind::SteadyStateBenchmark => "ss-benchmark",
        }
    }

    /// Whether the policy is restricted to `(e_t, r_t)` when acting.
    pub fn is_causal(self) -> bool {
        !matches!(
            self,
            ControllerKind::Offline | ControllerKind::SteadyStateBenchmark
        )
    }

    pub fn uses_step_size(self) -> bool {
        matches!(self, ControllerKind::SsOgd | ControllerKind::NaiveOgd)
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ControllerKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| Error::BadParams(format!("unknown controller `{s}`")))
    }
}

/// One round of the interaction protocol: given the observed error and
/// reference, emit the input. The environment reveals `r_{t+1}` only after
/// this returns.
pub trait Policy {
    fn act(&mut self, e_t: &Vector, r_t: &Vector) -> Result<Vector>;

    /// Current correction term `v_t`, for policies that have one.
    fn bias(&self) -> Option<&Vector> {
        None
    }
}

pub struct OgdPolicy {
    update: OgdUpdate,
    k: Matrix,
    alpha: f64,
    state: ControllerState,
}

impl OgdPolicy {
    pub fn steady_state(
        gains: &SynthesizedGains,
        weights: &CostWeights,
        alpha: f64,
        v0: Vector,
    ) -> Self {
        Self {
            update: OgdUpdate::steady_state(gains, weights),
            k: gains.k.clone(),
            alpha,
            state: ControllerState::new(v0),
        }
    }

    pub fn naive(
        system: &LinearSystem,
        gains: &SynthesizedGains,
        weights: &CostWeights,
        alpha: f64,
        v0: Vector,
    ) -> Self {
        Self {
            update: OgdUpdate::naive(system, weights),
            k: gains.k.clone(),
            alpha,
            state: ControllerState::new(v0),
        }
    }

    pub fn state(&self) -> &ControllerState {
        &self.state
    }
}

impl Policy for OgdPolicy {
    fn act(&mut self, e_t: &Vector, _r_t: &Vector) -> Result<Vector> {
        let (u, next) = self.update.apply(&self.state, &self.k, self.alpha, e_t)?;
        self.state = next;
        Ok(u)
    }

    fn bias(&self) -> Option<&Vector> {
        Some(&self.state.v)
    }
}

pub struct CePolicy {
    map: SteadyStateMap,
    system: LinearSystem,
    k: Matrix,
    state: ControllerState,
}

impl CePolicy {
    pub fn new(
        system: &LinearSystem,
        gains: &SynthesizedGains,
        weights: &CostWeights,
    ) -> Result<Self> {
        Ok(Self {
            map: SteadyStateMap::new(gains, weights)?,
            system: system.clone(),
            k: gains.k.clone(),
            state: ControllerState::zero(system.m()),
        })
    }
}

impl Policy for CePolicy {
    fn act(&mut self, e_t: &Vector, r_t: &Vector) -> Result<Vector> {
        let (u, next) = ce_step_with(&self.map, &self.state, &self.system, &self.k, e_t, r_t)?;
        self.state = next;
        Ok(u)
    }

    fn bias(&self) -> Option<&Vector> {
        Some(&self.state.v)
    }
}

/// Noncausal optimum; built from the full disturbance sequence.
pub struct OfflinePolicy {
    plan: OfflinePlan,
    step: usize,
}

impl OfflinePolicy {
    pub fn new(plan: OfflinePlan) -> Self {
        Self { plan, step: 0 }
    }
}

impl Policy for OfflinePolicy {
    fn act(&mut self, e_t: &Vector, _r_t: &Vector) -> Result<Vector> {
        if self.step >= self.plan.horizon() {
            return Err(Error::BadParams("offline plan exhausted".into()));
        }
        let u = self.plan.input(self.step, e_t);
        self.step += 1;
        Ok(u)
    }
}

/// Open-loop replay of a precomputed input sequence.
pub struct OpenLoopPolicy {
    inputs: Vec<Vector>,
    step: usize,
}

impl OpenLoopPolicy {
    pub fn new(inputs: Vec<Vector>) -> Self {
        Self { inputs, step: 0 }
    }
}

impl Policy for OpenLoopPolicy {
    fn act(&mut self, _e_t: &Vector, _r_t: &Vector) -> Result<Vector> {
        let u = self
            .inputs
            .get(self.step)
            .cloned()
            .ok_or_else(|| Error::BadParams("open-loop sequence exhausted".into()))?;
        self.step += 1;
        Ok(u)
    }
}
