//! Closed-loop rollouts, regret accounting and batch experiments.

mod batch;
mod export;
mod reference;
mod regret;

pub use batch::{batch_worst_case_regret, BatchRow};
pub use export::{trace_csv_header, write_trace_csv};
pub use reference::{generate_reference, polyline_length, NormalStream, ReferenceKind};
pub use regret::{dynamic_regret, regret_via_inputs, ss_regret, RegretReport};

use crate::controllers::{
    steady_state_benchmark_inputs, CePolicy, ControllerKind, OfflinePlan, OfflinePolicy, OgdPolicy,
    OpenLoopPolicy, Policy,
};
use crate::error::{Error, Result};
use crate::model::{
    evaluate_cost, online_cost, reference_to_disturbance, synthesize_gains, CostWeights,
    DisturbanceSequence, LinearSystem, ReferenceTrajectory, SynthesizedGains,
};
use crate::numerics::{decay_envelope, spectral_radius, Vector, TOLERANCES};
use crate::optimizer::{
    build_combined, check_step_size, naive_combined_matrix, select_step_size, CombinedDynamics,
    RegretBoundConstants,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    Auto,
    Fixed(f64),
}

impl std::fmt::Display for StepSize {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StepSize::Auto => f.write_str("auto"),
            StepSize::Fixed(a) => write!(f, "{a}"),
        }
    }
}

impl std::str::FromStr for StepSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(StepSize::Auto);
        }
        match s.parse::<f64>() {
            Ok(a) if a.is_finite() && a > 0.0 => Ok(StepSize::Fixed(a)),
            _ => Err(Error::BadParams(format!(
                "step size must be `auto` or a positive number, got `{s}`"
            ))),
        }
    }
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub system: LinearSystem,
    pub weights: CostWeights,
    pub reference: ReferenceKind,
    pub horizon: usize,
    pub seed: u64,
    /// RNG stream; batch runs use the trial index.
    pub trial: u64,
    pub controller: ControllerKind,
    pub step_size: StepSize,
    /// Initial correction term; zero when absent.
    pub v0: Option<Vec<f64>>,
    /// Initial state; `r_0` when absent.
    pub x0: Option<Vec<f64>>,
}

impl ScenarioSpec {
    pub fn generate_reference(&self) -> Result<ReferenceTrajectory> {
        generate_reference(
            &self.reference,
            self.seed,
            self.trial,
            self.horizon,
            self.system.n(),
        )
    }
}

/// Per-problem quantities shared by every rollout on the same plant.
#[derive(Debug, Clone)]
pub struct Problem {
    pub system: LinearSystem,
    pub weights: CostWeights,
    pub gains: SynthesizedGains,
    pub alpha: f64,
    pub combined: CombinedDynamics,
    /// Bound constants for `R̄ = ‖x₀‖ = ‖v₀‖ = 0`, when `ρ(Ã) < 1`.
    bound_base: Option<RegretBoundConstants>,
}

impl Problem {
    pub fn new(system: LinearSystem, weights: CostWeights, step_size: StepSize) -> Result<Self> {
        let gains = synthesize_gains(&system, &weights)?;
        let alpha = match step_size {
            StepSize::Auto => select_step_size(&system, &gains, &weights)?,
            StepSize::Fixed(a) => a,
        };
        let combined = build_combined(&system, &gains, &weights, alpha)?;
        let bound_base = if check_step_size(&combined) {
            let env_f = decay_envelope(&gains.f)?;
            let env_at = decay_envelope(&combined.a_tilde)?;
            Some(RegretBoundConstants::from_envelopes(
                &system, &gains, &combined, env_f, env_at, 0.0, 0.0, 0.0,
            )?)
        } else {
            None
        };
        Ok(Self {
            system,
            weights,
            gains,
            alpha,
            combined,
            bound_base,
        })
    }

    pub fn from_spec(spec: &ScenarioSpec) -> Result<Self> {
        Self::new(spec.system.clone(), spec.weights.clone(), spec.step_size)
    }

    pub fn bound_constants(
        &self,
        rbar: f64,
        x0_norm: f64,
        v0_norm: f64,
    ) -> Option<RegretBoundConstants> {
        self.bound_base
            .map(|k| k.with_trajectory(rbar, x0_norm, v0_norm))
    }

    fn vector(values: Option<&[f64]>, len: usize, what: &str) -> Result<Option<Vector>> {
        match values {
            None => Ok(None),
            Some(v) if v.len() == len && v.iter().all(|x| x.is_finite()) => {
                Ok(Some(Vector::from_column_slice(v)))
            }
            Some(v) => Err(Error::DimensionMismatch(format!(
                "{what} has {} entries, expected {len}",
                v.len()
            ))),
        }
    }

    /// Rejects step sizes for which the policy's closed loop is unstable.
    pub fn check_controller(&self, controller: ControllerKind) -> Result<()> {
        // Naive OGD may sit on a continuum of equilibria (eigenvalue one), which
        // is the failure mode it is run to exhibit; only growth is rejected.
        let (rho, limit) = match controller {
            ControllerKind::SsOgd => (
                self.combined.spectral_radius()?,
                1.0 - TOLERANCES.stability_margin,
            ),
            ControllerKind::NaiveOgd => (
                spectral_radius(&naive_combined_matrix(
                    &self.system,
                    &self.gains,
                    &self.weights,
                    self.alpha,
                ))?,
                1.0 + TOLERANCES.stability_margin,
            ),
            _ => return Ok(()),
        };
        if rho < limit {
            Ok(())
        } else {
            Err(Error::UnstableStep {
                alpha: self.alpha,
                radius: rho,
            })
        }
    }

    /// Runs one closed loop under the revelation order: observe
    /// `(e_t, r_t)`, emit `u_t`, then learn `r_{t+1}`.
    pub fn rollout(
        &self,
        controller: ControllerKind,
        reference: &ReferenceTrajectory,
        x0: Option<&[f64]>,
        v0: Option<&[f64]>,
    ) -> Result<SimulationTrace> {
        self.check_controller(controller)?;
        let (n, m) = (self.system.n(), self.system.m());
        let disturbances = reference_to_disturbance(&self.system, reference)?;
        let r = reference.points();
        let x0 = Self::vector(x0, n, "x0")?.unwrap_or_else(|| r[0].clone());
        let v0 = Self::vector(v0, m, "v0")?.unwrap_or_else(|| Vector::zeros(m));

        let mut policy: Box<dyn Policy> = match controller {
            ControllerKind::SsOgd => Box::new(OgdPolicy::steady_state(
                &self.gains,
                &self.weights,
                self.alpha,
                v0,
            )),
            ControllerKind::NaiveOgd => Box::new(OgdPolicy::naive(
                &self.system,
                &self.gains,
                &self.weights,
                self.alpha,
                v0,
            )),
            ControllerKind::Ce => {
                Box::new(CePolicy::new(&self.system, &self.gains, &self.weights)?)
            }
            ControllerKind::Offline => Box::new(OfflinePolicy::new(OfflinePlan::new(
                &self.system,
                &self.gains,
                &disturbances,
            )?)),
            ControllerKind::SteadyStateBenchmark => Box::new(OpenLoopPolicy::new(
                steady_state_benchmark_inputs(&self.gains, &self.weights, &disturbances)?,
            )),
        };

        let horizon = disturbances.len();
        let mut errors = Vec::with_capacity(horizon + 1);
        let mut inputs = Vec::with_capacity(horizon);
        let mut costs = Vec::with_capacity(horizon);
        let mut biases = Vec::new();
        errors.push(&x0 - &r[0]);
        for t in 0..horizon {
            let e = &errors[t];
            let u = policy.act(e, &r[t])?;
            if u.len() != m || u.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("controller input"));
            }
            if let Some(v) = policy.bias() {
                biases.push(v.clone());
            }
            // r_{t+1} is revealed only now, through w_t.
            let w = &disturbances.values[t];
            costs.push(online_cost(
                &self.system,
                &self.gains,
                &self.weights,
                e,
                &u,
                w,
                t + 1 == horizon,
            )?);
            let next = self.system.step(e, &u, w);
            inputs.push(u);
            errors.push(next);
        }
        let states = errors.iter().zip(r).map(|(e, r)| e + r).collect();
        let total_cost = evaluate_cost(&self.gains, &self.weights, &errors, &inputs)?;
        Ok(SimulationTrace {
            controller,
            states,
            references: r.to_vec(),
            errors,
            inputs,
            costs,
            biases,
            total_cost,
            disturbances,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub controller: ControllerKind,
    /// `x_0 .. x_T`.
    pub states: Vec<Vector>,
    /// `r_0 .. r_T`.
    pub references: Vec<Vector>,
    /// `e_0 .. e_T`.
    pub errors: Vec<Vector>,
    /// `u_0 .. u_{T−1}`.
    pub inputs: Vec<Vector>,
    /// Online costs `c_0 .. c_{T−1}`.
    pub costs: Vec<f64>,
    /// `v_0 .. v_{T−1}`; empty for policies without a correction term.
    pub biases: Vec<Vector>,
    pub total_cost: f64,
    pub disturbances: DisturbanceSequence,
}

impl SimulationTrace {
    pub fn horizon(&self) -> usize {
        self.inputs.len()
    }

    pub fn reference(&self) -> Result<ReferenceTrajectory> {
        ReferenceTrajectory::new(self.references.clone())
    }

    /// `max_t ‖e_{t+1} − (A e_t + B u_t + w_t)‖`.
    pub fn dynamics_residual(&self, system: &LinearSystem) -> f64 {
        (0..self.horizon())
            .map(|t| {
                (&self.errors[t + 1]
                    - system.step(
                        &self.errors[t],
                        &self.inputs[t],
                        &self.disturbances.values[t],
                    ))
                .norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Builds the problem, generates the reference and runs the closed loop.
pub fn rollout(spec: &ScenarioSpec) -> Result<SimulationTrace> {
    let problem = Problem::from_spec(spec)?;
    let reference = spec.generate_reference()?;
    problem.rollout(
        spec.controller,
        &reference,
        spec.x0.as_deref(),
        spec.v0.as_deref(),
    )
}

/// Propagates the physical state `x_{t+1} = A x_t + B u_t`.
pub fn simulate_states(system: &LinearSystem, x0: &Vector, inputs: &[Vector]) -> Vec<Vector> {
    let mut out = vec![x0.clone()];
    for u in inputs {
        let x = out.last().expect("non-empty");
        out.push(system.a() * x + system.b() * u);
    }
    out
}
