//! Online linear-quadratic tracking with steady-state online gradient descent.
//!
//! A plant `x_{t+1} = A x_t + B u_t` must follow a reference `r_t` that is
//! revealed one step at a time. In error coordinates `e_t = x_t − r_t` the
//! reference acts as a disturbance `w_t = A r_t − r_{t+1}`, and the
//! controllers here combine LQR feedback `−K e_t` with a learned correction
//! `v_t` updated by projected gradient steps on the steady-state cost.
//!
//! * [`numerics`]: DARE, spectra, decay envelopes.
//! * [`model`]: plants, weights, gains, references and costs.
//! * [`controllers`]: SS-OGD, naive OGD, certainty equivalence, offline optimum.
//! * [`optimizer`]: combined dynamics, step-size selection, regret bounds.
//! * [`simulator`]: rollouts, regret accounting, batch experiments.
//! * [`scenarios`]: built-in problems.

pub mod controllers;
pub mod error;
pub mod model;
pub mod numerics;
pub mod optimizer;
pub mod scenarios;
pub mod simulator;

pub use controllers::{ControllerKind, OfflinePlan, Policy, SteadyStateMap};
pub use error::{Error, Result};
pub use model::{
    synthesize_gains, CostWeights, DisturbanceSequence, LinearSystem, ReferenceTrajectory,
    SynthesizedGains,
};
pub use numerics::{Matrix, Vector};
pub use optimizer::{build_combined, CombinedDynamics, RegretBoundConstants};
pub use simulator::{
    dynamic_regret, rollout, Problem, ReferenceKind, RegretReport, ScenarioSpec, SimulationTrace,
    StepSize,
};
