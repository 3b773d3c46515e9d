use super::{Problem, SimulationTrace};
use crate::controllers::{
    offline_noncausal_inputs, steady_state_benchmark_inputs, ControllerKind, OfflinePlan,
};
use crate::error::{Error, Result};
use crate::model::{evaluate_cost, online_cost, path_length, SynthesizedGains};
use crate::numerics::{weighted_sq_norm, Vector};
use crate::optimizer::{regret_upper_bound, ss_regret_upper_bound};

#[derive(Debug, Clone, PartialEq)]
pub struct RegretReport {
    pub total_cost: f64,
    /// `J(e₀, u*)` of the noncausal optimum on the same `(e₀, w)`.
    pub offline_cost: f64,
    /// `J(e₀, u^π) − J(e₀, u*)`.
    pub regret: f64,
    /// Same quantity as a sum of `(R+BᵀPB)`-weighted input deviations.
    pub regret_via_inputs: f64,
    /// `J(e₀, u^π) − J(e₀, û)` against the open-loop steady-state benchmark.
    pub ss_regret: f64,
    /// Contribution of the last step to `ss_regret`.
    pub ss_regret_last_step: f64,
    pub path_length: f64,
    /// Dynamic-regret upper bound; SS-OGD traces only.
    pub theory_bound: Option<f64>,
    /// Steady-state-regret upper bound; SS-OGD traces only.
    pub ss_bound: Option<f64>,
    /// Regret accumulated through step `t`, for `t = 0..T−1`.
    pub cumulative: Vec<f64>,
}

fn online_costs(
    problem: &Problem,
    errors: &[Vector],
    inputs: &[Vector],
    trace: &SimulationTrace,
) -> Result<Vec<f64>> {
    let horizon = inputs.len();
    (0..horizon)
        .map(|t| {
            online_cost(
                &problem.system,
                &problem.gains,
                &problem.weights,
                &errors[t],
                &inputs[t],
                &trace.disturbances.values[t],
                t + 1 == horizon,
            )
        })
        .collect()
}

/// Full regret accounting for a trace produced by `problem`.
pub fn dynamic_regret(problem: &Problem, trace: &SimulationTrace) -> Result<RegretReport> {
    let e0 = &trace.errors[0];
    let offline =
        offline_noncausal_inputs(&problem.system, &problem.gains, e0, &trace.disturbances)?;
    let offline_cost = evaluate_cost(
        &problem.gains,
        &problem.weights,
        &offline.errors,
        &offline.inputs,
    )?;
    let offline_costs = online_costs(problem, &offline.errors, &offline.inputs, trace)?;
    let cumulative = trace
        .costs
        .iter()
        .zip(&offline_costs)
        .scan(0.0, |acc, (c, c_star)| {
            *acc += c - c_star;
            Some(*acc)
        })
        .collect();

    let plan = OfflinePlan::new(&problem.system, &problem.gains, &trace.disturbances)?;
    let via_inputs = regret_via_inputs(trace, &plan, &problem.gains)?;
    let (ss, ss_last) = ss_regret_parts(problem, trace)?;
    let reference = trace.reference()?;
    let length = path_length(&reference);

    let bounds = if trace.controller == ControllerKind::SsOgd {
        let v0 = trace.biases.first().map_or(0.0, Vector::norm);
        problem
            .bound_constants(reference.rbar(), trace.states[0].norm(), v0)
            .map(|k| {
                (
                    regret_upper_bound(&k, length, trace.horizon()),
                    ss_regret_upper_bound(&k, length),
                )
            })
    } else {
        None
    };

    Ok(RegretReport {
        total_cost: trace.total_cost,
        offline_cost,
        regret: trace.total_cost - offline_cost,
        regret_via_inputs: via_inputs,
        ss_regret: ss,
        ss_regret_last_step: ss_last,
        path_length: length,
        theory_bound: bounds.map(|b| b.0),
        ss_bound: bounds.map(|b| b.1),
        cumulative,
    })
}

/// `Σ_t (u_t − u*_t(e_t))ᵀ(R+BᵀPB)(u_t − u*_t(e_t))`, with the optimal
/// input evaluated along the trace's own error states.
pub fn regret_via_inputs(
    trace: &SimulationTrace,
    plan: &OfflinePlan,
    gains: &SynthesizedGains,
) -> Result<f64> {
    if plan.horizon() != trace.horizon() {
        return Err(Error::DimensionMismatch(format!(
            "plan horizon {} for a trace of horizon {}",
            plan.horizon(),
            trace.horizon()
        )));
    }
    let m = gains.gram.nrows();
    if trace.inputs.iter().any(|u| u.len() != m) {
        return Err(Error::DimensionMismatch("input length".into()));
    }
    Ok(trace
        .inputs
        .iter()
        .enumerate()
        .map(|(t, u)| weighted_sq_norm(&(u - plan.input(t, &trace.errors[t])), &gains.gram))
        .sum())
}

fn ss_regret_parts(problem: &Problem, trace: &SimulationTrace) -> Result<(f64, f64)> {
    let inputs =
        steady_state_benchmark_inputs(&problem.gains, &problem.weights, &trace.disturbances)?;
    let mut errors = Vec::with_capacity(inputs.len() + 1);
    errors.push(trace.errors[0].clone());
    for (u, w) in inputs.iter().zip(&trace.disturbances.values) {
        let next = problem.system.step(errors.last().expect("non-empty"), u, w);
        errors.push(next);
    }
    let benchmark = evaluate_cost(&problem.gains, &problem.weights, &errors, &inputs)?;
    let last = match (
        trace.costs.last(),
        online_costs(problem, &errors, &inputs, trace)?.last(),
    ) {
        (Some(c), Some(c_hat)) => c - c_hat,
        _ => 0.0,
    };
    Ok((trace.total_cost - benchmark, last))
}

/// `J(e₀, u^π) − J(e₀, û)` with `û` the steady-state benchmark played open loop.
pub fn ss_regret(problem: &Problem, trace: &SimulationTrace) -> Result<f64> {
    ss_regret_parts(problem, trace).map(|(total, _)| total)
}
