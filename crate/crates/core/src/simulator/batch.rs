use rayon::prelude::*;

use super::{dynamic_regret, generate_reference, Problem, ScenarioSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchRow {
    pub horizon: usize,
    pub worst: f64,
    pub mean: f64,
    /// Largest theory bound over the trials; SS-OGD only.
    pub bound: Option<f64>,
}

/// Worst-case dynamic regret over `trials` seeded references per horizon.
/// Trial `i` draws from RNG stream `i` of `base.seed`, so results do not
/// depend on thread scheduling.
pub fn batch_worst_case_regret(
    base: &ScenarioSpec,
    horizons: &[usize],
    trials: usize,
) -> Result<Vec<BatchRow>> {
    if trials == 0 {
        return Err(Error::BadParams("batch needs at least one trial".into()));
    }
    if horizons.is_empty() {
        return Err(Error::BadParams("batch needs at least one horizon".into()));
    }
    let problem = Problem::from_spec(base)?;
    problem.check_controller(base.controller)?;
    horizons
        .iter()
        .map(|&horizon| {
            let reports = (0..trials as u64)
                .into_par_iter()
                .map(|trial| {
                    let reference = generate_reference(
                        &base.reference,
                        base.seed,
                        trial,
                        horizon,
                        base.system.n(),
                    )?;
                    let trace = problem.rollout(
                        base.controller,
                        &reference,
                        base.x0.as_deref(),
                        base.v0.as_deref(),
                    )?;
                    dynamic_regret(&problem, &trace)
                })
                .collect::<Result<Vec<_>>>()?;
            let worst = reports
                .iter()
                .map(|r| r.regret)
                .fold(f64::NEG_INFINITY, f64::max);
            let mean = reports.iter().map(|r| r.regret).sum::<f64>() / trials as f64;
            let bound = reports
                .iter()
                .map(|r| r.theory_bound)
                .try_fold(f64::NEG_INFINITY, |acc, b| b.map(|b| acc.max(b)));
            Ok(BatchRow {
                horizon,
                worst,
                mean,
                bound,
            })
        })
        .collect()
}
