//! Acceptance suite: runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{dense_qp, doubling_dare, max_abs_diff, randn_vec, random_problem, steady_state_kkt};
use ssogd_core::controllers::{offline_noncausal_inputs, OgdPolicy, Policy};
use ssogd_core::model::evaluate_cost;
use ssogd_core::numerics::{
    dare_residual, decay_envelope, min_sym_eigenvalue, spectral_norm, Vector,
};
use ssogd_core::optimizer::{
    check_step_size, halving_search, select_step_size, steady_state_z, sufficient_condition,
};
use ssogd_core::simulator::{batch_worst_case_regret, NormalStream};
use ssogd_core::{
    build_combined, dynamic_regret, scenarios, synthesize_gains, ControllerKind,
    DisturbanceSequence, Problem, ReferenceKind, ScenarioSpec, StepSize,
};

const SEED: u64 = 0x5eed_0c0d;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn within(elapsed: Duration, limit_s: f64) -> (bool, String) {
    let s = elapsed.as_secs_f64();
    (s < limit_s, format!("{s:.2} s (limit {limit_s} s)"))
}

/// Runs the SS-OGD loop in error coordinates with constant `w̄` until the
/// state stops moving.
fn converge_ss_ogd(problem: &Problem, w: &Vector) -> (Vector, Vector) {
    let m = problem.system.m();
    let mut policy = OgdPolicy::steady_state(
        &problem.gains,
        &problem.weights,
        problem.alpha,
        Vector::zeros(m),
    );
    let mut e = Vector::zeros(problem.system.n());
    let dummy_r = Vector::zeros(problem.system.n());
    let mut prev_v = Vector::zeros(m);
    for t in 0..2_000_000 {
        let u = policy.act(&e, &dummy_r).expect("policy step");
        let v = policy.bias().expect("bias").clone();
        let next = problem.system.step(&e, &u, w);
        let moved = (&next - &e).amax().max((&v - &prev_v).amax());
        e = next;
        prev_v = v;
        if t > 10 && moved < 1e-15 * (1.0 + e.amax() + prev_v.amax()) {
            break;
        }
    }
    (prev_v, e)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut worst_z = 0.0f64;
    let mut worst_kkt = 0.0f64;
    for i in 0..200 {
        let p = random_problem(SEED, i);
        let problem = Problem::new(p.system, p.weights, StepSize::Auto).expect("problem");
        let w = randn_vec(&mut NormalStream::new(SEED ^ 1, i), problem.system.n());
        let (v, e) = converge_ss_ogd(&problem, &w);
        let (v_hat, e_hat) = steady_state_z(&problem.combined, &w).expect("steady state");
        let (e_kkt, v_kkt) =
            steady_state_kkt(&problem.system, &problem.weights, &problem.gains.k, &w);
        let scale = 1.0 + v_hat.amax().max(e_hat.amax());
        worst_z = worst_z.max(max_abs_diff(&v, &v_hat).max(max_abs_diff(&e, &e_hat)) / scale);
        worst_kkt = worst_kkt.max(max_abs_diff(&v, &v_kkt).max(max_abs_diff(&e, &e_kkt)) / scale);
    }
    let (fast, time) = within(start.elapsed(), 10.0);
    outcome(
        worst_z <= 1e-8 && worst_kkt <= 1e-8 && fast,
        format!(
            "200 problems, max scaled gap vs (I−Ã)⁻¹B̃w̄ {worst_z:.2e}, vs KKT {worst_kkt:.2e} (tol 1e-8), {time}"
        ),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for i in 0..100 {
        let p = random_problem(SEED ^ 2, i);
        let gains = synthesize_gains(&p.system, &p.weights).expect("gains");
        let mut rng = NormalStream::new(SEED ^ 3, i);
        let horizon = 1 + (rng.uniform() * 8.0) as usize;
        let n = p.system.n();
        let e0 = randn_vec(&mut rng, n);
        let dist = DisturbanceSequence {
            values: (0..horizon).map(|_| randn_vec(&mut rng, n)).collect(),
        };
        let offline = offline_noncausal_inputs(&p.system, &gains, &e0, &dist).expect("offline");
        let cost =
            evaluate_cost(&gains, &p.weights, &offline.errors, &offline.inputs).expect("cost");
        let p_oracle = doubling_dare(p.system.a(), p.system.b(), p.weights.q(), p.weights.r());
        let (_, qp_cost) = dense_qp(
            &p.system,
            p.weights.q(),
            p.weights.r(),
            &p_oracle,
            &e0,
            &dist,
        );
        worst = worst.max((cost - qp_cost).abs() / qp_cost.abs().max(1e-300));
    }
    let (fast, time) = within(start.elapsed(), 5.0);
    outcome(
        worst <= 1e-8 && fast,
        format!(
            "100 instances T ≤ 8, max relative cost gap vs dense QP {worst:.2e} (tol 1e-8), {time}"
        ),
    )
}

/// Random references cycling through decaying, ramp and constant kinds.
fn random_suite_spec(i: u64) -> ScenarioSpec {
    let p = random_problem(SEED ^ 4, i);
    let n = p.system.n();
    let mut rng = NormalStream::new(SEED ^ 5, i);
    let start: Vec<f64> = randn_vec(&mut rng, n).iter().copied().collect();
    let reference = match i % 3 {
        0 => ReferenceKind::DecayingRandom {
            start,
            initial_step: 0.2 + rng.uniform(),
            decay: ReferenceKind::DEFAULT_DECAY,
            active_dims: n,
        },
        1 => ReferenceKind::Ramp {
            start,
            step: randn_vec(&mut rng, n).iter().map(|x| 0.1 * x).collect(),
        },
        _ => ReferenceKind::Constant { point: start },
    };
    ScenarioSpec {
        system: p.system,
        weights: p.weights,
        reference,
        horizon: 50 + (rng.uniform() * 250.0) as usize,
        seed: SEED,
        trial: i,
        controller: ControllerKind::SsOgd,
        step_size: StepSize::Auto,
        v0: None,
        x0: None,
    }
}

/// Registry scenarios under every controller plus the 100 random SS-OGD specs.
fn suite() -> Vec<ScenarioSpec> {
    let mut specs = Vec::new();
    for entry in &scenarios::REGISTRY {
        for kind in ControllerKind::ALL {
            let mut s = (entry.build)();
            s.controller = kind;
            specs.push(s);
        }
    }
    let mut ramp = scenarios::quadrotor_ramp();
    for kind in ControllerKind::ALL {
        ramp.controller = kind;
        specs.push(ramp.clone());
    }
    specs.extend((0..100).map(random_suite_spec));
    specs
}

fn run(spec: &ScenarioSpec) -> ssogd_core::RegretReport {
    let problem = Problem::from_spec(spec).expect("problem");
    let reference = spec.generate_reference().expect("reference");
    let trace = problem
        .rollout(
            spec.controller,
            &reference,
            spec.x0.as_deref(),
            spec.v0.as_deref(),
        )
        .expect("rollout");
    dynamic_regret(&problem, &trace).expect("regret")
}

fn criterion_3() -> Outcome {
    let specs = suite();
    let mut worst = 0.0f64;
    let mut negative = 0;
    for spec in &specs {
        let r = run(spec);
        worst = worst.max((r.regret - r.regret_via_inputs).abs() / (1.0 + r.regret.abs()));
        if r.regret < -1e-9 {
            negative += 1;
        }
    }
    outcome(
        worst <= 1e-6 && negative == 0,
        format!(
            "{} scenarios, max |regret − Σ input deviations|/(1+regret) {worst:.2e} (tol 1e-6), {negative} negative regrets",
            specs.len()
        ),
    )
}

fn criterion_4() -> Outcome {
    let mut violations = 0;
    let mut tightest = 0.0f64;
    for i in 0..100 {
        let r = run(&random_suite_spec(i));
        let bound = r.theory_bound.expect("SS-OGD bound");
        if r.regret > bound {
            violations += 1;
        }
        if bound > 0.0 {
            tightest = tightest.max(r.regret / bound);
        }
    }
    outcome(
        violations == 0,
        format!("100 random SS-OGD scenarios, {violations} bound violations, max regret/bound {tightest:.2e}"),
    )
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut spec = scenarios::quadrotor();
    spec.reference = ReferenceKind::DecayingRandom {
        start: vec![0.0, 0.0],
        initial_step: 0.05,
        decay: ReferenceKind::DEFAULT_DECAY,
        active_dims: 2,
    };
    spec.seed = SEED;
    let rows = batch_worst_case_regret(&spec, &[100, 200, 400, 800], 60).expect("batch");
    let worst: Vec<f64> = rows.iter().map(|r| r.worst).collect();
    let growth = (worst[3] - worst[2]) / worst[2];
    let dominated = rows.iter().all(|r| r.bound.is_some_and(|b| r.worst <= b));
    let (fast, time) = within(start.elapsed(), 120.0);
    outcome(
        growth < 0.01 && dominated && fast,
        format!(
            "quadrotor, worst regret at T=100/200/400/800: {:.4e}/{:.4e}/{:.4e}/{:.4e}, T800 vs T400 {:+.3}% (limit 1%), bound dominates: {dominated}, {time}",
            worst[0], worst[1], worst[2], worst[3], 100.0 * growth
        ),
    )
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let mut spec = scenarios::quadrotor();
    spec.controller = ControllerKind::Ce;
    let ce = run(&spec).regret;
    spec.controller = ControllerKind::SsOgd;
    let ss = run(&spec).regret;
    let ratio = ce / ss;

    let ramp = scenarios::quadrotor_ramp();
    let trace = ssogd_core::rollout(&ramp).expect("ramp rollout");
    let e_t = trace.errors.last().expect("terminal error");
    let position_error = (e_t[0] * e_t[0] + e_t[1] * e_t[1]).sqrt();
    let (fast, time) = within(start.elapsed(), 30.0);
    outcome(
        ratio > 2.0 && position_error < 1e-3 && fast,
        format!(
            "waypoints: CE regret {ce:.4} / SS-OGD regret {ss:.4} = {ratio:.2} (need > 2); ramp terminal position error {position_error:.2e} (need < 1e-3); {time}"
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut spec = scenarios::scalar_integrator();
    spec.horizon = 400;
    let late_cost = |kind| {
        let mut s = spec.clone();
        s.controller = kind;
        let trace = ssogd_core::rollout(&s).expect("scalar rollout");
        // Last step carries the terminal weight; use the one before.
        trace.costs[trace.costs.len() - 2]
    };
    let naive = late_cost(ControllerKind::NaiveOgd);
    let ss = late_cost(ControllerKind::SsOgd);
    outcome(
        (naive - 2.0).abs() <= 1e-6 && (ss - 1.0).abs() <= 1e-6,
        format!("scalar w̄ = 1: naive OGD per-step cost {naive:.9} (→ 2), SS-OGD {ss:.9} (→ 1), tol 1e-6"),
    )
}

struct Criteria8And9 {
    counterexamples: usize,
    holds: usize,
    halving_failures: usize,
    min_lambda: f64,
}

fn criteria_8_and_9() -> Criteria8And9 {
    let mut out = Criteria8And9 {
        counterexamples: 0,
        holds: 0,
        halving_failures: 0,
        min_lambda: f64::INFINITY,
    };
    for i in 0..500 {
        let p = random_problem(SEED ^ 8, i);
        let gains = synthesize_gains(&p.system, &p.weights).expect("gains");
        let probe = build_combined(&p.system, &gains, &p.weights, 0.0).expect("combined");
        out.min_lambda = out.min_lambda.min(min_sym_eigenvalue(&probe.m_bar));
        let limit = 2.0 / spectral_norm(&probe.m_bar);
        let u = NormalStream::new(SEED ^ 9, i).uniform();
        // Log-uniform over [1e−4, 1)·(2/ρ(M̄)).
        let alpha = limit * 10f64.powf(-4.0 * u);
        let cd = build_combined(&p.system, &gains, &p.weights, alpha).expect("combined");
        let check = sufficient_condition(&cd).expect("small gain");
        if check.holds {
            out.holds += 1;
            if !check_step_size(&cd) {
                out.counterexamples += 1;
            }
        }
        match halving_search(&p.system, &gains, &p.weights, 60) {
            Ok(Some(a)) => {
                let cd = build_combined(&p.system, &gains, &p.weights, a).expect("combined");
                if !check_step_size(&cd) {
                    out.counterexamples += 1;
                }
            }
            _ => out.halving_failures += 1,
        }
    }
    out
}

fn criterion_10() -> Outcome {
    let mut worst_residual = 0.0f64;
    let mut envelope_failures = 0;
    let mut systems = 0;
    let mut check = |system: &ssogd_core::LinearSystem, weights: &ssogd_core::CostWeights| {
        let gains = synthesize_gains(system, weights).expect("gains");
        let res = dare_residual(system.a(), system.b(), weights.q(), weights.r(), &gains.p)
            .expect("residual");
        worst_residual = worst_residual.max(res / (1.0 + spectral_norm(&gains.p)));
        let alpha = select_step_size(system, &gains, weights).expect("alpha");
        let cd = build_combined(system, &gains, weights, alpha).expect("combined");
        for w in [&gains.f, &cd.a_tilde] {
            let env = decay_envelope(w).expect("envelope");
            if !env.certify(w, 200) {
                envelope_failures += 1;
            }
        }
        systems += 1;
    };
    for entry in &scenarios::REGISTRY {
        let s = (entry.build)();
        check(&s.system, &s.weights);
    }
    for i in 0..500 {
        let p = random_problem(SEED ^ 8, i);
        check(&p.system, &p.weights);
    }
    outcome(
        worst_residual <= 1e-10 && envelope_failures == 0,
        format!(
            "{systems} systems, max DARE residual/(1+‖P‖) {worst_residual:.2e} (tol 1e-10), {envelope_failures} envelope certificates failed for k ≤ 200 on F and Ã"
        ),
    )
}

fn main() -> ExitCode {
    let c89 = criteria_8_and_9();
    let results: Vec<(&str, Outcome)> = vec![
        ("1 steady-state equivalence", criterion_1()),
        ("2 offline optimum vs dense QP", criterion_2()),
        ("3 regret cross-formula identity", criterion_3()),
        ("4 regret bound dominance", criterion_4()),
        ("5 worst-case regret plateau", criterion_5()),
        ("6 quadrotor CE vs SS-OGD", criterion_6()),
        ("7 naive OGD suboptimality", criterion_7()),
        (
            "8 small-gain sufficient condition",
            outcome(
                c89.counterexamples == 0 && c89.halving_failures == 0,
                format!(
                    "500 problems, condition held for {} sampled α, {} counterexamples, {} halving failures",
                    c89.holds, c89.counterexamples, c89.halving_failures
                ),
            ),
        ),
        (
            "9 steady-state Hessian positive definite",
            outcome(
                c89.min_lambda > 0.0,
                format!("500 problems, min λ_min(M̄) {:.3e}", c89.min_lambda),
            ),
        ),
        ("10 DARE residual and decay envelopes", criterion_10()),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {name}: {}", o.detail);
        if !o.passed {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
