use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ssogd_bench::random_plant;
use ssogd_core::controllers::OfflinePlan;
use ssogd_core::numerics::solve_dare;
use ssogd_core::optimizer::{select_step_size, sufficient_condition};
use ssogd_core::simulator::generate_reference;
use ssogd_core::{
    build_combined, model::reference_to_disturbance, scenarios, synthesize_gains, ControllerKind,
    Problem, ReferenceKind,
};
use std::hint::black_box;

fn dare(c: &mut Criterion) {
    let mut group = c.benchmark_group("dare");
    for n in [2, 6, 12] {
        let (sys, w) = random_plant(n, 2.min(n), 7);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |bench, _| {
            bench.iter(|| solve_dare(sys.a(), sys.b(), w.q(), w.r()).unwrap())
        });
    }
    group.finish();
}

fn rollout(c: &mut Criterion) {
    let spec = scenarios::quadrotor();
    let problem = Problem::from_spec(&spec).unwrap();
    let reference = spec.generate_reference().unwrap();
    let mut group = c.benchmark_group("quadrotor_rollout");
    for kind in [
        ControllerKind::SsOgd,
        ControllerKind::Ce,
        ControllerKind::Offline,
    ] {
        group.bench_function(kind.id(), |bench| {
            bench.iter(|| {
                problem
                    .rollout(kind, black_box(&reference), None, None)
                    .unwrap()
            })
        });
    }
    group.finish();
}

fn offline_plan(c: &mut Criterion) {
    let spec = scenarios::quadrotor();
    let gains = synthesize_gains(&spec.system, &spec.weights).unwrap();
    let reference = generate_reference(
        &ReferenceKind::DecayingRandom {
            start: vec![],
            initial_step: 0.05,
            decay: ReferenceKind::DEFAULT_DECAY,
            active_dims: 2,
        },
        1,
        0,
        800,
        6,
    )
    .unwrap();
    let dist = reference_to_disturbance(&spec.system, &reference).unwrap();
    c.bench_function("offline_plan_T800", |bench| {
        bench.iter(|| OfflinePlan::new(&spec.system, &gains, black_box(&dist)).unwrap())
    });
}

fn step_size(c: &mut Criterion) {
    let spec = scenarios::quadrotor();
    let gains = synthesize_gains(&spec.system, &spec.weights).unwrap();
    c.bench_function("select_step_size_quadrotor", |bench| {
        bench.iter(|| select_step_size(&spec.system, &gains, &spec.weights).unwrap())
    });
    let alpha = select_step_size(&spec.system, &gains, &spec.weights).unwrap();
    let cd = build_combined(&spec.system, &gains, &spec.weights, alpha).unwrap();
    c.bench_function("sufficient_condition_quadrotor", |bench| {
        bench.iter(|| sufficient_condition(black_box(&cd)).unwrap())
    });
}

criterion_group!(benches, dare, rollout, offline_plan, step_size);
criterion_main!(benches);
