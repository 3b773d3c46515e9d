//! Built-in scenarios.

use crate::controllers::ControllerKind;
use crate::model::{CostWeights, LinearSystem};
use crate::numerics::{matrix_from_rows, Matrix};
use crate::simulator::{ReferenceKind, ScenarioSpec, StepSize};

pub struct ScenarioEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub build: fn() -> ScenarioSpec,
}

/// Registry entries, sorted by name.
pub const REGISTRY: [ScenarioEntry; 3] = [
    ScenarioEntry {
        name: "double-integrator",
        description: "position/velocity double integrator, decaying random position reference",
        build: double_integrator,
    },
    ScenarioEntry {
        name: "quadrotor",
        description: "linearised planar quadrotor (dt 0.1), waypoint polyline in the x-y plane",
        build: quadrotor,
    },
    ScenarioEntry {
        name: "scalar-integrator",
        description: "A = B = Q = R = 1 with a constant disturbance w = 1",
        build: scalar_integrator,
    },
];

pub fn find(name: &str) -> Option<&'static ScenarioEntry> {
    REGISTRY.iter().find(|e| e.name == name)
}

fn rows(values: &[&[f64]]) -> Matrix {
    matrix_from_rows(&values.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
        .expect("built-in matrices are rectangular and finite")
}

fn diag(values: &[f64]) -> Matrix {
    Matrix::from_diagonal(&crate::numerics::Vector::from_column_slice(values))
}

fn spec(
    system: LinearSystem,
    weights: CostWeights,
    reference: ReferenceKind,
    horizon: usize,
) -> ScenarioSpec {
    ScenarioSpec {
        system,
        weights,
        reference,
        horizon,
        seed: 0,
        trial: 0,
        controller: ControllerKind::SsOgd,
        step_size: StepSize::Auto,
        v0: None,
        x0: None,
    }
}

/// States `(p_x, p_y, v_x, v_y, θ, φ)`, inputs are the two tilt commands.
pub fn quadrotor_system() -> LinearSystem {
    let a = rows(&[
        &[1.0, 0.0, 0.096, 0.0, 0.0, 0.040],
        &[0.0, 1.0, 0.0, 0.096, -0.040, 0.0],
        &[0.0, 0.0, 0.894, 0.0, 0.0, 0.703],
        &[0.0, 0.0, 0.0, 0.894, -0.703, 0.0],
        &[0.0, 0.0, 0.0, 0.193, 0.452, 0.0],
        &[0.0, 0.0, -0.193, 0.0, 0.0, 0.452],
    ]);
    let b = rows(&[
        &[0.004, 0.0],
        &[0.0, 0.004],
        &[0.106, 0.0],
        &[0.0, 0.106],
        &[0.0, -0.193],
        &[0.193, 0.0],
    ]);
    LinearSystem::new(a, b).expect("quadrotor dimensions")
}

pub fn quadrotor_weights() -> CostWeights {
    CostWeights::new(diag(&[100.0, 100.0, 1.0, 1.0, 0.0, 0.0]), diag(&[0.1, 0.1]))
        .expect("quadrotor weights")
}

/// Outline traced by the quadrotor waypoint scenario.
pub const QUADROTOR_WAYPOINTS: [[f64; 2]; 8] = [
    [0.0, 0.0],
    [0.0, 2.0],
    [1.0, 2.0],
    [1.0, 1.0],
    [2.0, 1.0],
    [2.0, 2.0],
    [3.0, 0.0],
    [3.0, 2.0],
];

pub fn quadrotor() -> ScenarioSpec {
    spec(
        quadrotor_system(),
        quadrotor_weights(),
        ReferenceKind::Waypoints {
            points: QUADROTOR_WAYPOINTS.iter().map(|p| p.to_vec()).collect(),
            speed: 0.02,
        },
        700,
    )
}

/// Quadrotor following a constant-velocity position ramp.
pub fn quadrotor_ramp() -> ScenarioSpec {
    let mut s = quadrotor();
    s.reference = ReferenceKind::Ramp {
        start: vec![0.0, 0.0],
        step: vec![0.02, 0.01],
    };
    s.horizon = 600;
    s
}

pub fn scalar_integrator() -> ScenarioSpec {
    let one = || Matrix::from_element(1, 1, 1.0);
    spec(
        LinearSystem::new(one(), one()).expect("scalar"),
        CostWeights::new(one(), one()).expect("scalar"),
        // w_t = r_t − r_{t+1} = 1.
        ReferenceKind::Ramp {
            start: vec![0.0],
            step: vec![-1.0],
        },
        200,
    )
}

pub fn double_integrator() -> ScenarioSpec {
    spec(
        LinearSystem::new(rows(&[&[1.0, 1.0], &[0.0, 1.0]]), rows(&[&[0.0], &[1.0]]))
            .expect("double integrator"),
        CostWeights::new(diag(&[1.0, 0.1]), diag(&[1.0])).expect("double integrator"),
        ReferenceKind::DecayingRandom {
            start: vec![0.0],
            initial_step: 1.0,
            decay: ReferenceKind::DEFAULT_DECAY,
            active_dims: 1,
        },
        200,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::synthesize_gains;

    #[test]
    fn registry_is_sorted_and_buildable() {
        let names: Vec<_> = REGISTRY.iter().map(|e| e.name).collect();
        let mut sorted = names.clone();
        sorted.sort_unstable();
        assert_eq!(names, sorted);
        for entry in &REGISTRY {
            let s = (entry.build)();
            synthesize_gains(&s.system, &s.weights).unwrap();
        }
        assert!(find("quadrotor").is_some());
        assert!(find("nope").is_none());
    }

    #[test]
    fn quadrotor_matrices_verbatim() {
        let s = quadrotor_system();
        assert_eq!(s.a()[(0, 2)], 0.096);
        assert_eq!(s.a()[(1, 4)], -0.040);
        assert_eq!(s.a()[(3, 4)], -0.703);
        assert_eq!(s.a()[(5, 2)], -0.193);
        assert_eq!(s.b()[(4, 1)], -0.193);
        assert_eq!(s.b()[(5, 0)], 0.193);
        assert_eq!(quadrotor_weights().r()[(1, 1)], 0.1);
    }
}
