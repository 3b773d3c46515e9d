//! Fixtures shared by the benchmarks.

use ssogd_core::numerics::{spectral_radius, Matrix};
use ssogd_core::simulator::NormalStream;
use ssogd_core::{CostWeights, LinearSystem};

/// Seeded random plant with open-loop spectral radius 0.9, `Q = I`, `R = I`.
pub fn random_plant(n: usize, m: usize, seed: u64) -> (LinearSystem, CostWeights) {
    let mut rng = NormalStream::new(seed, 0);
    let mut a = Matrix::from_fn(n, n, |_, _| rng.normal());
    let b = Matrix::from_fn(n, m, |_, _| rng.normal());
    let rho = spectral_radius(&a).expect("eigenvalues");
    a *= 0.9 / rho;
    (
        LinearSystem::new(a, b).expect("dimensions"),
        CostWeights::new(Matrix::identity(n, n), Matrix::identity(m, m)).expect("weights"),
    )
}
