//! Reference generators.
//!
//! Random references use ChaCha8 keyed by the 64-bit seed (little-endian in
//! the first eight key bytes, remaining bytes zero) with the trial index as
//! the ChaCha stream id. Each `u64` output is mapped to a uniform double as
//! `(x >> 11) · 2⁻⁵³`; a standard normal is `√(−2 ln(1 − u₁)) · cos(2π u₂)`
//! from two consecutive uniforms. A step direction is the normalised vector
//! of such normals over the active coordinates, drawn coordinate by
//! coordinate and step by step.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::model::ReferenceTrajectory;
use crate::numerics::Vector;

#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceKind {
    /// `r_t = r̄`.
    Constant { point: Vec<f64> },
    /// `r_{t+1} = r_t + d`.
    Ramp { start: Vec<f64>, step: Vec<f64> },
    /// Constant-speed traversal of a polyline; holds the last vertex once
    /// reached.
    Waypoints { points: Vec<Vec<f64>>, speed: f64 },
    /// `Δr_t = initial_step · decay^t · η_t` with random unit directions
    /// `η_t` supported on the first `active_dims` coordinates.
    DecayingRandom {
        start: Vec<f64>,
        initial_step: f64,
        decay: f64,
        active_dims: usize,
    },
}

impl ReferenceKind {
    pub fn id(&self) -> &'static str {
        match self {
            ReferenceKind::Constant { .. } => "constant",
            ReferenceKind::Ramp { .. } => "ramp",
            ReferenceKind::Waypoints { .. } => "waypoints",
            ReferenceKind::DecayingRandom { .. } => "decaying_random",
        }
    }

    /// Decay factor used for random references by default.
    pub const DEFAULT_DECAY: f64 = 0.99;
}

/// Pads a (possibly shorter) coordinate list with zeros up to `n`.
fn embed(values: &[f64], n: usize, what: &str) -> Result<Vector> {
    if values.len() > n {
        return Err(Error::BadParams(format!(
            "{what} has {} coordinates, state has {n}",
            values.len()
        )));
    }
    if values.iter().any(|x| !x.is_finite()) {
        return Err(Error::BadParams(format!("{what} is not finite")));
    }
    let mut v = Vector::zeros(n);
    v.rows_mut(0, values.len()).copy_from_slice(values);
    Ok(v)
}

/// Counter-based stream of standard normals.
pub struct NormalStream {
    rng: ChaCha8Rng,
}

impl NormalStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(stream);
        Self { rng }
    }

    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniformly distributed unit vector in `R^dims`.
    pub fn direction(&mut self, dims: usize) -> Vector {
        loop {
            let v = Vector::from_fn(dims, |_, _| self.normal());
            let norm = v.norm();
            if norm > 0.0 {
                return v / norm;
            }
        }
    }
}

/// Builds `r_0 .. r_T` for a state of dimension `n`.
pub fn generate_reference(
    kind: &ReferenceKind,
    seed: u64,
    stream: u64,
    horizon: usize,
    n: usize,
) -> Result<ReferenceTrajectory> {
    if horizon == 0 {
        return Err(Error::BadParams("horizon must be at least 1".into()));
    }
    let points = match kind {
        ReferenceKind::Constant { point } => vec![embed(point, n, "constant point")?; horizon + 1],
        ReferenceKind::Ramp { start, step } => {
            let start = embed(start, n, "ramp start")?;
            let step = embed(step, n, "ramp step")?;
            (0..=horizon).map(|t| &start + &step * t as f64).collect()
        }
        ReferenceKind::Waypoints { points, speed } => {
            if points.is_empty() {
                return Err(Error::BadParams("waypoints need at least one point".into()));
            }
            if !(speed.is_finite() && *speed > 0.0) {
                return Err(Error::BadParams(format!(
                    "waypoint speed {speed} must be positive"
                )));
            }
            let vertices = points
                .iter()
                .map(|p| embed(p, n, "waypoint"))
                .collect::<Result<Vec<_>>>()?;
            polyline(&vertices, *speed, horizon)
        }
        ReferenceKind::DecayingRandom {
            start,
            initial_step,
            decay,
            active_dims,
        } => {
            if !(initial_step.is_finite() && *initial_step >= 0.0) {
                return Err(Error::BadParams("initial step must be non-negative".into()));
            }
            if !(*decay > 0.0 && *decay <= 1.0) {
                return Err(Error::BadParams(format!(
                    "decay {decay} must lie in (0, 1]"
                )));
            }
            if *active_dims == 0 || *active_dims > n {
                return Err(Error::BadParams(format!(
                    "active_dims {active_dims} must lie in 1..={n}"
                )));
            }
            let mut rng = NormalStream::new(seed, stream);
            let mut current = embed(start, n, "start")?;
            let mut out = Vec::with_capacity(horizon + 1);
            out.push(current.clone());
            let mut scale = *initial_step;
            for _ in 0..horizon {
                let eta = rng.direction(*active_dims);
                for (i, x) in eta.iter().enumerate() {
                    current[i] += scale * x;
                }
                out.push(current.clone());
                scale *= decay;
            }
            out
        }
    };
    ReferenceTrajectory::new(points)
}

/// Position at arc length `t·speed` along the polyline, for `t = 0..=T`.
fn polyline(vertices: &[Vector], speed: f64, horizon: usize) -> Vec<Vector> {
    let mut out = Vec::with_capacity(horizon + 1);
    let mut segment = 0;
    let mut offset = 0.0;
    let mut current = vertices[0].clone();
    out.push(current.clone());
    for _ in 0..horizon {
        let mut remaining = speed;
        while remaining > 0.0 && segment + 1 < vertices.len() {
            let dir = &vertices[segment + 1] - &vertices[segment];
            let len = dir.norm();
            let left = len - offset;
            if remaining < left {
                offset += remaining;
                remaining = 0.0;
            } else {
                remaining -= left;
                segment += 1;
                offset = 0.0;
            }
            current = if segment + 1 < vertices.len() {
                let d = &vertices[segment + 1] - &vertices[segment];
                let l = d.norm();
                if l > 0.0 {
                    &vertices[segment] + d * (offset / l)
                } else {
                    vertices[segment].clone()
                }
            } else {
                vertices[segment].clone()
            };
        }
        out.push(current.clone());
    }
    out
}

/// Total length of a polyline through the given points.
pub fn polyline_length(points: &[Vec<f64>]) -> f64 {
    points
        .windows(2)
        .map(|p| {
            p[0].iter()
                .zip(&p[1])
                .map(|(a, b)| (b - a) * (b - a))
                .sum::<f64>()
                .sqrt()
        })
        .sum()
}
