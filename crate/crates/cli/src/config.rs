//! TOML run configuration.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use ssogd_core::numerics::{matrix_from_rows, matrix_to_rows};
use ssogd_core::{CostWeights, LinearSystem, ReferenceKind, ScenarioSpec, StepSize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub horizon: usize,
    pub system: SystemSection,
    pub cost: CostSection,
    pub controller: ControllerSection,
    pub reference: ReferenceSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch: Option<BatchSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSection {
    pub q: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaValue {
    Fixed(f64),
    Keyword(String),
}

impl AlphaValue {
    fn to_step_size(&self) -> Result<StepSize> {
        match self {
            AlphaValue::Fixed(a) if a.is_finite() && *a > 0.0 => Ok(StepSize::Fixed(*a)),
            AlphaValue::Fixed(a) => bail!("step size must be positive, got {a}"),
            AlphaValue::Keyword(s) => Ok(s.parse()?),
        }
    }

    fn from_step_size(step: StepSize) -> Self {
        match step {
            StepSize::Auto => AlphaValue::Keyword("auto".into()),
            StepSize::Fixed(a) => AlphaValue::Fixed(a),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    pub id: String,
    #[serde(default = "auto")]
    pub alpha: AlphaValue,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v0: Option<Vec<f64>>,
}

fn auto() -> AlphaValue {
    AlphaValue::Keyword("auto".into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceParams {
    Constant {
        point: Vec<f64>,
    },
    Ramp {
        start: Vec<f64>,
        step: Vec<f64>,
    },
    Waypoints {
        points: Vec<Vec<f64>>,
        speed: f64,
    },
    DecayingRandom {
        #[serde(default)]
        start: Vec<f64>,
        initial_step: f64,
        #[serde(default = "default_decay")]
        decay: f64,
        active_dims: usize,
    },
}

fn default_decay() -> f64 {
    ReferenceKind::DEFAULT_DECAY
}

impl From<&ReferenceParams> for ReferenceKind {
    fn from(p: &ReferenceParams) -> Self {
        match p.clone() {
            ReferenceParams::Constant { point } => ReferenceKind::Constant { point },
            ReferenceParams::Ramp { start, step } => ReferenceKind::Ramp { start, step },
            ReferenceParams::Waypoints { points, speed } => {
                ReferenceKind::Waypoints { points, speed }
            }
            ReferenceParams::DecayingRandom {
                start,
                initial_step,
                decay,
                active_dims,
            } => ReferenceKind::DecayingRandom {
                start,
                initial_step,
                decay,
                active_dims,
            },
        }
    }
}

impl From<&ReferenceKind> for ReferenceParams {
    fn from(k: &ReferenceKind) -> Self {
        match k.clone() {
            ReferenceKind::Constant { point } => ReferenceParams::Constant { point },
            ReferenceKind::Ramp { start, step } => ReferenceParams::Ramp { start, step },
            ReferenceKind::Waypoints { points, speed } => {
                ReferenceParams::Waypoints { points, speed }
            }
            ReferenceKind::DecayingRandom {
                start,
                initial_step,
                decay,
                active_dims,
            } => ReferenceParams::DecayingRandom {
                start,
                initial_step,
                decay,
                active_dims,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSection {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub trial: u64,
    #[serde(flatten)]
    pub params: ReferenceParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchSection {
    pub horizons: Vec<usize>,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<String>,
    #[serde(default)]
    pub svg: bool,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn to_spec(&self) -> Result<ScenarioSpec> {
        let a = matrix_from_rows(&self.system.a).context("system.a")?;
        let b = matrix_from_rows(&self.system.b).context("system.b")?;
        let q = matrix_from_rows(&self.cost.q).context("cost.q")?;
        let r = matrix_from_rows(&self.cost.r).context("cost.r")?;
        let system = LinearSystem::new(a, b).context("system")?;
        let weights = CostWeights::new(q, r).context("cost")?;
        if self.horizon == 0 {
            bail!("horizon must be at least 1");
        }
        Ok(ScenarioSpec {
            system,
            weights,
            reference: (&self.reference.params).into(),
            horizon: self.horizon,
            seed: self.reference.seed,
            trial: self.reference.trial,
            controller: self.controller.id.parse().context("controller.id")?,
            step_size: self
                .controller
                .alpha
                .to_step_size()
                .context("controller.alpha")?,
            v0: self.controller.v0.clone(),
            x0: self.system.x0.clone(),
        })
    }

    pub fn from_spec(spec: &ScenarioSpec) -> Self {
        Self {
            horizon: spec.horizon,
            system: SystemSection {
                a: matrix_to_rows(spec.system.a()),
                b: matrix_to_rows(spec.system.b()),
                x0: spec.x0.clone(),
            },
            cost: CostSection {
                q: matrix_to_rows(spec.weights.q()),
                r: matrix_to_rows(spec.weights.r()),
            },
            controller: ControllerSection {
                id: spec.controller.id().into(),
                alpha: AlphaValue::from_step_size(spec.step_size),
                v0: spec.v0.clone(),
            },
            reference: ReferenceSection {
                seed: spec.seed,
                trial: spec.trial,
                params: (&spec.reference).into(),
            },
            batch: None,
            output: None,
        }
    }
}
