//! JSON scenario files.
//!
//! ```json
//! {
//!   "name": "attendance",
//!   "grid": {"min": 0, "max": 80, "step": 10, "unit": "persons"},
//!   "x_prior": "uniform",
//!   "t_prior": {"around": {"min": 0, "max": 40, "step": 10, "probs": "uniform"}},
//!   "observations": [{"id": "o1", "probs": [0, 0.01, 0.01, 0.16, 0.64, 0.16, 0.01, 0.01, 0], "weight": 1}],
//!   "menu": {"generate": "precise+around"},
//!   "lambda": 4,
//!   "mode": "brute-force"
//! }
//! ```
//!
//! Unknown keys are rejected at every level.

use std::path::Path;

use serde::Deserialize;

use crate::dist::{grid, Dist};
use crate::error::{Error, Result};
use crate::lexicon::{precise_alternatives, vague_alternatives, Message, ParamPrior, VagueKind};
use crate::listener::JointPrior;
use crate::scenario::{discretized_gaussian, Scenario, WeightedObservation};
use crate::speaker::Observation;

pub const DEFAULT_LAMBDA: f64 = 4.0;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub step: f64,
    #[serde(default)]
    pub unit: String,
}

impl GridSpec {
    fn values(&self) -> Result<Vec<f64>> {
        grid(self.min, self.max, self.step)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Uniform,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSpec {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum XPriorSpec {
    Named(Shape),
    Probs(Vec<f64>),
    Gaussian {
        gaussian: GaussianSpec,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ProbsSpec {
    Named(Shape),
    Probs(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TPriorSpec {
    pub min: f64,
    pub max: f64,
    pub step: f64,
    #[serde(default = "uniform_probs")]
    pub probs: ProbsSpec,
}

fn uniform_probs() -> ProbsSpec {
    ProbsSpec::Named(Shape::Uniform)
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TPriors {
    pub around: Option<TPriorSpec>,
    pub threshold: Option<TPriorSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationSpec {
    pub id: String,
    pub probs: Vec<f64>,
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum MenuEntry {
    Text(String),
    Structured(Message),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MenuGenerator {
    /// `+`-joined parts: `precise`, `around`, `threshold`.
    pub generate: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum MenuSpec {
    List(Vec<MenuEntry>),
    Generate(MenuGenerator),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ListenerMode {
    #[default]
    BruteForce,
    ClosedForm,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub name: Option<String>,
    pub grid: GridSpec,
    pub x_prior: XPriorSpec,
    #[serde(default)]
    pub t_prior: TPriors,
    pub observations: Vec<ObservationSpec>,
    pub menu: MenuSpec,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub mode: ListenerMode,
}

fn param_prior(spec: &TPriorSpec) -> Result<ParamPrior> {
    let values = grid(spec.min, spec.max, spec.step)?;
    match &spec.probs {
        ProbsSpec::Named(Shape::Uniform) => ParamPrior::uniform(values),
        ProbsSpec::Probs(p) => ParamPrior::new(Dist::new(values, p.clone())?),
    }
}

pub fn generate_menu(spec: &str, g: &[f64]) -> Result<Vec<Message>> {
    let mut menu = Vec::new();
    for part in spec.split('+').map(str::trim) {
        match part {
            "precise" => menu.extend(precise_alternatives(g)),
            "around" => menu.extend(vague_alternatives(g, VagueKind::Around)),
            "threshold" | "tall" => menu.extend(vague_alternatives(g, VagueKind::Threshold)),
            other => {
                return Err(Error::Schema(format!(
                    "menu.generate: unknown part `{other}` (expected precise, around, threshold)"
                )))
            }
        }
    }
    Ok(menu)
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(format!("scenario schema error: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_scenario(&self) -> Result<Scenario> {
        let g = self.grid.values()?;
        let x_prior = match &self.x_prior {
            XPriorSpec::Named(Shape::Uniform) => Dist::uniform(g.clone())?,
            XPriorSpec::Probs(p) => Dist::new(g.clone(), p.clone())?,
            XPriorSpec::Gaussian { gaussian } => discretized_gaussian(&g, gaussian.mean, gaussian.sd)?,
        };
        let around = self.t_prior.around.as_ref().map(param_prior).transpose()?;
        let threshold = self.t_prior.threshold.as_ref().map(param_prior).transpose()?;
        let prior = JointPrior::independent(x_prior, around, threshold);
        let observations = self
            .observations
            .iter()
            .map(|o| {
                Ok(WeightedObservation {
                    observation: Observation::new(o.id.clone(), Dist::new(g.clone(), o.probs.clone())?),
                    weight: o.weight,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let menu = match &self.menu {
            MenuSpec::Generate(gen) => generate_menu(&gen.generate, &g)?,
            MenuSpec::List(entries) => entries
                .iter()
                .map(|e| match e {
                    MenuEntry::Text(s) => s.parse(),
                    MenuEntry::Structured(m) => Ok(m.clone()),
                })
                .collect::<Result<Vec<_>>>()?,
        };
        Scenario::new(
            self.name.clone().unwrap_or_else(|| "scenario".into()),
            self.grid.unit.clone(),
            prior,
            observations,
            menu,
            self.lambda.unwrap_or(DEFAULT_LAMBDA),
            self.mode == ListenerMode::ClosedForm,
        )
    }
}

/// Reads and validates a scenario file in one step.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    ScenarioFile::load(path)?.to_scenario()
}
