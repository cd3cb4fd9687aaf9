//! Experiment configuration files.
//!
//! TOML is the concrete syntax; a file ending in `.json` is read as JSON
//! with the same structure:
//!
//! ```toml
//! experiment = "two-photon-rabi"
//! model = "effective"        # paper | paper-unitary | effective | cascade
//!
//! [params]
//! delta = 1.0
//! g1 = 0.02
//! g2 = 0.0282842712474619
//!
//! [sweep]
//! parameter = "phi"
//! start = 0.0
//! stop = 6.283185307179586
//! points = 64
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::effective::PaperVariant;
use crate::error::{Error, Result};
use crate::gates::{InteractionModel, SecondCoupler};
use crate::hamiltonians::DetuningSign;

/// The named experiments, in listing order.
pub const EXPERIMENTS: [&str; 9] = [
    "basis-info",
    "mzi-sweep",
    "two-photon-rabi",
    "cz-truth-table",
    "cz-fidelity-sweep",
    "optimize-cz",
    "params-estimate",
    "crow-pulse",
    "effective-vs-cascade",
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelChoice {
    Paper,
    PaperUnitary,
    #[default]
    Effective,
    Cascade,
}

impl ModelChoice {
    pub fn interaction(self, sign: DetuningSign) -> InteractionModel {
        match self {
            ModelChoice::Paper => InteractionModel::Paper(PaperVariant::AsPrinted),
            ModelChoice::PaperUnitary => InteractionModel::Paper(PaperVariant::Unitary),
            ModelChoice::Effective => InteractionModel::Effective,
            ModelChoice::Cascade => InteractionModel::Cascade(sign),
        }
    }
}

/// Named gate operating point used when couplings or time are left out.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionChoice {
    /// g₁ = 2√2·g₂, κt = π.
    Paper,
    /// g₂ = √2·g₁, Ω_R t = π.
    #[default]
    Calibrated,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignChoice {
    Above,
    #[default]
    Below,
}

impl From<SignChoice> for DetuningSign {
    fn from(s: SignChoice) -> Self {
        match s {
            SignChoice::Above => DetuningSign::IntermediateAbove,
            SignChoice::Below => DetuningSign::IntermediateBelow,
        }
    }
}

/// Physical and numerical parameters. Which ones are needed depends on the
/// experiment; missing ones take documented defaults where one exists.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub g1: Option<f64>,
    pub g2: Option<f64>,
    pub delta: Option<f64>,
    pub time: Option<f64>,
    pub t_max: Option<f64>,
    pub steps: Option<usize>,
    pub condition: Option<ConditionChoice>,
    pub detuning_sign: Option<SignChoice>,
    pub second_coupler: Option<SecondCoupler>,
    pub compensate: Option<bool>,
    pub local_phases: Option<bool>,
    pub ratio: Option<f64>,
    pub rabi_angle: Option<f64>,
    /// basis-info
    pub modes: Option<usize>,
    pub n_max: Option<usize>,
    pub cascade_dopants: Option<usize>,
    pub two_level_dopants: Option<usize>,
    pub excitation_cap: Option<bool>,
    /// params-estimate (SI units)
    pub q: Option<f64>,
    pub omega: Option<f64>,
    pub wavelength: Option<f64>,
    pub g: Option<f64>,
    pub n: Option<f64>,
    pub v_g: Option<f64>,
    pub length: Option<f64>,
    pub lattice_constant: Option<f64>,
    /// crow-pulse
    pub chain_length: Option<usize>,
    pub j: Option<f64>,
    pub disorder: Option<f64>,
    pub seed: Option<u64>,
    pub center: Option<f64>,
    pub width: Option<f64>,
    pub carrier_k: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: String,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Sweep {
    /// Evenly spaced values including both ends.
    pub fn values(&self) -> Vec<f64> {
        match self.points {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n)
                .map(|k| self.start + (self.stop - self.start) * k as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Search {
    pub ratio: Option<[f64; 2]>,
    pub rabi_angle: Option<[f64; 2]>,
    pub grid: Option<[usize; 2]>,
    pub local_phases: Option<bool>,
    pub max_evaluations: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default)]
    pub model: ModelChoice,
    #[serde(default)]
    pub params: Params,
    pub sweep: Option<Sweep>,
    pub search: Option<Search>,
    /// Used when no output directory is given on the command line.
    pub output: Option<PathBuf>,
}

fn path_error<E: std::fmt::Display>(path: String, e: E) -> Error {
    Error::Config { path: if path.is_empty() { ".".into() } else { path }, message: e.to_string() }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| path_error(String::new(), e))?;
        serde_path_to_error::deserialize(de).map_err(|e| path_error(e.path().to_string(), e.inner()))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| path_error(e.path().to_string(), e.inner()))
    }

    /// Reads TOML, or JSON when the extension is `.json`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config { path: path.display().to_string(), message: e.to_string() })?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Output(e.to_string()))
    }
}
