//! Experiment configuration files (TOML, or JSON by extension).
//!
//! ```toml
//! [scenario]
//! preset = "default"          # default | noiseless_centered | saturated
//!
//! [dictionary]
//! kind = "histogram"          # histogram | fourier
//! size = 16
//!
//! [plan]
//! n = 4096
//! M = 2000
//! R = 500
//! seed = 20240601
//! t_grid = [1.0, 2.0, 3.0]
//!
//! [bounds]
//! c0 = 1.0
//!
//! [output]
//! dir = "out"
//! ```

use erlab_core::dictionary::DictionaryKind;
use erlab_core::harness::{ExperimentPlan, SGridSpec, ScalingSpec};
use erlab_core::scenario::{NoiseLaw, NoiseLevel, Regression, Scenario};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub scenario: ScenarioConfig,
    pub dictionary: DictionaryConfig,
    pub plan: PlanConfig,
    #[serde(default)]
    pub bounds: BoundsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// A preset, optionally with individual components replaced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_preset")]
    pub preset: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regression: Option<Regression>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_level: Option<NoiseLevel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_law: Option<NoiseLaw>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a2: Option<f64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            preset: default_preset(),
            regression: None,
            noise_level: None,
            noise_law: None,
            a1: None,
            a2: None,
        }
    }
}

fn default_preset() -> String {
    "default".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DictionaryConfig {
    pub kind: DictionaryKind,
    pub size: usize,
    /// Sup-norm radius of the model around the projection.
    #[serde(default = "default_radius")]
    pub radius: f64,
}

fn default_radius() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    pub n: usize,
    #[serde(rename = "M")]
    pub trials: usize,
    #[serde(rename = "R")]
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "default_check_trials")]
    pub check_trials: usize,
    #[serde(default = "default_t_grid")]
    pub t_grid: Vec<f64>,
    #[serde(default)]
    pub s_grid: SGridSpec,
    #[serde(default = "default_margin_samples")]
    pub margin_samples: usize,
    #[serde(default = "default_tail_s")]
    pub tail_s: Vec<f64>,
    #[serde(default)]
    pub scaling: ScalingSpec,
}

fn default_check_trials() -> usize {
    100
}

fn default_t_grid() -> Vec<f64> {
    vec![1.0, 2.0, 3.0]
}

fn default_margin_samples() -> usize {
    10_000
}

fn default_tail_s() -> Vec<f64> {
    vec![0.1, 0.3, 1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    #[serde(default = "default_c0")]
    pub c0: f64,
    /// Factor used to read `a ≪ b` as `ratio·a ≤ b` in the regime report.
    #[serde(default = "default_ratio")]
    pub ratio_threshold: f64,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self {
            c0: default_c0(),
            ratio_threshold: default_ratio(),
        }
    }
}

fn default_c0() -> f64 {
    1.0
}

fn default_ratio() -> f64 {
    3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            formats: default_formats(),
        }
    }
}

fn default_dir() -> PathBuf {
    PathBuf::from("erlab-out")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Json, Format::Csv]
}

fn path_error<E: std::fmt::Display>(err: serde_path_to_error::Error<E>) -> ConfigError {
    let path = err.path().to_string();
    ConfigError::Parse {
        path: if path == "." { "config".into() } else { path },
        message: err.into_inner().to_string(),
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::Parse {
            path: "config".into(),
            message: e.to_string(),
        })?;
        serde_path_to_error::deserialize(de).map_err(path_error)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let mut de = serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(&mut de).map_err(path_error)
    }

    /// Reads a file, choosing JSON for `.json` and TOML otherwise.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json(&text),
            _ => Self::from_toml(&text),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable as TOML")
    }

    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        let s = &self.scenario;
        let mut sc = Scenario::preset(&s.preset).ok_or_else(|| ConfigError::Parse {
            path: "scenario.preset".into(),
            message: format!("unknown preset `{}` (expected default, noiseless_centered or saturated)", s.preset),
        })?;
        if let Some(r) = &s.regression {
            sc.regression = r.clone();
        }
        if let Some(l) = &s.noise_level {
            sc.noise_level = l.clone();
        }
        if let Some(l) = s.noise_law {
            sc.noise_law = l;
        }
        if let Some(a) = s.a1 {
            sc.a1 = a;
        }
        if let Some(a) = s.a2 {
            sc.a2 = a;
        }
        Ok(sc)
    }

    /// Resolves the configuration into a validated plan.
    pub fn plan(&self) -> Result<ExperimentPlan, ConfigError> {
        let p = &self.plan;
        let plan = ExperimentPlan {
            scenario: self.scenario()?,
            dictionary: self.dictionary.kind,
            size: self.dictionary.size,
            radius: self.dictionary.radius,
            n: p.n,
            trials: p.trials,
            replicates: p.replicates,
            check_trials: p.check_trials,
            seed: p.seed,
            t_grid: p.t_grid.clone(),
            s_grid: p.s_grid.clone(),
            c0: self.bounds.c0,
            ratio_threshold: self.bounds.ratio_threshold,
            margin_samples: p.margin_samples,
            tail_s_fractions: p.tail_s.clone(),
            scaling: p.scaling.clone(),
        };
        plan.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        plan.scenario.validate().map_err(|e| ConfigError::Invalid(format!("scenario: {e}")))?;
        Ok(plan)
    }
}
