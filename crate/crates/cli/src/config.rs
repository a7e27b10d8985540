//! Scenario configuration: JSON schema, CLI overrides and validation.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use subspace_sim::{ModelKind, SolverOptions};

use crate::CliError;

/// Scalar or list; lists produce cross-product sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrList {
    Scalar(f64),
    List(Vec<f64>),
}

impl ScalarOrList {
    pub fn values(&self) -> Vec<f64> {
        match self {
            ScalarOrList::Scalar(v) => vec![*v],
            ScalarOrList::List(vs) => vs.clone(),
        }
    }
}

impl Default for ScalarOrList {
    fn default() -> Self {
        ScalarOrList::Scalar(0.0)
    }
}

/// Initial system state: a basis ket or the maximally mixed state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialState {
    Ket(usize),
    Mixed,
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState::Ket(0)
    }
}

impl fmt::Display for InitialState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialState::Ket(i) => write!(f, "ket{i}"),
            InitialState::Mixed => write!(f, "mixed"),
        }
    }
}

impl FromStr for InitialState {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "mixed" {
            return Ok(InitialState::Mixed);
        }
        if let Some(rest) = s.strip_prefix("ket") {
            if let Ok(level) = rest.parse::<usize>() {
                return Ok(InitialState::Ket(level));
            }
        }
        Err(format!(
            "invalid initial state `{s}` (expected ket<level> or mixed)"
        ))
    }
}

impl Serialize for InitialState {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for InitialState {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
}

fn default_rtol() -> f64 {
    1e-9
}

fn default_atol() -> f64 {
    1e-12
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rtol: default_rtol(),
            atol: default_atol(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub n_traj: usize,
    #[serde(default)]
    pub seed: u64,
    /// Defaults to 10/gamma when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dark_threshold: Option<f64>,
}

/// Which representation `simulate` integrates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMethod {
    #[default]
    Master,
    Rate,
}

fn default_xi() -> f64 {
    1.0
}

fn default_n_points() -> usize {
    2000
}

fn default_output() -> String {
    "out".to_string()
}

/// The flat scenario schema. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: String,
    #[serde(default = "default_xi")]
    pub xi: f64,
    #[serde(default)]
    pub omega: ScalarOrList,
    #[serde(default)]
    pub gamma: ScalarOrList,
    /// Defaults to 20/xi when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default = "default_n_points")]
    pub n_points: usize,
    #[serde(default)]
    pub initial: InitialState,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<TrajectoryConfig>,
    #[serde(default = "default_output")]
    pub output: String,
    #[serde(default)]
    pub method: SimMethod,
}

impl ScenarioConfig {
    pub fn minimal(model: &str) -> Self {
        Self {
            model: model.to_string(),
            xi: default_xi(),
            omega: ScalarOrList::default(),
            gamma: ScalarOrList::default(),
            t_max: None,
            n_points: default_n_points(),
            initial: InitialState::default(),
            solver: SolverConfig::default(),
            trajectories: None,
            output: default_output(),
            method: SimMethod::default(),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Resolve defaults and check every field, returning the concrete plan.
    pub fn resolve(&self) -> Result<ResolvedConfig, CliError> {
        let kind: ModelKind = self
            .model
            .parse()
            .map_err(|e| CliError::Config(format!("{e}")))?;
        if !(self.xi.is_finite() && self.xi >= 0.0) {
            return Err(CliError::Config(format!("xi = {} must be >= 0", self.xi)));
        }
        let t_max = match self.t_max {
            Some(t) => t,
            None if self.xi > 0.0 => 20.0 / self.xi,
            None => {
                return Err(CliError::Config(
                    "t_max must be given explicitly when xi = 0".into(),
                ))
            }
        };
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(CliError::Config(format!("t_max = {t_max} must be > 0")));
        }
        if self.n_points == 0 {
            return Err(CliError::Config("n_points must be >= 1".into()));
        }
        if !(self.solver.rtol > 0.0 && self.solver.atol > 0.0) {
            return Err(CliError::Config(format!(
                "solver tolerances must be positive (rtol = {}, atol = {})",
                self.solver.rtol, self.solver.atol
            )));
        }
        if let InitialState::Ket(level) = self.initial {
            if level >= kind.dim() {
                return Err(CliError::Config(format!(
                    "initial state ket{level} outside the {} levels of {}",
                    kind.dim(),
                    kind
                )));
            }
        }
        let omegas = self.omega.values();
        let gammas = self.gamma.values();
        if omegas.is_empty() || gammas.is_empty() {
            return Err(CliError::Config("omega/gamma sweep lists are empty".into()));
        }
        for &v in omegas.iter().chain(&gammas) {
            if !(v.is_finite() && v >= 0.0) {
                return Err(CliError::Config(format!(
                    "sweep values must be finite and >= 0, got {v}"
                )));
            }
        }
        if let Some(t) = &self.trajectories {
            if t.n_traj == 0 {
                return Err(CliError::Config("n_traj must be >= 1".into()));
            }
            if let Some(thr) = t.dark_threshold {
                if !(thr > 0.0 && thr.is_finite()) {
                    return Err(CliError::Config(format!(
                        "dark_threshold = {thr} must be > 0"
                    )));
                }
            }
        }
        let mut sweep = Vec::new();
        for &om in &omegas {
            for &ga in &gammas {
                sweep.push((om, ga));
            }
        }
        Ok(ResolvedConfig {
            kind,
            xi: self.xi,
            sweep,
            t_max,
            n_points: self.n_points,
            initial: self.initial,
            solver: SolverOptions::with_tolerances(self.solver.rtol, self.solver.atol),
            trajectories: self.trajectories,
            output: self.output.clone(),
            method: self.method,
            scenario_json: self.to_json(),
        })
    }
}

/// Validated concrete run plan.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub kind: ModelKind,
    pub xi: f64,
    pub sweep: Vec<(f64, f64)>,
    pub t_max: f64,
    pub n_points: usize,
    pub initial: InitialState,
    pub solver: SolverOptions,
    pub trajectories: Option<TrajectoryConfig>,
    pub output: String,
    pub method: SimMethod,
    /// The effective scenario, echoed into run manifests.
    pub scenario_json: String,
}
