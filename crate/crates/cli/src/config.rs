//! Run configuration files (TOML).

use std::path::{Path, PathBuf};

use relbgk::diagnostics::NewtonianProbeConfig;
use relbgk::dynamics::ScenarioConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScenarioId {
    #[serde(rename = "relax-0d")]
    Relax0d,
    #[serde(rename = "mix-1d")]
    Mix1d,
    #[serde(rename = "indifferentiability")]
    Indifferentiability,
    #[serde(rename = "newtonian-sweep")]
    NewtonianSweep,
}

impl ScenarioId {
    pub fn name(self) -> &'static str {
        match self {
            Self::Relax0d => "relax-0d",
            Self::Mix1d => "mix-1d",
            Self::Indifferentiability => "indifferentiability",
            Self::NewtonianSweep => "newtonian-sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_dir() }
    }
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Per-species relative mass drift allowed over a run.
    #[serde(default = "tight")]
    pub mass_rel: f64,
    /// Relative energy-momentum drift allowed over a run.
    #[serde(default = "tight")]
    pub energy_momentum_rel: f64,
    /// Largest `L¹` distance accepted by `check-indifferentiability`.
    #[serde(default = "l1_default")]
    pub indifferentiability_l1: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { mass_rel: tight(), energy_momentum_rel: tight(), indifferentiability_l1: l1_default() }
    }
}

fn tight() -> f64 {
    1e-12
}

fn l1_default() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioId,
    /// Worker threads; `--threads` and `RELBGK_THREADS` take precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<ScenarioConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<NewtonianProbeConfig>,
}

impl RunConfig {
    /// Every violated constraint, one message each.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.threads == Some(0) {
            v.push("threads must be ≥ 1".into());
        }
        let t = &self.tolerances;
        for (name, x) in [
            ("tolerances.mass_rel", t.mass_rel),
            ("tolerances.energy_momentum_rel", t.energy_momentum_rel),
            ("tolerances.indifferentiability_l1", t.indifferentiability_l1),
        ] {
            if !(x.is_finite() && x > 0.0) {
                v.push(format!("{name} must be > 0 (got {x})"));
            }
        }
        if self.output.dir.as_os_str().is_empty() {
            v.push("output.dir must not be empty".into());
        }
        let name = self.scenario.name();
        match self.scenario {
            ScenarioId::NewtonianSweep => {
                if self.probe.is_none() {
                    v.push(format!("scenario {name} needs a [probe] table"));
                }
            }
            _ => match &self.simulation {
                None => v.push(format!("scenario {name} needs a [simulation] table")),
                Some(sim) => {
                    if self.scenario == ScenarioId::Relax0d && sim.space.n_cells != 1 {
                        v.push(format!(
                            "simulation.space.n_cells must be 1 for relax-0d (got {})",
                            sim.space.n_cells
                        ));
                    }
                    if self.scenario == ScenarioId::Indifferentiability {
                        if let Some(first) = sim.species.first() {
                            if sim.species.iter().any(|s| s.mass != first.mass || s.tau != first.tau) {
                                v.push("indifferentiability needs equal mass and tau for every species".into());
                            }
                        }
                    }
                }
            },
        }
        if let Some(sim) = &self.simulation {
            if sim.seed > i64::MAX as u64 {
                v.push(format!("simulation.seed must fit a TOML integer (≤ {})", i64::MAX));
            }
            v.extend(sim.violations().into_iter().map(|m| format!("simulation.{m}")));
        }
        if let Some(probe) = &self.probe {
            v.extend(probe.violations().into_iter().map(|m| format!("probe.{m}")));
        }
        v
    }

    pub fn simulation(&self) -> CliResult<&ScenarioConfig> {
        self.simulation.as_ref().ok_or_else(|| CliError::Invalid(vec!["a [simulation] table is required".into()]))
    }

    pub fn probe(&self) -> CliResult<&NewtonianProbeConfig> {
        self.probe.as_ref().ok_or_else(|| CliError::Invalid(vec!["a [probe] table is required".into()]))
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Output(e.to_string()))
    }
}

/// Parses and validates a configuration string.
pub fn parse_str(text: &str) -> CliResult<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Invalid(vec![e.message().to_string()]))?;
    let v = cfg.violations();
    if v.is_empty() {
        Ok(cfg)
    } else {
        Err(CliError::Invalid(v))
    }
}

pub fn parse_config(path: &Path) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_str(&text)
}
