//! Scenario configuration: one structured text file (TOML, with JSON
//! accepted as an alternative encoding) describing the qubits, network,
//! sweep grids, protocol options and trajectory options of a run.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::DriveParams;
use crate::network::{ModeNetwork, SplitterTransform};
use crate::protocol::{ClassifyMethodTag, ExperimentPreset, ProtocolError};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario '{path}': {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse scenario '{path}': {message}")]
    Parse { path: String, message: String },
    #[error("invalid scenario: {field}: {message}")]
    Validation {
        field: &'static str,
        message: String,
    },
    #[error(transparent)]
    Preset(#[from] ProtocolError),
}

fn invalid(field: &'static str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation {
        field,
        message: message.into(),
    }
}

/// A sweep grid: either an explicit ascending list or a range description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    List(Vec<f64>),
    Range {
        min: f64,
        max: f64,
        points: usize,
        #[serde(default)]
        log: bool,
    },
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            GridSpec::List(v) => v.clone(),
            GridSpec::Range {
                min,
                max,
                points,
                log,
            } => {
                let n = (*points).max(2);
                (0..n)
                    .map(|k| {
                        let f = k as f64 / (n - 1) as f64;
                        if *log {
                            (min.ln() + f * (max.ln() - min.ln())).exp()
                        } else {
                            min + f * (max - min)
                        }
                    })
                    .collect()
            }
        }
    }

    fn validate(&self, field: &'static str, allow_zero: bool) -> Result<(), ScenarioError> {
        let values = self.values();
        if values.is_empty() {
            return Err(invalid(field, "grid must be non-empty"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid(field, "grid values must be finite"));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid(field, "grid must be strictly ascending"));
        }
        let floor = if allow_zero { 0.0 } else { f64::MIN_POSITIVE };
        if values[0] < floor {
            return Err(invalid(field, "grid values must be non-negative"));
        }
        if let GridSpec::Range { min, log: true, .. } = self {
            if *min <= 0.0 {
                return Err(invalid(field, "log-spaced grids need min > 0"));
            }
        }
        Ok(())
    }
}

/// Element phases of the beam-splitter network; angles in radians.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkConfig {
    pub theta_bs1: f64,
    pub theta_bs2: f64,
    pub phase_a1: f64,
    pub phase_c: f64,
    pub mirror_phase: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        let canonical = ModeNetwork::canonical();
        Self {
            theta_bs1: std::f64::consts::FRAC_PI_4,
            theta_bs2: std::f64::consts::FRAC_PI_4,
            phase_a1: canonical.phase_a1,
            phase_c: canonical.phase_c,
            mirror_phase: canonical.mirror_phase,
        }
    }
}

impl From<&NetworkConfig> for ModeNetwork {
    fn from(c: &NetworkConfig) -> Self {
        ModeNetwork {
            bs1: SplitterTransform::from_angle(c.theta_bs1),
            bs2: SplitterTransform::from_angle(c.theta_bs2),
            phase_a1: c.phase_a1,
            phase_c: c.phase_c,
            mirror_phase: c.mirror_phase,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    /// Dimensionless drive grid.
    pub x: GridSpec,
    /// Observation-time grid in units of t1 (feeds the time-resolved
    /// figure).
    pub t_over_t1: GridSpec,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            x: GridSpec::Range {
                min: 0.1,
                max: 20.0,
                points: 40,
                log: true,
            },
            t_over_t1: GridSpec::Range {
                min: 0.0,
                max: 1000.0,
                points: 21,
                log: false,
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolConfig {
    /// Operating point `eta t / t1` of the heralding window.
    pub kappa: f64,
    pub confidence_target: f64,
    pub method: ClassifyMethodTag,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            kappa: 130.0,
            confidence_target: 0.9,
            method: ClassifyMethodTag::Gaussian,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrajectoryConfig {
    pub enabled: bool,
    pub n_traj: usize,
    pub seed: u64,
    /// Simulation span; defaults to `min(report time, 200 t1)`.
    pub t_over_t1: Option<f64>,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            n_traj: 20_000,
            seed: 7,
            t_over_t1: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportConfig {
    /// Reference observation time for the counting block.
    pub t_over_t1: f64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self { t_over_t1: 1000.0 }
    }
}

/// Experimental platform reference: inline values or a builtin preset name.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PresetRef {
    Inline(ExperimentPreset),
    Name { name: String },
}

impl PresetRef {
    pub fn resolve(&self) -> Result<ExperimentPreset, ScenarioError> {
        match self {
            PresetRef::Inline(p) => {
                p.validate()?;
                Ok(p.clone())
            }
            PresetRef::Name { name } => Ok(ExperimentPreset::builtin(name)?),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct Scenario {
    pub qubit1: DriveParams,
    /// Defaults to a copy of `qubit1` when absent.
    pub qubit2: Option<DriveParams>,
    pub network: NetworkConfig,
    pub sweep: SweepConfig,
    pub protocol: ProtocolConfig,
    pub trajectories: TrajectoryConfig,
    pub report: ReportConfig,
    pub preset: Option<PresetRef>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            qubit1: DriveParams {
                rabi: 3.0,
                t1: 1.0,
                efficiency: 1.0,
                background_rate: 0.0,
            },
            qubit2: None,
            network: NetworkConfig::default(),
            sweep: SweepConfig::default(),
            protocol: ProtocolConfig::default(),
            trajectories: TrajectoryConfig::default(),
            report: ReportConfig::default(),
            preset: None,
        }
    }
}

impl Scenario {
    pub fn qubit2(&self) -> DriveParams {
        self.qubit2.unwrap_or(self.qubit1)
    }

    pub fn mode_network(&self) -> ModeNetwork {
        (&self.network).into()
    }

    /// Load from a TOML (default) or JSON (`.json`) file.
    pub fn from_path(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let scenario: Scenario = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| ScenarioError::Parse {
                path: path.display().to_string(),
                message: e.to_string(),
            })?
        } else {
            toml::from_str(&text).map_err(|e| ScenarioError::Parse {
                path: path.display().to_string(),
                message: e.to_string(),
            })?
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.qubit1
            .validate()
            .map_err(|e| invalid("qubit1", e.to_string()))?;
        if let Some(q2) = &self.qubit2 {
            q2.validate()
                .map_err(|e| invalid("qubit2", e.to_string()))?;
        }
        self.sweep.x.validate("sweep.x", true)?;
        self.sweep.t_over_t1.validate("sweep.t_over_t1", true)?;
        if !(self.protocol.kappa > 0.0) {
            return Err(invalid("protocol.kappa", "kappa must be > 0"));
        }
        if !(0.5..1.0).contains(&self.protocol.confidence_target) {
            return Err(invalid(
                "protocol.confidence_target",
                "confidence target must lie in [0.5, 1)",
            ));
        }
        if self.trajectories.enabled && self.trajectories.n_traj == 0 {
            return Err(invalid(
                "trajectories.n_traj",
                "need at least one trajectory",
            ));
        }
        if !(self.report.t_over_t1 > 0.0) {
            return Err(invalid("report.t_over_t1", "reference time must be > 0"));
        }
        if let Some(preset) = &self.preset {
            preset.resolve()?;
        }
        Ok(())
    }
}
