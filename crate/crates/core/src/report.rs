//! Full scenario pipeline: counting statistics, classification, entanglement
//! time, mismatch analysis and the optional trajectory validation block,
//! serialized as one JSON report with machine-readable cross-checks.

use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::counting::{self, CountingError, CountingStats, JointSpinState};
use crate::dynamics::DriveParams;
use crate::figures::{write_atomic, FigureError};
use crate::network::{build_network, NetworkError};
use crate::protocol::{
    self, ClassificationReport, ClassifyMethod, ClassifyMethodTag, EntanglementTime,
    ExperimentPreset, ProtocolError,
};
use crate::scenario::{Scenario, ScenarioError};
use crate::trajectories::{self, TrajectoryError};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Counting(#[from] CountingError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error("cross-checks failed: {failed} of {total} comparisons out of tolerance")]
    CrossCheck {
        failed: usize,
        total: usize,
        report: Box<ScenarioReport>,
    },
    #[error("i/o failure: {0}")]
    Io(String),
}

impl From<FigureError> for RunError {
    fn from(e: FigureError) -> Self {
        match e {
            FigureError::Scenario(s) => RunError::Scenario(s),
            FigureError::Network(n) => RunError::Network(n),
            FigureError::Counting(c) => RunError::Counting(c),
            FigureError::Io { path, source } => RunError::Io(format!("{path}: {source}")),
        }
    }
}

impl RunError {
    /// Process exit code: 1 validation, 2 cross-check failure, 3 i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::CrossCheck { .. } => 2,
            RunError::Io(_) => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ParameterSummary {
    pub qubit1: DriveParams,
    pub qubit2: DriveParams,
    pub eta_mean: f64,
    /// Reference observation time of the counting block (units of t1).
    pub t_reference: f64,
    /// Heralding time `kappa t1 / eta` implied by the operating point.
    pub t_herald: f64,
    pub kappa: f64,
    pub method: ClassifyMethodTag,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossCheckItem {
    pub name: String,
    pub expected: f64,
    pub actual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CrossCheckItem {
    fn new(name: impl Into<String>, expected: f64, actual: f64, tolerance: f64) -> Self {
        let pass = (expected - actual).abs() <= tolerance;
        Self {
            name: name.into(),
            expected,
            actual,
            tolerance,
            pass,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StateComparison {
    pub state: JointSpinState,
    pub deterministic: CountingStats,
    pub empirical_mean: f64,
    pub empirical_variance: f64,
    pub empirical_q: Option<f64>,
    pub se_mean: f64,
    pub se_variance: f64,
    pub se_q: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryValidation {
    pub t_over_t1: f64,
    pub n_traj: usize,
    pub seed: u64,
    pub states: Vec<StateComparison>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossChecks {
    pub all_pass: bool,
    pub items: Vec<CrossCheckItem>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub parameters: ParameterSummary,
    /// Counting statistics at the reference time, one entry per state.
    pub counting: Vec<CountingStats>,
    pub classification: Option<ClassificationReport>,
    /// Physical reason when classification is impossible (for example
    /// indistinguishable distributions at this operating point).
    pub classification_error: Option<String>,
    pub preset: Option<ExperimentPreset>,
    pub entanglement: Option<EntanglementTime>,
    pub mismatch: protocol::MismatchReport,
    pub trajectories: Option<TrajectoryValidation>,
    pub cross_checks: CrossChecks,
}

/// Run the full pipeline for one scenario.
///
/// Exit-code semantics for callers: scenario/parameter problems map to 1,
/// a report whose cross-checks fail maps to 2 (the report is still carried
/// inside the error), i/o problems map to 3.
pub fn run_scenario(scenario: &Scenario) -> Result<ScenarioReport, RunError> {
    scenario.validate()?;
    let model = build_network(&scenario.mode_network())?;
    let q1 = scenario.qubit1;
    let q2 = scenario.qubit2();
    let eta_mean = 0.5 * (q1.efficiency + q2.efficiency);
    let t_ref = scenario.report.t_over_t1;
    let kappa = scenario.protocol.kappa;
    let t_herald = kappa * q1.t1 / eta_mean;

    let stats_at = |state, t| counting::counting_stats(state, &q1, &q2, t, &model);
    let counting_block: Vec<CountingStats> = JointSpinState::ALL
        .iter()
        .map(|&s| stats_at(s, t_ref))
        .collect::<Result<_, _>>()?;

    // Classification at the heralding time.
    let herald_pm = stats_at(JointSpinState::PM, t_herald)?;
    let herald_mm = stats_at(JointSpinState::MM, t_herald)?;
    let herald_pp = stats_at(JointSpinState::PP, t_herald)?;
    let classification_result = match scenario.protocol.method {
        ClassifyMethodTag::Gaussian => {
            protocol::classify(&herald_pm, &herald_mm, &herald_pp, ClassifyMethod::Gaussian)
        }
        ClassifyMethodTag::Poisson => {
            protocol::classify(&herald_pm, &herald_mm, &herald_pp, ClassifyMethod::Poisson)
        }
        ClassifyMethodTag::Empirical => {
            let cfg = &scenario.trajectories;
            let e = trajectories::simulate(
                JointSpinState::PM,
                &q1,
                &q2,
                t_herald,
                cfg.n_traj,
                cfg.seed,
            )?;
            let mm = trajectories::simulate(
                JointSpinState::MM,
                &q1,
                &q2,
                t_herald,
                cfg.n_traj,
                cfg.seed.wrapping_add(1),
            )?;
            let e_dist = trajectories::empirical_distribution(&e);
            let mm_dist = trajectories::empirical_distribution(&mm);
            protocol::classify(
                &herald_pm,
                &herald_mm,
                &herald_pp,
                ClassifyMethod::Empirical {
                    e: &e_dist,
                    mm: &mm_dist,
                },
            )
        }
    };
    let (classification, classification_error) = match classification_result {
        Ok(r) => (Some(r), None),
        Err(e @ ProtocolError::Indistinguishable { .. }) => (None, Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };

    // Entanglement time for the configured experimental platform.
    let preset = scenario.preset.as_ref().map(|p| p.resolve()).transpose()?;
    let entanglement = preset
        .as_ref()
        .map(|p| protocol::avg_entanglement_time(p, kappa))
        .transpose()?;

    let mismatch = protocol::mismatch_analysis(&q1, &q2, t_herald, &model)?;

    let mut items: Vec<CrossCheckItem> = Vec::new();

    // Closed-form consistency of the long-time means (identical qubits).
    if q1 == q2 && t_ref >= 200.0 * q1.t1 {
        for (state, label) in [
            (JointSpinState::PM, "eq3_match.pm"),
            (JointSpinState::MM, "eq3_match.mm"),
        ] {
            let closed = counting::mean_longtime(state, q1.rabi, q1.efficiency, t_ref / q1.t1)?
                + 0.5 * (q1.background_rate + q2.background_rate) * t_ref;
            let general = counting_block[state as usize].mean;
            items.push(CrossCheckItem::new(label, closed, general, 0.01 * closed));
        }
    }

    // Quadrature convergence: halving the step moves the variance < 0.5%.
    {
        let dt = counting::default_dt(&q1, &q2);
        let v1 = counting::variance_with_dt(JointSpinState::MM, &q1, &q2, t_ref, &model, dt)?;
        let v2 = counting::variance_with_dt(JointSpinState::MM, &q1, &q2, t_ref, &model, 0.5 * dt)?;
        items.push(CrossCheckItem::new(
            "variance_richardson.mm",
            v2,
            v1,
            5e-3 * v2.abs(),
        ));
    }

    // Trajectory oracle comparison.
    let trajectory_block = if scenario.trajectories.enabled {
        let cfg = &scenario.trajectories;
        let t_traj = cfg
            .t_over_t1
            .unwrap_or_else(|| t_ref.min(200.0 * q1.t1.max(q2.t1)));
        let mut states = Vec::new();
        for (offset, state) in [(0u64, JointSpinState::PM), (1, JointSpinState::MM)] {
            let ens = trajectories::simulate(
                state,
                &q1,
                &q2,
                t_traj,
                cfg.n_traj,
                cfg.seed.wrapping_add(offset),
            )?;
            let dist = trajectories::empirical_distribution(&ens);
            let det = stats_at(state, t_traj)?;
            items.push(CrossCheckItem::new(
                format!("trajectories.{state}.mean"),
                det.mean,
                dist.mean,
                3.0 * dist.se_mean,
            ));
            items.push(CrossCheckItem::new(
                format!("trajectories.{state}.variance"),
                det.variance,
                dist.variance,
                3.0 * dist.se_variance,
            ));
            if let (Some(dq), Some(eq)) = (det.q, dist.q) {
                items.push(CrossCheckItem::new(
                    format!("trajectories.{state}.q"),
                    dq,
                    eq,
                    3.0 * dist.se_q,
                ));
            }
            states.push(StateComparison {
                state,
                deterministic: det,
                empirical_mean: dist.mean,
                empirical_variance: dist.variance,
                empirical_q: dist.q,
                se_mean: dist.se_mean,
                se_variance: dist.se_variance,
                se_q: dist.se_q,
            });
        }
        Some(TrajectoryValidation {
            t_over_t1: t_traj,
            n_traj: cfg.n_traj,
            seed: cfg.seed,
            states,
        })
    } else {
        None
    };

    let all_pass = items.iter().all(|i| i.pass);
    let report = ScenarioReport {
        parameters: ParameterSummary {
            qubit1: q1,
            qubit2: q2,
            eta_mean,
            t_reference: t_ref,
            t_herald,
            kappa,
            method: scenario.protocol.method,
        },
        counting: counting_block,
        classification,
        classification_error,
        preset,
        entanglement,
        mismatch,
        trajectories: trajectory_block,
        cross_checks: CrossChecks { all_pass, items },
    };
    if !report.cross_checks.all_pass {
        let failed = report.cross_checks.items.iter().filter(|i| !i.pass).count();
        let total = report.cross_checks.items.len();
        return Err(RunError::CrossCheck {
            failed,
            total,
            report: Box::new(report),
        });
    }
    Ok(report)
}

/// Serialize a report to pretty JSON ending in a newline.
pub fn to_json(report: &ScenarioReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serialization");
    s.push('\n');
    s
}

/// Write the report atomically as `report.json` in `out_dir`.
pub fn write_report(
    report: &ScenarioReport,
    out_dir: &Path,
) -> Result<std::path::PathBuf, RunError> {
    let path = out_dir.join("report.json");
    write_atomic(&path, to_json(report).as_bytes())?;
    Ok(path)
}
