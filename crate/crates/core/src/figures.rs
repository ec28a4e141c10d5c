//! Parameter-sweep CSV outputs for the standard figures: mean counts
//! versus time and drive (fig2), count bands and the `--`/E ratio versus
//! drive (fig3), and count fluctuations with Mandel Q versus drive (fig4).
//!
//! All figure data is evaluated at unit efficiency (the curves are defined
//! as maximum detected photons); fig3 and fig4 sit at the long-time point
//! `t / t1 = 10^3`. Output files carry a versioned schema line, rows are
//! formatted with a fixed float width, and writes are atomic
//! (temp-then-rename), so reruns are byte-identical.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::counting::{self, CountingError, JointSpinState};
use crate::dynamics::DriveParams;
use crate::network::{build_network, NetworkError};
use crate::scenario::{Scenario, ScenarioError};

pub const SCHEMA_VERSION: &str = "v1";

/// Long-time operating point of the fluctuation figures.
const FIG_T_OVER_T1: f64 = 1e3;

#[derive(Debug, Error)]
pub enum FigureError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Counting(#[from] CountingError),
    #[error("cannot write '{path}': {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig2,
    Fig3,
    Fig4,
}

impl Figure {
    pub fn name(&self) -> &'static str {
        match self {
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
        }
    }
}

impl std::str::FromStr for Figure {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fig2" | "2" => Ok(Figure::Fig2),
            "fig3" | "3" => Ok(Figure::Fig3),
            "fig4" | "4" => Ok(Figure::Fig4),
            other => Err(format!(
                "unknown figure '{other}' (expected fig2|fig3|fig4)"
            )),
        }
    }
}

fn unit_efficiency(params: &DriveParams, x: f64) -> DriveParams {
    DriveParams {
        rabi: x,
        efficiency: 1.0,
        ..*params
    }
}

fn fmt(value: f64) -> String {
    format!("{value:.10e}")
}

/// Write the CSV for one figure into `out_dir`; returns the file path.
pub fn run_figure(
    which: Figure,
    scenario: &Scenario,
    out_dir: &Path,
) -> Result<PathBuf, FigureError> {
    scenario.validate()?;
    let model = build_network(&scenario.mode_network())?;
    let xs = scenario.sweep.x.values();
    if which != Figure::Fig2 {
        if let Some(&bad) = xs.iter().find(|&&x| x <= 0.0) {
            return Err(ScenarioError::Validation {
                field: "sweep.x",
                message: format!(
                    "{} needs x > 0 (Mandel Q undefined at x = {bad})",
                    which.name()
                ),
            }
            .into());
        }
    }

    let mut lines: Vec<String> = Vec::new();
    lines.push(format!(
        "# heraldsim {} schema {}",
        which.name(),
        SCHEMA_VERSION
    ));
    match which {
        Figure::Fig2 => {
            lines.push("x,t_over_t1,n_e,n_mm,n_pp".into());
            let ts = scenario.sweep.t_over_t1.values();
            let grid: Vec<(f64, f64)> = xs
                .iter()
                .flat_map(|&x| ts.iter().map(move |&t| (x, t)))
                .collect();
            let rows: Result<Vec<String>, FigureError> = grid
                .par_iter()
                .map(|&(x, t)| {
                    let (p1, p2) = figure_params(scenario, x);
                    let mean = |state| -> Result<f64, FigureError> {
                        Ok(counting::mean_general(state, &p1, &p2, t, &model)?)
                    };
                    Ok(format!(
                        "{},{},{},{},{}",
                        fmt(x),
                        fmt(t),
                        fmt(mean(JointSpinState::PM)?),
                        fmt(mean(JointSpinState::MM)?),
                        fmt(mean(JointSpinState::PP)?),
                    ))
                })
                .collect();
            lines.extend(rows?);
        }
        Figure::Fig3 => {
            lines.push("x,n_e,sd_e,n_mm,sd_mm,ratio_mm_over_e".into());
            let rows: Result<Vec<String>, FigureError> = xs
                .par_iter()
                .map(|&x| {
                    let (p1, p2) = figure_params(scenario, x);
                    let e = counting::counting_stats(
                        JointSpinState::PM,
                        &p1,
                        &p2,
                        FIG_T_OVER_T1,
                        &model,
                    )?;
                    let mm = counting::counting_stats(
                        JointSpinState::MM,
                        &p1,
                        &p2,
                        FIG_T_OVER_T1,
                        &model,
                    )?;
                    Ok(format!(
                        "{},{},{},{},{},{}",
                        fmt(x),
                        fmt(e.mean),
                        fmt(e.sd()),
                        fmt(mm.mean),
                        fmt(mm.sd()),
                        fmt(mm.mean / e.mean),
                    ))
                })
                .collect();
            lines.extend(rows?);
        }
        Figure::Fig4 => {
            lines.push("x,dn_e,poisson_e,q_e,dn_mm,poisson_mm,q_mm".into());
            let rows: Result<Vec<String>, FigureError> = xs
                .par_iter()
                .map(|&x| {
                    let (p1, p2) = figure_params(scenario, x);
                    let e = counting::counting_stats(
                        JointSpinState::PM,
                        &p1,
                        &p2,
                        FIG_T_OVER_T1,
                        &model,
                    )?;
                    let mm = counting::counting_stats(
                        JointSpinState::MM,
                        &p1,
                        &p2,
                        FIG_T_OVER_T1,
                        &model,
                    )?;
                    Ok(format!(
                        "{},{},{},{},{},{},{}",
                        fmt(x),
                        fmt(e.sd()),
                        fmt(e.mean.sqrt()),
                        fmt(e.q.unwrap_or(f64::NAN)),
                        fmt(mm.sd()),
                        fmt(mm.mean.sqrt()),
                        fmt(mm.q.unwrap_or(f64::NAN)),
                    ))
                })
                .collect();
            lines.extend(rows?);
        }
    }

    let path = out_dir.join(format!("{}.csv", which.name()));
    let mut content = lines.join("\n");
    content.push('\n');
    write_atomic(&path, content.as_bytes())?;
    Ok(path)
}

fn figure_params(scenario: &Scenario, x: f64) -> (DriveParams, DriveParams) {
    (
        unit_efficiency(&scenario.qubit1, x),
        unit_efficiency(&scenario.qubit2(), x),
    )
}

/// Write via a temp file in the same directory, then rename into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), FigureError> {
    let io_err = |source: std::io::Error| FigureError::Io {
        path: path.display().to_string(),
        source,
    };
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(io_err)?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out"),
        std::process::id()
    ));
    {
        let mut f = std::fs::File::create(&tmp).map_err(io_err)?;
        f.write_all(bytes).map_err(io_err)?;
        f.sync_all().map_err(io_err)?;
    }
    std::fs::rename(&tmp, path).map_err(io_err)?;
    Ok(())
}
