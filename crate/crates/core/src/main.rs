//! Thin command-line front end: load a scenario, optionally emit one figure
//! CSV, otherwise run the full pipeline and write `report.json`.
//!
//! Exit codes: 0 success, 1 validation/parse error, 2 cross-check failure,
//! 3 i/o failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use heraldsim::figures::{run_figure, Figure};
use heraldsim::protocol::ClassifyMethodTag;
use heraldsim::report::{self, RunError};
use heraldsim::scenario::Scenario;

#[derive(Parser, Debug)]
#[command(
    name = "heraldsim",
    version,
    about = "Fluorescence-heralded entanglement simulator"
)]
struct Cli {
    /// Scenario file (TOML; `.json` accepted). Defaults are used if absent.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Emit one figure CSV (fig2, fig3 or fig4) instead of the full report.
    #[arg(long)]
    figure: Option<Figure>,
    /// Output directory for CSV / JSON files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the trajectory RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the trajectory ensemble size.
    #[arg(long, value_name = "N")]
    n_traj: Option<usize>,
    /// Override the classification method (gaussian, poisson, empirical).
    #[arg(long)]
    method: Option<ClassifyMethodTag>,
    /// Override the heralding operating point eta*t/t1.
    #[arg(long)]
    kappa: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if let RunError::CrossCheck { report, .. } = &err {
                for item in report.cross_checks.items.iter().filter(|i| !i.pass) {
                    eprintln!(
                        "  {}: expected {:.6e}, got {:.6e} (tolerance {:.2e})",
                        item.name, item.expected, item.actual, item.tolerance
                    );
                }
            }
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), RunError> {
    let mut scenario = match &cli.scenario {
        Some(path) => Scenario::from_path(path)?,
        None => Scenario::default(),
    };
    if let Some(seed) = cli.seed {
        scenario.trajectories.seed = seed;
    }
    if let Some(n) = cli.n_traj {
        scenario.trajectories.n_traj = n;
    }
    if let Some(method) = cli.method {
        scenario.protocol.method = method;
    }
    if let Some(kappa) = cli.kappa {
        scenario.protocol.kappa = kappa;
    }

    if let Some(figure) = cli.figure {
        let path = run_figure(figure, &scenario, &cli.out)?;
        println!("wrote {}", path.display());
        return Ok(());
    }

    match report::run_scenario(&scenario) {
        Ok(r) => {
            let path = report::write_report(&r, &cli.out)?;
            print_summary(&r);
            println!("wrote {}", path.display());
            Ok(())
        }
        Err(RunError::CrossCheck {
            failed,
            total,
            report: r,
        }) => {
            // Still persist the report so the diff is machine-readable.
            let _ = report::write_report(&r, &cli.out);
            Err(RunError::CrossCheck {
                failed,
                total,
                report: r,
            })
        }
        Err(e) => Err(e),
    }
}

fn print_summary(r: &heraldsim::report::ScenarioReport) {
    println!(
        "counting at t/t1 = {} (x1 = {}, eta = {}):",
        r.parameters.t_reference, r.parameters.qubit1.rabi, r.parameters.eta_mean
    );
    for c in &r.counting {
        match c.q {
            Some(q) => println!(
                "  {}: mean {:.4}, sd {:.4}, Q {:+.4}",
                c.state,
                c.mean,
                c.sd(),
                q
            ),
            None => println!("  {}: mean {:.4}", c.state, c.mean),
        }
    }
    match (&r.classification, &r.classification_error) {
        (Some(c), _) => println!(
            "herald window ({:.1}, {:.1}]: confidence {:.4}, p_success {:.4}",
            c.threshold_low, c.threshold, c.confidence, c.p_success
        ),
        (None, Some(reason)) => println!("classification unavailable: {reason}"),
        _ => {}
    }
    if let Some(ent) = &r.entanglement {
        println!(
            "avg entanglement time: {:.3e} t1 = {:.4} ms ({:.2}x coherence time)",
            ent.avg_time_over_t1, ent.avg_time_ms, ent.ratio_to_coherence
        );
    }
    println!(
        "cross-checks: {}",
        if r.cross_checks.all_pass {
            "all pass"
        } else {
            "FAILED"
        }
    );
}
