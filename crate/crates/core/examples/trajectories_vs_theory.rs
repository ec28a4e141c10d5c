//! Quantum-jump oracle against the deterministic pipeline: ensemble mean,
//! variance and Mandel Q with bootstrap errors next to the regression-theorem
//! values.
//!
//! ```bash
//! cargo run --release -p heraldsim --example trajectories_vs_theory
//! ```

use heraldsim::counting::{counting_stats, JointSpinState};
use heraldsim::dynamics::DriveParams;
use heraldsim::network::{build_network, ModeNetwork};
use heraldsim::trajectories::{empirical_distribution, simulate};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = DriveParams::new(2.0, 1.0, 1.0)?;
    let model = build_network(&ModeNetwork::canonical())?;
    let (t, n_traj, seed) = (120.0, 20_000, 3);

    for state in [JointSpinState::PM, JointSpinState::MM] {
        let det = counting_stats(state, &params, &params, t, &model)?;
        let ens = simulate(state, &params, &params, t, n_traj, seed)?;
        let dist = empirical_distribution(&ens);
        println!("state {state} at x = 2, t/t1 = {t}, {n_traj} trajectories:");
        println!(
            "  mean:     {:.3} +- {:.3}   theory {:.3}",
            dist.mean, dist.se_mean, det.mean
        );
        println!(
            "  variance: {:.3} +- {:.3}   theory {:.3}",
            dist.variance, dist.se_variance, det.variance
        );
        println!(
            "  Q:        {:+.4} +- {:.4}  theory {:+.4}",
            dist.q.unwrap(),
            dist.se_q,
            det.q.unwrap()
        );
        let z = (dist.mean - det.mean) / dist.se_mean;
        println!("  mean deviation: {z:+.2} standard errors\n");
    }
    Ok(())
}
