//! Empirical count distributions of the three distinguishable outcomes at
//! the heralding time, as an ASCII histogram with the postselection window.
//!
//! ```bash
//! cargo run --release -p heraldsim --example counting_histogram
//! ```

use heraldsim::counting::{counting_stats, JointSpinState};
use heraldsim::dynamics::DriveParams;
use heraldsim::network::{build_network, ModeNetwork};
use heraldsim::protocol::{classify, ClassifyMethod};
use heraldsim::trajectories::{empirical_distribution_with, simulate};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = DriveParams::new(3.0, 1.0, 1.0)?;
    let model = build_network(&ModeNetwork::canonical())?;
    let (t, n_traj) = (130.0, 30_000);

    let e_ens = simulate(JointSpinState::PM, &params, &params, t, n_traj, 5)?;
    let mm_ens = simulate(JointSpinState::MM, &params, &params, t, n_traj, 6)?;
    let e = empirical_distribution_with(&e_ens, 200);
    let mm = empirical_distribution_with(&mm_ens, 200);

    let stats = |s| counting_stats(s, &params, &params, t, &model);
    let r = classify(
        &stats(JointSpinState::PM)?,
        &stats(JointSpinState::MM)?,
        &stats(JointSpinState::PP)?,
        ClassifyMethod::Empirical { e: &e, mm: &mm },
    )?;

    let max_count = mm.probabilities.len().max(e.probabilities.len());
    println!(
        "count  E-branch            --branch   (window ends at {:.1})",
        r.threshold
    );
    for c in 0..max_count {
        let pe = e.probabilities.get(c).copied().unwrap_or(0.0);
        let pm = mm.probabilities.get(c).copied().unwrap_or(0.0);
        if pe < 2e-3 && pm < 2e-3 {
            continue;
        }
        let bar = |p: f64| "#".repeat((p * 220.0).round() as usize);
        let marker = if (c as f64) < r.threshold { " " } else { "|" };
        println!("{c:>5} {marker} {:<18} {:<18}", bar(pe), bar(pm));
    }
    println!(
        "\nempirical confidence {:.4}, p_success {:.4}",
        r.confidence, r.p_success
    );
    Ok(())
}
