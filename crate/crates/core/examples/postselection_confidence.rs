//! Heralding confidence of the postselection window at the default
//! operating point, by the Gaussian and Poisson methods, plus the search for
//! the smallest operating point reaching a target confidence.
//!
//! ```bash
//! cargo run --release -p heraldsim --example postselection_confidence
//! ```

use heraldsim::counting::{counting_stats, JointSpinState};
use heraldsim::dynamics::DriveParams;
use heraldsim::network::{build_network, ModeNetwork};
use heraldsim::protocol::{classify, ideal_success_probability, kappa_search, ClassifyMethod};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let x = 3.0;
    let kappa = 130.0;
    let params = DriveParams::new(x, 1.0, 1.0)?;
    let model = build_network(&ModeNetwork::canonical())?;
    let stats = |s| counting_stats(s, &params, &params, kappa, &model);
    let (e, mm, pp) = (
        stats(JointSpinState::PM)?,
        stats(JointSpinState::MM)?,
        stats(JointSpinState::PP)?,
    );
    println!(
        "x = {x}, eta*t/t1 = {kappa}: n_E = {:.2}, n_-- = {:.2}",
        e.mean, mm.mean
    );

    for method in [ClassifyMethod::Gaussian, ClassifyMethod::Poisson] {
        let r = classify(&e, &mm, &pp, method)?;
        println!(
            "{:?}: window ({:.1}, {:.1}], confidence {:.4} (PP-inclusive {:.4}), p_success {:.4}",
            r.method,
            r.threshold_low,
            r.threshold,
            r.confidence,
            r.confidence_pp_inclusive,
            r.p_success
        );
    }
    println!("ideal success probability: {}", ideal_success_probability());

    for target in [0.90, 0.95, 0.99] {
        let k = kappa_search(x, target)?;
        println!("smallest eta*t/t1 for {target:.0}% confidence at x = {x}: {k:.0}");
    }
    Ok(())
}
