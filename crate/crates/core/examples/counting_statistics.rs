//! State-conditioned counting statistics at the detector: closed-form
//! long-time means next to the general-time integrals, with variances and
//! Mandel Q.
//!
//! ```bash
//! cargo run --release -p heraldsim --example counting_statistics
//! ```

use heraldsim::counting::{counting_stats, mean_longtime, JointSpinState};
use heraldsim::dynamics::DriveParams;
use heraldsim::network::{build_network, ModeNetwork};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let x = 3.0;
    let t = 1000.0;
    let params = DriveParams::new(x, 1.0, 1.0)?;
    let model = build_network(&ModeNetwork::canonical())?;

    println!("x = {x}, eta = 1, t/t1 = {t}");
    println!(
        "{:>6} {:>12} {:>12} {:>10} {:>9}",
        "state", "closed form", "general", "sd", "Q"
    );
    for state in JointSpinState::ALL {
        let closed = mean_longtime(state, x, 1.0, t)?;
        let stats = counting_stats(state, &params, &params, t, &model)?;
        match stats.q {
            Some(q) => println!(
                "{:>6} {:>12.3} {:>12.3} {:>10.3} {:>+9.4}",
                state.to_string(),
                closed,
                stats.mean,
                stats.sd(),
                q
            ),
            None => println!(
                "{:>6} {:>12.3} {:>12.3} {:>10.3} {:>9}",
                state.to_string(),
                closed,
                stats.mean,
                stats.sd(),
                "-"
            ),
        }
    }
    let ratio = mean_longtime(JointSpinState::MM, x, 1.0, t)?
        / mean_longtime(JointSpinState::PM, x, 1.0, t)?;
    println!(
        "ratio --/E = {ratio:.4} (4(1+x^2)/(1+2x^2) = {:.4})",
        4.0 * (1.0 + x * x) / (1.0 + 2.0 * x * x)
    );
    Ok(())
}
