//! Average entanglement times for the shipped experimental presets at the
//! default operating point.
//!
//! ```bash
//! cargo run --release -p heraldsim --example entanglement_time
//! ```

use heraldsim::protocol::{avg_entanglement_time, ExperimentPreset};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let kappa = 130.0;
    for name in ExperimentPreset::builtin_names() {
        let preset = ExperimentPreset::builtin(name)?;
        let t = avg_entanglement_time(&preset, kappa)?;
        println!(
            "{name} (t1 = {:.2e} s, eta = {:.2e}):",
            preset.t1_seconds,
            preset.eta()
        );
        println!(
            "  half-cycle tau = {:.3e} t1, attempt = {:.3e} t1",
            t.tau_over_t1, t.attempt_over_t1
        );
        if t.avg_time_seconds >= 1e-3 {
            println!(
                "  average entanglement time = {:.3e} t1 = {:.3} ms",
                t.avg_time_over_t1, t.avg_time_ms
            );
        } else {
            println!(
                "  average entanglement time = {:.3e} t1 = {:.3} us",
                t.avg_time_over_t1, t.avg_time_us
            );
        }
        println!(
            "  fraction of the coherence time: {:.3}\n",
            t.ratio_to_coherence
        );
    }
    Ok(())
}
