//! Propagate the laser and the fluorescence through the beam-splitter
//! network: the detector port is laser-dark with fluorescence amplitudes of
//! magnitude 1/2, and removing a phase shifter breaks the cancellation.
//!
//! ```bash
//! cargo run --release -p heraldsim --example detector_network
//! ```

use heraldsim::network::{analyze, build_network, ModeNetwork};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = ModeNetwork::canonical();
    let analysis = analyze(&config)?;
    println!(
        "qubit drive amplitudes: |L1| = {:.4}, |L2| = {:.4}",
        analysis.drive.0.norm(),
        analysis.drive.1.norm()
    );
    println!("laser at detector port: {:.3e}", analysis.laser_at_d.norm());
    println!(
        "laser at bright port:   {:.6}",
        analysis.laser_at_bright.norm()
    );
    println!(
        "fluorescence to detector: c1 = {:.4}{:+.4}i, c2 = {:.4}{:+.4}i",
        analysis.fluor_at_d.0.re,
        analysis.fluor_at_d.0.im,
        analysis.fluor_at_d.1.re,
        analysis.fluor_at_d.1.im,
    );
    println!(
        "spare-port (b2) amplitudes: {:+.4}{:+.4}i vs {:+.4}{:+.4}i  (pi out of phase)",
        analysis.fluor_at_b2.0.re,
        analysis.fluor_at_b2.0.im,
        analysis.fluor_at_b2.1.re,
        analysis.fluor_at_b2.1.im,
    );

    let model = build_network(&config)?;
    println!(
        "detection model: amp = ({:.3}, {:.3})",
        model.amp.0.re, model.amp.1.re
    );

    let mut broken = ModeNetwork::canonical();
    broken.phase_c = 0.0;
    match build_network(&broken) {
        Err(e) => println!("without the c-arm shifter: {e}"),
        Ok(_) => println!("unexpected: broken network still cancels"),
    }
    Ok(())
}
