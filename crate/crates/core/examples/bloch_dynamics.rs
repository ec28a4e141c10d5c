//! Solve the driven two-level dynamics from the ground state and compare the
//! long-time populations with the stationary closed form.
//!
//! ```bash
//! cargo run --release -p heraldsim --example bloch_dynamics
//! ```

use heraldsim::dynamics::{evolve_bloch, steady_state, BlochState, DriveParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid: Vec<f64> = (0..=60).map(|k| k as f64 * 0.25).collect();
    for x in [0.5, 1.0, 3.0] {
        let params = DriveParams::new(x, 1.0, 1.0)?;
        let states = evolve_bloch(&params, &BlochState::ground(), &grid)?;
        let ss = steady_state(&params)?;
        println!(
            "x = {x}: steady p_e = {:.6}, |coh| = {:.6}",
            ss.p_e,
            ss.coh.norm()
        );
        for (t, s) in grid.iter().zip(&states).step_by(12) {
            println!(
                "  t = {t:5.2}  p_e = {:.6}  coh = {:+.4}{:+.4}i",
                s.p_e, s.coh.re, s.coh.im
            );
        }
        let last = states.last().unwrap();
        println!(
            "  t = {:5.1}  p_e = {:.6}  (steady to {:.1e})\n",
            grid.last().unwrap(),
            last.p_e,
            (last.p_e - ss.p_e).abs()
        );
    }
    Ok(())
}
