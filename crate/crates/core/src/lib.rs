//! Simulation and analysis toolkit for fluorescence-heralded entanglement of
//! two distant qubits.
//!
//! Two driven two-level emitters sit in the arms of a folded Mach-Zehnder
//! interferometer whose dark port sees only scattered fluorescence. The
//! detected photon number then depends strongly on the joint spin state,
//! which lets a photon-count window herald the entangled odd-parity branch.
//! This crate computes the state-conditioned counting statistics and the
//! protocol-level figures of merit:
//!
//! - [`dynamics`]: resonant optical Bloch equations with an exact propagator,
//!   plus one- and two-time dipole correlators via the quantum regression
//!   theorem;
//! - [`network`]: the beam-splitter network, laser cancellation at the
//!   detector port, and the detector-mode amplitudes;
//! - [`counting`]: state-conditioned mean counts, variances and Mandel Q at
//!   the detector;
//! - [`trajectories`]: an independent quantum-jump Monte Carlo oracle with a
//!   dedicated detector-port jump channel;
//! - [`protocol`]: postselection thresholds, heralding confidence, average
//!   entanglement times for experimental presets, and qubit-mismatch checks;
//! - [`scenario`], [`figures`], [`report`]: configuration files, CSV sweep
//!   outputs and JSON reports behind the `heraldsim` binary.
//!
//! All internal time is measured in units of the relaxation time of qubit 1
//! and drive strengths enter as the dimensionless product of Rabi frequency
//! and relaxation time.

pub mod counting;
pub mod dynamics;
pub mod figures;
mod linalg;
pub mod network;
pub mod protocol;
pub mod report;
pub mod scenario;
pub mod trajectories;

pub use counting::{CountingStats, JointSpinState};
pub use dynamics::{BlochState, DriveParams};
pub use network::{DetectionModel, ModeNetwork};
pub use protocol::{ClassificationReport, ExperimentPreset};
pub use scenario::Scenario;
pub use trajectories::TrajectoryEnsemble;
