//! Mode-amplitude algebra of the beam-splitter network that routes the drive
//! laser to the two qubits and the scattered fluorescence to the detector.
//!
//! The layout is a folded Mach-Zehnder: BS-1 splits the laser into a
//! reference arm (`c`, with a pi/2 phase shifter, crossed twice because the
//! arm is mirror-ended) and a qubit arm that BS-2 further splits into the two
//! qubit waveguides (`a1` carries the second pi/2 shifter). All arms are
//! mirror-ended, so every mode retraces its path and recombines. One output
//! port of BS-1 then interferes the returning laser destructively: that dark
//! port is the detector mode `d` and carries fluorescence only. With balanced
//! splitters each qubit's fluorescence reaches `d` with amplitude magnitude
//! 1/2, and the two returning fluorescence fields enter the unused BS-2 port
//! (`b2`) antisymmetrically.
//!
//! Absolute optical phases are not observable here; the contractual facts are
//! laser cancellation at `d` and the detector-mode coefficient magnitudes.
//! Detector coefficients are reported in the gauge where each atom is driven
//! with a real positive Rabi amplitude and a global phase making the first
//! coefficient real.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::counting::JointSpinState;

const UNITARITY_TOL: f64 = 1e-12;
const LEAKAGE_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("splitter transform is not unitary (deviation {deviation:.3e})")]
    NonUnitarySplitter { deviation: f64 },
    #[error("laser does not cancel at the detector port (amplitude {amplitude:.3e}); wrong phase convention")]
    LaserLeakage { amplitude: f64 },
    #[error("network element phases must be finite")]
    NonFinitePhase,
}

/// A 2x2 unitary amplitude transform of one beam splitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitterTransform(pub [[C64; 2]; 2]);

impl SplitterTransform {
    /// Balanced 50/50 splitter with the `i`-on-reflection convention.
    pub fn balanced() -> Self {
        Self::from_angle(std::f64::consts::FRAC_PI_4)
    }

    /// Splitter with transmission `cos(theta)` and reflection `i sin(theta)`.
    pub fn from_angle(theta: f64) -> Self {
        let t = C64::from(theta.cos());
        let r = C64::new(0.0, theta.sin());
        Self([[t, r], [r, t]])
    }

    /// Checked constructor for an arbitrary transform.
    pub fn from_matrix(m: [[C64; 2]; 2]) -> Result<Self, NetworkError> {
        let s = Self(m);
        s.check_unitary()?;
        Ok(s)
    }

    /// Deviation of the columns from orthonormality.
    pub fn unitarity_deviation(&self) -> f64 {
        let m = &self.0;
        let c0 = m[0][0].norm_sqr() + m[1][0].norm_sqr();
        let c1 = m[0][1].norm_sqr() + m[1][1].norm_sqr();
        let cross = m[0][0].conj() * m[0][1] + m[1][0].conj() * m[1][1];
        (c0 - 1.0).abs().max((c1 - 1.0).abs()).max(cross.norm())
    }

    pub fn check_unitary(&self) -> Result<(), NetworkError> {
        let deviation = self.unitarity_deviation();
        if deviation > UNITARITY_TOL {
            return Err(NetworkError::NonUnitarySplitter { deviation });
        }
        Ok(())
    }

    /// Forward pass, left-side inputs to right-side outputs.
    fn forward(&self, input: [C64; 2]) -> [C64; 2] {
        let m = &self.0;
        [
            m[0][0] * input[0] + m[0][1] * input[1],
            m[1][0] * input[0] + m[1][1] * input[1],
        ]
    }

    /// Backward pass; by reciprocity the reverse scattering matrix is the
    /// transpose.
    fn backward(&self, input: [C64; 2]) -> [C64; 2] {
        let m = &self.0;
        [
            m[0][0] * input[0] + m[1][0] * input[1],
            m[0][1] * input[0] + m[1][1] * input[1],
        ]
    }
}

/// Element parameters of the Fig.-style network; the wiring itself (BS-1 to
/// BS-2 to the mirror-ended qubit arms and back) is fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeNetwork {
    pub bs1: SplitterTransform,
    pub bs2: SplitterTransform,
    /// Phase per pass of the shifter in the `a1` arm (crossed twice).
    pub phase_a1: f64,
    /// Phase per pass of the shifter in the `c` arm (crossed twice).
    pub phase_c: f64,
    /// Reflection phase of the arm-end mirrors.
    pub mirror_phase: f64,
}

impl ModeNetwork {
    /// The canonical dark-port configuration: balanced splitters, pi/2 shifters in the
    /// `a1` and `c` arms, pi mirrors.
    pub fn canonical() -> Self {
        Self {
            bs1: SplitterTransform::balanced(),
            bs2: SplitterTransform::balanced(),
            phase_a1: std::f64::consts::FRAC_PI_2,
            phase_c: std::f64::consts::FRAC_PI_2,
            mirror_phase: std::f64::consts::PI,
        }
    }

    fn validate(&self) -> Result<(), NetworkError> {
        self.bs1.check_unitary()?;
        self.bs2.check_unitary()?;
        if !(self.phase_a1.is_finite() && self.phase_c.is_finite() && self.mirror_phase.is_finite())
        {
            return Err(NetworkError::NonFinitePhase);
        }
        Ok(())
    }
}

impl Default for ModeNetwork {
    fn default() -> Self {
        Self::canonical()
    }
}

/// Per-qubit detector-mode coefficients and the residual laser amplitude.
///
/// The detector-mode field operator is
/// `D = amp.0 * sigma_{1,-} + amp.1 * sigma_{2,-}` in the gauge described in
/// the module docs; `rate_prefactor` is the detection rate per unit excited
/// population in reference units (efficiency one, unit relaxation time) and
/// is rescaled per qubit by the counting module.
#[derive(Debug, Clone, Copy)]
pub struct DetectionModel {
    pub amp: (C64, C64),
    pub rate_prefactor: f64,
    pub laser_amp_at_d: C64,
}

impl DetectionModel {
    /// Detection rate prefactor for one qubit, `efficiency / t1`.
    pub fn rate_for(&self, params: &crate::dynamics::DriveParams) -> f64 {
        self.rate_prefactor * params.efficiency / params.t1
    }
}

/// Full amplitude bookkeeping of one unit-amplitude laser pass plus the
/// per-qubit fluorescence transfer coefficients; used by [`build_network`]
/// and by tests of the interference structure.
#[derive(Debug, Clone, Copy)]
pub struct NetworkAnalysis {
    /// Laser amplitude arriving at each qubit.
    pub drive: (C64, C64),
    /// Laser amplitude at the dark (detector) port.
    pub laser_at_d: C64,
    /// Laser amplitude at the bright output port of BS-1.
    pub laser_at_bright: C64,
    /// Laser amplitude leaving through the spare BS-2 port.
    pub laser_at_b2: C64,
    /// Drive-phase-gauged fluorescence amplitudes reaching the detector port.
    pub fluor_at_d: (C64, C64),
    /// Same for the bright port and the spare BS-2 port.
    pub fluor_at_bright: (C64, C64),
    pub fluor_at_b2: (C64, C64),
    /// Gauged fluorescence amplitudes in the `b1` mode before BS-1.
    pub fluor_at_b1: (C64, C64),
}

impl NetworkAnalysis {
    /// Sum of terminal laser intensities; equals the input intensity for a
    /// unitary network.
    pub fn laser_intensity_out(&self) -> f64 {
        self.laser_at_d.norm_sqr() + self.laser_at_bright.norm_sqr() + self.laser_at_b2.norm_sqr()
    }

    /// Total routed intensity of one qubit's fluorescence across terminals.
    pub fn fluor_intensity_out(&self, qubit: usize) -> f64 {
        let pick = |pair: (C64, C64)| if qubit == 0 { pair.0 } else { pair.1 };
        pick(self.fluor_at_d).norm_sqr()
            + pick(self.fluor_at_bright).norm_sqr()
            + pick(self.fluor_at_b2).norm_sqr()
    }
}

/// Propagate a unit laser amplitude and unit fluorescence sources through the
/// network.
pub fn analyze(config: &ModeNetwork) -> Result<NetworkAnalysis, NetworkError> {
    config.validate()?;
    let shift_a1 = C64::from_polar(1.0, config.phase_a1);
    let shift_c = C64::from_polar(1.0, config.phase_c);
    let mirror = C64::from_polar(1.0, config.mirror_phase);

    // Forward pass, unit laser into BS-1.
    let [arm_a, arm_c] = config.bs1.forward([C64::from(1.0), C64::from(0.0)]);
    let [bs2_a1, bs2_a2] = config.bs2.forward([arm_a, C64::from(0.0)]);
    let drive1 = shift_a1 * bs2_a1;
    let drive2 = bs2_a2;

    // Return pass of the laser: mirror at each arm end, shifters crossed a
    // second time.
    let a1_ret = shift_a1 * mirror * drive1;
    let a2_ret = mirror * drive2;
    let [b1_laser, b2_laser] = config.bs2.backward([a1_ret, a2_ret]);
    let c_ret = shift_c * mirror * shift_c * arm_c;
    // The dark output of BS-1 sits on the laser-input side of the folded
    // interferometer (separated by a circulator in practice).
    let [d_laser, bright_laser] = config.bs1.backward([b1_laser, c_ret]);

    // Fluorescence transfer: a unit source amplitude leaving qubit s toward
    // BS-2, times the drive-phase gauge factor of that qubit.
    let gauge1 = phase_unit(drive1);
    let gauge2 = phase_unit(drive2);
    let [b1_f1, b2_f1] = config.bs2.backward([shift_a1, C64::from(0.0)]);
    let [b1_f2, b2_f2] = config.bs2.backward([C64::from(0.0), C64::from(1.0)]);
    let [d_f1, bright_f1] = config.bs1.backward([b1_f1, C64::from(0.0)]);
    let [d_f2, bright_f2] = config.bs1.backward([b1_f2, C64::from(0.0)]);

    Ok(NetworkAnalysis {
        drive: (drive1, drive2),
        laser_at_d: d_laser,
        laser_at_bright: bright_laser,
        laser_at_b2: b2_laser,
        fluor_at_d: (gauge1 * d_f1, gauge2 * d_f2),
        fluor_at_bright: (gauge1 * bright_f1, gauge2 * bright_f2),
        fluor_at_b2: (gauge1 * b2_f1, gauge2 * b2_f2),
        fluor_at_b1: (gauge1 * b1_f1, gauge2 * b1_f2),
    })
}

fn phase_unit(z: C64) -> C64 {
    if z.norm() < 1e-15 {
        C64::from(1.0)
    } else {
        z / z.norm()
    }
}

/// Build the detection model for mode `d`, asserting laser cancellation.
///
/// For the canonical configuration the result is `amp = (1/2, 1/2)` after the
/// global phase normalization.
pub fn build_network(config: &ModeNetwork) -> Result<DetectionModel, NetworkError> {
    let analysis = analyze(config)?;
    let amplitude = analysis.laser_at_d.norm();
    if amplitude > LEAKAGE_TOL {
        return Err(NetworkError::LaserLeakage { amplitude });
    }
    let (c1, c2) = analysis.fluor_at_d;
    let global = if c1.norm() > 1e-15 {
        phase_unit(c1)
    } else {
        phase_unit(c2)
    };
    let normalize = global.conj();
    Ok(DetectionModel {
        amp: (c1 * normalize, c2 * normalize),
        rate_prefactor: 1.0,
        laser_amp_at_d: analysis.laser_at_d,
    })
}

/// Which qubits fluoresce in a given joint spin state: a qubit participates
/// iff it is in the optically coupled spin-down state.
pub fn state_participation(state: JointSpinState) -> (bool, bool) {
    match state {
        JointSpinState::PP => (false, false),
        JointSpinState::PM => (false, true),
        JointSpinState::MP => (true, false),
        JointSpinState::MM => (true, true),
    }
}
