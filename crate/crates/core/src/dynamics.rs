//! Resonant optical Bloch equations for a driven two-level transition and
//! the one- and two-time dipole correlators obtained from the quantum
//! regression theorem.
//!
//! The drive is on resonance, so in the rotating frame the density matrix
//! obeys a linear equation with constant coefficients. We use the exact
//! propagator of that equation (closed form, see [`propagator`]) rather than
//! step-wise integration; this makes two-time kernels cheap enough that the
//! double time integrals in the counting module stay O(N). A fixed-step RK4
//! integrator is retained as an independent cross-check path.
//!
//! Conventions: time is measured in the units of `DriveParams::t1`, the drive
//! strength is the dimensionless `x` = Rabi frequency times relaxation time,
//! and the coherence stored in [`BlochState`] is the expectation value of the
//! lowering operator for the Hamiltonian `H = (x/2) (sigma_+ + sigma_-)`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, sinch, Mat4, Vec4, ONE, ZERO};

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("invalid drive parameters: {0}")]
    InvalidParams(String),
    #[error("invalid Bloch state: {0}")]
    InvalidState(String),
    #[error("time grid must start at 0 and be strictly ascending")]
    NonAscendingGrid,
    #[error("correlator times must satisfy 0 <= t1 <= t2 (got t1={t1}, t2={t2})")]
    TimeOrdering { t1: f64, t2: f64 },
}

/// Parameters of one driven transition.
///
/// `rabi` is the dimensionless product of Rabi frequency and relaxation time,
/// `t1` the relaxation time in whatever unit the caller adopts (usually 1),
/// `efficiency` the combined collection and detection efficiency, and
/// `background_rate` an optional extraneous-count rate in counts per unit
/// time (so counts per `t1` when `t1 == 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    pub rabi: f64,
    pub t1: f64,
    pub efficiency: f64,
    #[serde(default)]
    pub background_rate: f64,
}

impl DriveParams {
    pub fn new(rabi: f64, t1: f64, efficiency: f64) -> Result<Self, DynamicsError> {
        let params = Self {
            rabi,
            t1,
            efficiency,
            background_rate: 0.0,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_background(mut self, rate: f64) -> Result<Self, DynamicsError> {
        self.background_rate = rate;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.t1 > 0.0) {
            return Err(DynamicsError::InvalidParams(format!(
                "t1 must be > 0, got {}",
                self.t1
            )));
        }
        if !(self.rabi >= 0.0) {
            return Err(DynamicsError::InvalidParams(format!(
                "rabi must be >= 0, got {}",
                self.rabi
            )));
        }
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(DynamicsError::InvalidParams(format!(
                "efficiency must lie in [0, 1], got {}",
                self.efficiency
            )));
        }
        if !(self.background_rate >= 0.0) {
            return Err(DynamicsError::InvalidParams(format!(
                "background_rate must be >= 0, got {}",
                self.background_rate
            )));
        }
        Ok(())
    }
}

/// Excited-state population and optical coherence of one transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochState {
    pub p_e: f64,
    pub coh: C64,
}

impl BlochState {
    /// Ground state: no excitation, no dipole.
    pub fn ground() -> Self {
        Self {
            p_e: 0.0,
            coh: ZERO,
        }
    }

    /// Checked constructor enforcing positivity of the 2x2 density matrix.
    pub fn new(p_e: f64, coh: C64) -> Result<Self, DynamicsError> {
        if !(0.0..=1.0).contains(&p_e) {
            return Err(DynamicsError::InvalidState(format!(
                "p_e must lie in [0, 1], got {p_e}"
            )));
        }
        if coh.norm_sqr() > p_e * (1.0 - p_e) + 1e-12 {
            return Err(DynamicsError::InvalidState(format!(
                "|coh|^2 = {} exceeds p_e (1 - p_e) = {}",
                coh.norm_sqr(),
                p_e * (1.0 - p_e)
            )));
        }
        Ok(Self { p_e, coh })
    }

    pub(crate) fn to_vec(self) -> Vec4 {
        [
            C64::from(self.p_e),
            self.coh,
            self.coh.conj(),
            C64::from(1.0 - self.p_e),
        ]
    }

    pub(crate) fn from_vec(v: &Vec4) -> Self {
        Self {
            p_e: v[0].re,
            coh: v[1],
        }
    }
}

/// Density-matrix component order used throughout: `(ee, eg, ge, gg)`, with
/// the coherence `eg` equal to the expectation value of the lowering
/// operator.
pub(crate) mod rows {
    use super::{Vec4, ONE, ZERO};
    /// Readout of the excited population, `Tr[sigma_+ sigma_- m] = m_ee`.
    pub const POP: Vec4 = [ONE, ZERO, ZERO, ZERO];
    /// Readout of the lowering operator, `Tr[sigma_- m] = m_eg`.
    pub const LOWER: Vec4 = [ZERO, ONE, ZERO, ZERO];
    /// Readout of the raising operator, `Tr[sigma_+ m] = m_ge`.
    pub const RAISE: Vec4 = [ZERO, ZERO, ONE, ZERO];
}

/// Left/right operator insertions used by the regression theorem, acting on
/// the vectorized density matrix.
pub(crate) mod insert {
    use super::{Vec4, ZERO};
    /// `m -> m sigma_+`.
    pub fn rho_sigma_plus(v: &Vec4) -> Vec4 {
        [ZERO, v[0], ZERO, v[2]]
    }
    /// `m -> sigma_- m`.
    pub fn sigma_minus_rho(v: &Vec4) -> Vec4 {
        [ZERO, ZERO, v[0], v[1]]
    }
    /// `m -> sigma_- m sigma_+` (collapse to ground weighted by `m_ee`).
    pub fn collapse(v: &Vec4) -> Vec4 {
        [ZERO, ZERO, ZERO, v[0]]
    }
}

/// Exact propagator of the resonant Bloch equation for dimensionless drive
/// `x`, evaluated at a lag `tau` given in units of the relaxation time.
///
/// The generator block-diagonalizes in the variables
/// `(trace, eg + ge, ee - gg, eg - ge)`: the trace is conserved, the
/// symmetric coherence decays at rate 1/2, and the remaining 2x2 block has
/// eigenvalues `-3/4 +- sqrt(1/16 - x^2)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Propagator {
    x: f64,
}

impl Propagator {
    pub fn new(x: f64) -> Self {
        Self { x }
    }

    /// Apply the propagator to a vectorized 2x2 matrix. The input need not be
    /// Hermitian or trace one; the regression theorem feeds it operator
    /// insertions.
    pub fn apply(&self, tau: f64, v: &Vec4) -> Vec4 {
        let x = self.x;
        let t = C64::from(v[0] + v[3]); // conserved trace
        let u0 = v[1] + v[2];
        let w0 = v[0] - v[3];
        let q0 = v[1] - v[2];

        let denom = 1.0 + 2.0 * x * x;
        let w_star = -t / denom;
        let q_star = C64::new(0.0, -2.0 * x) * t / denom;

        let mu = C64::new(0.0625 - x * x, 0.0).sqrt();
        let z = mu * tau;
        let ch = z.cosh();
        let sh_over_mu = tau * sinch(z);
        let damp = (-0.75 * tau).exp();
        let e11 = damp * (ch - 0.25 * sh_over_mu);
        let e22 = damp * (ch + 0.25 * sh_over_mu);
        let e12 = damp * C64::new(0.0, x) * sh_over_mu;

        let dw = w0 - w_star;
        let dq = q0 - q_star;
        let w = w_star + e11 * dw + e12 * dq;
        let q = q_star + e12 * dw + e22 * dq;
        let u = u0 * (-0.5 * tau).exp();

        [(t + w) * 0.5, (u + q) * 0.5, (u - q) * 0.5, (t - w) * 0.5]
    }

    /// Materialize the propagator as a 4x4 matrix (columns are the images of
    /// the basis matrices).
    pub fn matrix(&self, tau: f64) -> Mat4 {
        let mut m = linalg::zero_mat4();
        for j in 0..4 {
            let mut e = linalg::zero_vec4();
            e[j] = ONE;
            let col = self.apply(tau, &e);
            for (i, c) in col.iter().enumerate() {
                m[i][j] = *c;
            }
        }
        m
    }
}

/// Vectorized state at time `t` (units of `t1`) for a qubit driven from the
/// ground state at `t = 0`.
pub(crate) fn rho_from_ground(x: f64, t_over_t1: f64) -> Vec4 {
    Propagator::new(x).apply(t_over_t1, &BlochState::ground().to_vec())
}

/// Solve the Bloch equation on the given time grid with the exact propagator.
///
/// The grid must start at 0 and be strictly ascending; times are in the same
/// units as `params.t1`.
pub fn evolve_bloch(
    params: &DriveParams,
    initial: &BlochState,
    t_grid: &[f64],
) -> Result<Vec<BlochState>, DynamicsError> {
    params.validate()?;
    validate_grid(t_grid)?;
    let prop = Propagator::new(params.rabi);
    let v0 = initial.to_vec();
    Ok(t_grid
        .iter()
        .map(|&t| BlochState::from_vec(&prop.apply(t / params.t1, &v0)))
        .collect())
}

/// Fixed-step RK4 integration of the same equation; cross-check path for the
/// exact propagator, not used by the counting pipeline.
pub fn evolve_bloch_rk4(
    params: &DriveParams,
    initial: &BlochState,
    t_grid: &[f64],
) -> Result<Vec<BlochState>, DynamicsError> {
    params.validate()?;
    validate_grid(t_grid)?;
    let x = params.rabi;
    let h_max = 2e-3 / x.max(1.0);
    let rhs = |v: &Vec4| -> Vec4 {
        let drive = C64::new(0.0, -0.5 * x);
        let pump = drive * (v[2] - v[1]);
        [
            pump - v[0],
            drive * (v[3] - v[0]) - 0.5 * v[1],
            -drive * (v[3] - v[0]) - 0.5 * v[2],
            -pump + v[0],
        ]
    };
    let mut v = initial.to_vec();
    let mut out = Vec::with_capacity(t_grid.len());
    let mut t_prev = 0.0;
    for &t in t_grid {
        let span = (t - t_prev) / params.t1;
        let n_steps = (span / h_max).ceil().max(1.0) as usize;
        let h = span / n_steps as f64;
        for _ in 0..n_steps {
            let k1 = rhs(&v);
            let k2 = rhs(&add_scaled(&v, &k1, 0.5 * h));
            let k3 = rhs(&add_scaled(&v, &k2, 0.5 * h));
            let k4 = rhs(&add_scaled(&v, &k3, h));
            for i in 0..4 {
                v[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (h / 6.0);
            }
        }
        t_prev = t;
        out.push(BlochState::from_vec(&v));
    }
    Ok(out)
}

fn add_scaled(v: &Vec4, dv: &Vec4, s: f64) -> Vec4 {
    [
        v[0] + dv[0] * s,
        v[1] + dv[1] * s,
        v[2] + dv[2] * s,
        v[3] + dv[3] * s,
    ]
}

fn validate_grid(t_grid: &[f64]) -> Result<(), DynamicsError> {
    if t_grid.is_empty() || t_grid[0] != 0.0 {
        return Err(DynamicsError::NonAscendingGrid);
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(DynamicsError::NonAscendingGrid);
    }
    Ok(())
}

/// Stationary state of the driven transition.
///
/// Closed forms: `p_e = x^2 / (1 + 2 x^2)` and
/// `coh = -i x / (1 + 2 x^2)` with `x = params.rabi`.
pub fn steady_state(params: &DriveParams) -> Result<BlochState, DynamicsError> {
    params.validate()?;
    let x = params.rabi;
    let denom = 1.0 + 2.0 * x * x;
    Ok(BlochState {
        p_e: x * x / denom,
        coh: C64::new(0.0, -x / denom),
    })
}

fn check_times(t1: f64, t2: f64) -> Result<(), DynamicsError> {
    if t1 < 0.0 || t2 < t1 {
        return Err(DynamicsError::TimeOrdering { t1, t2 });
    }
    Ok(())
}

/// First-order dipole correlator `< sigma_+(t1) sigma_-(t2) >` for a qubit
/// driven from the ground state at `t = 0`.
///
/// Equals the excited population at `t1 = t2` and converges to the
/// coherent-scattering plateau `|<sigma_->_ss|^2` at long lag.
pub fn correlator_ee(params: &DriveParams, t1: f64, t2: f64) -> Result<C64, DynamicsError> {
    params.validate()?;
    check_times(t1, t2)?;
    let prop = Propagator::new(params.rabi);
    let rho_t1 = rho_from_ground(params.rabi, t1 / params.t1);
    let seeded = insert::rho_sigma_plus(&rho_t1);
    let lagged = prop.apply((t2 - t1) / params.t1, &seeded);
    Ok(linalg::dot(&rows::LOWER, &lagged))
}

/// Intensity correlator `< sigma_+(t1) sigma_+(t2) sigma_-(t2) sigma_-(t1) >`.
///
/// By the regression theorem this is the population at `t1` times the
/// from-ground population a lag `t2 - t1` later, so it vanishes at zero lag.
pub fn correlator_g2(params: &DriveParams, t1: f64, t2: f64) -> Result<f64, DynamicsError> {
    params.validate()?;
    check_times(t1, t2)?;
    let prop = Propagator::new(params.rabi);
    let rho_t1 = rho_from_ground(params.rabi, t1 / params.t1);
    let collapsed = insert::collapse(&rho_t1);
    let lagged = prop.apply((t2 - t1) / params.t1, &collapsed);
    Ok(linalg::dot(&rows::POP, &lagged).re)
}

/// The single-atom two-time factors entering the cross-qubit terms of the
/// counting variance after factorization over independent atoms.
#[derive(Debug, Clone, Copy)]
pub struct MixedCorrelators {
    /// `< sigma_-(t1) >`
    pub lowering_t1: C64,
    /// `< sigma_-(t2) >`
    pub lowering_t2: C64,
    /// `< sigma_+(t1) sigma_-(t2) >`
    pub first_order: C64,
    /// `< sigma_+(t1) sigma_+(t2) >`
    pub raising_pair: C64,
    /// `< sigma_+(t2) sigma_-(t2) sigma_-(t1) >`
    pub pop_lowering: C64,
    /// `< sigma_+(t1) sigma_+(t2) sigma_-(t2) >`
    pub raising_pop: C64,
}

/// Evaluate all [`MixedCorrelators`] factors with one propagator.
///
/// Conjugation symmetry holds by construction:
/// `raising_pop == conj(pop_lowering)` up to roundoff.
pub fn mixed_correlators(
    params: &DriveParams,
    t1: f64,
    t2: f64,
) -> Result<MixedCorrelators, DynamicsError> {
    params.validate()?;
    check_times(t1, t2)?;
    let prop = Propagator::new(params.rabi);
    let lag = (t2 - t1) / params.t1;
    let rho_t1 = rho_from_ground(params.rabi, t1 / params.t1);
    let rho_t2 = prop.apply(lag, &rho_t1);

    let seeded_right = insert::rho_sigma_plus(&rho_t1);
    let lag_right = prop.apply(lag, &seeded_right);
    let seeded_left = insert::sigma_minus_rho(&rho_t1);
    let lag_left = prop.apply(lag, &seeded_left);

    Ok(MixedCorrelators {
        lowering_t1: linalg::dot(&rows::LOWER, &rho_t1),
        lowering_t2: linalg::dot(&rows::LOWER, &rho_t2),
        first_order: linalg::dot(&rows::LOWER, &lag_right),
        raising_pair: linalg::dot(&rows::RAISE, &lag_right),
        pop_lowering: linalg::dot(&rows::POP, &lag_left),
        raising_pop: linalg::dot(&rows::POP, &lag_right),
    })
}

/// Samples of a two-time correlator on a uniform grid, stored on the lower
/// triangle `t1 <= t2` only.
#[derive(Debug, Clone)]
pub struct CorrelationKernel {
    dt: f64,
    n_points: usize,
    values: Vec<C64>,
}

impl CorrelationKernel {
    /// Sample `f(t1, t2)` for all grid pairs with `t1 <= t2 <= t_max`.
    pub fn sample(f: impl Fn(f64, f64) -> C64, t_max: f64, dt: f64) -> Result<Self, DynamicsError> {
        if !(dt > 0.0) || !(t_max >= 0.0) {
            return Err(DynamicsError::InvalidParams(
                "kernel grid requires dt > 0 and t_max >= 0".into(),
            ));
        }
        let n_points = (t_max / dt).round() as usize + 1;
        let mut values = Vec::with_capacity(n_points * (n_points + 1) / 2);
        for j in 0..n_points {
            for i in 0..=j {
                values.push(f(i as f64 * dt, j as f64 * dt));
            }
        }
        Ok(Self {
            dt,
            n_points,
            values,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn t_max(&self) -> f64 {
        (self.n_points - 1) as f64 * self.dt
    }

    /// Value at grid indices `(i, j)` with `i <= j`; panics otherwise.
    pub fn get(&self, i: usize, j: usize) -> C64 {
        assert!(
            i <= j && j < self.n_points,
            "kernel indices must satisfy t1 <= t2"
        );
        self.values[j * (j + 1) / 2 + i]
    }
}

/// Dimensionless propagator matrix for external consumers (the counting
/// kernel machinery); `tau` in units of `t1`.
pub(crate) fn propagator_matrix(x: f64, tau: f64) -> Mat4 {
    Propagator::new(x).matrix(tau)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(x: f64) -> DriveParams {
        DriveParams::new(x, 1.0, 1.0).unwrap()
    }

    fn grid(t_max: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|k| t_max * k as f64 / n as f64).collect()
    }

    #[test]
    fn undriven_ground_state_is_stationary() {
        let states = evolve_bloch(&params(0.0), &BlochState::ground(), &grid(50.0, 100)).unwrap();
        for s in states {
            assert!(s.p_e.abs() < 1e-14);
            assert!(s.coh.norm() < 1e-14);
        }
    }

    #[test]
    fn long_time_population_matches_steady_state() {
        for &x in &[0.1, 1.0, 3.0, 10.0] {
            let p = params(x);
            let ss = steady_state(&p).unwrap();
            let states = evolve_bloch(&p, &BlochState::ground(), &[0.0, 200.0]).unwrap();
            let last = states.last().unwrap();
            assert!((last.p_e - ss.p_e).abs() < 1e-6, "x = {x}");
            assert!((last.coh - ss.coh).norm() < 1e-6, "x = {x}");
        }
        // x = 1 -> 1/3; x = 10 -> 100/201.
        assert!((steady_state(&params(1.0)).unwrap().p_e - 1.0 / 3.0).abs() < 1e-14);
        assert!((steady_state(&params(10.0)).unwrap().p_e - 100.0 / 201.0).abs() < 1e-14);
    }

    #[test]
    fn saturation_limit_is_one_half() {
        let states = evolve_bloch(&params(500.0), &BlochState::ground(), &[0.0, 300.0]).unwrap();
        assert!((states[1].p_e - 0.5).abs() < 1e-5);
    }

    #[test]
    fn rk4_cross_checks_exact_propagator() {
        for &x in &[0.3, 1.0, 4.0] {
            let p = params(x);
            let g = grid(10.0, 20);
            let exact = evolve_bloch(&p, &BlochState::ground(), &g).unwrap();
            let rk = evolve_bloch_rk4(&p, &BlochState::ground(), &g).unwrap();
            for (a, b) in exact.iter().zip(&rk) {
                assert!((a.p_e - b.p_e).abs() < 1e-8, "x = {x}");
                assert!((a.coh - b.coh).norm() < 1e-8, "x = {x}");
            }
        }
    }

    #[test]
    fn propagator_respects_t1_units() {
        let p = DriveParams::new(2.0, 0.5, 1.0).unwrap();
        let scaled = evolve_bloch(&p, &BlochState::ground(), &[0.0, 1.0]).unwrap();
        let reference = evolve_bloch(&params(2.0), &BlochState::ground(), &[0.0, 2.0]).unwrap();
        assert!((scaled[1].p_e - reference[1].p_e).abs() < 1e-14);
    }

    #[test]
    fn positivity_holds_along_trajectories() {
        for &x in &[0.2, 1.0, 5.0, 20.0] {
            let states = evolve_bloch(&params(x), &BlochState::ground(), &grid(30.0, 600)).unwrap();
            for s in states {
                assert!(s.coh.norm_sqr() <= s.p_e * (1.0 - s.p_e) + 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_grids_and_params() {
        assert!(evolve_bloch(&params(1.0), &BlochState::ground(), &[0.0, 2.0, 1.0]).is_err());
        assert!(evolve_bloch(&params(1.0), &BlochState::ground(), &[1.0, 2.0]).is_err());
        assert!(DriveParams::new(1.0, -1.0, 1.0).is_err());
        assert!(DriveParams::new(-1.0, 1.0, 1.0).is_err());
        assert!(DriveParams::new(1.0, 1.0, 1.5).is_err());
        assert!(correlator_ee(&params(1.0), 2.0, 1.0).is_err());
    }

    #[test]
    fn equal_time_first_order_correlator_is_population() {
        for &t in &[0.3, 1.0, 8.0, 40.0] {
            let p = params(1.3);
            let pop = evolve_bloch(&p, &BlochState::ground(), &[0.0, t]).unwrap()[1].p_e;
            let c = correlator_ee(&p, t, t).unwrap();
            assert!((c.re - pop).abs() < 1e-10);
            assert!(c.im.abs() < 1e-10);
        }
    }

    #[test]
    fn first_order_correlator_reaches_coherent_plateau() {
        // x = 1: |coh_ss|^2 = (1/3)^2 = 1/9.
        let c = correlator_ee(&params(1.0), 100.0, 200.0).unwrap();
        assert!((c.re - 1.0 / 9.0).abs() < 1e-8);
        assert!(c.im.abs() < 1e-8);
    }

    #[test]
    fn g2_vanishes_at_zero_lag_and_factorizes_at_long_lag() {
        let p = params(1.0);
        assert!(correlator_g2(&p, 50.0, 50.0).unwrap().abs() < 1e-12);
        let long = correlator_g2(&p, 100.0, 200.0).unwrap();
        assert!((long - 1.0 / 9.0).abs() < 1e-8);
    }

    #[test]
    fn g2_onset_is_quadratic_in_lag() {
        let x = 0.5;
        let p = params(x);
        let ss = steady_state(&p).unwrap().p_e;
        let delta = 1e-3;
        let g = correlator_g2(&p, 100.0, 100.0 + delta).unwrap();
        // From the ground state the population grows as (x delta / 2)^2.
        let expected = ss * (x * delta / 2.0).powi(2);
        assert!(
            (g - expected).abs() < 2e-3 * expected,
            "g = {g}, expected = {expected}"
        );
    }

    #[test]
    fn mixed_correlators_obey_conjugation_symmetry() {
        for &(t1, t2) in &[(0.7, 1.9), (5.0, 5.0), (3.3, 30.0)] {
            let m = mixed_correlators(&params(1.7), t1, t2).unwrap();
            assert!((m.raising_pop - m.pop_lowering.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn mixed_correlators_vanish_without_drive() {
        let m = mixed_correlators(&params(0.0), 1.0, 4.0).unwrap();
        for v in [
            m.lowering_t1,
            m.lowering_t2,
            m.first_order,
            m.raising_pair,
            m.pop_lowering,
        ] {
            assert!(v.norm() < 1e-14);
        }
    }

    #[test]
    fn steady_coherence_magnitude_at_unit_drive() {
        let m = mixed_correlators(&params(1.0), 80.0, 81.0).unwrap();
        assert!((m.lowering_t1.norm() - 1.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn correlators_decay_to_factorized_products() {
        // Deviations are measured against the correlator scale, the
        // equal-time value p_e.
        for &x in &[0.1, 0.5, 1.0, 5.0] {
            let p = params(x);
            let ss = steady_state(&p).unwrap();
            let t1 = 60.0;
            let lag = 20.0;
            let plateau = ss.coh.norm_sqr();
            let c = correlator_ee(&p, t1, t1 + lag).unwrap();
            assert!(
                (c - C64::from(plateau)).norm() / ss.p_e < 1e-4,
                "first-order at x = {x}"
            );
            let g = correlator_g2(&p, t1, t1 + lag).unwrap();
            assert!(
                (g - ss.p_e * ss.p_e).abs() / (ss.p_e * ss.p_e) < 1e-4,
                "g2 at x = {x}"
            );
        }
    }

    #[test]
    fn kernel_stores_lower_triangle() {
        let k = CorrelationKernel::sample(|a, b| C64::new(a, b), 1.0, 0.5).unwrap();
        assert_eq!(k.n_points(), 3);
        assert_eq!(k.get(0, 2), C64::new(0.0, 1.0));
        assert_eq!(k.get(1, 1), C64::new(0.5, 0.5));
    }

    #[test]
    #[should_panic(expected = "t1 <= t2")]
    fn kernel_rejects_upper_triangle_access() {
        let k = CorrelationKernel::sample(|_, _| ZERO, 1.0, 0.5).unwrap();
        let _ = k.get(2, 0);
    }
}
