//! Quantum-jump Monte Carlo unraveling of the two-atom system with a
//! dedicated detector-port jump channel; the stochastic oracle that validates
//! the deterministic counting pipeline.
//!
//! The two-port decomposition routes each atom's emission through a symmetric
//! detector channel `(sigma_1- + sigma_2-)/2`, the conjugate antisymmetric
//! port, and a per-atom loss channel. The cross-atom dissipator terms of the
//! two ports cancel, so the unconditional dynamics keeps the atoms
//! independent while the detector-channel jump record reproduces the
//! physical counting statistics at efficiency eta.
//!
//! The non-Hermitian drift is applied with its exact propagator (closed-form
//! two-level matrix exponentials, tensored), so the only discretization is
//! the location of the norm-threshold crossing, refined by bisection to
//! `dt / 2^16`. Trajectories derive independent RNG streams from
//! `(seed, index)`, which makes ensembles reproducible bit-for-bit and
//! independent of evaluation order.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::counting::JointSpinState;
use crate::dynamics::{DriveParams, DynamicsError};
use crate::linalg::{kron2, mat2_id, mat4_vec, norm_sq, sinch, Mat2, Mat4, Vec4, ONE, ZERO};
use crate::network::state_participation;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("invalid trajectory arguments: {0}")]
    InvalidArguments(String),
    #[error("jump channels do not sum to the atomic dissipators (deviation {0:.3e})")]
    ChannelIncompleteness(f64),
    #[error("state norm underflowed; drift step too large")]
    NormUnderflow,
}

/// Which physical port a jump channel feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    /// The dark detector port `d`.
    Detector,
    /// The conjugate (antisymmetric) output port.
    ConjugatePort,
    /// Undetected emission of one atom.
    Loss(usize),
}

/// One collapse operator, rate included, on the 4-dimensional two-atom space.
#[derive(Debug, Clone)]
pub struct JumpChannel {
    pub kind: ChannelKind,
    pub op: Mat4,
}

/// The full channel set for one joint spin state.
#[derive(Debug, Clone)]
pub struct JumpChannelSet {
    pub channels: Vec<JumpChannel>,
}

fn sigma_minus_on(atom: usize, scale: f64) -> Mat4 {
    let s = [[ZERO, ZERO], [C64::from(scale), ZERO]];
    if atom == 0 {
        kron2(&s, &mat2_id())
    } else {
        kron2(&mat2_id(), &s)
    }
}

fn mat4_add(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = *a;
    for (row, rb) in out.iter_mut().zip(b.iter()) {
        for (v, w) in row.iter_mut().zip(rb.iter()) {
            *v += *w;
        }
    }
    out
}

fn mat4_scale(a: &Mat4, s: C64) -> Mat4 {
    let mut out = *a;
    for row in out.iter_mut() {
        for v in row.iter_mut() {
            *v *= s;
        }
    }
    out
}

fn mat4_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = ZERO;
            for (k, bk) in b.iter().enumerate() {
                acc += a[i][k] * bk[j];
            }
            out[i][j] = acc;
        }
    }
    out
}

fn dagger(a: &Mat4) -> Mat4 {
    let mut out = [[ZERO; 4]; 4];
    for i in 0..4 {
        for (j, row) in a.iter().enumerate() {
            out[i][j] = row[i].conj();
        }
    }
    out
}

impl JumpChannelSet {
    /// Canonical channel set: detector and conjugate ports at the network
    /// amplitudes 1/2 with per-atom rate factors, plus per-atom loss channels
    /// absorbing the undetected emission. Spectator atoms carry no operators.
    pub fn build(
        state: JointSpinState,
        params1: &DriveParams,
        params2: &DriveParams,
    ) -> Result<Self, TrajectoryError> {
        params1.validate().map_err(TrajectoryError::from)?;
        params2.validate().map_err(TrajectoryError::from)?;
        let (z1, z2) = state_participation(state);
        let zeta = [z1, z2];
        let params = [params1, params2];
        let mut channels = Vec::new();

        let emit = |atom: usize| {
            let p = params[atom];
            let amp = if zeta[atom] {
                (p.efficiency / p.t1).sqrt()
            } else {
                0.0
            };
            sigma_minus_on(atom, amp)
        };
        let detector = mat4_scale(&mat4_add(&emit(0), &emit(1)), C64::from(0.5));
        let conjugate = mat4_scale(
            &mat4_add(&emit(0), &mat4_scale(&emit(1), C64::from(-1.0))),
            C64::from(0.5),
        );
        channels.push(JumpChannel {
            kind: ChannelKind::Detector,
            op: detector,
        });
        channels.push(JumpChannel {
            kind: ChannelKind::ConjugatePort,
            op: conjugate,
        });
        for atom in 0..2 {
            if zeta[atom] {
                let p = params[atom];
                let rate = (1.0 - p.efficiency / 2.0) / p.t1;
                channels.push(JumpChannel {
                    kind: ChannelKind::Loss(atom),
                    op: sigma_minus_on(atom, rate.sqrt()),
                });
            }
        }
        Ok(Self { channels })
    }

    /// Sum of `L^dag L` over all channels.
    pub fn total_decay(&self) -> Mat4 {
        let mut total = [[ZERO; 4]; 4];
        for c in &self.channels {
            total = mat4_add(&total, &mat4_mul(&dagger(&c.op), &c.op));
        }
        total
    }

    /// Check that the channels decompose exactly into per-atom dissipators:
    /// the cross-atom terms of the two ports must cancel and each atom's
    /// total decay rate must be `1/t1`.
    pub fn check_completeness(
        &self,
        state: JointSpinState,
        params1: &DriveParams,
        params2: &DriveParams,
    ) -> Result<(), TrajectoryError> {
        let (z1, z2) = state_participation(state);
        let zeta = [z1, z2];
        let params = [params1, params2];
        let mut expected = [[ZERO; 4]; 4];
        for atom in 0..2 {
            if zeta[atom] {
                let sm = sigma_minus_on(atom, (1.0 / params[atom].t1).sqrt());
                expected = mat4_add(&expected, &mat4_mul(&dagger(&sm), &sm));
            }
        }
        let total = self.total_decay();
        let mut deviation: f64 = 0.0;
        for (re, rt) in expected.iter().zip(total.iter()) {
            for (e, t) in re.iter().zip(rt.iter()) {
                deviation = deviation.max((e - t).norm());
            }
        }
        if deviation > 1e-12 {
            return Err(TrajectoryError::ChannelIncompleteness(deviation));
        }
        Ok(())
    }
}

/// Jump counts of one trajectory, per physical port.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct TrajectoryRecord {
    pub d_count: u64,
    pub b_count: u64,
    pub loss_count: u64,
}

/// Ensemble-averaged populations at one checkpoint time, with standard
/// errors; used to check that the port decomposition leaves the
/// unconditional single-atom dynamics untouched.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PopulationCheckpoint {
    pub t: f64,
    pub mean_p: [f64; 2],
    pub se_p: [f64; 2],
}

/// Seeded Monte Carlo jump records for one joint spin state.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryEnsemble {
    pub state: JointSpinState,
    pub seed: u64,
    pub n_traj: usize,
    pub duration: f64,
    pub records: Vec<TrajectoryRecord>,
    pub checkpoints: Vec<PopulationCheckpoint>,
}

/// Exact no-jump step operator `exp(-i H_eff dt)` as a tensor product of
/// closed-form single-atom factors.
fn drift_step(params: [&DriveParams; 2], zeta: [bool; 2], dt: f64) -> Mat4 {
    let single = |p: &DriveParams, active: bool| -> Mat2 {
        if !active {
            return mat2_id();
        }
        let gamma = 1.0 / p.t1;
        let omega = p.rabi / p.t1;
        // -i h = -(gamma/4) I + B with B^2 = (gamma^2/16 - omega^2/4) I.
        let b = [
            [C64::from(-0.25 * gamma), C64::new(0.0, -0.5 * omega)],
            [C64::new(0.0, -0.5 * omega), C64::from(0.25 * gamma)],
        ];
        let nu = C64::new(0.0625 * gamma * gamma - 0.25 * omega * omega, 0.0).sqrt();
        let ch = (nu * dt).cosh();
        let sh = dt * sinch(nu * dt);
        let damp = C64::from((-0.25 * gamma * dt).exp());
        [
            [damp * (ch + sh * b[0][0]), damp * sh * b[0][1]],
            [damp * sh * b[1][0], damp * (ch + sh * b[1][1])],
        ]
    };
    kron2(&single(params[0], zeta[0]), &single(params[1], zeta[1]))
}

const REFINE_LEVELS: usize = 16;
const CHECKPOINTS: usize = 8;

/// Per-trajectory result: jump record plus checkpoint populations.
type TrajectoryOutput = (TrajectoryRecord, Vec<[f64; 2]>);

struct Stepper {
    /// Step operators at dt, dt/2, ..., dt/2^REFINE_LEVELS.
    levels: Vec<Mat4>,
    channels: Vec<JumpChannel>,
    dt: f64,
}

impl Stepper {
    fn excited_populations(psi: &Vec4) -> [f64; 2] {
        let n = norm_sq(psi).max(1e-300);
        // Index 2*l1 + l2 with level 0 = excited.
        let p1 = (psi[0].norm_sqr() + psi[1].norm_sqr()) / n;
        let p2 = (psi[0].norm_sqr() + psi[2].norm_sqr()) / n;
        [p1, p2]
    }

    fn run(
        &self,
        rng: &mut ChaCha8Rng,
        n_steps: usize,
        checkpoint_every: usize,
    ) -> Result<TrajectoryOutput, TrajectoryError> {
        // Both atoms start in the ground state (laser switched on at t = 0);
        // spectators stay frozen there.
        let mut psi: Vec4 = [ZERO, ZERO, ZERO, ONE];
        let mut record = TrajectoryRecord::default();
        let mut checks = Vec::with_capacity(CHECKPOINTS);
        let mut threshold = draw_threshold(rng);

        for step in 1..=n_steps {
            self.advance(&mut psi, 0, &mut threshold, &mut record, rng)?;
            if step % checkpoint_every == 0 && checks.len() < CHECKPOINTS {
                checks.push(Self::excited_populations(&psi));
            }
        }
        Ok((record, checks))
    }

    /// Advance by `dt / 2^level`, recursively bisecting any interval that
    /// contains a norm-threshold crossing so jumps land within
    /// `dt / 2^REFINE_LEVELS` of their exact time and the full interval is
    /// always evolved (several jumps per base step are handled).
    fn advance(
        &self,
        psi: &mut Vec4,
        level: usize,
        threshold: &mut f64,
        record: &mut TrajectoryRecord,
        rng: &mut ChaCha8Rng,
    ) -> Result<(), TrajectoryError> {
        let candidate = mat4_vec(&self.levels[level], psi);
        let n2 = norm_sq(&candidate);
        if !n2.is_finite() {
            return Err(TrajectoryError::NormUnderflow);
        }
        if n2 > *threshold {
            *psi = candidate;
            return Ok(());
        }
        if level == REFINE_LEVELS {
            *psi = candidate;
            self.apply_jump(psi, record, rng)?;
            *threshold = draw_threshold(rng);
            return Ok(());
        }
        self.advance(psi, level + 1, threshold, record, rng)?;
        self.advance(psi, level + 1, threshold, record, rng)
    }

    fn apply_jump(
        &self,
        psi: &mut Vec4,
        record: &mut TrajectoryRecord,
        rng: &mut ChaCha8Rng,
    ) -> Result<(), TrajectoryError> {
        let collapsed: Vec<Vec4> = self.channels.iter().map(|c| mat4_vec(&c.op, psi)).collect();
        let weights: Vec<f64> = collapsed.iter().map(norm_sq).collect();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(TrajectoryError::NormUnderflow);
        }
        let mut pick = rng.gen::<f64>() * total;
        let mut chosen = self.channels.len() - 1;
        for (i, w) in weights.iter().enumerate() {
            if pick < *w {
                chosen = i;
                break;
            }
            pick -= w;
        }
        match self.channels[chosen].kind {
            ChannelKind::Detector => record.d_count += 1,
            ChannelKind::ConjugatePort => record.b_count += 1,
            ChannelKind::Loss(_) => record.loss_count += 1,
        }
        let norm = weights[chosen].sqrt();
        *psi = collapsed[chosen].map(|z| z / norm);
        Ok(())
    }
}

fn draw_threshold(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let r: f64 = rng.gen();
        if r > 0.0 {
            return r;
        }
    }
}

/// Run a seeded trajectory ensemble.
///
/// The step size is `min(t1)/20`, small enough that the survival probability
/// drops by less than 10% per step for every drive; the drift itself is
/// exact at any step size.
pub fn simulate(
    state: JointSpinState,
    params1: &DriveParams,
    params2: &DriveParams,
    t: f64,
    n_traj: usize,
    seed: u64,
) -> Result<TrajectoryEnsemble, TrajectoryError> {
    if n_traj < 1 {
        return Err(TrajectoryError::InvalidArguments(
            "n_traj must be >= 1".into(),
        ));
    }
    if !(t > 0.0) {
        return Err(TrajectoryError::InvalidArguments(format!(
            "t must be > 0, got {t}"
        )));
    }
    let set = JumpChannelSet::build(state, params1, params2)?;
    set.check_completeness(state, params1, params2)?;

    let (z1, z2) = state_participation(state);
    let zeta = [z1, z2];
    let dt_target = params1.t1.min(params2.t1) / 20.0;
    let n_steps = (t / dt_target).ceil().max(1.0) as usize;
    let dt = t / n_steps as f64;
    let checkpoint_every = (n_steps / CHECKPOINTS).max(1);

    let params = [params1, params2];
    let mut levels = Vec::with_capacity(REFINE_LEVELS + 1);
    for level in 0..=REFINE_LEVELS {
        levels.push(drift_step(params, zeta, dt / (1u64 << level) as f64));
    }
    let stepper = Stepper {
        levels,
        channels: set.channels,
        dt,
    };

    let results: Result<Vec<TrajectoryOutput>, TrajectoryError> = (0..n_traj)
        .into_par_iter()
        .map(|index| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index as u64);
            stepper.run(&mut rng, n_steps, checkpoint_every)
        })
        .collect();
    let results = results?;

    let n_checks = results.iter().map(|(_, c)| c.len()).min().unwrap_or(0);
    let mut checkpoints = Vec::with_capacity(n_checks);
    for k in 0..n_checks {
        let mut sum = [0.0; 2];
        let mut sum_sq = [0.0; 2];
        for (_, checks) in &results {
            for atom in 0..2 {
                sum[atom] += checks[k][atom];
                sum_sq[atom] += checks[k][atom] * checks[k][atom];
            }
        }
        let n = n_traj as f64;
        let mean = [sum[0] / n, sum[1] / n];
        let se = |i: usize| {
            let var = (sum_sq[i] - sum[i] * sum[i] / n) / (n - 1.0).max(1.0);
            (var / n).max(0.0).sqrt()
        };
        checkpoints.push(PopulationCheckpoint {
            t: (k + 1) as f64 * checkpoint_every as f64 * stepper.dt,
            mean_p: mean,
            se_p: [se(0), se(1)],
        });
    }

    Ok(TrajectoryEnsemble {
        state,
        seed,
        n_traj,
        duration: t,
        records: results.into_iter().map(|(r, _)| r).collect(),
        checkpoints,
    })
}

/// Binomially thin the detector counts, modeling extra detector loss.
pub fn thin_counts(
    ensemble: &TrajectoryEnsemble,
    keep: f64,
    seed: u64,
) -> Result<TrajectoryEnsemble, TrajectoryError> {
    if !(0.0..=1.0).contains(&keep) {
        return Err(TrajectoryError::InvalidArguments(format!(
            "keep probability must lie in [0,1], got {keep}"
        )));
    }
    let records = ensemble
        .records
        .iter()
        .enumerate()
        .map(|(index, r)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index as u64);
            let kept = (0..r.d_count).filter(|_| rng.gen::<f64>() < keep).count() as u64;
            TrajectoryRecord {
                d_count: kept,
                ..*r
            }
        })
        .collect();
    Ok(TrajectoryEnsemble {
        records,
        checkpoints: ensemble.checkpoints.clone(),
        seed,
        ..*ensemble
    })
}

/// Normalized histogram of detector counts with moments and bootstrap
/// standard errors.
#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalDistribution {
    pub n_traj: usize,
    pub histogram: Vec<u64>,
    pub probabilities: Vec<f64>,
    pub mean: f64,
    /// Sample variance (n - 1 normalization).
    pub variance: f64,
    pub q: Option<f64>,
    pub se_mean: f64,
    pub se_variance: f64,
    pub se_q: f64,
    pub bootstrap_resamples: usize,
}

impl EmpiricalDistribution {
    /// Probability of a count strictly above `threshold`.
    pub fn tail_above(&self, threshold: f64) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .filter(|(count, _)| (*count as f64) > threshold)
            .map(|(_, p)| p)
            .sum()
    }

    /// Probability of a count at or below `threshold`.
    pub fn tail_at_or_below(&self, threshold: f64) -> f64 {
        1.0 - self.tail_above(threshold)
    }
}

/// Histogram plus moments with the default 1000 bootstrap resamples.
pub fn empirical_distribution(ensemble: &TrajectoryEnsemble) -> EmpiricalDistribution {
    empirical_distribution_with(ensemble, 1000)
}

pub fn empirical_distribution_with(
    ensemble: &TrajectoryEnsemble,
    resamples: usize,
) -> EmpiricalDistribution {
    let counts: Vec<u64> = ensemble.records.iter().map(|r| r.d_count).collect();
    assert!(!counts.is_empty(), "ensemble must be non-empty");
    let max = *counts.iter().max().unwrap() as usize;
    let mut histogram = vec![0u64; max + 1];
    for &c in &counts {
        histogram[c as usize] += 1;
    }
    let n = counts.len() as f64;
    let probabilities: Vec<f64> = histogram.iter().map(|&h| h as f64 / n).collect();
    let (mean, variance) = moments(&counts);
    let q = if mean > 0.0 {
        Some(variance / mean - 1.0)
    } else {
        None
    };

    // Bootstrap over trajectories, seeded from the ensemble seed.
    let mut rng = ChaCha8Rng::seed_from_u64(ensemble.seed ^ 0x9e37_79b9_7f4a_7c15);
    rng.set_stream(u64::MAX);
    let mut means = Vec::with_capacity(resamples);
    let mut variances = Vec::with_capacity(resamples);
    let mut qs = Vec::with_capacity(resamples);
    let len = counts.len();
    let mut resample = vec![0u64; len];
    for _ in 0..resamples {
        for slot in resample.iter_mut() {
            *slot = counts[rng.gen_range(0..len)];
        }
        let (m, v) = moments(&resample);
        means.push(m);
        variances.push(v);
        if m > 0.0 {
            qs.push(v / m - 1.0);
        }
    }
    EmpiricalDistribution {
        n_traj: counts.len(),
        histogram,
        probabilities,
        mean,
        variance,
        q,
        se_mean: std_dev(&means),
        se_variance: std_dev(&variances),
        se_q: std_dev(&qs),
        bootstrap_resamples: resamples,
    }
}

fn moments(counts: &[u64]) -> (f64, f64) {
    let n = counts.len() as f64;
    let mean = counts.iter().map(|&c| c as f64).sum::<f64>() / n;
    let variance = if counts.len() > 1 {
        counts
            .iter()
            .map(|&c| (c as f64 - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0)
    } else {
        0.0
    };
    (mean, variance)
}

fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Dump raw jump records as CSV, one row per trajectory.
pub fn write_jump_records<W: std::io::Write>(
    ensemble: &TrajectoryEnsemble,
    writer: &mut W,
) -> std::io::Result<()> {
    writeln!(writer, "index,d_count,b_count,loss_count")?;
    for (index, r) in ensemble.records.iter().enumerate() {
        writeln!(
            writer,
            "{index},{},{},{}",
            r.d_count, r.b_count, r.loss_count
        )?;
    }
    Ok(())
}
