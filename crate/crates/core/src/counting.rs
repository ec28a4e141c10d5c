//! State-conditioned photon counting statistics at the detector port: mean
//! counts, variances from the Mandel double-time integral, and the Mandel Q
//! parameter.
//!
//! The detected field operator is `D = c1 sigma_{1,-} + c2 sigma_{2,-}` with
//! the amplitudes of the [`DetectionModel`](crate::network::DetectionModel)
//! and per-qubit rate factors `sqrt(eta_s / t1_s)`. The mean count is the
//! time integral of `<D^dag D>`; the variance adds the normally ordered
//! double time integral of the connected four-operator correlator over all
//! sixteen qubit-index combinations. Same-atom factors come from the
//! regression theorem; cross-atom combinations factorize because the two
//! atoms are independent open systems.
//!
//! The double integral is evaluated in lag coordinates. Every factorized
//! term has the form `row . Lambda(tau) . field(t1)`, so the inner `t1`
//! integral collapses onto prefix sums of the field products and the whole
//! variance costs O(N) propagator evaluations instead of O(N^2) kernel
//! samples. Kernels decay at rate >= 1/2 (in units of the slower relaxation
//! time) and the atoms reach steady state, so both the lag range and the
//! stored transient are capped; costs stay bounded for arbitrarily long
//! observation times.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{self, insert, rows, DriveParams, DynamicsError};
use crate::linalg::{row_mat4, Mat4, Vec4, ZERO};
use crate::network::{state_participation, DetectionModel};

/// Joint spin state of the two qubits; only spin-down qubits fluoresce.
/// `PM` and `MP` form the entangled-branch pair `E` whose statistics
/// coincide for identical qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum JointSpinState {
    PP,
    PM,
    MP,
    MM,
}

impl JointSpinState {
    pub const ALL: [JointSpinState; 4] = [
        JointSpinState::PP,
        JointSpinState::PM,
        JointSpinState::MP,
        JointSpinState::MM,
    ];
}

impl std::fmt::Display for JointSpinState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            JointSpinState::PP => "++",
            JointSpinState::PM => "+-",
            JointSpinState::MP => "-+",
            JointSpinState::MM => "--",
        };
        write!(f, "{s}")
    }
}

impl std::str::FromStr for JointSpinState {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "PP" | "++" => Ok(JointSpinState::PP),
            "PM" | "+-" => Ok(JointSpinState::PM),
            "MP" | "-+" => Ok(JointSpinState::MP),
            "MM" | "--" => Ok(JointSpinState::MM),
            other => Err(format!("unknown joint spin state '{other}'")),
        }
    }
}

#[derive(Debug, Error)]
pub enum CountingError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("observation time must be >= 0, got {0}")]
    NegativeTime(f64),
    #[error("quadrature step {dt} too coarse; contract requires dt <= {max} (t1/20)")]
    CoarseQuadrature { dt: f64, max: f64 },
    #[error("variance came out negative ({0:.3e}); quadrature failure")]
    NonPositiveVariance(f64),
    #[error("Mandel Q undefined: mean count is zero")]
    UndefinedQ,
    #[error("invalid closed-form arguments: {0}")]
    InvalidArgument(String),
}

/// Counting statistics of one joint spin state at one observation time.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CountingStats {
    pub state: JointSpinState,
    /// Observation time in units of the reference relaxation time.
    pub t: f64,
    pub mean: f64,
    pub variance: f64,
    /// `variance / mean - 1`; `None` when the mean vanishes.
    pub q: Option<f64>,
}

impl CountingStats {
    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Closed-form long-time mean count (`t >> t1`): zero for `PP`,
/// `(eta/4) x^2/(1+2x^2) (t/T1)` for either single-fluorescer state and
/// `eta (x^2+x^4)/(1+2x^2)^2 (t/T1)` for `MM`.
pub fn mean_longtime(
    state: JointSpinState,
    x: f64,
    eta: f64,
    t_over_t1: f64,
) -> Result<f64, CountingError> {
    if !(x >= 0.0) {
        return Err(CountingError::InvalidArgument(format!(
            "x must be >= 0, got {x}"
        )));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(CountingError::InvalidArgument(format!(
            "eta must lie in [0,1], got {eta}"
        )));
    }
    if !(t_over_t1 >= 0.0) {
        return Err(CountingError::NegativeTime(t_over_t1));
    }
    let x2 = x * x;
    let denom = 1.0 + 2.0 * x2;
    Ok(match state {
        JointSpinState::PP => 0.0,
        JointSpinState::PM | JointSpinState::MP => 0.25 * eta * x2 / denom * t_over_t1,
        JointSpinState::MM => eta * (x2 + x2 * x2) / (denom * denom) * t_over_t1,
    })
}

/// Default quadrature step for the pair: at most `t1/20`, refined further to
/// resolve the Rabi oscillation of the kernels.
pub fn default_dt(params1: &DriveParams, params2: &DriveParams) -> f64 {
    let per_atom = |p: &DriveParams| {
        let base = p.t1 / 20.0;
        if p.rabi > 0.0 {
            base.min(p.t1 * std::f64::consts::TAU / (32.0 * p.rabi))
        } else {
            base
        }
    };
    per_atom(params1).min(per_atom(params2))
}

/// Mean detected count up to time `t` with both atoms starting in the ground
/// state at `t = 0`; converges to [`mean_longtime`] for `t >> t1`.
pub fn mean_general(
    state: JointSpinState,
    params1: &DriveParams,
    params2: &DriveParams,
    t: f64,
    model: &DetectionModel,
) -> Result<f64, CountingError> {
    mean_general_with_dt(
        state,
        params1,
        params2,
        t,
        model,
        default_dt(params1, params2),
    )
}

pub fn mean_general_with_dt(
    state: JointSpinState,
    params1: &DriveParams,
    params2: &DriveParams,
    t: f64,
    model: &DetectionModel,
    dt: f64,
) -> Result<f64, CountingError> {
    let engine = Engine::new(state, params1, params2, t, model, dt)?;
    Ok(engine.mean())
}

/// Variance of the detected count from the double time integral over the
/// connected four-operator correlators.
pub fn variance(
    state: JointSpinState,
    params1: &DriveParams,
    params2: &DriveParams,
    t: f64,
    model: &DetectionModel,
) -> Result<f64, CountingError> {
    variance_with_dt(
        state,
        params1,
        params2,
        t,
        model,
        default_dt(params1, params2),
    )
}

pub fn variance_with_dt(
    state: JointSpinState,
    params1: &DriveParams,
    params2: &DriveParams,
    t: f64,
    model: &DetectionModel,
    dt: f64,
) -> Result<f64, CountingError> {
    Ok(counting_stats_with_dt(state, params1, params2, t, model, dt)?.variance)
}

/// Mandel Q parameter; errors with [`CountingError::UndefinedQ`] when the
/// mean count vanishes.
pub fn mandel_q(
    state: JointSpinState,
    params1: &DriveParams,
    params2: &DriveParams,
    t: f64,
    model: &DetectionModel,
) -> Result<f64, CountingError> {
    counting_stats(state, params1, params2, t, model)?
        .q
        .ok_or(CountingError::UndefinedQ)
}

/// Mean, variance and Q in one pass (they share all precomputation).
pub fn counting_stats(
    state: JointSpinState,
    params1: &DriveParams,
    params2: &DriveParams,
    t: f64,
    model: &DetectionModel,
) -> Result<CountingStats, CountingError> {
    counting_stats_with_dt(
        state,
        params1,
        params2,
        t,
        model,
        default_dt(params1, params2),
    )
}

pub fn counting_stats_with_dt(
    state: JointSpinState,
    params1: &DriveParams,
    params2: &DriveParams,
    t: f64,
    model: &DetectionModel,
    dt: f64,
) -> Result<CountingStats, CountingError> {
    let engine = Engine::new(state, params1, params2, t, model, dt)?;
    let mean_fluor = engine.mean_fluorescence();
    let correction = engine.variance_correction();
    let background = engine.background * engine.t;
    let mean = mean_fluor + background;
    let variance = mean_fluor + correction + background;
    if variance < 0.0 {
        return Err(CountingError::NonPositiveVariance(variance));
    }
    let q = if mean > 0.0 {
        Some(variance / mean - 1.0)
    } else {
        None
    };
    Ok(CountingStats {
        state,
        t,
        mean,
        variance,
        q,
    })
}

// ---------------------------------------------------------------------------
// Internal quadrature engine.
// ---------------------------------------------------------------------------

/// Transient length after which an atom is treated as stationary and the
/// stored `t1` fields are replaced by their steady values (slowest Bloch
/// rate is 1/2, so 60 t1 settles below 1e-12).
const TRANSIENT_T1: f64 = 60.0;
/// Lag range kept in the outer integral; the combined connected-minus-
/// disconnected kernels decay at rate >= 1/2.
const LAG_T1: f64 = 80.0;

#[derive(Clone, Copy, PartialEq)]
enum Row {
    Pop,
    Lower,
    Raise,
}

impl Row {
    fn vec(self) -> Vec4 {
        match self {
            Row::Pop => rows::POP,
            Row::Lower => rows::LOWER,
            Row::Raise => rows::RAISE,
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Field {
    Rho,
    RhoSigmaPlus,
    SigmaMinusRho,
    Collapse,
}

/// One `row . Lambda_atom(tau) . field(t1)` factor, optionally conjugated.
#[derive(Clone, Copy)]
struct Form {
    atom: usize,
    row: Row,
    field: Field,
    conj: bool,
}

/// One term of the double integral: product of at most two lag forms and a
/// pure `t1` scalar (traces of operator insertions).
struct Job {
    weight: C64,
    forms: Vec<Form>,
    scalars: Vec<(usize, Field)>,
}

struct AtomData {
    active: bool,
    x: f64,
    t1: f64,
    /// Index of the last stored transient sample.
    m_ss: usize,
    fields: [Vec<Vec4>; 4],
    fields_ss: [Vec4; 4],
}

impl AtomData {
    fn build(params: &DriveParams, active: bool, dt: f64, n_total: usize) -> Self {
        let x = params.rabi;
        let m_ss = n_total.min((TRANSIENT_T1 * params.t1 / dt).ceil() as usize);
        let mut fields: [Vec<Vec4>; 4] = Default::default();
        if active {
            for f in fields.iter_mut() {
                f.reserve(m_ss + 1);
            }
            for k in 0..=m_ss {
                let rho = dynamics::rho_from_ground(x, k as f64 * dt / params.t1);
                fields[Field::Rho as usize].push(rho);
                fields[Field::RhoSigmaPlus as usize].push(insert::rho_sigma_plus(&rho));
                fields[Field::SigmaMinusRho as usize].push(insert::sigma_minus_rho(&rho));
                fields[Field::Collapse as usize].push(insert::collapse(&rho));
            }
        }
        let ss = if active {
            dynamics::steady_state(params)
                .expect("validated params")
                .to_vec()
        } else {
            crate::dynamics::BlochState::ground().to_vec()
        };
        let fields_ss = [
            ss,
            insert::rho_sigma_plus(&ss),
            insert::sigma_minus_rho(&ss),
            insert::collapse(&ss),
        ];
        Self {
            active,
            x,
            t1: params.t1,
            m_ss,
            fields,
            fields_ss,
        }
    }

    fn field(&self, f: Field, k: usize) -> Vec4 {
        if self.active && k <= self.m_ss {
            self.fields[f as usize][k]
        } else {
            self.fields_ss[f as usize]
        }
    }

    /// Trace of the inserted matrix: `1`, `<sigma_+>`, `<sigma_->` or the
    /// population depending on the insertion.
    fn trace(&self, f: Field, k: usize) -> C64 {
        let v = self.field(f, k);
        v[0] + v[3]
    }

    fn population(&self, k: usize) -> f64 {
        self.field(Field::Rho, k)[0].re
    }

    fn lowering(&self, k: usize) -> C64 {
        self.field(Field::Rho, k)[1]
    }

    fn propagator(&self, tau: f64) -> Mat4 {
        dynamics::propagator_matrix(self.x, tau / self.t1)
    }
}

/// Prefix trapezoid integral of a sampled field, with the stationary tail
/// extended analytically.
struct Prefix {
    vals: Vec<C64>,
    ss: C64,
    dt: f64,
}

impl Prefix {
    fn build(samples: &[C64], ss: C64, dt: f64) -> Self {
        let mut vals = Vec::with_capacity(samples.len());
        let mut acc = ZERO;
        vals.push(acc);
        for w in samples.windows(2) {
            acc += (w[0] + w[1]) * (0.5 * dt);
            vals.push(acc);
        }
        Self { vals, ss, dt }
    }

    fn eval(&self, m: usize) -> C64 {
        let last = self.vals.len() - 1;
        if m <= last {
            self.vals[m]
        } else {
            self.vals[last] + self.ss * ((m - last) as f64 * self.dt)
        }
    }
}

struct Engine {
    t: f64,
    dt: f64,
    n_total: usize,
    n_lag: usize,
    atoms: [AtomData; 2],
    amps: [C64; 2],
    rates: [f64; 2],
    background: f64,
    jobs: Vec<Job>,
}

impl Engine {
    fn new(
        state: JointSpinState,
        params1: &DriveParams,
        params2: &DriveParams,
        t: f64,
        model: &DetectionModel,
        dt: f64,
    ) -> Result<Self, CountingError> {
        params1.validate()?;
        params2.validate()?;
        if !(t >= 0.0) {
            return Err(CountingError::NegativeTime(t));
        }
        let max_dt = params1.t1.min(params2.t1) / 20.0;
        if dt > max_dt * (1.0 + 1e-12) || !(dt > 0.0) {
            return Err(CountingError::CoarseQuadrature { dt, max: max_dt });
        }
        let n_total = if t == 0.0 {
            0
        } else {
            (t / dt).ceil().max(1.0) as usize
        };
        let dt_eff = if n_total == 0 { dt } else { t / n_total as f64 };
        let (zeta1, zeta2) = state_participation(state);
        let t1_max = params1.t1.max(params2.t1);
        let n_lag = n_total.min((LAG_T1 * t1_max / dt_eff).ceil() as usize);
        let atoms = [
            AtomData::build(params1, zeta1, dt_eff, n_total),
            AtomData::build(params2, zeta2, dt_eff, n_total),
        ];
        let amps = [model.amp.0, model.amp.1];
        let rates = [
            model.rate_prefactor * params1.efficiency / params1.t1,
            model.rate_prefactor * params2.efficiency / params2.t1,
        ];
        let background = 0.5 * (params1.background_rate + params2.background_rate);
        let jobs = build_jobs(&[zeta1, zeta2], &amps, &rates);
        Ok(Self {
            t,
            dt: dt_eff,
            n_total,
            n_lag,
            atoms,
            amps,
            rates,
            background,
            jobs,
        })
    }

    fn mean(&self) -> f64 {
        self.mean_fluorescence() + self.background * self.t
    }

    /// Trapezoid integral of the detection rate `<D^dag D>`.
    fn mean_fluorescence(&self) -> f64 {
        if self.n_total == 0 {
            return 0.0;
        }
        let cross_weight =
            (self.rates[0] * self.rates[1]).sqrt() * (self.amps[0].conj() * self.amps[1]).re * 2.0;
        let both = self.atoms[0].active && self.atoms[1].active;
        let rate = |k: usize| -> f64 {
            let mut r = 0.0;
            for s in 0..2 {
                if self.atoms[s].active {
                    r += self.amps[s].norm_sqr() * self.rates[s] * self.atoms[s].population(k);
                }
            }
            if both {
                // Independent atoms: <sigma_{1,+} sigma_{2,-}> factorizes.
                r += cross_weight
                    * (self.atoms[0].lowering(k).conj() * self.atoms[1].lowering(k)).re;
            }
            r
        };
        let mut acc = 0.5 * (rate(0) + rate(self.n_total));
        for k in 1..self.n_total {
            acc += rate(k);
        }
        acc * self.dt
    }

    /// The doubled lag-coordinate integral of the connected correlators,
    /// i.e. `variance - mean` before background.
    fn variance_correction(&self) -> f64 {
        if self.n_total == 0 || self.jobs.is_empty() {
            return 0.0;
        }
        // Propagators for every lag step, shared by all jobs.
        let lams: [Vec<Mat4>; 2] = [
            (0..=self.n_lag)
                .map(|k| self.atoms[0].propagator(k as f64 * self.dt))
                .collect(),
            (0..=self.n_lag)
                .map(|k| self.atoms[1].propagator(k as f64 * self.dt))
                .collect(),
        ];
        let mut total = ZERO;
        for job in &self.jobs {
            total += job.weight * self.run_job(job, &lams);
        }
        2.0 * total.re
    }

    fn run_job(&self, job: &Job, lams: &[Vec<Mat4>; 2]) -> C64 {
        let scalar = |k: usize| -> C64 {
            job.scalars
                .iter()
                .map(|&(atom, f)| self.atoms[atom].trace(f, k))
                .product()
        };
        let m_store = job
            .forms
            .iter()
            .map(|f| self.atoms[f.atom].m_ss)
            .chain(job.scalars.iter().map(|&(a, _)| self.atoms[a].m_ss))
            .max()
            .unwrap_or(0)
            .min(self.n_total);

        // Prefix sums of the t1 fields per channel.
        let prefixes: Vec<Prefix> = match job.forms.len() {
            1 => {
                let f = job.forms[0];
                (0..4)
                    .map(|j| {
                        let sample = |k: usize| {
                            let v = self.atoms[f.atom].field(f.field, k)[j];
                            let v = if f.conj { v.conj() } else { v };
                            v * scalar(k)
                        };
                        let samples: Vec<C64> = (0..=m_store).map(sample).collect();
                        let ss = sample(m_store + 1 + self.n_total); // any index beyond m_ss
                        Prefix::build(&samples, ss, self.dt)
                    })
                    .collect()
            }
            2 => {
                let (fa, fb) = (job.forms[0], job.forms[1]);
                (0..16)
                    .map(|jk| {
                        let (j, k2) = (jk / 4, jk % 4);
                        let sample = |k: usize| {
                            let va = self.atoms[fa.atom].field(fa.field, k)[j];
                            let va = if fa.conj { va.conj() } else { va };
                            let vb = self.atoms[fb.atom].field(fb.field, k)[k2];
                            let vb = if fb.conj { vb.conj() } else { vb };
                            va * vb * scalar(k)
                        };
                        let samples: Vec<C64> = (0..=m_store).map(sample).collect();
                        let ss = sample(m_store + 1 + self.n_total);
                        Prefix::build(&samples, ss, self.dt)
                    })
                    .collect()
            }
            n => unreachable!("jobs carry 1 or 2 forms, got {n}"),
        };

        // Outer trapezoid over the lag.
        let mut acc = ZERO;
        for k in 0..=self.n_lag {
            let m = self.n_total - k;
            let inner = match job.forms.len() {
                1 => {
                    let f = job.forms[0];
                    let mut a = row_mat4(&f.row.vec(), &lams[f.atom][k]);
                    if f.conj {
                        a = [a[0].conj(), a[1].conj(), a[2].conj(), a[3].conj()];
                    }
                    (0..4).map(|j| a[j] * prefixes[j].eval(m)).sum::<C64>()
                }
                _ => {
                    let (fa, fb) = (job.forms[0], job.forms[1]);
                    let mut a = row_mat4(&fa.row.vec(), &lams[fa.atom][k]);
                    if fa.conj {
                        a = [a[0].conj(), a[1].conj(), a[2].conj(), a[3].conj()];
                    }
                    let mut b = row_mat4(&fb.row.vec(), &lams[fb.atom][k]);
                    if fb.conj {
                        b = [b[0].conj(), b[1].conj(), b[2].conj(), b[3].conj()];
                    }
                    let mut s = ZERO;
                    for (j, aj) in a.iter().enumerate() {
                        for (k2, bk) in b.iter().enumerate() {
                            s += *aj * *bk * prefixes[4 * j + k2].eval(m);
                        }
                    }
                    s
                }
            };
            let w = if k == 0 || k == self.n_lag { 0.5 } else { 1.0 };
            acc += inner * w;
        }
        acc * self.dt
    }
}

/// Enumerate the sixteen index combinations of the four-operator correlator
/// and emit one connected and one disconnected job per active combination.
fn build_jobs(active: &[bool; 2], amps: &[C64; 2], rates: &[f64; 2]) -> Vec<Job> {
    let g = [rates[0].sqrt(), rates[1].sqrt()];
    let mut jobs = Vec::new();
    for code in 0..16usize {
        let s = [(code >> 3) & 1, (code >> 2) & 1, (code >> 1) & 1, code & 1];
        if s.iter().any(|&i| !active[i]) {
            continue;
        }
        let weight = amps[s[0]].conj()
            * amps[s[1]].conj()
            * amps[s[2]]
            * amps[s[3]]
            * (g[s[0]] * g[s[1]] * g[s[2]] * g[s[3]]);

        // Connected part: group the operators per atom, preserving order.
        let mut forms = Vec::new();
        let mut scalars = Vec::new();
        for atom in 0..2 {
            let has_n = s[0] == atom; // sigma_+(t1), right insertion
            let r_plus = s[1] == atom; // sigma_+(t2)
            let r_minus = s[2] == atom; // sigma_-(t2)
            let has_m = s[3] == atom; // sigma_-(t1), left insertion
            if !(has_n || r_plus || r_minus || has_m) {
                continue;
            }
            let field = match (has_m, has_n) {
                (false, false) => Field::Rho,
                (false, true) => Field::RhoSigmaPlus,
                (true, false) => Field::SigmaMinusRho,
                (true, true) => Field::Collapse,
            };
            match (r_plus, r_minus) {
                (false, false) => scalars.push((atom, field)),
                (true, false) => forms.push(Form {
                    atom,
                    row: Row::Raise,
                    field,
                    conj: false,
                }),
                (false, true) => forms.push(Form {
                    atom,
                    row: Row::Lower,
                    field,
                    conj: false,
                }),
                (true, true) => forms.push(Form {
                    atom,
                    row: Row::Pop,
                    field,
                    conj: false,
                }),
            }
        }
        debug_assert!(!forms.is_empty());
        jobs.push(Job {
            weight,
            forms,
            scalars,
        });

        // Disconnected part: <s1+(t1) s4-(t1)> <s2+(t2) s3-(t2)>.
        let scalars = if s[0] == s[3] {
            vec![(s[0], Field::Collapse)]
        } else {
            vec![(s[0], Field::RhoSigmaPlus), (s[3], Field::SigmaMinusRho)]
        };
        let forms = if s[1] == s[2] {
            vec![Form {
                atom: s[1],
                row: Row::Pop,
                field: Field::Rho,
                conj: false,
            }]
        } else {
            vec![
                Form {
                    atom: s[1],
                    row: Row::Lower,
                    field: Field::Rho,
                    conj: true,
                },
                Form {
                    atom: s[2],
                    row: Row::Lower,
                    field: Field::Rho,
                    conj: false,
                },
            ]
        };
        jobs.push(Job {
            weight: -weight,
            forms,
            scalars,
        });
    }
    jobs
}
