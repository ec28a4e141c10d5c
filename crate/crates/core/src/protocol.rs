//! Protocol-level analysis: postselection thresholds and heralding
//! confidence, success probability, average entanglement time for
//! experimental presets, and tolerance to mismatched qubits.
//!
//! Heralding reads the detector count at the half-cycle time and keeps the
//! run when the count falls in the window between the dark `++` branch and
//! the bright `--` branch. Confidence is the symmetric two-class error
//! complement between the entangled-branch and `--` count distributions,
//! with equal priors; it is computed from a Gaussian approximation, from
//! Poisson tails, or from empirical trajectory histograms. Because the
//! heralding fidelity question "does the `++` branch leak into the window?"
//! is separate, the report carries both the pairwise confidence and a
//! posterior that includes the `++` branch at its 1/4 prior.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::gamma_ur;
use thiserror::Error;

use crate::counting::{self, CountingError, CountingStats, JointSpinState};
use crate::dynamics::DriveParams;
use crate::network::{build_network, DetectionModel, ModeNetwork};
use crate::trajectories::EmpiricalDistribution;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(
        "count distributions indistinguishable: mean gap {gap:.3} <= combined sd {combined_sd:.3}"
    )]
    Indistinguishable { gap: f64, combined_sd: f64 },
    #[error("expected mean(E) < mean(MM), got {mean_e} >= {mean_mm}")]
    MeansOutOfOrder { mean_e: f64, mean_mm: f64 },
    #[error("invalid statistics: {0}")]
    InvalidStats(String),
    #[error("unknown preset '{0}'")]
    PresetNotFound(String),
    #[error("invalid preset: {0}")]
    PresetInvalid(String),
    #[error(transparent)]
    Counting(#[from] CountingError),
    #[error("kappa search failed: {0}")]
    SearchFailed(String),
}

/// Classification method for the postselection threshold.
#[derive(Debug, Clone, Copy)]
pub enum ClassifyMethod<'a> {
    /// Gaussian approximation with equal z-scores at the threshold.
    Gaussian,
    /// Poisson distributions at the given means, equal tail masses.
    Poisson,
    /// Empirical histograms from the trajectory oracle.
    Empirical {
        e: &'a EmpiricalDistribution,
        mm: &'a EmpiricalDistribution,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifyMethodTag {
    Gaussian,
    Poisson,
    Empirical,
}

impl std::str::FromStr for ClassifyMethodTag {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Self::Gaussian),
            "poisson" => Ok(Self::Poisson),
            "empirical" => Ok(Self::Empirical),
            other => Err(format!("unknown classification method '{other}'")),
        }
    }
}

/// Outcome of the postselection analysis.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ClassificationReport {
    /// Count threshold separating the entangled branch from `--`.
    pub threshold: f64,
    /// Lower cutoff separating `++` from the entangled branch.
    pub threshold_low: f64,
    /// `1 - max` misclassification probability between E and `--`.
    pub confidence: f64,
    /// Posterior probability that a heralded run is the entangled branch,
    /// with the branch priors (1/4, 1/2, 1/4) of the initial superposition.
    pub confidence_pp_inclusive: f64,
    /// Ideal branch weight 1/2 times the probability that an entangled-branch
    /// count lands inside the herald window.
    pub p_success: f64,
    pub method: ClassifyMethodTag,
}

fn normal_cdf(z: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().cdf(z)
}

/// `P(Poisson(lambda) <= k)` for integer-valued `k`.
fn poisson_cdf(lambda: f64, k: f64) -> f64 {
    if k < 0.0 {
        return 0.0;
    }
    if lambda <= 0.0 {
        return 1.0;
    }
    gamma_ur(k.floor() + 1.0, lambda)
}

/// Choose the postselection window and evaluate its error rates.
///
/// The E/`--` threshold equalizes the two misclassification probabilities;
/// the low cutoff separates the (nearly dark) `++` branch. Fails with
/// [`ProtocolError::Indistinguishable`] when the means are closer than the
/// combined standard deviation.
pub fn classify(
    stats_e: &CountingStats,
    stats_mm: &CountingStats,
    stats_pp: &CountingStats,
    method: ClassifyMethod<'_>,
) -> Result<ClassificationReport, ProtocolError> {
    let (mu_e, mu_mm) = (stats_e.mean, stats_mm.mean);
    if !(mu_e < mu_mm) {
        return Err(ProtocolError::MeansOutOfOrder {
            mean_e: mu_e,
            mean_mm: mu_mm,
        });
    }
    let (sd_e, sd_mm) = (stats_e.sd(), stats_mm.sd());
    if mu_mm - mu_e <= sd_e + sd_mm {
        return Err(ProtocolError::Indistinguishable {
            gap: mu_mm - mu_e,
            combined_sd: sd_e + sd_mm,
        });
    }
    if stats_pp.mean > mu_e {
        return Err(ProtocolError::InvalidStats(
            "the ++ branch must be darker than the entangled branch".into(),
        ));
    }

    match method {
        ClassifyMethod::Gaussian => {
            let threshold = (sd_mm * mu_e + sd_e * mu_mm) / (sd_e + sd_mm);
            let z = (threshold - mu_e) / sd_e;
            let confidence = normal_cdf(z);
            let threshold_low = low_cutoff_gaussian(stats_pp, mu_e, sd_e);
            let acc_e =
                normal_cdf((threshold - mu_e) / sd_e) - normal_cdf((threshold_low - mu_e) / sd_e);
            let acc_mm = normal_cdf((threshold - mu_mm) / sd_mm)
                - normal_cdf((threshold_low - mu_mm) / sd_mm);
            let acc_pp = if stats_pp.sd() > 1e-9 {
                normal_cdf((threshold - stats_pp.mean) / stats_pp.sd())
                    - normal_cdf((threshold_low - stats_pp.mean) / stats_pp.sd())
            } else if stats_pp.mean > threshold_low && stats_pp.mean <= threshold {
                1.0
            } else {
                0.0
            };
            Ok(report(
                threshold,
                threshold_low,
                confidence,
                acc_pp,
                acc_e,
                acc_mm,
                ClassifyMethodTag::Gaussian,
            ))
        }
        ClassifyMethod::Poisson => {
            // Equalize the Poisson tail masses over integer thresholds.
            let threshold = balance_thresholds(
                |k| 1.0 - poisson_cdf(mu_e, k),
                |k| poisson_cdf(mu_mm, k),
                mu_e,
                mu_mm,
            );
            let err_e = 1.0 - poisson_cdf(mu_e, threshold);
            let err_mm = poisson_cdf(mu_mm, threshold);
            let confidence = 1.0 - err_e.max(err_mm);
            let mu_pp = stats_pp.mean;
            let threshold_low = if mu_pp > 1e-12 {
                balance_thresholds(
                    |k| 1.0 - poisson_cdf(mu_pp, k),
                    |k| poisson_cdf(mu_e, k),
                    mu_pp,
                    mu_e,
                )
            } else {
                0.5
            };
            let acc_e = poisson_cdf(mu_e, threshold) - poisson_cdf(mu_e, threshold_low);
            let acc_mm = poisson_cdf(mu_mm, threshold) - poisson_cdf(mu_mm, threshold_low);
            let acc_pp = poisson_cdf(mu_pp, threshold) - poisson_cdf(mu_pp, threshold_low);
            Ok(report(
                threshold,
                threshold_low,
                confidence,
                acc_pp,
                acc_e,
                acc_mm,
                ClassifyMethodTag::Poisson,
            ))
        }
        ClassifyMethod::Empirical { e, mm } => {
            let threshold =
                balance_thresholds(|k| e.tail_above(k), |k| mm.tail_at_or_below(k), mu_e, mu_mm);
            let err_e = e.tail_above(threshold);
            let err_mm = mm.tail_at_or_below(threshold);
            let confidence = 1.0 - err_e.max(err_mm);
            let threshold_low = low_cutoff_gaussian(stats_pp, mu_e, sd_e);
            let acc_e = e.tail_at_or_below(threshold) - e.tail_at_or_below(threshold_low);
            let acc_mm = mm.tail_at_or_below(threshold) - mm.tail_at_or_below(threshold_low);
            let acc_pp = if stats_pp.sd() > 1e-9 {
                normal_cdf((threshold - stats_pp.mean) / stats_pp.sd())
                    - normal_cdf((threshold_low - stats_pp.mean) / stats_pp.sd())
            } else {
                0.0
            };
            Ok(report(
                threshold,
                threshold_low,
                confidence,
                acc_pp,
                acc_e,
                acc_mm,
                ClassifyMethodTag::Empirical,
            ))
        }
    }
}

fn report(
    threshold: f64,
    threshold_low: f64,
    confidence: f64,
    acc_pp: f64,
    acc_e: f64,
    acc_mm: f64,
    method: ClassifyMethodTag,
) -> ClassificationReport {
    let posterior_num = 0.5 * acc_e;
    let posterior_den = 0.25 * acc_pp + 0.5 * acc_e + 0.25 * acc_mm;
    ClassificationReport {
        threshold,
        threshold_low,
        confidence,
        confidence_pp_inclusive: if posterior_den > 0.0 {
            posterior_num / posterior_den
        } else {
            0.0
        },
        p_success: ideal_success_probability() * acc_e,
        method,
    }
}

/// Half-integer threshold between two count distributions that balances
/// `err_low(k)` (low distribution above `k`) against `err_high(k)` (high
/// distribution at or below `k`).
fn balance_thresholds(
    err_low: impl Fn(f64) -> f64,
    err_high: impl Fn(f64) -> f64,
    mu_low: f64,
    mu_high: f64,
) -> f64 {
    let lo = mu_low.floor() as i64;
    let hi = mu_high.ceil() as i64;
    let mut best = mu_low.floor() + 0.5;
    let mut best_err = f64::INFINITY;
    // err_low decreases and err_high increases in k, so the minimax sits at
    // the sign change; binary search then refine around it.
    let (mut a, mut b) = (lo, hi.max(lo + 1));
    while b - a > 1 {
        let mid = (a + b) / 2;
        let k = mid as f64 + 0.5;
        if err_low(k) > err_high(k) {
            a = mid;
        } else {
            b = mid;
        }
    }
    for cand in (a - 1)..=(b + 1) {
        let k = cand as f64 + 0.5;
        let err = err_low(k).max(err_high(k));
        if err < best_err {
            best_err = err;
            best = k;
        }
    }
    best
}

fn low_cutoff_gaussian(stats_pp: &CountingStats, mu_e: f64, sd_e: f64) -> f64 {
    let sd_pp = stats_pp.sd();
    if sd_pp > 1e-9 {
        (sd_e * stats_pp.mean + sd_pp * mu_e) / (sd_e + sd_pp)
    } else {
        // A dark ++ branch is excluded by any count at all.
        0.5f64.min(0.5 * mu_e)
    }
}

/// Branch weight of the entangled pair in the initial four-branch
/// superposition; the protocol heralds with this probability in the ideal
/// noiseless limit.
pub fn ideal_success_probability() -> f64 {
    0.5
}

/// The corresponding figure for single-photon heralding schemes.
pub const SINGLE_PHOTON_SUCCESS_REFERENCE: f64 = 0.25;

/// One experimental platform: absolute relaxation time and photon
/// efficiencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPreset {
    pub name: String,
    pub t1_seconds: f64,
    pub collection_eff: f64,
    pub detection_eff: f64,
    pub coherence_time_seconds: f64,
}

impl ExperimentPreset {
    pub fn eta(&self) -> f64 {
        self.collection_eff * self.detection_eff
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        let ok = self.t1_seconds > 0.0
            && self.coherence_time_seconds > 0.0
            && self.collection_eff > 0.0
            && self.detection_eff > 0.0
            && self.eta() <= 1.0;
        if !ok {
            return Err(ProtocolError::PresetInvalid(format!(
                "preset '{}' must have positive times and efficiencies with eta <= 1",
                self.name
            )));
        }
        Ok(())
    }

    /// Load one of the presets shipped as data files
    /// (`trapped_ion`, `nv_center`, `quantum_dot`).
    pub fn builtin(name: &str) -> Result<Self, ProtocolError> {
        let text = match name {
            "trapped_ion" => include_str!("../presets/trapped_ion.toml"),
            "nv_center" => include_str!("../presets/nv_center.toml"),
            "quantum_dot" => include_str!("../presets/quantum_dot.toml"),
            other => return Err(ProtocolError::PresetNotFound(other.to_string())),
        };
        let preset: ExperimentPreset = toml::from_str(text)
            .map_err(|e| ProtocolError::PresetInvalid(format!("{name}: {e}")))?;
        preset.validate()?;
        Ok(preset)
    }

    pub fn builtin_names() -> [&'static str; 3] {
        ["trapped_ion", "nv_center", "quantum_dot"]
    }
}

/// Average time to herald one entangled pair.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EntanglementTime {
    /// Half-cycle duration `kappa t1 / eta` in units of `t1`.
    pub tau_over_t1: f64,
    /// One attempt lasts two half-cycles (spin echo at the midpoint).
    pub attempt_over_t1: f64,
    /// `(1 / p_ideal) * 2 tau = 4 kappa / eta` in units of `t1`.
    pub avg_time_over_t1: f64,
    pub avg_time_seconds: f64,
    pub avg_time_ms: f64,
    pub avg_time_us: f64,
    pub ratio_to_coherence: f64,
}

/// Average entanglement time for a preset at operating point
/// `kappa = eta t / t1` (the default operating point is 130).
pub fn avg_entanglement_time(
    preset: &ExperimentPreset,
    kappa: f64,
) -> Result<EntanglementTime, ProtocolError> {
    preset.validate()?;
    if !(kappa > 0.0) {
        return Err(ProtocolError::InvalidStats(format!(
            "kappa must be > 0, got {kappa}"
        )));
    }
    let eta = preset.eta();
    let tau_over_t1 = kappa / eta;
    let avg_time_over_t1 = 2.0 * tau_over_t1 / ideal_success_probability();
    let avg_time_seconds = avg_time_over_t1 * preset.t1_seconds;
    Ok(EntanglementTime {
        tau_over_t1,
        attempt_over_t1: 2.0 * tau_over_t1,
        avg_time_over_t1,
        avg_time_seconds,
        avg_time_ms: avg_time_seconds * 1e3,
        avg_time_us: avg_time_seconds * 1e6,
        ratio_to_coherence: avg_time_seconds / preset.coherence_time_seconds,
    })
}

/// Smallest `kappa = eta t / t1` reaching the target Gaussian confidence at
/// drive `x`, evaluated at unit efficiency with the default network.
pub fn kappa_search(x: f64, target_confidence: f64) -> Result<f64, ProtocolError> {
    if !(0.5..1.0).contains(&target_confidence) {
        return Err(ProtocolError::SearchFailed(format!(
            "target confidence must lie in [0.5, 1), got {target_confidence}"
        )));
    }
    let params = DriveParams::new(x, 1.0, 1.0).map_err(CountingError::from)?;
    let model = build_network(&ModeNetwork::canonical())
        .map_err(|e| ProtocolError::SearchFailed(e.to_string()))?;
    let confidence_at = |kappa: f64| -> Result<f64, ProtocolError> {
        let stats = |state| counting::counting_stats(state, &params, &params, kappa, &model);
        let e = stats(JointSpinState::PM)?;
        let mm = stats(JointSpinState::MM)?;
        let pp = stats(JointSpinState::PP)?;
        match classify(&e, &mm, &pp, ClassifyMethod::Gaussian) {
            Ok(r) => Ok(r.confidence),
            Err(ProtocolError::Indistinguishable { .. }) => Ok(0.5),
            Err(e) => Err(e),
        }
    };
    let (mut lo, mut hi) = (1.0, 4.0);
    while confidence_at(hi)? < target_confidence {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(ProtocolError::SearchFailed(format!(
                "confidence target {target_confidence} unreachable at x = {x}"
            )));
        }
    }
    while hi - lo > 0.5 {
        let mid = 0.5 * (lo + hi);
        if confidence_at(mid)? >= target_confidence {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Sensitivity of the protocol to unequal qubits.
#[derive(Debug, Clone, Serialize)]
pub struct MismatchReport {
    /// Mean counts for (PP, PM, MP, MM) at the observation time.
    pub means: [f64; 4],
    pub sd_pm: f64,
    pub sd_mp: f64,
    /// `|n_PM - n_MP|`.
    pub signal_difference: f64,
    /// Signal difference in units of the entangled-branch count noise.
    pub count_criterion_ratio: f64,
    /// Relative relaxation-rate discrepancy `|g1 - g2| / mean(g)`.
    pub rate_discrepancy: f64,
    /// Smallest rate discrepancy resolvable from the full fluorescence
    /// record, `1 / sqrt(eta t / t1)`.
    pub resolution: f64,
    /// `rate_discrepancy / resolution`; the record starts to distinguish the
    /// branches (and the heralded coherence starts to degrade) above one.
    pub criterion_ratio: f64,
    pub passes_coherence_criterion: bool,
    pub max_tolerable_rate_discrepancy: f64,
    /// Same bound expressed as a relative discrepancy of `t1`.
    pub max_tolerable_t1_discrepancy: f64,
    /// Both drives at or above the saturation knee.
    pub large_field: bool,
}

/// Evaluate the qubit-mismatch criterion at observation time `t`.
///
/// All four state means come from the general-time integrals. The coherence
/// criterion compares the relative relaxation-rate discrepancy against the
/// statistical resolution `1/sqrt(eta t / t1)` of the collected fluorescence
/// record; the raw count-noise ratio `|n_PM - n_MP| / dn` is reported
/// alongside.
pub fn mismatch_analysis(
    params1: &DriveParams,
    params2: &DriveParams,
    t: f64,
    model: &DetectionModel,
) -> Result<MismatchReport, ProtocolError> {
    let stats = |state| counting::counting_stats(state, params1, params2, t, model);
    let pp = stats(JointSpinState::PP)?;
    let pm = stats(JointSpinState::PM)?;
    let mp = stats(JointSpinState::MP)?;
    let mm = stats(JointSpinState::MM)?;

    let signal_difference = (pm.mean - mp.mean).abs();
    let sd_e = 0.5 * (pm.sd() + mp.sd());
    let count_criterion_ratio = if sd_e > 0.0 {
        signal_difference / sd_e
    } else {
        0.0
    };

    let gamma = [1.0 / params1.t1, 1.0 / params2.t1];
    let gamma_mean = 0.5 * (gamma[0] + gamma[1]);
    let rate_discrepancy = (gamma[0] - gamma[1]).abs() / gamma_mean;
    let eta_mean = 0.5 * (params1.efficiency + params2.efficiency);
    let record = eta_mean * t * gamma_mean;
    let resolution = if record > 0.0 {
        1.0 / record.sqrt()
    } else {
        f64::INFINITY
    };
    let criterion_ratio = rate_discrepancy / resolution;

    // Invert d/(1+d) relative-rate form back to a t1 discrepancy.
    let max_rate = resolution.min(0.999);
    let max_t1 = max_rate / (1.0 - max_rate);

    Ok(MismatchReport {
        means: [pp.mean, pm.mean, mp.mean, mm.mean],
        sd_pm: pm.sd(),
        sd_mp: mp.sd(),
        signal_difference,
        count_criterion_ratio,
        rate_discrepancy,
        resolution,
        criterion_ratio,
        passes_coherence_criterion: criterion_ratio <= 1.0,
        max_tolerable_rate_discrepancy: max_rate,
        max_tolerable_t1_discrepancy: max_t1,
        large_field: params1.rabi.min(params2.rabi) >= 3.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::ModeNetwork;

    fn stats(state: JointSpinState, mean: f64, variance: f64) -> CountingStats {
        CountingStats {
            state,
            t: 130.0,
            mean,
            variance,
            q: if mean > 0.0 {
                Some(variance / mean - 1.0)
            } else {
                None
            },
        }
    }

    fn operating_point(eta_t_over_t1: f64, x: f64) -> (CountingStats, CountingStats, CountingStats) {
        // Long-time means with near-Poissonian variances.
        let e = counting::mean_longtime(JointSpinState::PM, x, 1.0, eta_t_over_t1).unwrap();
        let mm = counting::mean_longtime(JointSpinState::MM, x, 1.0, eta_t_over_t1).unwrap();
        (
            stats(JointSpinState::PM, e, e),
            stats(JointSpinState::MM, mm, mm),
            stats(JointSpinState::PP, 0.0, 0.0),
        )
    }

    #[test]
    fn default_operating_point_exceeds_ninety_percent() {
        let (e, mm, pp) = operating_point(130.0, 3.0);
        let r = classify(&e, &mm, &pp, ClassifyMethod::Gaussian).unwrap();
        assert!(r.confidence > 0.90, "confidence {}", r.confidence);
        assert!(r.threshold > e.mean && r.threshold < mm.mean);
        let rp = classify(&e, &mm, &pp, ClassifyMethod::Poisson).unwrap();
        assert!(rp.confidence > 0.90, "poisson confidence {}", rp.confidence);
    }

    #[test]
    fn identical_distributions_are_rejected() {
        let (e, _, pp) = operating_point(130.0, 3.0);
        let twin = e;
        assert!(matches!(
            classify(&e, &twin, &pp, ClassifyMethod::Gaussian),
            Err(ProtocolError::MeansOutOfOrder { .. })
        ));
        let barely = stats(JointSpinState::MM, e.mean + 0.1, e.mean);
        assert!(matches!(
            classify(&e, &barely, &pp, ClassifyMethod::Gaussian),
            Err(ProtocolError::Indistinguishable { .. })
        ));
    }

    #[test]
    fn poisson_method_depends_only_on_means() {
        let (e, mm, pp) = operating_point(130.0, 3.0);
        let mut e_weird = e;
        e_weird.variance = 2.0 * e.variance;
        let mut mm_weird = mm;
        mm_weird.variance = 0.5 * mm.variance;
        let a = classify(&e, &mm, &pp, ClassifyMethod::Poisson).unwrap();
        let b = classify(&e_weird, &mm_weird, &pp, ClassifyMethod::Poisson).unwrap();
        assert_eq!(a.threshold, b.threshold);
        assert_eq!(a.confidence, b.confidence);
    }

    #[test]
    fn confidence_grows_with_operating_time() {
        // Too little signal: the distributions overlap within one sd.
        let (e, mm, pp) = operating_point(40.0, 3.0);
        assert!(matches!(
            classify(&e, &mm, &pp, ClassifyMethod::Gaussian),
            Err(ProtocolError::Indistinguishable { .. })
        ));
        let mut prev = 0.0;
        for &kappa in &[80.0, 130.0, 260.0, 520.0] {
            let (e, mm, pp) = operating_point(kappa, 3.0);
            let r = classify(&e, &mm, &pp, ClassifyMethod::Gaussian).unwrap();
            assert!(r.confidence > prev, "kappa {kappa}");
            prev = r.confidence;
        }
    }

    #[test]
    fn ideal_success_probability_is_one_half() {
        assert_eq!(ideal_success_probability(), 0.5);
        assert_eq!(SINGLE_PHOTON_SUCCESS_REFERENCE, 0.25);
        // The reported p_success folds in the acceptance, never the 1/2.
        let (e, mm, pp) = operating_point(130.0, 3.0);
        let r = classify(&e, &mm, &pp, ClassifyMethod::Gaussian).unwrap();
        assert!(r.p_success <= 0.5 && r.p_success > 0.45);
    }

    #[test]
    fn entanglement_times_match_preset_scales() {
        let ion = ExperimentPreset::builtin("trapped_ion").unwrap();
        let t = avg_entanglement_time(&ion, 130.0).unwrap();
        assert!((t.avg_time_over_t1 - 1.733e5).abs() / 1.733e5 < 0.01);
        assert!(
            (t.avg_time_ms - 1.4).abs() < 0.14,
            "ion avg {} ms",
            t.avg_time_ms
        );

        let qd = ExperimentPreset::builtin("quantum_dot").unwrap();
        let t = avg_entanglement_time(&qd, 130.0).unwrap();
        assert!(
            (t.avg_time_us - 5.2).abs() < 0.52,
            "qd avg {} us",
            t.avg_time_us
        );

        let nv = ExperimentPreset::builtin("nv_center").unwrap();
        let t = avg_entanglement_time(&nv, 130.0).unwrap();
        assert!(
            t.avg_time_ms > 0.5 && t.avg_time_ms < 10.0,
            "nv avg {} ms",
            t.avg_time_ms
        );
    }

    #[test]
    fn entanglement_time_scales_exactly() {
        let base = ExperimentPreset {
            name: "test".into(),
            t1_seconds: 1e-9,
            collection_eff: 0.1,
            detection_eff: 0.5,
            coherence_time_seconds: 1.0,
        };
        let t0 = avg_entanglement_time(&base, 130.0).unwrap();
        // Unit efficiency: 4 kappa t1.
        let unit = ExperimentPreset {
            collection_eff: 1.0,
            detection_eff: 1.0,
            ..base.clone()
        };
        let tu = avg_entanglement_time(&unit, 130.0).unwrap();
        assert!((tu.avg_time_over_t1 - 520.0).abs() < 1e-9);
        // 1/eta scaling.
        assert!((t0.avg_time_over_t1 * base.eta() - tu.avg_time_over_t1).abs() < 1e-9);
        // Linear in kappa and t1.
        let t2 = avg_entanglement_time(&base, 260.0).unwrap();
        assert!((t2.avg_time_over_t1 - 2.0 * t0.avg_time_over_t1).abs() < 1e-9);
    }

    #[test]
    fn kappa_search_reproduces_headline_number() {
        // At x = 3 the 90% level is crossed well below 130, consistent with
        // the operating point being "more than 90%".
        let kappa = kappa_search(3.0, 0.90).unwrap();
        assert!(kappa < 130.0, "kappa {kappa}");
        let kappa96 = kappa_search(3.0, 0.957).unwrap();
        assert!((kappa96 - 130.0).abs() < 15.0, "kappa {kappa96}");
    }

    #[test]
    fn mismatch_identical_qubits_is_symmetric() {
        let p = DriveParams::new(4.0, 1.0, 1.0).unwrap();
        let model = build_network(&ModeNetwork::canonical()).unwrap();
        let r = mismatch_analysis(&p, &p, 130.0, &model).unwrap();
        assert!(
            r.signal_difference <= 1e-12 * r.means[1],
            "diff {}",
            r.signal_difference
        );
        assert_eq!(r.rate_discrepancy, 0.0);
        assert!(r.passes_coherence_criterion);
        assert!(r.large_field);
    }

    #[test]
    fn mismatch_boundary_sits_near_ten_percent() {
        let model = build_network(&ModeNetwork::canonical()).unwrap();
        let p1 = DriveParams::new(5.0, 1.0, 1.0).unwrap();
        let p2 = DriveParams::new(5.5, 1.1, 1.0).unwrap(); // same laser, t1' = 1.1 t1
        let r = mismatch_analysis(&p1, &p2, 130.0, &model).unwrap();
        assert!(
            r.criterion_ratio > 0.8 && r.criterion_ratio < 1.2,
            "criterion ratio {}",
            r.criterion_ratio
        );
        assert!(
            r.max_tolerable_t1_discrepancy > 0.07 && r.max_tolerable_t1_discrepancy < 0.13,
            "tolerable {}",
            r.max_tolerable_t1_discrepancy
        );
    }

    #[test]
    fn mismatch_is_insensitive_to_rabi_frequency() {
        let model = build_network(&ModeNetwork::canonical()).unwrap();
        let p1 = DriveParams::new(5.0, 1.0, 1.0).unwrap();
        let p2 = DriveParams::new(10.0, 1.0, 1.0).unwrap(); // Omega' = 2 Omega
        let r = mismatch_analysis(&p1, &p2, 130.0, &model).unwrap();
        let rel = r.signal_difference / r.means[1];
        assert!(rel < 0.03, "relative mean shift {rel}");
        assert!(r.rate_discrepancy == 0.0);
    }

    #[test]
    fn dark_transition_background_barely_moves_confidence() {
        // Background at 1% of the MM rate.
        let model = build_network(&ModeNetwork::canonical()).unwrap();
        let x = 3.0;
        let t = 130.0;
        let clean = DriveParams::new(x, 1.0, 1.0).unwrap();
        let mm_rate = counting::mean_longtime(JointSpinState::MM, x, 1.0, 1.0).unwrap();
        let noisy = clean.with_background(0.01 * mm_rate).unwrap();
        let conf = |p: &DriveParams| {
            let stats = |s| counting::counting_stats(s, p, p, t, &model).unwrap();
            classify(
                &stats(JointSpinState::PM),
                &stats(JointSpinState::MM),
                &stats(JointSpinState::PP),
                ClassifyMethod::Gaussian,
            )
            .unwrap()
            .confidence
        };
        let drop = conf(&clean) - conf(&noisy);
        assert!(drop.abs() < 0.01, "confidence drop {drop}");
    }

    #[test]
    fn unknown_preset_is_an_error() {
        assert!(matches!(
            ExperimentPreset::builtin("ruby_maser"),
            Err(ProtocolError::PresetNotFound(_))
        ));
    }
}
