//! Closed-form win statistics for normally distributed outcomes.
//!
//! Covers three families of results:
//!
//! * the win probability of one normal variate over another and the WR, WO
//!   and NB it implies;
//! * the attenuation of a slope-based WR when per-subject slopes are
//!   estimated with measurement error, either by least squares over all
//!   visits (LSME) or by mean change between baseline and the final visit
//!   (MC), together with the design sweeps over slope SD, follow-up and
//!   number of visits;
//! * stratum-specific versus marginal WR for a mixture of normal strata,
//!   which demonstrates non-collapsibility.
//!
//! All functions are pure and generic over [`Scalar`].

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error("standard deviation `{name}` must be positive, got {value}")]
    NonPositiveSd { name: &'static str, value: f64 },
    #[error("parameter `{name}` must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("win probability {0} is outside the open interval (0, 1)")]
    ThetaOutOfDomain(f64),
    #[error("measurement times must start at 0, be strictly increasing and contain at least two points")]
    InvalidSchedule,
    #[error("follow-up time must be positive, got {0}")]
    NonPositiveFollowup(f64),
    #[error("slope estimator variance is zero with a non-zero slope difference; the win ratio is unbounded")]
    DegenerateVariance,
    #[error("stratum weights for the {arm} arm must be non-negative and sum to 1, got sum {sum}")]
    WeightSum { arm: &'static str, sum: f64 },
    #[error("at least one stratum is required")]
    NoStrata,
    #[error("invalid sweep grid point {x} for axis {axis}: {reason}")]
    InvalidGridPoint { axis: SweepAxis, x: f64, reason: TheoryErrorReason },
}

/// Reason attached to [`TheoryError::InvalidGridPoint`].
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryErrorReason(pub String);

impl std::fmt::Display for TheoryErrorReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn finite<T: Scalar>(name: &'static str, v: T) -> Result<T, TheoryError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(TheoryError::NonFinite { name, value: v.to_f64().unwrap_or(f64::NAN) })
    }
}

fn positive_sd<T: Scalar>(name: &'static str, v: T) -> Result<T, TheoryError> {
    finite(name, v)?;
    if v > T::zero() {
        Ok(v)
    } else {
        Err(TheoryError::NonPositiveSd { name, value: v.to_f64().unwrap_or(f64::NAN) })
    }
}

fn nonnegative_sd<T: Scalar>(name: &'static str, v: T) -> Result<T, TheoryError> {
    finite(name, v)?;
    if v >= T::zero() {
        Ok(v)
    } else {
        Err(TheoryError::NonPositiveSd { name, value: v.to_f64().unwrap_or(f64::NAN) })
    }
}

/// Standard normal distribution function, Φ(x) = erfc(−x/√2)/2.
#[inline]
pub fn std_normal_cdf<T: Scalar>(x: T) -> T {
    T::lit(0.5) * (-x * T::FRAC_1_SQRT_2()).erfc()
}

/// Outcome distributions of the two arms, `Y1 ~ N(mu1, sigma1²)` for
/// treatment and `Y0 ~ N(mu0, sigma0²)` for the comparator. Larger is better.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalArmPair<T> {
    pub mu1: T,
    pub mu0: T,
    pub sigma1: T,
    pub sigma0: T,
}

impl<T: Scalar> NormalArmPair<T> {
    pub fn new(mu1: T, mu0: T, sigma1: T, sigma0: T) -> Result<Self, TheoryError> {
        Ok(Self {
            mu1: finite("mu1", mu1)?,
            mu0: finite("mu0", mu0)?,
            sigma1: positive_sd("sigma1", sigma1)?,
            sigma0: positive_sd("sigma0", sigma0)?,
        })
    }

    /// Standardized mean difference (μ1 − μ0)/√(σ1² + σ0²).
    pub fn standardized_difference(&self) -> T {
        (self.mu1 - self.mu0) / self.sigma1.hypot(self.sigma0)
    }
}

/// θ = P(Y1 > Y0) for independent normal outcomes.
pub fn win_prob_normal<T: Scalar>(p: &NormalArmPair<T>) -> T {
    std_normal_cdf(p.standardized_difference())
}

/// Win statistics implied by a tie-free win probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaStats<T> {
    pub theta: T,
    pub win_ratio: T,
    pub win_odds: T,
    pub net_benefit: T,
}

/// WR = WO = θ/(1 − θ) and NB = 2θ − 1 for a continuous outcome.
pub fn stats_from_theta<T: Scalar>(theta: T) -> Result<ThetaStats<T>, TheoryError> {
    if !(theta > T::zero() && theta < T::one()) {
        return Err(TheoryError::ThetaOutOfDomain(theta.to_f64().unwrap_or(f64::NAN)));
    }
    let wr = theta / (T::one() - theta);
    Ok(ThetaStats {
        theta,
        win_ratio: wr,
        win_odds: wr,
        net_benefit: T::lit(2.0) * theta - T::one(),
    })
}

/// Design of a longitudinal GFR trial with a random-slope measurement model.
///
/// Times are in years; slopes in ml/min/1.73m²/yr; `sigma_e` in ml/min/1.73m².
/// Less negative slopes are better.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeDesign<T> {
    measurement_times: Vec<T>,
    pub sigma_s: T,
    pub sigma_e: T,
    pub beta_treat: T,
    pub beta_ctrl: T,
}

impl<T: Scalar> SlopeDesign<T> {
    pub fn new(
        measurement_times: Vec<T>,
        sigma_s: T,
        sigma_e: T,
        beta_treat: T,
        beta_ctrl: T,
    ) -> Result<Self, TheoryError> {
        validate_schedule(&measurement_times)?;
        Ok(Self {
            measurement_times,
            sigma_s: nonnegative_sd("sigma_s", sigma_s)?,
            sigma_e: nonnegative_sd("sigma_e", sigma_e)?,
            beta_treat: finite("beta_treat", beta_treat)?,
            beta_ctrl: finite("beta_ctrl", beta_ctrl)?,
        })
    }

    /// `n_visits` equally spaced visits over `[0, followup]`, baseline included.
    pub fn equally_spaced(
        followup: T,
        n_visits: usize,
        sigma_s: T,
        sigma_e: T,
        beta_treat: T,
        beta_ctrl: T,
    ) -> Result<Self, TheoryError> {
        Self::new(equally_spaced_times(followup, n_visits)?, sigma_s, sigma_e, beta_treat, beta_ctrl)
    }

    /// Two-year CKD trial with quarterly GFR (9 visits including baseline),
    /// σ_s = 3, σ_e = 5.18 and mean slopes −2 (treatment) vs −3 (control).
    pub fn ckd_reference() -> Self {
        Self::equally_spaced(T::lit(2.0), 9, T::lit(3.0), T::lit(5.18), T::lit(-2.0), T::lit(-3.0))
            .expect("reference design is valid")
    }

    pub fn measurement_times(&self) -> &[T] {
        &self.measurement_times
    }

    pub fn n_visits(&self) -> usize {
        self.measurement_times.len()
    }

    /// Elapsed time between baseline and the final visit.
    pub fn followup(&self) -> T {
        *self.measurement_times.last().unwrap() - self.measurement_times[0]
    }

    pub fn slope_difference(&self) -> T {
        self.beta_treat - self.beta_ctrl
    }

    pub fn with_slope_sd(&self, sigma_s: T) -> Result<Self, TheoryError> {
        Ok(Self { sigma_s: nonnegative_sd("sigma_s", sigma_s)?, ..self.clone() })
    }

    /// Same number of visits, re-spaced over the new follow-up.
    pub fn with_followup(&self, followup: T) -> Result<Self, TheoryError> {
        Ok(Self { measurement_times: equally_spaced_times(followup, self.n_visits())?, ..self.clone() })
    }

    /// Same follow-up, re-spaced with `n_visits` visits.
    pub fn with_visits(&self, n_visits: usize) -> Result<Self, TheoryError> {
        Ok(Self { measurement_times: equally_spaced_times(self.followup(), n_visits)?, ..self.clone() })
    }
}

fn validate_schedule<T: Scalar>(times: &[T]) -> Result<(), TheoryError> {
    if times.len() < 2 || times[0] != T::zero() || times.iter().any(|t| !t.is_finite()) {
        return Err(TheoryError::InvalidSchedule);
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(TheoryError::InvalidSchedule);
    }
    Ok(())
}

/// Visit times `0, T/(n−1), …, T`.
pub fn equally_spaced_times<T: Scalar>(followup: T, n_visits: usize) -> Result<Vec<T>, TheoryError> {
    if !(followup > T::zero()) || !followup.is_finite() {
        return Err(TheoryError::NonPositiveFollowup(followup.to_f64().unwrap_or(f64::NAN)));
    }
    if n_visits < 2 {
        return Err(TheoryError::InvalidSchedule);
    }
    let last = T::from_usize(n_visits - 1).unwrap();
    Ok((0..n_visits)
        .map(|k| if k == n_visits - 1 { followup } else { followup * T::from_usize(k).unwrap() / last })
        .collect())
}

/// Σ (t_k − t̄)² over the schedule.
pub fn time_sum_of_squares<T: Scalar>(times: &[T]) -> T {
    let n = T::from_usize(times.len()).unwrap();
    let mean = times.iter().fold(T::zero(), |a, &t| a + t) / n;
    times.iter().fold(T::zero(), |a, &t| a + (t - mean) * (t - mean))
}

/// Variance of a per-subject least-squares slope: σ_s² + σ_e² / Σ(t_k − t̄)².
pub fn lsme_slope_variance<T: Scalar>(d: &SlopeDesign<T>) -> Result<T, TheoryError> {
    let sxx = time_sum_of_squares(&d.measurement_times);
    if !(sxx > T::zero()) {
        return Err(TheoryError::InvalidSchedule);
    }
    Ok(d.sigma_s * d.sigma_s + d.sigma_e * d.sigma_e / sxx)
}

/// Variance of a mean-change slope over duration `followup`: σ_s² + 2σ_e²/T².
pub fn mc_slope_variance<T: Scalar>(sigma_s: T, sigma_e: T, followup: T) -> Result<T, TheoryError> {
    if !(followup > T::zero()) || !followup.is_finite() {
        return Err(TheoryError::NonPositiveFollowup(followup.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(sigma_s * sigma_s + T::lit(2.0) * sigma_e * sigma_e / (followup * followup))
}

/// How per-subject slopes enter the comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlopeMethod {
    /// Latent slopes observed without error.
    True,
    /// Per-subject ordinary least squares over all visits.
    Lsme,
    /// (final − baseline) / follow-up.
    Mc,
}

impl SlopeMethod {
    pub const ALL: [SlopeMethod; 3] = [SlopeMethod::True, SlopeMethod::Lsme, SlopeMethod::Mc];

    pub fn name(self) -> &'static str {
        match self {
            SlopeMethod::True => "true",
            SlopeMethod::Lsme => "lsme",
            SlopeMethod::Mc => "mc",
        }
    }
}

impl std::str::FromStr for SlopeMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "true" => Ok(SlopeMethod::True),
            "lsme" | "ls" => Ok(SlopeMethod::Lsme),
            "mc" => Ok(SlopeMethod::Mc),
            other => Err(format!("unknown slope method `{other}` (expected true, lsme or mc)")),
        }
    }
}

/// Variance of the slope used by `method` under design `d`.
pub fn slope_variance<T: Scalar>(d: &SlopeDesign<T>, method: SlopeMethod) -> Result<T, TheoryError> {
    match method {
        SlopeMethod::True => Ok(d.sigma_s * d.sigma_s),
        SlopeMethod::Lsme => lsme_slope_variance(d),
        SlopeMethod::Mc => mc_slope_variance(d.sigma_s, d.sigma_e, d.followup()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeWr<T> {
    pub method: SlopeMethod,
    pub variance: T,
    pub stats: ThetaStats<T>,
}

/// Slope-based WR: θ = Φ(Δβ / √(2·Var)) with Var taken from `method`.
pub fn slope_wr<T: Scalar>(d: &SlopeDesign<T>, method: SlopeMethod) -> Result<SlopeWr<T>, TheoryError> {
    let variance = slope_variance(d, method)?;
    let diff = d.slope_difference();
    let theta = if variance > T::zero() {
        std_normal_cdf(diff / (T::lit(2.0) * variance).sqrt())
    } else if diff == T::zero() {
        T::lit(0.5)
    } else {
        return Err(TheoryError::DegenerateVariance);
    };
    Ok(SlopeWr { method, variance, stats: stats_from_theta(theta)? })
}

/// Relative shortfall of an estimated-slope WR against the latent-slope WR,
/// `1 − WR_method / WR_true`.
pub fn attenuation<T: Scalar>(d: &SlopeDesign<T>, method: SlopeMethod) -> Result<T, TheoryError> {
    let truth = slope_wr(d, SlopeMethod::True)?.stats.win_ratio;
    let est = slope_wr(d, method)?.stats.win_ratio;
    Ok(T::one() - est / truth)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    SlopeSd,
    Followup,
    NMeasurements,
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SweepAxis::SlopeSd => "slope_sd",
            SweepAxis::Followup => "followup",
            SweepAxis::NMeasurements => "n_measurements",
        })
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "slope_sd" => Ok(SweepAxis::SlopeSd),
            "followup" => Ok(SweepAxis::Followup),
            "n_measurements" => Ok(SweepAxis::NMeasurements),
            other => Err(format!("unknown sweep axis `{other}` (expected slope-sd, followup or n-measurements)")),
        }
    }
}

/// One row of a design sweep. Column order matches the CSV layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow<T> {
    pub x: T,
    pub theta_true: T,
    pub wr_true: T,
    pub theta_lsme: T,
    pub wr_lsme: T,
    pub theta_mc: T,
    pub wr_mc: T,
}

pub const SWEEP_COLUMNS: [&str; 7] = ["x", "theta_true", "wr_true", "theta_lsme", "wr_lsme", "theta_mc", "wr_mc"];

impl<T: Scalar> SweepRow<T> {
    pub fn values(&self) -> [T; 7] {
        [self.x, self.theta_true, self.wr_true, self.theta_lsme, self.wr_lsme, self.theta_mc, self.wr_mc]
    }
}

fn design_at<T: Scalar>(d: &SlopeDesign<T>, axis: SweepAxis, x: T) -> Result<SlopeDesign<T>, TheoryError> {
    let bad = |reason: &str| TheoryError::InvalidGridPoint {
        axis,
        x: x.to_f64().unwrap_or(f64::NAN),
        reason: TheoryErrorReason(reason.to_string()),
    };
    if !x.is_finite() {
        return Err(bad("not finite"));
    }
    match axis {
        SweepAxis::SlopeSd => {
            if x < T::zero() {
                return Err(bad("slope SD must be non-negative"));
            }
            d.with_slope_sd(x)
        }
        SweepAxis::Followup => {
            if !(x > T::zero()) {
                return Err(bad("follow-up must be positive"));
            }
            d.with_followup(x)
        }
        SweepAxis::NMeasurements => {
            if x.fract() != T::zero() || x < T::lit(2.0) {
                return Err(bad("number of measurements must be an integer >= 2"));
            }
            d.with_visits(x.to_usize().ok_or_else(|| bad("too many measurements"))?)
        }
    }
}

fn sweep_point<T: Scalar>(d: &SlopeDesign<T>, axis: SweepAxis, x: T) -> Result<SweepRow<T>, TheoryError> {
    let at = design_at(d, axis, x)?;
    let wrap = |e: TheoryError| match e {
        e @ TheoryError::InvalidGridPoint { .. } => e,
        other => TheoryError::InvalidGridPoint {
            axis,
            x: x.to_f64().unwrap_or(f64::NAN),
            reason: TheoryErrorReason(other.to_string()),
        },
    };
    let t = slope_wr(&at, SlopeMethod::True).map_err(wrap)?.stats;
    let l = slope_wr(&at, SlopeMethod::Lsme).map_err(wrap)?.stats;
    let m = slope_wr(&at, SlopeMethod::Mc).map_err(wrap)?.stats;
    Ok(SweepRow {
        x,
        theta_true: t.theta,
        wr_true: t.win_ratio,
        theta_lsme: l.theta,
        wr_lsme: l.win_ratio,
        theta_mc: m.theta,
        wr_mc: m.win_ratio,
    })
}

/// Evaluates the three slope WRs at each grid point of `axis`.
///
/// For the follow-up and visit-count axes the schedule is regenerated as
/// equally spaced visits including baseline. The whole grid is validated
/// before any row is returned.
pub fn sweep<T: Scalar>(d: &SlopeDesign<T>, axis: SweepAxis, grid: &[T]) -> Result<Vec<SweepRow<T>>, TheoryError> {
    grid.par_iter().map(|&x| sweep_point(d, axis, x)).collect()
}

/// One stratum of a normal mixture: `Y_s1 ~ N(mu1, sigma²)`, `Y_s0 ~ N(mu0, sigma²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct StratumSpec<T> {
    pub weight: T,
    pub mu1: T,
    pub mu0: T,
    pub sigma: T,
}

impl<T: Scalar> StratumSpec<T> {
    pub fn new(weight: T, mu1: T, mu0: T, sigma: T) -> Result<Self, TheoryError> {
        if !(weight >= T::zero() && weight <= T::one()) {
            return Err(TheoryError::WeightSum { arm: "treatment", sum: weight.to_f64().unwrap_or(f64::NAN) });
        }
        Ok(Self { weight, mu1: finite("mu1", mu1)?, mu0: finite("mu0", mu0)?, sigma: positive_sd("sigma", sigma)? })
    }
}

/// θ for the within-stratum comparison.
pub fn stratum_theta<T: Scalar>(s: &StratumSpec<T>) -> T {
    std_normal_cdf((s.mu1 - s.mu0) / (s.sigma * T::SQRT_2()))
}

/// WR_s = P(Y_s1 > Y_s0) / (1 − P(Y_s1 > Y_s0)).
pub fn stratum_wr<T: Scalar>(s: &StratumSpec<T>) -> Result<ThetaStats<T>, TheoryError> {
    positive_sd("sigma", s.sigma)?;
    stats_from_theta(stratum_theta(s))
}

fn check_weights<T: Scalar>(arm: &'static str, w: impl Iterator<Item = T>) -> Result<(), TheoryError> {
    let mut sum = T::zero();
    for v in w {
        if !(v >= T::zero()) {
            return Err(TheoryError::WeightSum { arm, sum: v.to_f64().unwrap_or(f64::NAN) });
        }
        sum = sum + v;
    }
    if (sum - T::one()).abs() > T::lit(1e-6) {
        return Err(TheoryError::WeightSum { arm, sum: sum.to_f64().unwrap_or(f64::NAN) });
    }
    Ok(())
}

/// Marginal WR when stratum membership is independent of arm and strata are
/// independent across arms: θ = Σ_k Σ_l P(Z_k1) P(Z_l0) P(Y_k1 > Y_l0).
///
/// The stratum weight is used for both arms.
pub fn marginal_wr<T: Scalar>(strata: &[StratumSpec<T>]) -> Result<ThetaStats<T>, TheoryError> {
    let w: Vec<T> = strata.iter().map(|s| s.weight).collect();
    marginal_wr_weighted(strata, &w, &w)
}

/// [`marginal_wr`] with separate stratum probabilities per arm.
pub fn marginal_wr_weighted<T: Scalar>(
    strata: &[StratumSpec<T>],
    treat_weights: &[T],
    ctrl_weights: &[T],
) -> Result<ThetaStats<T>, TheoryError> {
    if strata.is_empty() {
        return Err(TheoryError::NoStrata);
    }
    assert_eq!(strata.len(), treat_weights.len(), "one treatment weight per stratum");
    assert_eq!(strata.len(), ctrl_weights.len(), "one control weight per stratum");
    check_weights("treatment", treat_weights.iter().copied())?;
    check_weights("control", ctrl_weights.iter().copied())?;
    for s in strata {
        positive_sd("sigma", s.sigma)?;
    }
    let mut theta = T::zero();
    for (sk, &wk) in strata.iter().zip(treat_weights) {
        for (sl, &wl) in strata.iter().zip(ctrl_weights) {
            let z = (sk.mu1 - sl.mu0) / sk.sigma.hypot(sl.sigma);
            theta = theta + wk * wl * std_normal_cdf(z);
        }
    }
    stats_from_theta(theta)
}

/// Row of a stratum-separation sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeparationRow<T> {
    pub x: T,
    pub theta_stratum: T,
    pub wr_stratum: T,
    pub theta_marginal: T,
    pub wr_marginal: T,
}

pub const SEPARATION_COLUMNS: [&str; 5] = ["x", "theta_stratum", "wr_stratum", "theta_marginal", "wr_marginal"];

/// Dilution of the marginal WR as equally weighted strata move apart.
///
/// Stratum `k` (of `n_strata`) has means `(mu1 + k·x, mu0 + k·x)` and common
/// SD `sigma`, so every stratum has the same WR while the marginal WR falls
/// as `x` grows.
pub fn separation_sweep<T: Scalar>(
    mu1: T,
    mu0: T,
    sigma: T,
    n_strata: usize,
    grid: &[T],
) -> Result<Vec<SeparationRow<T>>, TheoryError> {
    if n_strata == 0 {
        return Err(TheoryError::NoStrata);
    }
    let w = T::one() / T::from_usize(n_strata).unwrap();
    grid.iter()
        .map(|&x| {
            let strata: Vec<_> = (0..n_strata)
                .map(|k| {
                    let shift = x * T::from_usize(k).unwrap();
                    StratumSpec::new(w, mu1 + shift, mu0 + shift, sigma)
                })
                .collect::<Result<_, _>>()?;
            let s = stratum_wr(&strata[0])?;
            let m = marginal_wr(&strata)?;
            Ok(SeparationRow {
                x,
                theta_stratum: s.theta,
                wr_stratum: s.win_ratio,
                theta_marginal: m.theta,
                wr_marginal: m.win_ratio,
            })
        })
        .collect()
}
