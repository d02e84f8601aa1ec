//! Synthetic trials from the random-slope GFR model.
//!
//! Each subject has `Y(t) = b0 + b1·t + ε` with `b1 ~ N(β_arm, σ_s²)`,
//! `b0 ~ N(intercept_mean, intercept_sd²)` and `ε ~ N(0, σ_e²)` drawn
//! independently at every visit. Optional adverse-event components are
//! exponential with arm-specific hazards, independent of the slopes.
//!
//! Randomness: subject `i` of a trial (controls first, then treatment)
//! draws from ChaCha8 stream `i` of the scenario seed, in the order
//! intercept, slope, one time per event component, then one noise term per
//! visit. Replication `r` of a Monte Carlo run uses scenario seed
//! [`replication_seed`]`(seed, r)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hce::{Arm, ComponentSpec, Direction, HceDefinition, Observation, SubjectRecord};
use crate::theory::{slope_wr, SlopeDesign, SlopeMethod, TheoryError};
use crate::win_stats::{tally, win_statistics};

pub const MONTHS_PER_YEAR: f64 = 12.0;
/// Name of the slope component in exported datasets.
pub const SLOPE_COMPONENT: &str = "gfr_slope";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Design(#[from] TheoryError),
    #[error("n_per_arm must be at least 2, got {0}")]
    TooFewSubjects(usize),
    #[error("hazard for `{0}` must be a non-negative finite rate")]
    InvalidHazard(String),
    #[error("intercept parameters must be finite with non-negative SD")]
    InvalidIntercept,
    #[error("event component name `{0}` is empty, duplicated or reserved")]
    InvalidEventName(String),
    #[error("at least one replication is required")]
    NoReplications,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventComponent {
    pub name: String,
    /// Events per year.
    pub hazard_treat: f64,
    pub hazard_ctrl: f64,
    /// A terminal event (death) ends follow-up for every component.
    #[serde(default)]
    pub terminal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimScenario {
    pub design: SlopeDesign<f64>,
    pub n_per_arm: usize,
    pub intercept_mean: f64,
    pub intercept_sd: f64,
    pub event_components: Vec<EventComponent>,
    pub seed: u64,
    /// Let MC fall back to the last pre-event visit instead of flagging the subject.
    pub mc_use_last_visit: bool,
}

impl SimScenario {
    /// Events off, intercept 40 with SD 0.
    pub fn new(design: SlopeDesign<f64>, n_per_arm: usize, seed: u64) -> Result<Self, SimError> {
        let s = Self {
            design,
            n_per_arm,
            intercept_mean: 40.0,
            intercept_sd: 0.0,
            event_components: Vec::new(),
            seed,
            mc_use_last_visit: false,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_per_arm < 2 {
            return Err(SimError::TooFewSubjects(self.n_per_arm));
        }
        if !self.intercept_mean.is_finite() || !(self.intercept_sd >= 0.0) || !self.intercept_sd.is_finite() {
            return Err(SimError::InvalidIntercept);
        }
        let mut names = std::collections::HashSet::new();
        for e in &self.event_components {
            if e.name.is_empty() || e.name == SLOPE_COMPONENT || !names.insert(e.name.as_str()) {
                return Err(SimError::InvalidEventName(e.name.clone()));
            }
            for h in [e.hazard_treat, e.hazard_ctrl] {
                if !(h >= 0.0) || !h.is_finite() {
                    return Err(SimError::InvalidHazard(e.name.clone()));
                }
            }
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    /// Event components (terminal ones first) followed by the slope, with
    /// the horizon at the end of follow-up.
    pub fn hce(&self) -> HceDefinition {
        let mut comps: Vec<ComponentSpec> = Vec::new();
        for terminal in [true, false] {
            comps.extend(
                self.event_components
                    .iter()
                    .filter(|e| e.terminal == terminal)
                    .map(|e| ComponentSpec::time_to_event(e.name.clone())),
            );
        }
        comps.push(ComponentSpec::continuous(SLOPE_COMPONENT, Direction::HigherBetter, 0.0));
        HceDefinition::new(comps, self.design.followup() * MONTHS_PER_YEAR).expect("validated scenario")
    }

    /// HCE containing only the slope component.
    pub fn slope_hce(&self) -> HceDefinition {
        HceDefinition::new(
            vec![ComponentSpec::continuous(SLOPE_COMPONENT, Direction::HigherBetter, 0.0)],
            self.design.followup() * MONTHS_PER_YEAR,
        )
        .expect("valid horizon")
    }
}

/// JSON form of a scenario. Visits are either listed explicitly
/// (`measurement_times`, years) or generated from `followup` and `n_visits`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub measurement_times: Option<Vec<f64>>,
    #[serde(default)]
    pub followup: Option<f64>,
    #[serde(default)]
    pub n_visits: Option<usize>,
    pub sigma_s: f64,
    pub sigma_e: f64,
    pub beta_treat: f64,
    pub beta_ctrl: f64,
    pub n_per_arm: usize,
    #[serde(default = "default_intercept")]
    pub intercept_mean: f64,
    #[serde(default)]
    pub intercept_sd: f64,
    #[serde(default)]
    pub event_components: Vec<EventComponent>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mc_use_last_visit: bool,
}

fn default_intercept() -> f64 {
    40.0
}

impl ScenarioConfig {
    pub fn into_scenario(self) -> Result<SimScenario, SimError> {
        let design = match (self.measurement_times, self.followup, self.n_visits) {
            (Some(times), None, None) => {
                SlopeDesign::new(times, self.sigma_s, self.sigma_e, self.beta_treat, self.beta_ctrl)?
            }
            (None, Some(t), Some(n)) => {
                SlopeDesign::equally_spaced(t, n, self.sigma_s, self.sigma_e, self.beta_treat, self.beta_ctrl)?
            }
            _ => return Err(SimError::Design(TheoryError::InvalidSchedule)),
        };
        let s = SimScenario {
            design,
            n_per_arm: self.n_per_arm,
            intercept_mean: self.intercept_mean,
            intercept_sd: self.intercept_sd,
            event_components: self.event_components,
            seed: self.seed,
            mc_use_last_visit: self.mc_use_last_visit,
        };
        s.validate()?;
        Ok(s)
    }
}

/// Latent quantities for one subject. Times in years.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatentTruth {
    pub intercept: f64,
    pub slope: f64,
    /// Per event component, `None` when the hazard is zero.
    pub event_times: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulatedSubject {
    /// Event observations only; the slope component is added after estimation.
    pub record: SubjectRecord,
    /// GFR per scheduled visit, `None` after an event.
    pub gfr: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulatedTrial {
    pub visit_times: Vec<f64>,
    pub subjects: Vec<SimulatedSubject>,
    /// Aligned with `subjects`; never read by the estimators.
    pub truth: Vec<LatentTruth>,
}

fn normal(mean: f64, sd: f64) -> Normal<f64> {
    Normal::new(mean, sd).expect("validated SD")
}

pub fn simulate_trial(s: &SimScenario) -> Result<SimulatedTrial, SimError> {
    s.validate()?;
    let times = s.design.measurement_times().to_vec();
    let followup_years = s.design.followup();
    let n = s.n_per_arm;
    let (subjects, truth): (Vec<_>, Vec<_>) = (0..2 * n)
        .into_par_iter()
        .map(|i| {
            let (arm, k) = if i < n { (Arm::Control, i) } else { (Arm::Treatment, i - n) };
            let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
            rng.set_stream(i as u64);
            let beta = if arm == Arm::Treatment { s.design.beta_treat } else { s.design.beta_ctrl };
            let intercept = normal(s.intercept_mean, s.intercept_sd).sample(&mut rng);
            let slope = normal(beta, s.design.sigma_s).sample(&mut rng);
            let event_times: Vec<Option<f64>> = s
                .event_components
                .iter()
                .map(|e| {
                    let rate = if arm == Arm::Treatment { e.hazard_treat } else { e.hazard_ctrl };
                    (rate > 0.0).then(|| Exp::new(rate).expect("positive rate").sample(&mut rng))
                })
                .collect();
            let noise = normal(0.0, s.design.sigma_e);
            let errors: Vec<f64> = times.iter().map(|_| noise.sample(&mut rng)).collect();

            let terminal_end = s
                .event_components
                .iter()
                .zip(&event_times)
                .filter_map(|(e, t)| t.filter(|_| e.terminal))
                .fold(followup_years, f64::min);
            let first_event = event_times.iter().flatten().copied().filter(|&t| t <= terminal_end).fold(f64::INFINITY, f64::min);
            let tag = if arm == Arm::Treatment { "T" } else { "C" };
            let mut record = SubjectRecord::new(format!("{tag}{:05}", k + 1), arm, terminal_end * MONTHS_PER_YEAR);
            for (e, t) in s.event_components.iter().zip(&event_times) {
                let obs = match t {
                    Some(t) if *t <= terminal_end => Observation::Event { time: t * MONTHS_PER_YEAR, occurred: true },
                    _ => Observation::Event { time: record.followup_time, occurred: false },
                };
                record.observations.insert(e.name.clone(), obs);
            }
            let gfr = times
                .iter()
                .zip(&errors)
                .map(|(&t, &eps)| (t <= first_event).then_some(intercept + slope * t + eps))
                .collect();
            (SimulatedSubject { record, gfr }, LatentTruth { intercept, slope, event_times })
        })
        .unzip();
    Ok(SimulatedTrial { visit_times: times, subjects, truth })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FlaggedSubject {
    pub subject_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeEstimates {
    pub method: SlopeMethod,
    /// Aligned with the trial's subjects; `None` for flagged subjects.
    pub values: Vec<Option<f64>>,
    pub flagged: Vec<FlaggedSubject>,
}

/// Ordinary least-squares slope through `(t, y)` points.
pub fn ols_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let tm = points.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, y) in points {
        sxy += (t - tm) * (y - ym);
        sxx += (t - tm) * (t - tm);
    }
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Per-subject slopes. `True` reads the latent slopes.
pub fn estimate_slopes(trial: &SimulatedTrial, method: SlopeMethod, mc_use_last_visit: bool) -> SlopeEstimates {
    let mut flagged = Vec::new();
    let values = trial
        .subjects
        .iter()
        .zip(&trial.truth)
        .map(|(subj, truth)| {
            let points: Vec<(f64, f64)> =
                trial.visit_times.iter().zip(&subj.gfr).filter_map(|(&t, y)| y.map(|y| (t, y))).collect();
            let est = match method {
                SlopeMethod::True => Ok(truth.slope),
                SlopeMethod::Lsme => ols_slope(&points).ok_or("fewer than two usable visits"),
                SlopeMethod::Mc => {
                    let final_time = *trial.visit_times.last().unwrap();
                    match (subj.gfr.first().copied().flatten(), subj.gfr.last().copied().flatten()) {
                        (None, _) => Err("no baseline visit"),
                        (Some(y0), Some(y1)) => Ok((y1 - y0) / (final_time - trial.visit_times[0])),
                        (Some(y0), None) if mc_use_last_visit => match points.last() {
                            Some(&(t, y)) if points.len() >= 2 => Ok((y - y0) / (t - trial.visit_times[0])),
                            _ => Err("no visit after baseline"),
                        },
                        (Some(_), None) => Err("final visit missing after an event"),
                    }
                }
            };
            est.map_err(|reason| flagged.push(FlaggedSubject { subject_id: subj.record.subject_id.clone(), reason: reason.into() }))
                .ok()
        })
        .collect();
    SlopeEstimates { method, values, flagged }
}

/// Records carrying both the event observations and the estimated slope
/// (missing for flagged subjects).
pub fn to_records(trial: &SimulatedTrial, estimates: &SlopeEstimates) -> Vec<SubjectRecord> {
    trial
        .subjects
        .iter()
        .zip(&estimates.values)
        .map(|(s, v)| {
            let obs = v.map_or(Observation::Missing, Observation::Value);
            s.record.clone().with(SLOPE_COMPONENT, obs)
        })
        .collect()
}

/// Seed of replication `r`: a SplitMix64 step over `seed + r`.
pub fn replication_seed(seed: u64, r: u64) -> u64 {
    let mut z = seed.wrapping_add(r.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationOutcome {
    pub seed: u64,
    /// `None` when the WR was infinite or undefined.
    pub win_ratio: Option<f64>,
    pub n_flagged: usize,
    /// Sample variance of the estimates within each arm, `[control, treatment]`.
    pub estimate_variance: [f64; 2],
    pub estimate_mean: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloWr {
    pub method: SlopeMethod,
    pub replications: usize,
    pub n_valid: usize,
    pub n_degenerate: usize,
    pub mean_win_ratio: Option<f64>,
    /// Standard error of the mean; needs at least two valid replications.
    pub standard_error: Option<f64>,
    pub theory_win_ratio: Option<f64>,
    pub theory_variance: Option<f64>,
    /// Within-arm estimate variance averaged over arms and replications.
    pub mean_estimate_variance: f64,
    /// Mean estimate per arm, `[control, treatment]`, averaged over replications.
    pub mean_estimate: [f64; 2],
    pub outcomes: Vec<ReplicationOutcome>,
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0) } else { f64::NAN };
    (m, var)
}

/// Runs one replication: simulate, estimate, tally the slope component.
pub fn run_replication(s: &SimScenario, method: SlopeMethod) -> Result<(SimulatedTrial, SlopeEstimates, ReplicationOutcome), SimError> {
    let trial = simulate_trial(s)?;
    let est = estimate_slopes(&trial, method, s.mc_use_last_visit);
    let records = to_records(&trial, &est);
    let t = tally(&records, &s.slope_hce()).expect("both arms populated");
    let win_ratio = win_statistics::<f64>(&t).win_ratio.finite();
    let mut by_arm: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for (subj, v) in trial.subjects.iter().zip(&est.values) {
        if let Some(v) = v {
            by_arm[subj.record.arm as usize].push(*v);
        }
    }
    let (m0, v0) = mean_var(&by_arm[0]);
    let (m1, v1) = mean_var(&by_arm[1]);
    let outcome = ReplicationOutcome {
        seed: s.seed,
        win_ratio,
        n_flagged: est.flagged.len(),
        estimate_variance: [v0, v1],
        estimate_mean: [m0, m1],
    };
    Ok((trial, est, outcome))
}

/// Empirical slope WR over `replications` independent trials.
///
/// Replications run in parallel; each is a pure function of its derived
/// seed, so the output does not depend on the thread count.
pub fn monte_carlo_wr(s: &SimScenario, method: SlopeMethod, replications: usize) -> Result<MonteCarloWr, SimError> {
    if replications == 0 {
        return Err(SimError::NoReplications);
    }
    s.validate()?;
    let outcomes: Vec<ReplicationOutcome> = (0..replications)
        .into_par_iter()
        .map(|r| run_replication(&s.with_seed(replication_seed(s.seed, r as u64)), method).map(|x| x.2))
        .collect::<Result<_, _>>()?;
    let valid: Vec<f64> = outcomes.iter().filter_map(|o| o.win_ratio).collect();
    let (mean_win_ratio, standard_error) = match valid.len() {
        0 => (None, None),
        1 => (Some(valid[0]), None),
        k => {
            let (m, v) = mean_var(&valid);
            (Some(m), Some((v / k as f64).sqrt()))
        }
    };
    let reps = outcomes.len() as f64;
    let mean_estimate_variance = outcomes.iter().map(|o| (o.estimate_variance[0] + o.estimate_variance[1]) / 2.0).sum::<f64>() / reps;
    let mean_estimate = [
        outcomes.iter().map(|o| o.estimate_mean[0]).sum::<f64>() / reps,
        outcomes.iter().map(|o| o.estimate_mean[1]).sum::<f64>() / reps,
    ];
    let theory = slope_wr(&s.design, method).ok();
    Ok(MonteCarloWr {
        method,
        replications,
        n_valid: valid.len(),
        n_degenerate: replications - valid.len(),
        mean_win_ratio,
        standard_error,
        theory_win_ratio: theory.map(|t| t.stats.win_ratio),
        theory_variance: theory.map(|t| t.variance),
        mean_estimate_variance,
        mean_estimate,
        outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noiseless() -> SimScenario {
        let d = SlopeDesign::equally_spaced(2.0, 9, 0.0, 0.0, -2.0, -3.0).unwrap();
        SimScenario::new(d, 5, 11).unwrap()
    }

    #[test]
    fn noiseless_fits_are_exact() {
        let s = noiseless();
        let trial = simulate_trial(&s).unwrap();
        for m in [SlopeMethod::Lsme, SlopeMethod::Mc] {
            let est = estimate_slopes(&trial, m, false);
            assert!(est.flagged.is_empty());
            for (subj, v) in trial.subjects.iter().zip(&est.values) {
                let expect = if subj.record.arm == Arm::Treatment { -2.0 } else { -3.0 };
                assert_eq!(v.unwrap(), expect);
            }
        }
        for (subj, truth) in trial.subjects.iter().zip(&trial.truth) {
            assert_eq!(truth.intercept, 40.0);
            assert_eq!(subj.gfr[0], Some(40.0));
        }
    }

    #[test]
    fn seed_determinism() {
        let s = SimScenario::new(SlopeDesign::ckd_reference(), 50, 3).unwrap();
        assert_eq!(simulate_trial(&s).unwrap(), simulate_trial(&s).unwrap());
        assert_ne!(simulate_trial(&s).unwrap(), simulate_trial(&s.with_seed(4)).unwrap());
    }

    #[test]
    fn zero_hazard_means_no_events() {
        let mut s = SimScenario::new(SlopeDesign::ckd_reference(), 20, 3).unwrap();
        s.event_components.push(EventComponent { name: "death".into(), hazard_treat: 0.0, hazard_ctrl: 0.0, terminal: true });
        let trial = simulate_trial(&s).unwrap();
        for subj in &trial.subjects {
            assert_eq!(subj.record.followup_time, 24.0);
            assert_eq!(subj.record.observations["death"], Observation::Event { time: 24.0, occurred: false });
            assert!(subj.gfr.iter().all(Option::is_some));
        }
    }

    #[test]
    fn events_truncate_visits() {
        let mut s = SimScenario::new(SlopeDesign::ckd_reference(), 200, 9).unwrap();
        s.event_components.push(EventComponent { name: "death".into(), hazard_treat: 0.3, hazard_ctrl: 0.3, terminal: true });
        s.event_components.push(EventComponent { name: "krt".into(), hazard_treat: 0.3, hazard_ctrl: 0.5, terminal: false });
        let trial = simulate_trial(&s).unwrap();
        let report = crate::hce::validate_dataset(
            &to_records(&trial, &estimate_slopes(&trial, SlopeMethod::Lsme, false)),
            &s.hce(),
        );
        assert!(report.is_analyzable(), "{:?}", report.violations);
        let mut saw_truncation = false;
        for (subj, truth) in trial.subjects.iter().zip(&trial.truth) {
            let first = truth.event_times.iter().flatten().copied().fold(f64::INFINITY, f64::min);
            for (t, y) in trial.visit_times.iter().zip(&subj.gfr) {
                assert_eq!(y.is_some(), *t <= first);
            }
            if let Some(d) = truth.event_times[0].filter(|&d| d < 2.0) {
                saw_truncation = true;
                assert!((subj.record.followup_time - d * 12.0).abs() < 1e-9);
            }
        }
        assert!(saw_truncation);
        let strict = estimate_slopes(&trial, SlopeMethod::Mc, false);
        let lenient = estimate_slopes(&trial, SlopeMethod::Mc, true);
        assert!(strict.flagged.len() > lenient.flagged.len());
        assert_eq!(strict.values.iter().filter(|v| v.is_none()).count(), strict.flagged.len());
    }

    #[test]
    fn lsme_flags_single_visit() {
        let trial = SimulatedTrial {
            visit_times: vec![0.0, 1.0, 2.0],
            subjects: vec![SimulatedSubject { record: SubjectRecord::new("x", Arm::Control, 24.0), gfr: vec![Some(40.0), None, None] }],
            truth: vec![LatentTruth { intercept: 40.0, slope: -1.0, event_times: vec![] }],
        };
        let est = estimate_slopes(&trial, SlopeMethod::Lsme, false);
        assert_eq!(est.values, vec![None]);
        assert_eq!(est.flagged[0].subject_id, "x");
    }

    #[test]
    fn scenario_validation() {
        let d = SlopeDesign::<f64>::ckd_reference();
        assert_eq!(SimScenario::new(d.clone(), 1, 0).unwrap_err(), SimError::TooFewSubjects(1));
        let mut s = SimScenario::new(d, 2, 0).unwrap();
        s.event_components.push(EventComponent { name: "e".into(), hazard_treat: -1.0, hazard_ctrl: 0.0, terminal: false });
        assert_eq!(s.validate().unwrap_err(), SimError::InvalidHazard("e".into()));
        s.event_components[0] = EventComponent { name: SLOPE_COMPONENT.into(), hazard_treat: 0.1, hazard_ctrl: 0.1, terminal: false };
        assert!(matches!(s.validate(), Err(SimError::InvalidEventName(_))));
    }

    #[test]
    fn scenario_config_json() {
        let cfg: ScenarioConfig = serde_json::from_str(
            r#"{"followup":2,"n_visits":9,"sigma_s":3,"sigma_e":5.18,"beta_treat":-2,"beta_ctrl":-3,"n_per_arm":100,"seed":5}"#,
        )
        .unwrap();
        let s = cfg.into_scenario().unwrap();
        assert_eq!(s.design, SlopeDesign::ckd_reference());
        assert_eq!(s.intercept_mean, 40.0);
        let both: ScenarioConfig = serde_json::from_str(
            r#"{"measurement_times":[0,1],"followup":2,"n_visits":9,"sigma_s":3,"sigma_e":5.18,"beta_treat":-2,"beta_ctrl":-3,"n_per_arm":100}"#,
        )
        .unwrap();
        assert!(both.into_scenario().is_err());
    }

    #[test]
    fn replication_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|r| replication_seed(17, r)).collect();
        assert_eq!(seeds.len(), 1000);
    }

    #[test]
    fn monte_carlo_single_replication() {
        let s = SimScenario::new(SlopeDesign::ckd_reference(), 50, 1).unwrap();
        let mc = monte_carlo_wr(&s, SlopeMethod::Lsme, 1).unwrap();
        assert_eq!(mc.n_valid, 1);
        assert!(mc.standard_error.is_none());
        assert_eq!(monte_carlo_wr(&s, SlopeMethod::Lsme, 0).unwrap_err(), SimError::NoReplications);
    }

    #[test]
    fn monte_carlo_null_effect() {
        let d = SlopeDesign::equally_spaced(2.0, 9, 3.0, 5.18, -2.5, -2.5).unwrap();
        let s = SimScenario::new(d, 300, 21).unwrap();
        let mc = monte_carlo_wr(&s, SlopeMethod::Lsme, 40).unwrap();
        let (m, se) = (mc.mean_win_ratio.unwrap(), mc.standard_error.unwrap());
        assert!((m - 1.0).abs() < 3.0 * se, "{m} ± {se}");
    }
}
