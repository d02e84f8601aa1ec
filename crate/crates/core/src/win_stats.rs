//! All-pairs tallies and the win statistics derived from them.

use std::collections::BTreeMap;

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hce::{
    compare_component, lookup, Arm, ComponentKind, Direction, HceDefinition, HceError, Observation, Outcome,
    SubjectRecord,
};
use crate::scalar::{RatioValue, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WinStatsError {
    #[error("arm `{0}` has no subjects")]
    EmptyArm(String),
    #[error(transparent)]
    Hce(#[from] HceError),
    #[error("subject `{0}` has no stratum")]
    MissingStratum(String),
    #[error("stratum `{stratum}` has no subjects in the {arm:?} arm")]
    StratumMissingArm { stratum: String, arm: Arm },
    #[error("at least 100 permutations are required, got {0}")]
    TooFewPermutations(usize),
    #[error("transitivity check needs at least two arms, got {0}")]
    TooFewArms(usize),
    #[error("paired dataset is empty")]
    EmptyPairedDataset,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentWins {
    pub wins_t: u64,
    pub wins_c: u64,
}

/// Outcome counts over the full treatment × control cross product.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WinTally {
    pub n_treatment: u64,
    pub n_control: u64,
    pub wins_t: u64,
    pub wins_c: u64,
    pub ties: u64,
    /// Indexed like the HCE components; wins are attributed to the deciding component.
    pub per_component: Vec<ComponentWins>,
}

impl WinTally {
    pub fn empty(n_treatment: u64, n_control: u64, n_components: usize) -> Self {
        Self { n_treatment, n_control, wins_t: 0, wins_c: 0, ties: 0, per_component: vec![ComponentWins::default(); n_components] }
    }

    #[inline]
    fn record(&mut self, outcome: Outcome, component: usize) {
        match outcome {
            Outcome::TreatmentWin => {
                self.wins_t += 1;
                self.per_component[component].wins_t += 1;
            }
            Outcome::ControlWin => {
                self.wins_c += 1;
                self.per_component[component].wins_c += 1;
            }
            Outcome::Tie => self.ties += 1,
        }
    }

    /// Adds the counts of a partial tally over a disjoint block of pairs.
    pub fn merge_counts(mut self, other: &WinTally) -> Self {
        self.wins_t += other.wins_t;
        self.wins_c += other.wins_c;
        self.ties += other.ties;
        for (a, b) in self.per_component.iter_mut().zip(&other.per_component) {
            a.wins_t += b.wins_t;
            a.wins_c += b.wins_c;
        }
        self
    }

    pub fn n_pairs(&self) -> u64 {
        self.n_treatment * self.n_control
    }

    /// `(P_t, P_c, P_tie)` as exact fractions of the pair count.
    pub fn exact_proportions(&self) -> [Ratio<u64>; 3] {
        let n = self.n_pairs();
        [Ratio::new(self.wins_t, n), Ratio::new(self.wins_c, n), Ratio::new(self.ties, n)]
    }

    /// Tally with treatment and control roles exchanged.
    pub fn swapped(&self) -> WinTally {
        WinTally {
            n_treatment: self.n_control,
            n_control: self.n_treatment,
            wins_t: self.wins_c,
            wins_c: self.wins_t,
            ties: self.ties,
            per_component: self.per_component.iter().map(|c| ComponentWins { wins_t: c.wins_c, wins_c: c.wins_t }).collect(),
        }
    }

    pub fn is_consistent(&self) -> bool {
        let sum_t: u64 = self.per_component.iter().map(|c| c.wins_t).sum();
        let sum_c: u64 = self.per_component.iter().map(|c| c.wins_c).sum();
        self.wins_t + self.wins_c + self.ties == self.n_pairs() && sum_t == self.wins_t && sum_c == self.wins_c
    }
}

/// P_t, P_c, P_tie with WR, WO and NB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WinStatistics<T: Scalar> {
    pub p_t: T,
    pub p_c: T,
    pub p_tie: T,
    pub win_ratio: RatioValue<T>,
    pub win_odds: RatioValue<T>,
    pub net_benefit: T,
}

impl<T: Scalar> WinStatistics<T> {
    /// Statistics from raw pair counts; ratios are formed from the integer
    /// counts so exact values such as 3/6 come out exactly.
    pub fn from_counts(wins_t: u64, wins_c: u64, ties: u64) -> Self {
        let n = wins_t + wins_c + ties;
        let c = |k: u64| T::from_u64(k).expect("count representable");
        let (p_t, p_c, p_tie) = if n == 0 {
            (T::zero(), T::zero(), T::zero())
        } else {
            (c(wins_t) / c(n), c(wins_c) / c(n), c(ties) / c(n))
        };
        WinStatistics {
            p_t,
            p_c,
            p_tie,
            win_ratio: RatioValue::from_parts(c(wins_t), c(wins_c)),
            win_odds: RatioValue::from_parts(c(2 * wins_t + ties), c(2 * wins_c + ties)),
            net_benefit: if n == 0 { T::zero() } else { (c(wins_t) - c(wins_c)) / c(n) },
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.win_ratio.is_degenerate() || self.win_odds.is_degenerate()
    }
}

pub fn win_statistics<T: Scalar>(t: &WinTally) -> WinStatistics<T> {
    WinStatistics::from_counts(t.wins_t, t.wins_c, t.ties)
}

/// A subject with observations resolved into HCE component order.
#[derive(Debug, Clone)]
pub(crate) struct Resolved {
    followup: f64,
    obs: Vec<Observation>,
}

pub(crate) fn resolve(records: &[&SubjectRecord], hce: &HceDefinition) -> Result<Vec<Resolved>, HceError> {
    records
        .iter()
        .map(|r| {
            if !(r.followup_time >= 0.0 && r.followup_time.is_finite()) {
                return Err(HceError::NegativeTime {
                    subject: r.subject_id.clone(),
                    what: "follow-up time".into(),
                    value: r.followup_time,
                });
            }
            let obs = hce.components().iter().map(|c| lookup(r, c).copied()).collect::<Result<_, _>>()?;
            Ok(Resolved { followup: r.followup_time, obs })
        })
        .collect()
}

#[inline]
pub(crate) fn adjudicate(a: &Resolved, b: &Resolved, hce: &HceDefinition) -> (Outcome, usize) {
    for (k, spec) in hce.components().iter().enumerate() {
        let o = compare_component(spec, hce.horizon(), (&a.obs[k], a.followup), (&b.obs[k], b.followup));
        if o != Outcome::Tie {
            return (o, k);
        }
    }
    (Outcome::Tie, 0)
}

/// Single value component with zero margin: pairs can be counted from a
/// sorted control sample instead of enumerated.
fn sorted_fast_path(hce: &HceDefinition) -> Option<Direction> {
    match hce.components() {
        [c] if c.kind != ComponentKind::TimeToEvent && c.margin == 0.0 => Some(c.direction),
        _ => None,
    }
}

fn tally_sorted(treat: &[Resolved], ctrl: &[Resolved], direction: Direction) -> WinTally {
    let value = |r: &Resolved| match r.obs[0] {
        Observation::Value(v) if !v.is_nan() => Some(v),
        _ => None,
    };
    let mut sorted: Vec<f64> = ctrl.iter().filter_map(value).collect();
    sorted.sort_by(f64::total_cmp);
    let mut tally = WinTally::empty(treat.len() as u64, ctrl.len() as u64, 1);
    let (mut above, mut below) = (0u64, 0u64);
    for v in treat.iter().filter_map(value) {
        // Infinite values of equal sign tie under subtraction, and under this
        // ordering too.
        below += sorted.partition_point(|&c| c < v) as u64;
        above += (sorted.len() - sorted.partition_point(|&c| c <= v)) as u64;
    }
    let (t, c) = match direction {
        Direction::HigherBetter => (below, above),
        Direction::LowerBetter => (above, below),
    };
    tally.wins_t = t;
    tally.wins_c = c;
    tally.per_component[0] = ComponentWins { wins_t: t, wins_c: c };
    tally.ties = tally.n_pairs() - t - c;
    tally
}

fn tally_resolved(treat: &[Resolved], ctrl: &[Resolved], hce: &HceDefinition) -> WinTally {
    if let Some(direction) = sorted_fast_path(hce) {
        return tally_sorted(treat, ctrl, direction);
    }
    let (nt, nc, k) = (treat.len() as u64, ctrl.len() as u64, hce.len());
    treat
        .par_iter()
        .fold(
            || WinTally::empty(nt, nc, k),
            |mut acc, a| {
                for b in ctrl {
                    let (o, at) = adjudicate(a, b, hce);
                    acc.record(o, at);
                }
                acc
            },
        )
        .reduce(|| WinTally::empty(nt, nc, k), |a, b| a.merge_counts(&b))
}

/// Tallies every `treat` × `ctrl` pair, ignoring the records' arm fields.
pub fn tally_groups(treat: &[&SubjectRecord], ctrl: &[&SubjectRecord], hce: &HceDefinition) -> Result<WinTally, WinStatsError> {
    if treat.is_empty() {
        return Err(WinStatsError::EmptyArm("treatment".into()));
    }
    if ctrl.is_empty() {
        return Err(WinStatsError::EmptyArm("control".into()));
    }
    let t = resolve(treat, hce)?;
    let c = resolve(ctrl, hce)?;
    Ok(tally_resolved(&t, &c, hce))
}

fn split_arms(records: &[SubjectRecord]) -> (Vec<&SubjectRecord>, Vec<&SubjectRecord>) {
    records.iter().partition(|r| r.arm == Arm::Treatment)
}

/// Treatment-vs-control tally over all cross-arm pairs.
pub fn tally(records: &[SubjectRecord], hce: &HceDefinition) -> Result<WinTally, WinStatsError> {
    let (t, c) = split_arms(records);
    tally_groups(&t, &c, hce)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightScheme {
    Equal,
    #[default]
    PairCount,
    SampleSize,
}

impl std::str::FromStr for WeightScheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "equal" => Ok(WeightScheme::Equal),
            "pair-count" => Ok(WeightScheme::PairCount),
            "sample-size" => Ok(WeightScheme::SampleSize),
            other => Err(format!("unknown weight scheme `{other}` (expected equal, pair-count or sample-size)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StratumResult<T: Scalar> {
    pub tally: WinTally,
    pub statistics: WinStatistics<T>,
    pub weight: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StratifiedResult<T: Scalar> {
    pub per_stratum: BTreeMap<String, StratumResult<T>>,
    pub pooled_win_ratio: RatioValue<T>,
    pub weight_scheme: WeightScheme,
}

/// Stratum-wise tallies pooled as Σ w_s P_t,s / Σ w_s P_c,s.
///
/// Pair-count weights reproduce the plain ratio of summed wins.
pub fn stratified_win_ratio<T: Scalar>(
    records: &[SubjectRecord],
    hce: &HceDefinition,
    weight_scheme: WeightScheme,
) -> Result<StratifiedResult<T>, WinStatsError> {
    let mut groups: BTreeMap<&str, (Vec<&SubjectRecord>, Vec<&SubjectRecord>)> = BTreeMap::new();
    for r in records {
        let s = r.stratum.as_deref().ok_or_else(|| WinStatsError::MissingStratum(r.subject_id.clone()))?;
        let g = groups.entry(s).or_default();
        if r.arm == Arm::Treatment { g.0.push(r) } else { g.1.push(r) }
    }
    let mut tallies = Vec::with_capacity(groups.len());
    for (name, (t, c)) in &groups {
        for (arm, members) in [(Arm::Treatment, t), (Arm::Control, c)] {
            if members.is_empty() {
                return Err(WinStatsError::StratumMissingArm { stratum: name.to_string(), arm });
            }
        }
        tallies.push((name.to_string(), tally_groups(t, c, hce)?));
    }
    let c = |k: u64| T::from_u64(k).unwrap();
    let raw: Vec<T> = tallies
        .iter()
        .map(|(_, t)| match weight_scheme {
            WeightScheme::Equal => T::one(),
            WeightScheme::PairCount => c(t.n_pairs()),
            WeightScheme::SampleSize => c(t.n_treatment + t.n_control),
        })
        .collect();
    let total = raw.iter().fold(T::zero(), |a, &w| a + w);
    let (mut num, mut den) = (T::zero(), T::zero());
    let mut per_stratum = BTreeMap::new();
    for ((name, tally), w) in tallies.into_iter().zip(raw) {
        let weight = w / total;
        let statistics = win_statistics::<T>(&tally);
        num = num + weight * statistics.p_t;
        den = den + weight * statistics.p_c;
        per_stratum.insert(name, StratumResult { tally, statistics, weight });
    }
    Ok(StratifiedResult { per_stratum, pooled_win_ratio: RatioValue::from_parts(num, den), weight_scheme })
}

/// Outcomes of one subject under both treatments. Larger is better.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedRow {
    pub subject_id: String,
    pub y1: f64,
    pub y0: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PairedDataset {
    pub rows: Vec<PairedRow>,
}

impl PairedDataset {
    pub fn from_columns(y1: &[f64], y0: &[f64]) -> Self {
        assert_eq!(y1.len(), y0.len());
        Self {
            rows: y1
                .iter()
                .zip(y0)
                .enumerate()
                .map(|(i, (&a, &b))| PairedRow { subject_id: (i + 1).to_string(), y1: a, y0: b })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndividualWinRatio<T: Scalar> {
    pub wins: u64,
    pub losses: u64,
    pub ties: u64,
    pub statistics: WinStatistics<T>,
}

/// Within-subject counterpart of the WR: each row compares a subject's
/// outcome under treatment with the same subject's outcome under control.
pub fn individual_win_ratio<T: Scalar>(paired: &PairedDataset) -> Result<IndividualWinRatio<T>, WinStatsError> {
    if paired.rows.is_empty() {
        return Err(WinStatsError::EmptyPairedDataset);
    }
    let (mut wins, mut losses, mut ties) = (0, 0, 0);
    for r in &paired.rows {
        if r.y1 > r.y0 {
            wins += 1;
        } else if r.y1 < r.y0 {
            losses += 1;
        } else {
            ties += 1;
        }
    }
    Ok(IndividualWinRatio { wins, losses, ties, statistics: WinStatistics::from_counts(wins, losses, ties) })
}

pub const MIN_PERMUTATIONS: usize = 100;
/// Above this many subjects the pairwise outcome matrix is not cached.
const MATRIX_LIMIT: usize = 4096;

type MarginFn<'a> = Box<dyn Fn(&[bool]) -> i64 + Sync + 'a>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationResult {
    pub statistic: String,
    pub observed: f64,
    pub n_permutations: usize,
    pub seed: u64,
    pub n_as_extreme: usize,
    pub p_value: f64,
}

/// Two-sided permutation test of no treatment effect using |NB|.
///
/// Records are put in subject-id order first, so the result does not depend
/// on input order. Permutation `k` shuffles with ChaCha8 stream `k` of the
/// master seed, which makes the parallel run identical to a sequential one.
pub fn permutation_test(
    records: &[SubjectRecord],
    hce: &HceDefinition,
    n_permutations: usize,
    seed: u64,
) -> Result<PermutationResult, WinStatsError> {
    if n_permutations < MIN_PERMUTATIONS {
        return Err(WinStatsError::TooFewPermutations(n_permutations));
    }
    let mut ordered: Vec<&SubjectRecord> = records.iter().collect();
    ordered.sort_by(|a, b| a.subject_id.cmp(&b.subject_id));
    let is_treat: Vec<bool> = ordered.iter().map(|r| r.arm == Arm::Treatment).collect();
    let n_t = is_treat.iter().filter(|&&t| t).count();
    let n = ordered.len();
    if n_t == 0 {
        return Err(WinStatsError::EmptyArm("treatment".into()));
    }
    if n_t == n {
        return Err(WinStatsError::EmptyArm("control".into()));
    }
    let resolved = resolve(&ordered, hce)?;

    let margin: MarginFn<'_> = if n <= MATRIX_LIMIT {
        let score: Vec<i8> = (0..n * n)
            .into_par_iter()
            .map(|ij| {
                let (i, j) = (ij / n, ij % n);
                match adjudicate(&resolved[i], &resolved[j], hce).0 {
                    Outcome::TreatmentWin => 1,
                    Outcome::ControlWin => -1,
                    Outcome::Tie => 0,
                }
            })
            .collect();
        Box::new(move |labels: &[bool]| {
            let controls: Vec<usize> = (0..n).filter(|&j| !labels[j]).collect();
            let mut d = 0i64;
            for i in (0..n).filter(|&i| labels[i]) {
                let row = &score[i * n..(i + 1) * n];
                d += controls.iter().map(|&j| row[j] as i64).sum::<i64>();
            }
            d
        })
    } else {
        let resolved = &resolved;
        Box::new(move |labels: &[bool]| {
            let (t, c): (Vec<Resolved>, Vec<Resolved>) = {
                let mut t = Vec::new();
                let mut c = Vec::new();
                for (r, &l) in resolved.iter().zip(labels) {
                    if l { t.push(r.clone()) } else { c.push(r.clone()) }
                }
                (t, c)
            };
            let tl = tally_resolved(&t, &c, hce);
            tl.wins_t as i64 - tl.wins_c as i64
        })
    };

    let observed = margin(&is_treat).abs();
    let n_as_extreme = (0..n_permutations)
        .into_par_iter()
        .filter(|&k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let mut labels = is_treat.clone();
            labels.shuffle(&mut rng);
            margin(&labels).abs() >= observed
        })
        .count();
    let pairs = (n_t * (n - n_t)) as f64;
    Ok(PermutationResult {
        statistic: "abs_net_benefit".into(),
        observed: observed as f64 / pairs,
        n_permutations,
        seed,
        n_as_extreme,
        p_value: (1 + n_as_extreme) as f64 / (1 + n_permutations) as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseComparison<T: Scalar> {
    pub first: String,
    pub second: String,
    pub tally: WinTally,
    pub win_ratio: RatioValue<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitivityReport<T: Scalar> {
    pub arms: Vec<String>,
    /// Every ordered pair of distinct arms, first arm in the treatment role.
    pub comparisons: Vec<PairwiseComparison<T>>,
    /// Triples `(x, y, z)` with WR(x,y), WR(y,z), WR(z,x) all above 1.
    pub cycles: Vec<[String; 3]>,
}

impl<T: Scalar> TransitivityReport<T> {
    pub fn win_ratio(&self, first: &str, second: &str) -> Option<RatioValue<T>> {
        self.comparisons.iter().find(|c| c.first == first && c.second == second).map(|c| c.win_ratio)
    }
}

/// Pairwise WRs between every ordered pair of arms and the circular triples.
pub fn transitivity_check<T: Scalar>(
    arms: &BTreeMap<String, Vec<SubjectRecord>>,
    hce: &HceDefinition,
) -> Result<TransitivityReport<T>, WinStatsError> {
    if arms.len() < 2 {
        return Err(WinStatsError::TooFewArms(arms.len()));
    }
    let labels: Vec<String> = arms.keys().cloned().collect();
    let mut resolved = Vec::with_capacity(labels.len());
    for (label, members) in arms {
        if members.is_empty() {
            return Err(WinStatsError::EmptyArm(label.clone()));
        }
        let refs: Vec<&SubjectRecord> = members.iter().collect();
        resolved.push(resolve(&refs, hce)?);
    }
    let k = labels.len();
    let mut beats = vec![vec![false; k]; k];
    let mut comparisons = Vec::with_capacity(k * (k - 1));
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let tally = tally_resolved(&resolved[i], &resolved[j], hce);
            let win_ratio = win_statistics::<T>(&tally).win_ratio;
            beats[i][j] = win_ratio.exceeds_one();
            comparisons.push(PairwiseComparison { first: labels[i].clone(), second: labels[j].clone(), tally, win_ratio });
        }
    }
    let mut cycles = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            for c in b + 1..k {
                for (x, y, z) in [(a, b, c), (a, c, b)] {
                    if beats[x][y] && beats[y][z] && beats[z][x] {
                        cycles.push([labels[x].clone(), labels[y].clone(), labels[z].clone()]);
                    }
                }
            }
        }
    }
    Ok(TransitivityReport { arms: labels, comparisons, cycles })
}
