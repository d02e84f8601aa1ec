//! JSON report layouts. Every report carries a `report` tag and a `manifest`
//! link; non-finite ratios are written as `{value, flag}` objects.

use std::collections::BTreeMap;

use serde::Serialize;
use winratio::simulator::{FlaggedSubject, MonteCarloWr};
use winratio::win_stats::PermutationResult;
use winratio::{HceDefinition, SlopeMethod, StratifiedResult, ThetaStats, TransitivityReport, WinStatistics, WinTally};

use crate::output::{InputDigest, ManifestLink};

#[derive(Debug, Serialize)]
pub struct ArmLabels {
    pub treatment: String,
    pub control: String,
}

#[derive(Debug, Serialize)]
pub struct ComponentAttribution {
    pub component: String,
    pub wins_t: u64,
    pub wins_c: u64,
}

#[derive(Debug, Serialize)]
pub struct DataSummary {
    pub n_rows: usize,
    /// Rows whose arm label is neither the treatment nor the control label.
    pub n_excluded: usize,
    /// Missing observations per component (ties on that component).
    pub missing_values: BTreeMap<String, usize>,
}

#[derive(Debug, Serialize)]
pub struct AnalysisReport {
    pub report: &'static str,
    pub arms: ArmLabels,
    pub hce: HceDefinition,
    pub data: DataSummary,
    pub tally: WinTally,
    pub n_pairs: u64,
    pub statistics: WinStatistics,
    pub per_component: Vec<ComponentAttribution>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stratified: Option<StratifiedResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub permutation: Option<PermutationResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transitivity: Option<TransitivityReport>,
    pub manifest: ManifestLink,
}

#[derive(Debug, Serialize)]
pub struct NormalInputs {
    pub mu1: f64,
    pub mu0: f64,
    pub sd1: f64,
    pub sd0: f64,
}

#[derive(Debug, Serialize)]
pub struct NormalReport {
    pub report: &'static str,
    pub inputs: NormalInputs,
    pub standardized_difference: f64,
    #[serde(flatten)]
    pub stats: ThetaStats,
    pub manifest: ManifestLink,
}

#[derive(Debug, Serialize)]
pub struct DesignEcho {
    pub measurement_times: Vec<f64>,
    pub followup: f64,
    pub n_visits: usize,
    pub sigma_s: f64,
    pub sigma_e: f64,
    pub beta_treat: f64,
    pub beta_ctrl: f64,
}

impl From<&winratio::SlopeDesign> for DesignEcho {
    fn from(d: &winratio::SlopeDesign) -> Self {
        Self {
            measurement_times: d.measurement_times().to_vec(),
            followup: d.followup(),
            n_visits: d.n_visits(),
            sigma_s: d.sigma_s,
            sigma_e: d.sigma_e,
            beta_treat: d.beta_treat,
            beta_ctrl: d.beta_ctrl,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SlopeMethodResult {
    pub method: SlopeMethod,
    /// Variance of the per-subject slope (estimate) within an arm.
    pub variance: f64,
    #[serde(flatten)]
    pub stats: ThetaStats,
    /// WR relative to the latent-slope WR.
    pub wr_ratio_to_true: f64,
    /// `1 - wr_ratio_to_true`.
    pub attenuation: f64,
}

#[derive(Debug, Serialize)]
pub struct SlopeReport {
    pub report: &'static str,
    pub design: DesignEcho,
    pub results: Vec<SlopeMethodResult>,
    pub manifest: ManifestLink,
}

#[derive(Debug, Serialize)]
pub struct StratumOutput {
    pub name: String,
    pub weight: f64,
    pub mu1: f64,
    pub mu0: f64,
    pub sigma: f64,
    #[serde(flatten)]
    pub stats: ThetaStats,
}

#[derive(Debug, Serialize)]
pub struct StrataReport {
    pub report: &'static str,
    pub strata: Vec<StratumOutput>,
    /// WR of a randomly drawn treated subject against a randomly drawn control,
    /// ignoring strata.
    pub marginal: ThetaStats,
    /// Σ w·θ_s / Σ w·(1 − θ_s) with the stratum weights.
    pub stratified_win_ratio: f64,
    pub manifest: ManifestLink,
}

#[derive(Debug, Serialize)]
pub struct SweepMirror<R> {
    pub report: &'static str,
    pub axis: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<R>,
    pub manifest: ManifestLink,
}

#[derive(Debug, Serialize)]
pub struct MethodSummary {
    pub method: SlopeMethod,
    pub replications: usize,
    pub n_valid: usize,
    pub n_degenerate: usize,
    pub mean_win_ratio: Option<f64>,
    /// `null` with fewer than two valid replications.
    pub standard_error: Option<f64>,
    pub standard_error_available: bool,
    pub theory_win_ratio: Option<f64>,
    /// Empirical minus closed-form WR.
    pub delta: Option<f64>,
    pub delta_in_se: Option<f64>,
    pub within_3se: Option<bool>,
    pub theory_variance: Option<f64>,
    pub mean_estimate_variance: Option<f64>,
    /// Mean estimate, `[control, treatment]`.
    pub mean_estimate: [Option<f64>; 2],
    pub replication_win_ratios: Vec<Option<f64>>,
    pub replication_seeds: Vec<u64>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl From<&MonteCarloWr> for MethodSummary {
    fn from(m: &MonteCarloWr) -> Self {
        let delta = m.mean_win_ratio.zip(m.theory_win_ratio).map(|(e, t)| e - t);
        let delta_in_se = delta.zip(m.standard_error).and_then(|(d, se)| finite(d / se));
        Self {
            method: m.method,
            replications: m.replications,
            n_valid: m.n_valid,
            n_degenerate: m.n_degenerate,
            mean_win_ratio: m.mean_win_ratio,
            standard_error: m.standard_error,
            standard_error_available: m.standard_error.is_some(),
            theory_win_ratio: m.theory_win_ratio,
            delta,
            delta_in_se,
            within_3se: delta.zip(m.standard_error).map(|(d, se)| d.abs() <= 3.0 * se),
            theory_variance: m.theory_variance,
            mean_estimate_variance: finite(m.mean_estimate_variance),
            mean_estimate: [finite(m.mean_estimate[0]), finite(m.mean_estimate[1])],
            replication_win_ratios: m.outcomes.iter().map(|o| o.win_ratio).collect(),
            replication_seeds: m.outcomes.iter().map(|o| o.seed).collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct DatasetEntry {
    pub replication: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub file: InputDigest,
    pub flagged: Vec<FlaggedSubject>,
}

#[derive(Debug, Serialize)]
pub struct SimulationSummary {
    pub report: &'static str,
    pub scenario: serde_json::Value,
    pub seed: u64,
    pub replications: usize,
    pub export_method: SlopeMethod,
    pub hce_file: String,
    pub datasets: Vec<DatasetEntry>,
    pub methods: Vec<MethodSummary>,
    pub manifest: ManifestLink,
}
