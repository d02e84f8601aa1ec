use anyhow::anyhow;
use serde::{Deserialize, Serialize};
use serde_json::json;
use winratio::theory::{marginal_wr_weighted, slope_wr, stats_from_theta, stratum_theta, stratum_wr, win_prob_normal};
use winratio::{NormalArmPair, SlopeMethod, StratumSpec};

use crate::output::{digest, emit, read_input, CmdResult, Failure, RunManifest, Status};
use crate::report::{DesignEcho, NormalInputs, NormalReport, SlopeMethodResult, SlopeReport, StrataReport, StratumOutput};
use crate::{NormalArgs, SlopeArgs, StrataArgs};

pub fn normal(a: &NormalArgs) -> CmdResult {
    let pair = NormalArmPair::new(a.mu1, a.mu0, a.sd1, a.sd0).map_err(Failure::validation)?;
    let stats = stats_from_theta(win_prob_normal(&pair)).map_err(Failure::validation)?;
    let config = json!({ "mu1": a.mu1, "mu0": a.mu0, "sd1": a.sd1, "sd0": a.sd0 });
    let manifest = RunManifest::new("theory normal", config, Vec::new(), Vec::new());
    emit(a.out.as_deref(), manifest, |link| NormalReport {
        report: "theory_normal",
        inputs: NormalInputs { mu1: a.mu1, mu0: a.mu0, sd1: a.sd1, sd0: a.sd0 },
        standardized_difference: pair.standardized_difference(),
        stats,
        manifest: link,
    })?;
    Ok(Status::Ok)
}

pub fn slope_results(d: &winratio::SlopeDesign, methods: &[SlopeMethod]) -> Result<Vec<SlopeMethodResult>, Failure> {
    let truth = slope_wr(d, SlopeMethod::True).map_err(Failure::validation)?.stats.win_ratio;
    methods
        .iter()
        .map(|&m| {
            let r = slope_wr(d, m).map_err(Failure::validation)?;
            let ratio = r.stats.win_ratio / truth;
            Ok(SlopeMethodResult { method: m, variance: r.variance, stats: r.stats, wr_ratio_to_true: ratio, attenuation: 1.0 - ratio })
        })
        .collect()
}

pub fn slope(a: &SlopeArgs) -> CmdResult {
    let d = a.design.design()?;
    let results = slope_results(&d, &a.method.methods())?;
    let design = DesignEcho::from(&d);
    let config = json!({ "design": design, "methods": a.method.methods() });
    let manifest = RunManifest::new("theory slope", config, Vec::new(), Vec::new());
    emit(a.out.as_deref(), manifest, |link| SlopeReport { report: "theory_slope", design, results, manifest: link })?;
    Ok(Status::Ok)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedStratum {
    #[serde(default)]
    pub name: Option<String>,
    pub weight: f64,
    pub mu1: f64,
    pub mu0: f64,
    pub sigma: f64,
}

/// Strata file. Arm-specific stratum probabilities default to `weight`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrataConfig {
    pub strata: Vec<NamedStratum>,
    #[serde(default)]
    pub treatment_weights: Option<Vec<f64>>,
    #[serde(default)]
    pub control_weights: Option<Vec<f64>>,
}

pub fn strata_report(cfg: &StrataConfig) -> Result<(Vec<StratumOutput>, winratio::ThetaStats, f64), Failure> {
    if cfg.strata.is_empty() {
        return Err(Failure::validation(anyhow!("no strata given")));
    }
    let specs: Vec<StratumSpec> = cfg
        .strata
        .iter()
        .map(|s| StratumSpec::new(s.weight, s.mu1, s.mu0, s.sigma))
        .collect::<Result<_, _>>()
        .map_err(Failure::validation)?;
    let w: Vec<f64> = specs.iter().map(|s| s.weight).collect();
    for (what, v) in [("treatment_weights", &cfg.treatment_weights), ("control_weights", &cfg.control_weights)] {
        if v.as_ref().is_some_and(|v| v.len() != specs.len()) {
            return Err(Failure::validation(anyhow!("{what} needs one entry per stratum")));
        }
    }
    let tw = cfg.treatment_weights.clone().unwrap_or_else(|| w.clone());
    let cw = cfg.control_weights.clone().unwrap_or_else(|| w.clone());
    let marginal = marginal_wr_weighted(&specs, &tw, &cw).map_err(Failure::validation)?;
    let mut out = Vec::with_capacity(specs.len());
    let (mut num, mut den) = (0.0, 0.0);
    for (i, (named, spec)) in cfg.strata.iter().zip(&specs).enumerate() {
        let theta = stratum_theta(spec);
        num += spec.weight * theta;
        den += spec.weight * (1.0 - theta);
        out.push(StratumOutput {
            name: named.name.clone().unwrap_or_else(|| format!("stratum_{}", i + 1)),
            weight: spec.weight,
            mu1: spec.mu1,
            mu0: spec.mu0,
            sigma: spec.sigma,
            stats: stratum_wr(spec).map_err(Failure::validation)?,
        });
    }
    Ok((out, marginal, num / den))
}

pub fn strata(a: &StrataArgs) -> CmdResult {
    let bytes = read_input(&a.config)?;
    let cfg: StrataConfig = serde_json::from_slice(&bytes).map_err(Failure::validation)?;
    let (strata, marginal, stratified_win_ratio) = strata_report(&cfg)?;
    let config = serde_json::to_value(&cfg).expect("serializable");
    let manifest = RunManifest::new("theory strata", config, vec![digest(&a.config, &bytes)], Vec::new());
    emit(a.out.as_deref(), manifest, |link| StrataReport {
        report: "theory_strata",
        strata,
        marginal,
        stratified_win_ratio,
        manifest: link,
    })?;
    Ok(Status::Ok)
}
