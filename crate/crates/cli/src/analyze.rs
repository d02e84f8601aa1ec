use std::collections::{BTreeMap, BTreeSet};

use anyhow::anyhow;
use serde_json::json;
use winratio::io::{read_hce, read_labeled, select_arms, LabeledRecord};
use winratio::win_stats::{permutation_test, stratified_win_ratio, tally, transitivity_check, win_statistics};
use winratio::{validate_dataset, SubjectRecord, Violation};

use crate::output::{digest, emit, read_input, CmdResult, Failure, RunManifest, Status};
use crate::report::{AnalysisReport, ArmLabels, ComponentAttribution, DataSummary};
use crate::AnalyzeArgs;

fn arm_groups(rows: &[LabeledRecord]) -> BTreeMap<String, Vec<SubjectRecord>> {
    let mut out: BTreeMap<String, Vec<SubjectRecord>> = BTreeMap::new();
    for r in rows {
        out.entry(r.label.clone()).or_default().push(r.record.clone());
    }
    out
}

pub fn run(a: &AnalyzeArgs) -> CmdResult {
    let data = read_input(&a.data)?;
    let hce_bytes = read_input(&a.hce)?;
    let hce = read_hce(hce_bytes.as_slice())?;
    if data.iter().all(u8::is_ascii_whitespace) {
        return Err(Failure::validation(anyhow!("{} is empty", a.data.display())));
    }
    let rows = read_labeled(data.as_slice(), &hce)?;

    let (treatment, control) = a.arms.clone().unwrap_or_else(|| ("1".into(), "0".into()));
    let labels: BTreeSet<&str> = rows.iter().map(|r| r.label.as_str()).collect();
    if a.arms.is_none() && labels.iter().any(|l| *l != "0" && *l != "1") {
        let found: Vec<&str> = labels.iter().copied().collect();
        return Err(Failure::validation(anyhow!(
            "arm labels other than 0/1 found ({}); choose two with --arms TREATMENT,CONTROL",
            found.join(", ")
        )));
    }
    let records = select_arms(&rows, &treatment, &control);

    let validation = validate_dataset(&records, &hce);
    if !validation.is_analyzable() {
        for v in &validation.violations {
            eprintln!("  {v}");
        }
        return Err(Failure::validation(anyhow!("{} dataset violation(s)", validation.violations.len())));
    }

    let t = tally(&records, &hce).map_err(Failure::validation)?;
    let statistics = win_statistics::<f64>(&t);
    let per_component = hce
        .components()
        .iter()
        .zip(&t.per_component)
        .map(|(c, w)| ComponentAttribution { component: c.name.clone(), wins_t: w.wins_t, wins_c: w.wins_c })
        .collect();

    let stratified = a
        .strata
        .then(|| stratified_win_ratio::<f64>(&records, &hce, a.weights.into()))
        .transpose()
        .map_err(Failure::validation)?;
    let permutation = (a.permutations > 0)
        .then(|| permutation_test(&records, &hce, a.permutations, a.seed))
        .transpose()
        .map_err(Failure::validation)?;
    let transitivity = a
        .transitivity
        .then(|| {
            let all: Vec<SubjectRecord> = rows.iter().map(|r| r.record.clone()).collect();
            let report = validate_dataset(&all, &hce);
            if let Some(v) = report.violations.iter().find(|v| !matches!(v, Violation::EmptyArm { .. })) {
                return Err(Failure::validation(anyhow!("{v}")));
            }
            let groups = arm_groups(&rows);
            transitivity_check::<f64>(&groups, &hce).map_err(Failure::validation)
        })
        .transpose()?;

    let degenerate = statistics.is_degenerate()
        || stratified.as_ref().is_some_and(|s| s.pooled_win_ratio.is_degenerate());

    let config = json!({
        "data": a.data.display().to_string(),
        "hce": a.hce.display().to_string(),
        "arms": [treatment, control],
        "strata": a.strata,
        "weights": winratio::WeightScheme::from(a.weights),
        "permutations": a.permutations,
        "seed": a.seed,
        "transitivity": a.transitivity,
    });
    let seeds = if a.permutations > 0 { vec![a.seed] } else { Vec::new() };
    let manifest = RunManifest::new("analyze", config, vec![digest(&a.data, &data), digest(&a.hce, &hce_bytes)], seeds);

    emit(a.out.as_deref(), manifest, |link| AnalysisReport {
        report: "analysis",
        arms: ArmLabels { treatment, control },
        hce: hce.clone(),
        data: DataSummary {
            n_rows: rows.len(),
            n_excluded: rows.len() - records.len(),
            missing_values: validation.missing_values.clone(),
        },
        n_pairs: t.n_pairs(),
        tally: t.clone(),
        statistics,
        per_component,
        stratified,
        permutation,
        transitivity,
        manifest: link,
    })?;
    Ok(if degenerate { Status::Degenerate } else { Status::Ok })
}
