use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context};
use serde_json::json;
use winratio::io::write_subjects;
use winratio::simulator::{monte_carlo_wr, replication_seed, run_replication, to_records, ScenarioConfig};
use winratio::SlopeMethod;

use crate::output::{digest, read_input, sha256_hex, to_json, CmdResult, Failure, InputDigest, ManifestLink, RunManifest, Status};
use crate::report::{DatasetEntry, MethodSummary, SimulationSummary};
use crate::SimulateArgs;

pub const SUMMARY_FILE: &str = "summary.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const HCE_FILE: &str = "hce.json";

pub fn dataset_file(r: usize) -> String {
    format!("dataset_{:04}.csv", r + 1)
}

fn check_out_dir(dir: &Path) -> Result<(), Failure> {
    if !dir.exists() {
        return Ok(());
    }
    let empty = dir.is_dir() && fs::read_dir(dir).map_err(Failure::io)?.next().is_none();
    if empty {
        Ok(())
    } else {
        Err(Failure::io(anyhow!("{} exists and is not an empty directory", dir.display())))
    }
}

pub fn run(a: &SimulateArgs) -> CmdResult {
    let bytes = read_input(&a.scenario)?;
    let mut cfg: ScenarioConfig = serde_json::from_slice(&bytes).map_err(Failure::validation)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let scenario = cfg.clone().into_scenario().map_err(Failure::validation)?;
    if a.replications == 0 {
        return Err(Failure::validation(anyhow!("--replications must be at least 1")));
    }
    check_out_dir(&a.out_dir)?;

    let methods = a.method.methods();
    let summaries: Vec<MethodSummary> = methods
        .iter()
        .map(|&m| monte_carlo_wr(&scenario, m, a.replications).map(|mc| MethodSummary::from(&mc)))
        .collect::<Result<_, _>>()
        .map_err(Failure::validation)?;

    let export_method = SlopeMethod::from(a.export_method);
    let hce = scenario.hce();
    let n_export = a.max_datasets.map_or(a.replications, |m| m.min(a.replications));
    let mut files: Vec<(String, Vec<u8>)> = Vec::with_capacity(n_export + 3);
    let mut datasets = Vec::with_capacity(n_export);
    for r in 0..n_export {
        let seed = replication_seed(scenario.seed, r as u64);
        let (trial, est, _) = run_replication(&scenario.with_seed(seed), export_method).map_err(Failure::validation)?;
        let mut buf = Vec::new();
        write_subjects(&mut buf, &to_records(&trial, &est), &hce)?;
        let name = dataset_file(r);
        datasets.push(DatasetEntry {
            replication: r + 1,
            seed,
            file: InputDigest { path: name.clone(), sha256: sha256_hex(&buf) },
            flagged: est.flagged,
        });
        files.push((name, buf));
    }
    files.push((HCE_FILE.to_string(), to_json(&hce)));

    let scenario_json = serde_json::to_value(&cfg).expect("serializable");
    let config = json!({
        "scenario": scenario_json,
        "replications": a.replications,
        "methods": methods,
        "export_method": export_method,
        "max_datasets": a.max_datasets,
    });
    let manifest = RunManifest::new("simulate", config, vec![digest(&a.scenario, &bytes)], vec![scenario.seed]);
    let summary = SimulationSummary {
        report: "simulation",
        scenario: scenario_json,
        seed: scenario.seed,
        replications: a.replications,
        export_method,
        hce_file: HCE_FILE.to_string(),
        datasets,
        methods: summaries,
        manifest: ManifestLink::Sidecar(manifest.reference(MANIFEST_FILE)),
    };
    files.push((SUMMARY_FILE.to_string(), to_json(&summary)));
    files.push((MANIFEST_FILE.to_string(), to_json(&manifest)));
    publish_dir(&a.out_dir, &files)?;

    let degenerate = summary.methods.iter().any(|m| m.n_degenerate > 0);
    Ok(if degenerate { Status::Degenerate } else { Status::Ok })
}

/// Writes every file into a staging directory beside `dir`, then renames the
/// staging directory to `dir`, so readers see all outputs or none.
fn publish_dir(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<(), Failure> {
    let parent = match dir.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let step = || -> anyhow::Result<()> {
        fs::create_dir_all(parent)?;
        let staging = tempfile::Builder::new().prefix(".winratio-sim-").tempdir_in(parent)?;
        for (name, bytes) in files {
            fs::write(staging.path().join(name), bytes)?;
        }
        if dir.exists() {
            fs::remove_dir(dir)?;
        }
        let path = staging.keep();
        fs::rename(&path, dir).inspect_err(|_| {
            let _ = fs::remove_dir_all(&path);
        })?;
        Ok(())
    };
    step().with_context(|| format!("writing {}", dir.display())).map_err(Failure::io)
}
