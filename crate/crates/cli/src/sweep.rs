use std::path::{Path, PathBuf};

use anyhow::anyhow;
use serde::Serialize;
use serde_json::json;
use winratio::theory::{separation_sweep, sweep, SEPARATION_COLUMNS, SWEEP_COLUMNS};
use winratio::SweepAxis;

use crate::grid::parse_grid;
use crate::output::{file_name, manifest_path, to_json, write_atomic, CmdResult, Failure, RunManifest, Status};
use crate::report::{DesignEcho, SweepMirror};
use crate::{SweepArgs, SweepAxisArg};

pub fn csv_text(columns: &[&str], rows: &[Vec<f64>]) -> String {
    let mut s = columns.join(",");
    s.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

pub fn mirror_path(out: &Path) -> Result<PathBuf, Failure> {
    if out.extension().is_some_and(|e| e == "json") {
        return Err(Failure::validation(anyhow!("--out must not end in .json; the JSON mirror takes that name")));
    }
    Ok(out.with_extension("json"))
}

fn write_sweep<R: Serialize>(
    a: &SweepArgs,
    axis: &str,
    columns: &[&'static str],
    rows: Vec<R>,
    values: Vec<Vec<f64>>,
    config: serde_json::Value,
) -> CmdResult {
    let mirror = mirror_path(&a.out)?;
    let manifest = RunManifest::new("sweep", config, Vec::new(), Vec::new());
    let link = crate::output::ManifestLink::Sidecar(manifest.reference(&file_name(&manifest_path(&a.out))));
    let doc = SweepMirror { report: "sweep", axis: axis.to_string(), columns: columns.to_vec(), rows, manifest: link };
    write_atomic(&manifest_path(&a.out), &to_json(&manifest))?;
    write_atomic(&mirror, &to_json(&doc))?;
    write_atomic(&a.out, csv_text(columns, &values).as_bytes())?;
    Ok(Status::Ok)
}

pub fn run(a: &SweepArgs) -> CmdResult {
    let grid = parse_grid(&a.grid).map_err(Failure::validation)?;
    mirror_path(&a.out)?;
    match a.axis {
        SweepAxisArg::StratumSeparation => {
            let rows = separation_sweep(a.mu1, a.mu0, a.sigma, a.n_strata, &grid).map_err(Failure::validation)?;
            let values = rows.iter().map(|r| vec![r.x, r.theta_stratum, r.wr_stratum, r.theta_marginal, r.wr_marginal]).collect();
            let config = json!({
                "axis": "stratum_separation",
                "grid": grid,
                "mu1": a.mu1,
                "mu0": a.mu0,
                "sigma": a.sigma,
                "n_strata": a.n_strata,
            });
            write_sweep(a, "stratum_separation", &SEPARATION_COLUMNS, rows, values, config)
        }
        other => {
            let axis = match other {
                SweepAxisArg::SlopeSd => SweepAxis::SlopeSd,
                SweepAxisArg::Followup => SweepAxis::Followup,
                _ => SweepAxis::NMeasurements,
            };
            let d = a.design.design()?;
            let rows = sweep(&d, axis, &grid).map_err(Failure::validation)?;
            let values = rows.iter().map(|r| r.values().to_vec()).collect();
            let config = json!({ "axis": axis.to_string(), "grid": grid, "design": DesignEcho::from(&d) });
            write_sweep(a, &axis.to_string(), &SWEEP_COLUMNS, rows, values, config)
        }
    }
}
