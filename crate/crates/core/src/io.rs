//! Subject-level CSV and HCE JSON formats.
//!
//! CSV columns: `subject_id, arm, stratum, followup_time`, then per
//! component either `<name>_time, <name>_status` (time-to-event; status 1 =
//! occurred, 0 = censored) or `<name>_value`. An empty cell is a missing
//! observation. Times are in months.

use std::collections::HashMap;
use std::io::{Read, Write};

use thiserror::Error;

use crate::hce::{Arm, ComponentKind, HceDefinition, Observation, SubjectRecord};
use crate::win_stats::{PairedDataset, PairedRow};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("row {row}, column `{column}`: {message}")]
    Parse { row: usize, column: String, message: String },
}

impl IoError {
    /// True for failures of the underlying reader or writer, as opposed to
    /// malformed content.
    pub fn is_io(&self) -> bool {
        match self {
            IoError::Io(_) => true,
            IoError::Csv(e) => matches!(e.kind(), csv::ErrorKind::Io(_)),
            IoError::Json(e) => e.is_io(),
            _ => false,
        }
    }
}

pub fn read_hce<R: Read>(reader: R) -> Result<HceDefinition, IoError> {
    Ok(serde_json::from_reader(reader)?)
}

/// A CSV row with its raw arm label, before arms are assigned.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRecord {
    pub label: String,
    pub record: SubjectRecord,
}

fn parse_f64(row: usize, column: &str, cell: &str) -> Result<Option<f64>, IoError> {
    let cell = cell.trim();
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse::<f64>().map(Some).map_err(|e| IoError::Parse { row, column: column.to_string(), message: e.to_string() })
}

/// Reads every row, keeping the arm label as text. Records get
/// [`Arm::Treatment`] for label `1` and [`Arm::Control`] otherwise; use
/// [`select_arms`] for other labelings.
pub fn read_labeled<R: Read>(reader: R, hce: &HceDefinition) -> Result<Vec<LabeledRecord>, IoError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let required = |name: &str| col.get(name).copied().ok_or_else(|| IoError::MissingColumn(name.to_string()));
    let id_col = required("subject_id")?;
    let arm_col = required("arm")?;
    let fu_col = required("followup_time")?;
    let stratum_col = col.get("stratum").copied();

    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let cell = |c: usize| row.get(c).unwrap_or("");
        let label = cell(arm_col).to_string();
        let followup = parse_f64(line, "followup_time", cell(fu_col))?.ok_or_else(|| IoError::Parse {
            row: line,
            column: "followup_time".into(),
            message: "empty".into(),
        })?;
        let arm = if label == "1" { Arm::Treatment } else { Arm::Control };
        let mut record = SubjectRecord::new(cell(id_col), arm, followup);
        record.stratum = stratum_col.map(|c| cell(c).to_string()).filter(|s| !s.is_empty());
        for spec in hce.components() {
            let obs = match spec.kind {
                ComponentKind::TimeToEvent => {
                    let tname = format!("{}_time", spec.name);
                    let sname = format!("{}_status", spec.name);
                    let (Some(&tc), Some(&sc)) = (col.get(tname.as_str()), col.get(sname.as_str())) else {
                        continue;
                    };
                    match (parse_f64(line, &tname, cell(tc))?, cell(sc)) {
                        (None, _) => Observation::Missing,
                        (Some(time), "1") => Observation::Event { time, occurred: true },
                        (Some(time), "0") => Observation::Event { time, occurred: false },
                        (Some(_), other) => {
                            return Err(IoError::Parse {
                                row: line,
                                column: sname,
                                message: format!("status must be 0 or 1, got `{other}`"),
                            })
                        }
                    }
                }
                ComponentKind::Ordinal | ComponentKind::Continuous => {
                    let vname = format!("{}_value", spec.name);
                    let Some(&vc) = col.get(vname.as_str()) else { continue };
                    parse_f64(line, &vname, cell(vc))?.map_or(Observation::Missing, Observation::Value)
                }
            };
            record.observations.insert(spec.name.clone(), obs);
        }
        out.push(LabeledRecord { label, record });
    }
    Ok(out)
}

/// Keeps rows labeled `treatment` or `control` and sets their arms.
pub fn select_arms(rows: &[LabeledRecord], treatment: &str, control: &str) -> Vec<SubjectRecord> {
    rows.iter()
        .filter_map(|r| {
            let arm = if r.label == treatment {
                Arm::Treatment
            } else if r.label == control {
                Arm::Control
            } else {
                return None;
            };
            Some(SubjectRecord { arm, ..r.record.clone() })
        })
        .collect()
}

/// Reads a two-arm dataset with arm labels `1` (treatment) and `0` (control).
pub fn read_subjects<R: Read>(reader: R, hce: &HceDefinition) -> Result<Vec<SubjectRecord>, IoError> {
    let rows = read_labeled(reader, hce)?;
    for (i, r) in rows.iter().enumerate() {
        if r.label != "0" && r.label != "1" {
            return Err(IoError::Parse { row: i + 2, column: "arm".into(), message: format!("expected 0 or 1, got `{}`", r.label) });
        }
    }
    Ok(rows.into_iter().map(|r| r.record).collect())
}

/// Per-subject outcomes under several treatments: `subject_id` plus one
/// numeric column per treatment.
#[derive(Debug, Clone, PartialEq)]
pub struct WideTable {
    pub columns: Vec<String>,
    pub ids: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl WideTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.values.iter().map(|r| r[j]).collect())
    }

    /// Paired outcomes `(y1, y0)` taken from two columns.
    pub fn paired(&self, treatment: &str, control: &str) -> Option<PairedDataset> {
        let (y1, y0) = (self.column(treatment)?, self.column(control)?);
        let rows = self
            .ids
            .iter()
            .zip(y1.iter().zip(&y0))
            .map(|(id, (&y1, &y0))| PairedRow { subject_id: id.clone(), y1, y0 })
            .collect();
        Some(PairedDataset { rows })
    }
}

pub fn read_wide<R: Read>(reader: R) -> Result<WideTable, IoError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.get(0) != Some("subject_id") {
        return Err(IoError::MissingColumn("subject_id".into()));
    }
    let columns: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i + 2;
        ids.push(row.get(0).unwrap_or("").to_string());
        let v = columns
            .iter()
            .enumerate()
            .map(|(j, c)| {
                parse_f64(line, c, row.get(j + 1).unwrap_or(""))?.ok_or_else(|| IoError::Parse {
                    row: line,
                    column: c.clone(),
                    message: "empty".into(),
                })
            })
            .collect::<Result<Vec<f64>, IoError>>()?;
        values.push(v);
    }
    Ok(WideTable { columns, ids, values })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes records in the column layout read by [`read_subjects`]. Floats use
/// the shortest round-trip representation.
pub fn write_subjects<W: Write>(writer: W, records: &[SubjectRecord], hce: &HceDefinition) -> Result<(), IoError> {
    let mut w = csv::WriterBuilder::new().from_writer(writer);
    let mut header: Vec<String> = ["subject_id", "arm", "stratum", "followup_time"].iter().map(|s| s.to_string()).collect();
    for spec in hce.components() {
        match spec.kind {
            ComponentKind::TimeToEvent => {
                header.push(format!("{}_time", spec.name));
                header.push(format!("{}_status", spec.name));
            }
            _ => header.push(format!("{}_value", spec.name)),
        }
    }
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.subject_id.clone(),
            (r.arm as u8).to_string(),
            r.stratum.clone().unwrap_or_default(),
            r.followup_time.to_string(),
        ];
        for spec in hce.components() {
            let obs = r.observations.get(&spec.name).copied().unwrap_or(Observation::Missing);
            match (spec.kind, obs) {
                (ComponentKind::TimeToEvent, Observation::Event { time, occurred }) => {
                    row.push(time.to_string());
                    row.push(if occurred { "1" } else { "0" }.into());
                }
                (ComponentKind::TimeToEvent, _) => {
                    row.push(String::new());
                    row.push(String::new());
                }
                (_, Observation::Value(v)) => row.push(fmt_opt(Some(v))),
                _ => row.push(String::new()),
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
