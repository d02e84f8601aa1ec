//! Worked examples built from the bundled fixtures.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use winratio::io::{read_hce, read_labeled, read_subjects, read_wide};
use winratio::win_stats::{individual_win_ratio, tally, transitivity_check, win_statistics};
use winratio::{compare_pair, Arm, HceDefinition, Outcome, SubjectRecord, WinTally};

use crate::output::{to_json, CmdResult, Failure, Status};
use crate::report::StratumOutput;
use crate::theory_cmd::{strata_report, StrataConfig};
use crate::{ExampleName, ExamplesArgs};

pub const OUTCOME_HCE: &str = include_str!("../fixtures/outcome_hce.json");
pub const TABLE1: &str = include_str!("../fixtures/table1_hands.csv");
pub const TABLE1_PAIRED: &str = include_str!("../fixtures/table1_paired.csv");
pub const TABLE2: &str = include_str!("../fixtures/table2_efron.csv");
pub const TABLE2_PAIRED: &str = include_str!("../fixtures/table2_paired.csv");
pub const TABLE4: &str = include_str!("../fixtures/table4.json");

fn outcome_hce() -> HceDefinition {
    read_hce(OUTCOME_HCE.as_bytes()).expect("bundled HCE parses")
}

#[derive(Debug, Serialize)]
pub struct HandsParadox {
    pub population: WinTally,
    pub population_win_ratio: f64,
    pub individual_wins: u64,
    pub individual_losses: u64,
    pub individual_win_ratio: f64,
    /// `pairs[i][j]`: treated subject i against control subject j.
    pub pairs: Vec<Vec<Outcome>>,
}

pub fn hands_paradox_from(data: &str, paired: &str) -> Result<HandsParadox, Failure> {
    let hce = outcome_hce();
    let recs = read_subjects(data.as_bytes(), &hce)?;
    let t = tally(&recs, &hce).map_err(Failure::validation)?;
    let (treat, ctrl): (Vec<&SubjectRecord>, Vec<&SubjectRecord>) = recs.iter().partition(|r| r.arm == Arm::Treatment);
    let pairs = treat
        .iter()
        .map(|a| ctrl.iter().map(|b| compare_pair(a, b, &hce).map(|v| v.outcome)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<_, _>>()
        .map_err(Failure::validation)?;
    let wide = read_wide(paired.as_bytes())?;
    let pd = wide.paired("y1", "y0").ok_or_else(|| Failure::validation(anyhow::anyhow!("paired file needs y1,y0")))?;
    let ind = individual_win_ratio::<f64>(&pd).map_err(Failure::validation)?;
    Ok(HandsParadox {
        population_win_ratio: win_statistics::<f64>(&t).win_ratio.finite().unwrap_or(f64::NAN),
        population: t,
        individual_wins: ind.wins,
        individual_losses: ind.losses,
        individual_win_ratio: ind.statistics.win_ratio.finite().unwrap_or(f64::NAN),
        pairs,
    })
}

#[derive(Debug, Serialize)]
pub struct PairResult {
    pub first: String,
    pub second: String,
    pub wins: u64,
    pub losses: u64,
    pub ties: u64,
    pub win_ratio: winratio::Ratio,
    pub individual_win_ratio: winratio::Ratio,
}

#[derive(Debug, Serialize)]
pub struct EfronTriple {
    pub comparisons: Vec<PairResult>,
    pub cycles: Vec<[String; 3]>,
}

pub fn efron_triple_from(data: &str, paired: &str) -> Result<EfronTriple, Failure> {
    let hce = outcome_hce();
    let rows = read_labeled(data.as_bytes(), &hce)?;
    let mut arms: BTreeMap<String, Vec<SubjectRecord>> = BTreeMap::new();
    for r in rows {
        arms.entry(r.label).or_default().push(r.record);
    }
    let report = transitivity_check::<f64>(&arms, &hce).map_err(Failure::validation)?;
    let wide = read_wide(paired.as_bytes())?;
    let comparisons = report
        .comparisons
        .iter()
        .map(|c| {
            let pd = wide
                .paired(&c.first, &c.second)
                .ok_or_else(|| Failure::validation(anyhow::anyhow!("paired file lacks arm {} or {}", c.first, c.second)))?;
            let ind = individual_win_ratio::<f64>(&pd).map_err(Failure::validation)?;
            Ok(PairResult {
                first: c.first.clone(),
                second: c.second.clone(),
                wins: c.tally.wins_t,
                losses: c.tally.wins_c,
                ties: c.tally.ties,
                win_ratio: c.win_ratio,
                individual_win_ratio: ind.statistics.win_ratio,
            })
        })
        .collect::<Result<_, Failure>>()?;
    Ok(EfronTriple { comparisons, cycles: report.cycles })
}

#[derive(Debug, Serialize)]
pub struct Table4 {
    pub strata: Vec<StratumOutput>,
    pub marginal_win_ratio: f64,
    pub stratified_win_ratio: f64,
}

pub fn table4_from(config: &str) -> Result<Table4, Failure> {
    let cfg: StrataConfig = serde_json::from_str(config).map_err(Failure::validation)?;
    let (strata, marginal, stratified_win_ratio) = strata_report(&cfg)?;
    Ok(Table4 { strata, marginal_win_ratio: marginal.win_ratio, stratified_win_ratio })
}

fn symbol(o: Outcome) -> &'static str {
    match o {
        Outcome::TreatmentWin => "W",
        Outcome::ControlWin => "L",
        Outcome::Tie => "=",
    }
}

fn hands_text(h: &HandsParadox) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Hand's paradox: three subjects, outcomes Y(1) and Y(0), higher is better.\n");
    for line in TABLE1_PAIRED.lines() {
        let _ = writeln!(s, "  {line}");
    }
    let _ = writeln!(s, "\nPopulation level: every Y(1) against every Y(0) (W = treatment wins).");
    for (i, row) in h.pairs.iter().enumerate() {
        let cells: Vec<&str> = row.iter().map(|o| symbol(*o)).collect();
        let _ = writeln!(s, "  treated subject {}: {}", i + 1, cells.join(" "));
    }
    let _ = writeln!(
        s,
        "  WR = {}/{} = {}",
        h.population.wins_t, h.population.wins_c, h.population_win_ratio
    );
    let _ = writeln!(s, "\nIndividual level: Y(1) against Y(0) within each subject.");
    let _ = writeln!(s, "  WR~ = {}/{} = {}", h.individual_wins, h.individual_losses, h.individual_win_ratio);
    let _ = writeln!(s, "\nThe two measures point in opposite directions.");
    s
}

fn ratio_text(r: &winratio::Ratio) -> String {
    match r.finite() {
        Some(v) => v.to_string(),
        None => r.flag().to_string(),
    }
}

fn efron_text(e: &EfronTriple) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Three arms with three subjects each, higher is better.\n");
    for line in TABLE2_PAIRED.lines() {
        let _ = writeln!(s, "  {line}");
    }
    let _ = writeln!(s);
    for c in &e.comparisons {
        let _ = writeln!(
            s,
            "  WR({} vs {}) = {}/{} = {}   WR~ = {}",
            c.first,
            c.second,
            c.wins,
            c.losses,
            ratio_text(&c.win_ratio),
            ratio_text(&c.individual_win_ratio)
        );
    }
    for [a, b, c] in &e.cycles {
        let _ = writeln!(s, "\nwarning: non-transitive cycle {a} > {b} > {c} > {a}");
    }
    s
}

fn table4_text(t: &Table4) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Two equally sized strata, normal outcome with SD 5.\n");
    for st in &t.strata {
        let _ = writeln!(
            s,
            "  {}: weight {}, means {} vs {}, theta {:.4}, WR {:.2}",
            st.name, st.weight, st.mu1, st.mu0, st.stats.theta, st.stats.win_ratio
        );
    }
    let _ = writeln!(s, "\n  marginal WR (strata ignored): {:.2}", t.marginal_win_ratio);
    let _ = writeln!(s, "  stratified WR (pooled within strata): {:.2}", t.stratified_win_ratio);
    s
}

pub fn run(a: &ExamplesArgs) -> CmdResult {
    let (text, json) = match a.name {
        ExampleName::HandsParadox => {
            let h = hands_paradox_from(TABLE1, TABLE1_PAIRED)?;
            (hands_text(&h), to_json(&h))
        }
        ExampleName::EfronTriple => {
            let e = efron_triple_from(TABLE2, TABLE2_PAIRED)?;
            (efron_text(&e), to_json(&e))
        }
        ExampleName::Table4 => {
            let t = table4_from(TABLE4)?;
            (table4_text(&t), to_json(&t))
        }
    };
    if a.json {
        print!("{}", String::from_utf8(json).expect("utf-8"));
    } else {
        print!("{text}");
    }
    Ok(Status::Ok)
}
