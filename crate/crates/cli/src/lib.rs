//! Command-line front end: argument parsing, report assembly and file output.

pub mod analyze;
pub mod examples;
pub mod grid;
pub mod output;
pub mod report;
pub mod simulate;
pub mod sweep;
pub mod theory_cmd;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use winratio::{SlopeMethod, WeightScheme};

use output::{CmdResult, Failure};

#[derive(Debug, Parser)]
#[command(name = "winratio", version, about = "Win statistics for hierarchical composite endpoints")]
pub struct Cli {
    /// Worker threads for the parallel kernels (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tally a subject-level dataset and report WR / WO / NB.
    Analyze(AnalyzeArgs),
    /// Closed-form win probabilities.
    #[command(subcommand)]
    Theory(TheoryCommand),
    /// Tabulate closed-form WRs along one design axis (CSV plot data).
    Sweep(SweepArgs),
    /// Simulate random-slope trials and compare empirical WRs with theory.
    Simulate(SimulateArgs),
    /// Print a worked example.
    Examples(ExamplesArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Subject-level CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// HCE definition (JSON).
    #[arg(long)]
    pub hce: PathBuf,
    /// Arm labels as TREATMENT,CONTROL; rows with other labels are ignored.
    #[arg(long, value_parser = parse_arms)]
    pub arms: Option<(String, String)>,
    /// Add a stratified block using the `stratum` column.
    #[arg(long)]
    pub strata: bool,
    #[arg(long, value_enum, default_value = "pair-count")]
    pub weights: WeightArg,
    /// Permutations for a test of NB = 0 (0 disables).
    #[arg(long, default_value_t = 0)]
    pub permutations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Add pairwise WRs between every arm label and report circular triples.
    #[arg(long)]
    pub transitivity: bool,
    /// Report path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum WeightArg {
    Equal,
    PairCount,
    SampleSize,
}

impl From<WeightArg> for WeightScheme {
    fn from(w: WeightArg) -> Self {
        match w {
            WeightArg::Equal => WeightScheme::Equal,
            WeightArg::PairCount => WeightScheme::PairCount,
            WeightArg::SampleSize => WeightScheme::SampleSize,
        }
    }
}

fn parse_arms(s: &str) -> Result<(String, String), String> {
    match s.split_once(',') {
        Some((t, c)) if !t.trim().is_empty() && !c.trim().is_empty() && t.trim() != c.trim() => {
            Ok((t.trim().to_string(), c.trim().to_string()))
        }
        _ => Err(format!("expected two distinct labels as TREATMENT,CONTROL, got `{s}`")),
    }
}

#[derive(Debug, Subcommand)]
pub enum TheoryCommand {
    /// WR for two normal arms.
    Normal(NormalArgs),
    /// Slope-estimator attenuation for the random-slope model.
    Slope(SlopeArgs),
    /// Stratum-level versus marginal WR for a normal mixture.
    Strata(StrataArgs),
}

#[derive(Debug, Args)]
pub struct NormalArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub mu1: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub mu0: f64,
    #[arg(long)]
    pub sd1: f64,
    #[arg(long)]
    pub sd0: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Random-slope design; defaults are the CKD reference design.
#[derive(Debug, Clone, Args)]
pub struct DesignArgs {
    /// Between-subject slope SD (ml/min/1.73m² per year).
    #[arg(long, default_value_t = 3.0)]
    pub sigma_s: f64,
    /// Measurement error SD.
    #[arg(long, default_value_t = 5.18)]
    pub sigma_e: f64,
    /// Follow-up in years.
    #[arg(long, default_value_t = 2.0)]
    pub followup: f64,
    /// Equally spaced visits including baseline.
    #[arg(long, default_value_t = 9)]
    pub n_visits: usize,
    /// Explicit visit times in years (overrides --followup / --n-visits).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub times: Option<Vec<f64>>,
    #[arg(long, default_value_t = -2.0, allow_negative_numbers = true)]
    pub beta_treat: f64,
    #[arg(long, default_value_t = -3.0, allow_negative_numbers = true)]
    pub beta_ctrl: f64,
}

impl DesignArgs {
    pub fn design(&self) -> Result<winratio::SlopeDesign, Failure> {
        let d = match &self.times {
            Some(t) => winratio::SlopeDesign::new(t.clone(), self.sigma_s, self.sigma_e, self.beta_treat, self.beta_ctrl),
            None => winratio::SlopeDesign::equally_spaced(
                self.followup,
                self.n_visits,
                self.sigma_s,
                self.sigma_e,
                self.beta_treat,
                self.beta_ctrl,
            ),
        };
        d.map_err(Failure::validation)
    }
}

#[derive(Debug, Args)]
pub struct SlopeArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    #[arg(long, value_enum, default_value = "all")]
    pub method: MethodArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MethodArg {
    True,
    Lsme,
    Mc,
    All,
}

impl MethodArg {
    pub fn methods(self) -> Vec<SlopeMethod> {
        match self {
            MethodArg::True => vec![SlopeMethod::True],
            MethodArg::Lsme => vec![SlopeMethod::Lsme],
            MethodArg::Mc => vec![SlopeMethod::Mc],
            MethodArg::All => SlopeMethod::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Args)]
pub struct StrataArgs {
    /// Strata definition (JSON).
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepAxisArg {
    SlopeSd,
    Followup,
    NMeasurements,
    /// Equally weighted normal strata moved apart by x per stratum.
    StratumSeparation,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub axis: SweepAxisArg,
    /// START:STOP:STEP (inclusive) or a comma-separated list.
    #[arg(long)]
    pub grid: String,
    #[command(flatten)]
    pub design: DesignArgs,
    /// Stratum-separation sweep: treatment mean of the first stratum.
    #[arg(long, default_value_t = 55.0, allow_negative_numbers = true)]
    pub mu1: f64,
    /// Stratum-separation sweep: control mean of the first stratum.
    #[arg(long, default_value_t = 50.0, allow_negative_numbers = true)]
    pub mu0: f64,
    /// Stratum-separation sweep: common SD.
    #[arg(long, default_value_t = 5.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 2)]
    pub n_strata: usize,
    /// CSV output; a JSON mirror is written next to it with a `.json` extension.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario definition (JSON).
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub replications: usize,
    /// Master seed; overrides the scenario's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Estimators to summarize.
    #[arg(long, value_enum, default_value = "all")]
    pub method: MethodArg,
    /// Estimator whose slopes go into the exported datasets.
    #[arg(long, value_enum, default_value = "lsme")]
    pub export_method: ExportMethod,
    /// Export at most this many replication datasets.
    #[arg(long)]
    pub max_datasets: Option<usize>,
    /// Output directory; must not exist or be empty.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ExportMethod {
    True,
    Lsme,
    Mc,
}

impl From<ExportMethod> for SlopeMethod {
    fn from(m: ExportMethod) -> Self {
        match m {
            ExportMethod::True => SlopeMethod::True,
            ExportMethod::Lsme => SlopeMethod::Lsme,
            ExportMethod::Mc => SlopeMethod::Mc,
        }
    }
}

#[derive(Debug, Args)]
pub struct ExamplesArgs {
    #[arg(value_enum)]
    pub name: ExampleName,
    /// Print the result as JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ExampleName {
    HandsParadox,
    EfronTriple,
    Table4,
}

pub fn execute(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Analyze(a) => analyze::run(a),
        Command::Theory(TheoryCommand::Normal(a)) => theory_cmd::normal(a),
        Command::Theory(TheoryCommand::Slope(a)) => theory_cmd::slope(a),
        Command::Theory(TheoryCommand::Strata(a)) => theory_cmd::strata(a),
        Command::Sweep(a) => sweep::run(a),
        Command::Simulate(a) => simulate::run(a),
        Command::Examples(a) => examples::run(a),
    }
}

/// Entry point shared by the binary and the tests.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { output::EXIT_VALIDATION } else { output::EXIT_OK });
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(output::EXIT_VALIDATION);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: thread pool already initialized: {e}");
        }
    }
    match execute(&cli) {
        Ok(status) => ExitCode::from(status.code()),
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
