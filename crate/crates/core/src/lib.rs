//! Win statistics for hierarchical composite endpoints.
//!
//! * [`hce`]: endpoint definitions, subject records and pairwise adjudication
//!   under a fixed horizon.
//! * [`win_stats`]: all-pairs tallies, WR / WO / NB, stratified pooling, the
//!   within-subject WR, permutation tests and transitivity diagnostics.
//! * [`theory`]: closed forms for normal outcomes, slope-estimator
//!   attenuation and stratum versus marginal WR.
//! * [`simulator`]: random-slope trial simulation and Monte Carlo checks of
//!   the closed forms.
//! * [`io`]: the subject CSV and HCE JSON formats.
//!
//! The analytic code is generic over [`Scalar`]; the aliases below fix it to
//! `f64`, which is what the data-facing code uses.

// Negated comparisons are used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod hce;
pub mod io;
pub mod scalar;
pub mod simulator;
pub mod theory;
pub mod win_stats;

pub use hce::{
    compare_pair, compare_subjects, validate_dataset, Arm, ComponentKind, ComponentSpec, Direction, HceDefinition,
    HceError, Observation, Outcome, PairVerdict, SubjectRecord, ValidationReport, Violation,
};
pub use scalar::{RatioValue, Scalar};
pub use theory::{SlopeMethod, SweepAxis};
pub use win_stats::{PairedDataset, WeightScheme, WinTally};

pub type Real = f64;
pub type Ratio = scalar::RatioValue<f64>;
pub type WinStatistics = win_stats::WinStatistics<f64>;
pub type StratifiedResult = win_stats::StratifiedResult<f64>;
pub type TransitivityReport = win_stats::TransitivityReport<f64>;
pub type IndividualWinRatio = win_stats::IndividualWinRatio<f64>;
pub type NormalArmPair = theory::NormalArmPair<f64>;
pub type ThetaStats = theory::ThetaStats<f64>;
pub type SlopeDesign = theory::SlopeDesign<f64>;
pub type SlopeWr = theory::SlopeWr<f64>;
pub type SweepRow = theory::SweepRow<f64>;
pub type StratumSpec = theory::StratumSpec<f64>;

/// Single-precision variants of the closed-form types.
pub mod f32 {
    pub type NormalArmPair = crate::theory::NormalArmPair<f32>;
    pub type SlopeDesign = crate::theory::SlopeDesign<f32>;
    pub type SweepRow = crate::theory::SweepRow<f32>;
    pub type StratumSpec = crate::theory::StratumSpec<f32>;
}
