//! Hierarchical composite endpoints and pairwise adjudication.
//!
//! A [`HceDefinition`] is an ordered list of components, most severe first,
//! plus a comparison horizon. Two subjects are compared component by
//! component; the first component that separates them decides the pair.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    TimeToEvent,
    Ordinal,
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    HigherBetter,
    LowerBetter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpec {
    pub name: String,
    pub kind: ComponentKind,
    /// Ignored for time-to-event components, where the event is adverse and
    /// a later (or no) event is better.
    #[serde(default = "default_direction")]
    pub direction: Direction,
    /// Differences with absolute value at or below the margin are ties.
    #[serde(default)]
    pub margin: f64,
}

fn default_direction() -> Direction {
    Direction::HigherBetter
}

impl ComponentSpec {
    pub fn time_to_event(name: impl Into<String>) -> Self {
        Self { name: name.into(), kind: ComponentKind::TimeToEvent, direction: Direction::LowerBetter, margin: 0.0 }
    }

    pub fn continuous(name: impl Into<String>, direction: Direction, margin: f64) -> Self {
        Self { name: name.into(), kind: ComponentKind::Continuous, direction, margin }
    }

    pub fn ordinal(name: impl Into<String>, direction: Direction, margin: f64) -> Self {
        Self { name: name.into(), kind: ComponentKind::Ordinal, direction, margin }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HceError {
    #[error("an HCE needs at least one component")]
    NoComponents,
    #[error("horizon must be a positive finite time, got {0}")]
    InvalidHorizon(f64),
    #[error("duplicate component name `{0}`")]
    DuplicateComponent(String),
    #[error("component `{name}` has invalid margin {margin} (must be >= 0, and 0 for time-to-event)")]
    InvalidMargin { name: String, margin: f64 },
    #[error("subject `{subject}` has no observation for component `{component}`")]
    MissingComponent { subject: String, component: String },
    #[error("subject `{subject}`: observation for `{component}` does not match the component kind")]
    KindMismatch { subject: String, component: String },
    #[error("subject `{subject}`: {what} must be a non-negative finite time, got {value}")]
    NegativeTime { subject: String, what: String, value: f64 },
    #[error("subject `{subject}`: expected arm {expected:?}, found {found:?}")]
    ArmMismatch { subject: String, expected: Arm, found: Arm },
}

/// Ordered components plus the comparison horizon (months).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawHce")]
pub struct HceDefinition {
    components: Vec<ComponentSpec>,
    horizon: f64,
}

#[derive(Deserialize)]
struct RawHce {
    components: Vec<ComponentSpec>,
    horizon: f64,
}

impl TryFrom<RawHce> for HceDefinition {
    type Error = HceError;
    fn try_from(raw: RawHce) -> Result<Self, Self::Error> {
        HceDefinition::new(raw.components, raw.horizon)
    }
}

impl HceDefinition {
    pub fn new(mut components: Vec<ComponentSpec>, horizon: f64) -> Result<Self, HceError> {
        if components.is_empty() {
            return Err(HceError::NoComponents);
        }
        if !(horizon > 0.0) || horizon.is_nan() {
            return Err(HceError::InvalidHorizon(horizon));
        }
        let mut seen = HashSet::new();
        for c in &mut components {
            if !seen.insert(c.name.clone()) {
                return Err(HceError::DuplicateComponent(c.name.clone()));
            }
            let bad_margin = c.margin.is_nan()
                || c.margin < 0.0
                || (c.kind == ComponentKind::TimeToEvent && c.margin != 0.0);
            if bad_margin {
                return Err(HceError::InvalidMargin { name: c.name.clone(), margin: c.margin });
            }
            if c.kind == ComponentKind::TimeToEvent {
                c.direction = Direction::LowerBetter;
            }
        }
        Ok(Self { components, horizon })
    }

    pub fn components(&self) -> &[ComponentSpec] {
        &self.components
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.components.iter().position(|c| c.name == name)
    }

    pub fn with_horizon(&self, horizon: f64) -> Result<Self, HceError> {
        Self::new(self.components.clone(), horizon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Control = 0,
    Treatment = 1,
}

impl Arm {
    pub fn other(self) -> Arm {
        match self {
            Arm::Control => Arm::Treatment,
            Arm::Treatment => Arm::Control,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Observation {
    /// Adverse event component. A censored observation carries the
    /// follow-up time.
    Event { time: f64, occurred: bool },
    Value(f64),
    Missing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectRecord {
    pub subject_id: String,
    pub arm: Arm,
    pub stratum: Option<String>,
    /// Months.
    pub followup_time: f64,
    pub observations: BTreeMap<String, Observation>,
}

impl SubjectRecord {
    pub fn new(subject_id: impl Into<String>, arm: Arm, followup_time: f64) -> Self {
        Self { subject_id: subject_id.into(), arm, stratum: None, followup_time, observations: BTreeMap::new() }
    }

    pub fn with_stratum(mut self, stratum: impl Into<String>) -> Self {
        self.stratum = Some(stratum.into());
        self
    }

    pub fn with(mut self, component: impl Into<String>, obs: Observation) -> Self {
        self.observations.insert(component.into(), obs);
        self
    }

    pub fn with_value(self, component: impl Into<String>, v: f64) -> Self {
        self.with(component, Observation::Value(v))
    }

    pub fn with_event(self, component: impl Into<String>, time: f64) -> Self {
        self.with(component, Observation::Event { time, occurred: true })
    }

    /// Event-free through follow-up on `component`.
    pub fn with_censored(self, component: impl Into<String>) -> Self {
        let t = self.followup_time;
        self.with(component, Observation::Event { time: t, occurred: false })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    TreatmentWin,
    ControlWin,
    Tie,
}

impl Outcome {
    pub fn flip(self) -> Outcome {
        match self {
            Outcome::TreatmentWin => Outcome::ControlWin,
            Outcome::ControlWin => Outcome::TreatmentWin,
            Outcome::Tie => Outcome::Tie,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairVerdict {
    pub outcome: Outcome,
    /// Zero-based component index; `None` iff the pair is tied.
    pub deciding_component: Option<usize>,
    /// Sub-verdicts in hierarchy order, ending at the deciding component.
    pub trace: Vec<Outcome>,
}

/// Per-component comparison on already-resolved observations. `first` plays
/// the treatment role.
pub(crate) fn compare_component(
    spec: &ComponentSpec,
    horizon: f64,
    first: (&Observation, f64),
    second: (&Observation, f64),
) -> Outcome {
    match (first.0, second.0) {
        (
            Observation::Event { time: ta, occurred: ea },
            Observation::Event { time: tb, occurred: eb },
        ) => compare_events(horizon, (*ta, *ea, first.1), (*tb, *eb, second.1)),
        (Observation::Value(a), Observation::Value(b)) => compare_values(spec, *a, *b),
        _ => Outcome::Tie,
    }
}

/// `(event_time, occurred, followup)` per subject.
#[inline]
fn compare_events(horizon: f64, a: (f64, bool, f64), b: (f64, bool, f64)) -> Outcome {
    let h = a.2.min(b.2).min(horizon);
    // `x` beats `y` when y's event is inside the shared window and x is
    // known to be event-free at that time.
    let beats = |x: (f64, bool, f64), y: (f64, bool, f64)| {
        y.1 && y.0 <= h && (!x.1 || x.0 > y.0) && x.2 >= y.0
    };
    if beats(a, b) {
        Outcome::TreatmentWin
    } else if beats(b, a) {
        Outcome::ControlWin
    } else {
        Outcome::Tie
    }
}

#[inline]
fn compare_values(spec: &ComponentSpec, a: f64, b: f64) -> Outcome {
    let diff = a - b;
    if !(diff.abs() > spec.margin) {
        return Outcome::Tie;
    }
    let a_better = match spec.direction {
        Direction::HigherBetter => diff > 0.0,
        Direction::LowerBetter => diff < 0.0,
    };
    if a_better {
        Outcome::TreatmentWin
    } else {
        Outcome::ControlWin
    }
}

fn check_time(subject: &str, what: &str, value: f64) -> Result<(), HceError> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(HceError::NegativeTime { subject: subject.to_string(), what: what.to_string(), value })
    }
}

pub(crate) fn lookup<'a>(rec: &'a SubjectRecord, spec: &ComponentSpec) -> Result<&'a Observation, HceError> {
    let obs = rec.observations.get(&spec.name).ok_or_else(|| HceError::MissingComponent {
        subject: rec.subject_id.clone(),
        component: spec.name.clone(),
    })?;
    let ok = match (spec.kind, obs) {
        (_, Observation::Missing) => true,
        (ComponentKind::TimeToEvent, Observation::Event { time, .. }) => {
            check_time(&rec.subject_id, &format!("event time of `{}`", spec.name), *time)?;
            true
        }
        (ComponentKind::Ordinal | ComponentKind::Continuous, Observation::Value(_)) => true,
        _ => false,
    };
    if ok {
        Ok(obs)
    } else {
        Err(HceError::KindMismatch { subject: rec.subject_id.clone(), component: spec.name.clone() })
    }
}

/// Adjudicates `first` against `second` regardless of their arm labels;
/// `TreatmentWin` means `first` wins.
pub fn compare_subjects(first: &SubjectRecord, second: &SubjectRecord, hce: &HceDefinition) -> Result<PairVerdict, HceError> {
    check_time(&first.subject_id, "follow-up time", first.followup_time)?;
    check_time(&second.subject_id, "follow-up time", second.followup_time)?;
    let mut trace = Vec::with_capacity(hce.len());
    for (k, spec) in hce.components().iter().enumerate() {
        let a = lookup(first, spec)?;
        let b = lookup(second, spec)?;
        let o = compare_component(spec, hce.horizon(), (a, first.followup_time), (b, second.followup_time));
        trace.push(o);
        if o != Outcome::Tie {
            return Ok(PairVerdict { outcome: o, deciding_component: Some(k), trace });
        }
    }
    Ok(PairVerdict { outcome: Outcome::Tie, deciding_component: None, trace })
}

/// Compares a treatment subject with a comparator subject.
pub fn compare_pair(t_subject: &SubjectRecord, c_subject: &SubjectRecord, hce: &HceDefinition) -> Result<PairVerdict, HceError> {
    for (rec, expected) in [(t_subject, Arm::Treatment), (c_subject, Arm::Control)] {
        if rec.arm != expected {
            return Err(HceError::ArmMismatch { subject: rec.subject_id.clone(), expected, found: rec.arm });
        }
    }
    compare_subjects(t_subject, c_subject, hce)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NoSubjects,
    EmptyArm { arm: Arm },
    DuplicateId { subject: String },
    MissingComponent { subject: String, component: String },
    KindMismatch { subject: String, component: String },
    NegativeTime { subject: String, what: String, value: f64 },
    EventAfterFollowup { subject: String, component: String, event_time: f64, followup_time: f64 },
    CensoringTimeMismatch { subject: String, component: String, event_time: f64, followup_time: f64 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::NoSubjects => write!(f, "dataset has no subjects"),
            Violation::EmptyArm { arm } => write!(f, "arm {arm:?} has no subjects"),
            Violation::DuplicateId { subject } => write!(f, "duplicate subject id `{subject}`"),
            Violation::MissingComponent { subject, component } => {
                write!(f, "subject `{subject}` lacks component `{component}`")
            }
            Violation::KindMismatch { subject, component } => {
                write!(f, "subject `{subject}`: wrong observation type for `{component}`")
            }
            Violation::NegativeTime { subject, what, value } => {
                write!(f, "subject `{subject}`: {what} is {value}")
            }
            Violation::EventAfterFollowup { subject, component, event_time, followup_time } => write!(
                f,
                "subject `{subject}`: `{component}` event at {event_time} after follow-up {followup_time}"
            ),
            Violation::CensoringTimeMismatch { subject, component, event_time, followup_time } => write!(
                f,
                "subject `{subject}`: `{component}` censored at {event_time} but follow-up is {followup_time}"
            ),
        }
    }
}

/// Everything that prevents a dataset from being analyzed, plus missing-value
/// counts that are informational only.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Component name → number of subjects with a missing observation.
    pub missing_values: BTreeMap<String, usize>,
}

impl ValidationReport {
    pub fn is_analyzable(&self) -> bool {
        self.violations.is_empty()
    }
}

const CENSOR_TOL: f64 = 1e-9;

pub fn validate_dataset(records: &[SubjectRecord], hce: &HceDefinition) -> ValidationReport {
    let mut report = ValidationReport::default();
    if records.is_empty() {
        report.violations.push(Violation::NoSubjects);
        return report;
    }
    for arm in [Arm::Treatment, Arm::Control] {
        if !records.iter().any(|r| r.arm == arm) {
            report.violations.push(Violation::EmptyArm { arm });
        }
    }
    let mut ids = HashSet::new();
    for r in records {
        let subject = r.subject_id.clone();
        if !ids.insert(r.subject_id.as_str()) {
            report.violations.push(Violation::DuplicateId { subject: subject.clone() });
        }
        if !(r.followup_time >= 0.0 && r.followup_time.is_finite()) {
            report.violations.push(Violation::NegativeTime {
                subject: subject.clone(),
                what: "follow-up time".into(),
                value: r.followup_time,
            });
        }
        for spec in hce.components() {
            let component = spec.name.clone();
            match (spec.kind, r.observations.get(&spec.name)) {
                (_, None) => report.violations.push(Violation::MissingComponent { subject: subject.clone(), component }),
                (_, Some(Observation::Missing)) => *report.missing_values.entry(component).or_default() += 1,
                (ComponentKind::TimeToEvent, Some(Observation::Event { time, occurred })) => {
                    if !(*time >= 0.0 && time.is_finite()) {
                        report.violations.push(Violation::NegativeTime {
                            subject: subject.clone(),
                            what: format!("event time of `{component}`"),
                            value: *time,
                        });
                    } else if *occurred && *time > r.followup_time {
                        report.violations.push(Violation::EventAfterFollowup {
                            subject: subject.clone(),
                            component,
                            event_time: *time,
                            followup_time: r.followup_time,
                        });
                    } else if !*occurred && (*time - r.followup_time).abs() > CENSOR_TOL {
                        report.violations.push(Violation::CensoringTimeMismatch {
                            subject: subject.clone(),
                            component,
                            event_time: *time,
                            followup_time: r.followup_time,
                        });
                    }
                }
                (ComponentKind::Ordinal | ComponentKind::Continuous, Some(Observation::Value(v))) if v.is_finite() => {}
                _ => report.violations.push(Violation::KindMismatch { subject: subject.clone(), component }),
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ckd_hce() -> HceDefinition {
        HceDefinition::new(
            vec![
                ComponentSpec::time_to_event("death"),
                ComponentSpec::time_to_event("krt"),
                ComponentSpec::continuous("slope", Direction::HigherBetter, 0.0),
            ],
            24.0,
        )
        .unwrap()
    }

    fn base(id: &str, arm: Arm) -> SubjectRecord {
        SubjectRecord::new(id, arm, 24.0).with_censored("death").with_censored("krt").with_value("slope", -2.0)
    }

    #[test]
    fn identical_records_tie() {
        let hce = ckd_hce();
        let v = compare_pair(&base("t", Arm::Treatment), &base("c", Arm::Control), &hce).unwrap();
        assert_eq!(v.outcome, Outcome::Tie);
        assert_eq!(v.deciding_component, None);
        assert_eq!(v.trace, vec![Outcome::Tie; 3]);
    }

    #[test]
    fn earlier_death_loses() {
        let hce = ckd_hce();
        let c = base("c", Arm::Control).with_event("death", 12.0);
        let v = compare_pair(&base("t", Arm::Treatment), &c, &hce).unwrap();
        assert_eq!(v.outcome, Outcome::TreatmentWin);
        assert_eq!(v.deciding_component, Some(0));
        assert_eq!(v.trace, vec![Outcome::TreatmentWin]);
    }

    #[test]
    fn continuous_decides_after_event_ties() {
        let hce = ckd_hce();
        let t = base("t", Arm::Treatment).with_value("slope", 55.0);
        let c = base("c", Arm::Control).with_value("slope", 50.0);
        let v = compare_pair(&t, &c, &hce).unwrap();
        assert_eq!(v.outcome, Outcome::TreatmentWin);
        assert_eq!(v.deciding_component, Some(2));
        assert_eq!(v.trace, vec![Outcome::Tie, Outcome::Tie, Outcome::TreatmentWin]);
    }

    #[test]
    fn lower_better_direction() {
        let hce = HceDefinition::new(vec![ComponentSpec::ordinal("hosp", Direction::LowerBetter, 0.0)], 12.0).unwrap();
        let t = SubjectRecord::new("t", Arm::Treatment, 12.0).with_value("hosp", 1.0);
        let c = SubjectRecord::new("c", Arm::Control, 12.0).with_value("hosp", 3.0);
        assert_eq!(compare_pair(&t, &c, &hce).unwrap().outcome, Outcome::TreatmentWin);
    }

    #[test]
    fn margin_ties() {
        let hce = HceDefinition::new(vec![ComponentSpec::continuous("kccq", Direction::HigherBetter, 5.0)], 3.0).unwrap();
        let mk = |id: &str, arm, v| SubjectRecord::new(id, arm, 3.0).with_value("kccq", v);
        let c = mk("c", Arm::Control, 10.0);
        assert_eq!(compare_pair(&mk("t", Arm::Treatment, 15.0), &c, &hce).unwrap().outcome, Outcome::Tie);
        assert_eq!(compare_pair(&mk("t", Arm::Treatment, 15.5), &c, &hce).unwrap().outcome, Outcome::TreatmentWin);
        assert_eq!(compare_pair(&mk("t", Arm::Treatment, 4.0), &c, &hce).unwrap().outcome, Outcome::ControlWin);
        let inf = HceDefinition::new(vec![ComponentSpec::continuous("kccq", Direction::HigherBetter, f64::INFINITY)], 3.0)
            .unwrap();
        assert_eq!(compare_pair(&mk("t", Arm::Treatment, 1e300), &c, &inf).unwrap().outcome, Outcome::Tie);
    }

    #[test]
    fn missing_value_ties() {
        let hce = ckd_hce();
        let t = base("t", Arm::Treatment).with("slope", Observation::Missing);
        let c = base("c", Arm::Control).with_value("slope", 100.0);
        assert_eq!(compare_pair(&t, &c, &hce).unwrap().outcome, Outcome::Tie);
    }

    #[test]
    fn censoring_rules() {
        let hce = HceDefinition::new(vec![ComponentSpec::time_to_event("death")], 24.0).unwrap();
        // Treatment censored at 6 months, control dies at 12: not decidable.
        let t = SubjectRecord::new("t", Arm::Treatment, 6.0).with_censored("death");
        let c = SubjectRecord::new("c", Arm::Control, 24.0).with_event("death", 12.0);
        assert_eq!(compare_pair(&t, &c, &hce).unwrap().outcome, Outcome::Tie);
        // Control dies at 4, inside the treatment subject's follow-up.
        let c = SubjectRecord::new("c", Arm::Control, 24.0).with_event("death", 4.0);
        assert_eq!(compare_pair(&t, &c, &hce).unwrap().outcome, Outcome::TreatmentWin);
        // Both die; the later death wins.
        let t = SubjectRecord::new("t", Arm::Treatment, 24.0).with_event("death", 10.0);
        assert_eq!(compare_pair(&t, &c, &hce).unwrap().outcome, Outcome::TreatmentWin);
        // Simultaneous deaths tie.
        let t = SubjectRecord::new("t", Arm::Treatment, 24.0).with_event("death", 4.0);
        assert_eq!(compare_pair(&t, &c, &hce).unwrap().outcome, Outcome::Tie);
        // Event beyond the horizon is not counted.
        let short = hce.with_horizon(3.0).unwrap();
        let t = SubjectRecord::new("t", Arm::Treatment, 24.0).with_censored("death");
        assert_eq!(compare_pair(&t, &c, &short).unwrap().outcome, Outcome::Tie);
        assert_eq!(compare_pair(&t, &c, &hce).unwrap().outcome, Outcome::TreatmentWin);
    }

    #[test]
    fn missing_component_error() {
        let hce = ckd_hce();
        let mut t = base("t7", Arm::Treatment);
        t.observations.remove("slope");
        let err = compare_pair(&t, &base("c", Arm::Control), &hce).unwrap_err();
        assert_eq!(err, HceError::MissingComponent { subject: "t7".into(), component: "slope".into() });
    }

    #[test]
    fn negative_time_error() {
        let hce = ckd_hce();
        let t = base("t", Arm::Treatment).with_event("death", -1.0);
        assert!(matches!(compare_pair(&t, &base("c", Arm::Control), &hce), Err(HceError::NegativeTime { .. })));
        let mut c = base("c", Arm::Control);
        c.followup_time = -3.0;
        assert!(matches!(compare_pair(&base("t", Arm::Treatment), &c, &hce), Err(HceError::NegativeTime { .. })));
    }

    #[test]
    fn arm_mismatch_error() {
        let hce = ckd_hce();
        let err = compare_pair(&base("a", Arm::Control), &base("b", Arm::Control), &hce).unwrap_err();
        assert!(matches!(err, HceError::ArmMismatch { .. }));
    }

    #[test]
    fn hce_construction_errors() {
        assert_eq!(HceDefinition::new(vec![], 1.0), Err(HceError::NoComponents));
        let c = ComponentSpec::time_to_event("d");
        assert!(matches!(HceDefinition::new(vec![c.clone()], 0.0), Err(HceError::InvalidHorizon(_))));
        assert!(matches!(HceDefinition::new(vec![c.clone(), c.clone()], 1.0), Err(HceError::DuplicateComponent(_))));
        let bad = ComponentSpec { margin: 1.0, ..c };
        assert!(matches!(HceDefinition::new(vec![bad], 1.0), Err(HceError::InvalidMargin { .. })));
        let neg = ComponentSpec::continuous("x", Direction::HigherBetter, -0.1);
        assert!(matches!(HceDefinition::new(vec![neg], 1.0), Err(HceError::InvalidMargin { .. })));
    }

    #[test]
    fn hce_json() {
        let json = r#"{"components":[
            {"name":"death","kind":"time_to_event"},
            {"name":"gfr_slope","kind":"continuous","direction":"higher_better","margin":0.5}
        ],"horizon":24}"#;
        let hce: HceDefinition = serde_json::from_str(json).unwrap();
        assert_eq!(hce.len(), 2);
        assert_eq!(hce.components()[1].margin, 0.5);
        assert!(serde_json::from_str::<HceDefinition>(r#"{"components":[],"horizon":1}"#).is_err());
    }

    fn dataset() -> Vec<SubjectRecord> {
        vec![
            base("1", Arm::Treatment),
            base("2", Arm::Treatment).with_event("death", 3.0),
            base("3", Arm::Control).with_value("slope", -4.0),
            base("4", Arm::Control).with_event("krt", 20.0),
        ]
    }

    #[test]
    fn valid_dataset_has_empty_report() {
        let r = validate_dataset(&dataset(), &ckd_hce());
        assert!(r.is_analyzable(), "{:?}", r);
        assert!(r.missing_values.is_empty());
    }

    #[test]
    fn event_after_followup_flagged() {
        let mut d = dataset();
        d[1] = base("2", Arm::Treatment).with_event("death", 30.0);
        let r = validate_dataset(&d, &ckd_hce());
        assert_eq!(r.violations.len(), 1);
        assert!(matches!(&r.violations[0], Violation::EventAfterFollowup { subject, .. } if subject == "2"));
    }

    #[test]
    fn missing_slope_flagged() {
        let mut d = dataset();
        d[2].observations.remove("slope");
        let r = validate_dataset(&d, &ckd_hce());
        assert_eq!(
            r.violations,
            vec![Violation::MissingComponent { subject: "3".into(), component: "slope".into() }]
        );
    }

    #[test]
    fn other_violations() {
        let hce = ckd_hce();
        assert_eq!(validate_dataset(&[], &hce).violations, vec![Violation::NoSubjects]);
        let mut d = dataset();
        d[3].subject_id = "1".into();
        d[2] = d[2].clone().with("slope", Observation::Missing);
        d.push(base("9", Arm::Control).with_value("death", 1.0));
        let r = validate_dataset(&d, &hce);
        assert!(r.violations.contains(&Violation::DuplicateId { subject: "1".into() }));
        assert!(r.violations.iter().any(|v| matches!(v, Violation::KindMismatch { subject, .. } if subject == "9")));
        assert_eq!(r.missing_values.get("slope"), Some(&1));
        let only_t: Vec<_> = dataset().into_iter().filter(|r| r.arm == Arm::Treatment).collect();
        assert!(validate_dataset(&only_t, &hce).violations.contains(&Violation::EmptyArm { arm: Arm::Control }));
    }
}
