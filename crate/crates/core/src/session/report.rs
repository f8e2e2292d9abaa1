//! Flow and survey averages per session, and grouped across sessions.
//!
//! A record's flow average for a group is the mean FSI over the snapshots
//! falling in that group's event spans. A group's `flow_average` is the
//! unweighted mean of those per-record averages. Two discrepancy ratios are
//! reported:
//!
//! - `discrepancy_ratio`: `|S − F| / S` on the group means;
//! - `per_recording_ratio`: mean of `|s − f| / s` over surveyed records.

use std::collections::BTreeMap;
use std::fmt;
use std::io;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::model::{EventKind, Gesture, Location, QuestionnaireResponse, SessionRecord, Span};
use super::SessionError;

/// Order-independent mean: values are sorted and accumulated as offsets
/// from the minimum, so a constant input returns that constant exactly.
pub(crate) fn stable_mean(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let base = values[0];
    let offset: f64 = values.iter().map(|v| v - base).sum();
    Some((base + offset / values.len() as f64).clamp(base, values[values.len() - 1]))
}

/// Mean FSI of the snapshots in `span`, or of the whole series.
pub fn session_flow_average(record: &SessionRecord, span: Option<Span>) -> Result<f64, SessionError> {
    let mut fsi: Vec<f64> = record
        .metric_series
        .iter()
        .filter(|s| span.is_none_or(|sp| sp.contains(s.time)))
        .map(|s| s.fsi)
        .collect();
    stable_mean(&mut fsi).ok_or(SessionError::EmptySpan)
}

/// Mean FSI over the execution and visualization spans only.
pub fn scored_flow_average(record: &SessionRecord) -> Result<f64, SessionError> {
    let spans: Vec<Span> = record.event_spans().filter(|(e, _)| e.kind.is_scored()).map(|(_, s)| s).collect();
    span_mean(record, &spans).ok_or(SessionError::EmptySpan)
}

fn span_mean(record: &SessionRecord, spans: &[Span]) -> Option<f64> {
    let mut fsi: Vec<f64> = record
        .metric_series
        .iter()
        .filter(|s| spans.iter().any(|sp| sp.contains(s.time)))
        .map(|s| s.fsi)
        .collect();
    stable_mean(&mut fsi)
}

/// Likert answers rescaled to [0, 1]: `(mean − 1) / 4`.
pub fn survey_score(q: &QuestionnaireResponse) -> f64 {
    let sum: u32 = q.answers.get().iter().map(|&a| a as u32).sum();
    (sum as f64 / 10.0 - 1.0) / 4.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    Kind,
    Location,
    Gesture,
}

impl fmt::Display for GroupBy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Kind => "kind",
            Self::Location => "location",
            Self::Gesture => "gesture",
        })
    }
}

impl FromStr for GroupBy {
    type Err = SessionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "kind" => Ok(Self::Kind),
            "location" => Ok(Self::Location),
            "gesture" => Ok(Self::Gesture),
            other => Err(SessionError::Invalid(format!("unknown group_by {other:?}; expected kind, location or gesture"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum GroupKey {
    Kind(EventKind),
    KindLocation(EventKind, Location),
    Gesture(Gesture),
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Kind(k) => write!(f, "{k}"),
            Self::KindLocation(k, l) => write!(f, "{k}/{l}"),
            Self::Gesture(g) => write!(f, "{g}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub key: String,
    pub flow_average: f64,
    pub survey_average: Option<f64>,
    pub discrepancy_ratio: Option<f64>,
    pub per_recording_ratio: Option<f64>,
    /// Records contributing to the flow average.
    pub n: usize,
    /// Of those, records with a questionnaire.
    pub n_surveyed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub group_by: GroupBy,
    pub groups: Vec<GroupSummary>,
    /// All execution and visualization spans pooled per record.
    pub overall: Option<GroupSummary>,
}

fn summarize(key: String, rows: &[(f64, Option<f64>)]) -> Option<GroupSummary> {
    let mut flows: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let flow_average = stable_mean(&mut flows)?;
    let mut surveys: Vec<f64> = rows.iter().filter_map(|r| r.1).collect();
    let n_surveyed = surveys.len();
    let survey_average = stable_mean(&mut surveys);
    let discrepancy_ratio = survey_average.filter(|s| *s > 0.0).map(|s| (s - flow_average).abs() / s);
    let mut ratios: Vec<f64> =
        rows.iter().filter_map(|&(f, s)| s.filter(|s| *s > 0.0).map(|s| (s - f).abs() / s)).collect();
    let per_recording_ratio = stable_mean(&mut ratios);
    Some(GroupSummary {
        key,
        flow_average,
        survey_average,
        discrepancy_ratio,
        per_recording_ratio,
        n: rows.len(),
        n_surveyed,
    })
}

/// Groups records by event kind, kind/location, or gesture. Groups
/// without any snapshot are omitted. The result does not depend on the
/// order of `records`.
pub fn aggregate(records: &[SessionRecord], group_by: GroupBy) -> AggregateReport {
    let mut rows: BTreeMap<GroupKey, Vec<(f64, Option<f64>)>> = BTreeMap::new();
    let mut overall = Vec::new();
    for record in records {
        let survey = record.questionnaire.as_ref().map(survey_score);
        let mut spans: BTreeMap<GroupKey, Vec<Span>> = BTreeMap::new();
        for (event, span) in record.event_spans() {
            let key = match group_by {
                GroupBy::Kind => Some(GroupKey::Kind(event.kind)),
                GroupBy::Location => event.location.map(|l| GroupKey::KindLocation(event.kind, l)),
                GroupBy::Gesture => event.gesture.map(GroupKey::Gesture),
            };
            if let Some(key) = key {
                spans.entry(key).or_default().push(span);
            }
        }
        for (key, spans) in spans {
            if let Some(flow) = span_mean(record, &spans) {
                rows.entry(key).or_default().push((flow, survey));
            }
        }
        if let Ok(flow) = scored_flow_average(record) {
            overall.push((flow, survey));
        }
    }
    AggregateReport {
        group_by,
        groups: rows.into_iter().filter_map(|(k, r)| summarize(k.to_string(), &r)).collect(),
        overall: summarize("overall".into(), &overall),
    }
}

impl AggregateReport {
    pub fn group(&self, key: &str) -> Option<&GroupSummary> {
        self.groups.iter().find(|g| g.key == key)
    }

    /// One row per group plus the overall row; empty cells for absent
    /// survey values.
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<(), SessionError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "group_by",
            "key",
            "n",
            "n_surveyed",
            "flow_average",
            "survey_average",
            "discrepancy_ratio",
            "per_recording_ratio",
        ])
        .map_err(csv_error)?;
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for g in self.groups.iter().chain(&self.overall) {
            w.write_record([
                self.group_by.to_string(),
                g.key.clone(),
                g.n.to_string(),
                g.n_surveyed.to_string(),
                g.flow_average.to_string(),
                opt(g.survey_average),
                opt(g.discrepancy_ratio),
                opt(g.per_recording_ratio),
            ])
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn csv_error(e: csv::Error) -> SessionError {
    SessionError::Io(io::Error::other(e))
}
