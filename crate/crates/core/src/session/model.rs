//! Session records: event markers, questionnaire answers, and the metric
//! series of one recording.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::StreamConfig;
use crate::metrics::{FsiConfig, MetricSnapshot, FORMULA_VERSION};

use super::SessionError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Execution,
    Visualization,
    Meditation,
    Exercise,
}

impl EventKind {
    pub const ALL: [EventKind; 4] = [Self::Execution, Self::Visualization, Self::Meditation, Self::Exercise];

    pub fn name(self) -> &'static str {
        match self {
            Self::Execution => "execution",
            Self::Visualization => "visualization",
            Self::Meditation => "meditation",
            Self::Exercise => "exercise",
        }
    }

    /// Kinds whose spans feed the session-level flow average.
    pub fn is_scored(self) -> bool {
        matches!(self, Self::Execution | Self::Visualization)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gesture {
    Drive,
    FairwayShot,
    ApproachShot,
    ChipOrPutt,
}

impl Gesture {
    pub const ALL: [Gesture; 4] = [Self::Drive, Self::FairwayShot, Self::ApproachShot, Self::ChipOrPutt];

    pub fn name(self) -> &'static str {
        match self {
            Self::Drive => "Drive",
            Self::FairwayShot => "FairwayShot",
            Self::ApproachShot => "ApproachShot",
            Self::ChipOrPutt => "ChipOrPutt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    Indoor,
    Outdoor,
}

impl Location {
    pub fn name(self) -> &'static str {
        match self {
            Self::Indoor => "indoor",
            Self::Outdoor => "outdoor",
        }
    }
}

macro_rules! display_and_parse {
    ($ty:ident) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $ty {
            type Err = SessionError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                serde_json::from_value(serde_json::Value::String(s.trim().to_string()))
                    .map_err(|_| SessionError::Invalid(format!("unknown {} {s:?}", stringify!($ty))))
            }
        }
    };
}

display_and_parse!(EventKind);
display_and_parse!(Gesture);
display_and_parse!(Location);

/// Flow-training exercise roster that can be attached to an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Exercise {
    #[serde(rename = "diaphragmatic breathing")]
    DiaphragmaticBreathing,
    #[serde(rename = "box breathing")]
    BoxBreathing,
    #[serde(rename = "mindfulness")]
    Mindfulness,
    #[serde(rename = "focused attention meditation")]
    FocusedAttentionMeditation,
    #[serde(rename = "guided visualization")]
    GuidedVisualization,
    #[serde(rename = "mental rehearsal")]
    MentalRehearsal,
    #[serde(rename = "instrumental or binaural music")]
    BinauralMusic,
    #[serde(rename = "brainwave frequency stimulation")]
    BrainwaveStimulation,
    #[serde(rename = "light stretching and yoga")]
    StretchingYoga,
    #[serde(rename = "neuro-linguistic programming")]
    NeuroLinguisticProgramming,
    #[serde(rename = "pomodoro technique")]
    Pomodoro,
}

impl Exercise {
    pub const ALL: [Exercise; 11] = [
        Self::DiaphragmaticBreathing,
        Self::BoxBreathing,
        Self::Mindfulness,
        Self::FocusedAttentionMeditation,
        Self::GuidedVisualization,
        Self::MentalRehearsal,
        Self::BinauralMusic,
        Self::BrainwaveStimulation,
        Self::StretchingYoga,
        Self::NeuroLinguisticProgramming,
        Self::Pomodoro,
    ];
}

/// A marker opening a span that lasts until the next marker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEvent")]
pub struct SessionEvent {
    /// Seconds since session start.
    pub time: f64,
    pub kind: EventKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gesture: Option<Gesture>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<Location>,
    #[serde(default)]
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exercise_name: Option<Exercise>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvent {
    time: f64,
    kind: EventKind,
    #[serde(default)]
    gesture: Option<Gesture>,
    #[serde(default)]
    location: Option<Location>,
    #[serde(default)]
    label: String,
    #[serde(default)]
    exercise_name: Option<Exercise>,
}

impl TryFrom<RawEvent> for SessionEvent {
    type Error = SessionError;

    fn try_from(r: RawEvent) -> Result<Self, Self::Error> {
        let e = SessionEvent {
            time: r.time,
            kind: r.kind,
            gesture: r.gesture,
            location: r.location,
            label: r.label,
            exercise_name: r.exercise_name,
        };
        e.validate()?;
        Ok(e)
    }
}

impl SessionEvent {
    pub fn new(time: f64, kind: EventKind) -> Self {
        Self { time, kind, gesture: None, location: None, label: String::new(), exercise_name: None }
    }

    pub fn with_gesture(mut self, gesture: Gesture) -> Self {
        self.gesture = Some(gesture);
        self
    }

    pub fn with_location(mut self, location: Location) -> Self {
        self.location = Some(location);
        self
    }

    pub fn validate(&self) -> Result<(), SessionError> {
        if !self.time.is_finite() || self.time < 0.0 {
            return Err(SessionError::Invalid(format!("event time {} must be finite and non-negative", self.time)));
        }
        if self.gesture.is_some() && self.kind != EventKind::Execution {
            return Err(SessionError::Invalid(format!("gesture is only valid on execution events, got {}", self.kind)));
        }
        Ok(())
    }
}

/// The ten 1–5 Likert answers, serialized as `{"Q1": 4, …, "Q10": 4}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LikertWire", into = "LikertWire")]
pub struct LikertAnswers([u8; 10]);

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct LikertWire {
    Q1: u8,
    Q2: u8,
    Q3: u8,
    Q4: u8,
    Q5: u8,
    Q6: u8,
    Q7: u8,
    Q8: u8,
    Q9: u8,
    Q10: u8,
}

impl TryFrom<LikertWire> for LikertAnswers {
    type Error = SessionError;

    fn try_from(w: LikertWire) -> Result<Self, Self::Error> {
        LikertAnswers::new([w.Q1, w.Q2, w.Q3, w.Q4, w.Q5, w.Q6, w.Q7, w.Q8, w.Q9, w.Q10])
    }
}

impl From<LikertAnswers> for LikertWire {
    #[allow(non_snake_case)]
    fn from(a: LikertAnswers) -> Self {
        let [Q1, Q2, Q3, Q4, Q5, Q6, Q7, Q8, Q9, Q10] = a.0;
        LikertWire { Q1, Q2, Q3, Q4, Q5, Q6, Q7, Q8, Q9, Q10 }
    }
}

impl LikertAnswers {
    pub fn new(answers: [u8; 10]) -> Result<Self, SessionError> {
        if let Some((i, v)) = answers.iter().enumerate().find(|(_, v)| !(1..=5).contains(*v)) {
            return Err(SessionError::Invalid(format!("Q{} = {v} is outside 1..=5", i + 1)));
        }
        Ok(Self(answers))
    }

    pub fn uniform(answer: u8) -> Result<Self, SessionError> {
        Self::new([answer; 10])
    }

    pub fn get(&self) -> [u8; 10] {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuestionnaireResponse {
    pub answers: LikertAnswers,
    /// Unix seconds.
    pub completed_at: f64,
}

/// Configuration a record was produced with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordConfig {
    pub stream: StreamConfig,
    pub fsi: FsiConfig,
    pub formula_version: String,
}

impl Default for RecordConfig {
    fn default() -> Self {
        Self { stream: StreamConfig::default(), fsi: FsiConfig::default(), formula_version: FORMULA_VERSION.to_string() }
    }
}

/// Half-open time interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub start: f64,
    pub end: f64,
}

impl Span {
    pub fn new(start: f64, end: f64) -> Self {
        Self { start, end }
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub id: String,
    pub config: RecordConfig,
    pub events: Vec<SessionEvent>,
    pub questionnaire: Option<QuestionnaireResponse>,
    pub metric_series: Vec<MetricSnapshot>,
    pub raw_frames_path: Option<String>,
}

impl SessionRecord {
    pub fn new(id: impl Into<String>, config: RecordConfig) -> Self {
        Self {
            id: id.into(),
            config,
            events: Vec::new(),
            questionnaire: None,
            metric_series: Vec::new(),
            raw_frames_path: None,
        }
    }

    /// Appends an event; it must not precede the latest one.
    pub fn push_event(&mut self, event: SessionEvent) -> Result<(), SessionError> {
        event.validate()?;
        if let Some(last) = self.events.last() {
            if event.time < last.time {
                return Err(SessionError::Invalid(format!(
                    "event at {} precedes the previous event at {}",
                    event.time, last.time
                )));
            }
        }
        self.events.push(event);
        Ok(())
    }

    pub fn push_snapshot(&mut self, snapshot: MetricSnapshot) -> Result<(), SessionError> {
        if let Some(last) = self.metric_series.last() {
            if snapshot.time <= last.time {
                return Err(SessionError::Invalid(format!(
                    "snapshot at {} does not follow {}",
                    snapshot.time, last.time
                )));
            }
        }
        self.metric_series.push(snapshot);
        Ok(())
    }

    pub fn validate(&self) -> Result<(), SessionError> {
        for e in &self.events {
            e.validate()?;
        }
        if self.events.windows(2).any(|w| w[1].time < w[0].time) {
            return Err(SessionError::Invalid("events are not time-ordered".into()));
        }
        if self.metric_series.windows(2).any(|w| w[1].time <= w[0].time) {
            return Err(SessionError::Invalid("metric series is not time-ordered".into()));
        }
        Ok(())
    }

    /// Each event with the span it opens; the last one runs to infinity.
    pub fn event_spans(&self) -> impl Iterator<Item = (&SessionEvent, Span)> + '_ {
        self.events.iter().enumerate().map(|(i, e)| {
            let end = self.events.get(i + 1).map_or(f64::INFINITY, |n| n.time);
            (e, Span::new(e.time, end))
        })
    }
}
