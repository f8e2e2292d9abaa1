//! Recorded sessions: event markers, questionnaires, persistence, and
//! grouped flow reports.

pub mod model;
pub mod report;
pub mod store;

use thiserror::Error;

pub use model::{
    EventKind, Exercise, Gesture, LikertAnswers, Location, QuestionnaireResponse, RecordConfig, SessionEvent,
    SessionRecord, Span,
};
pub use report::{
    aggregate, scored_flow_average, session_flow_average, survey_score, AggregateReport, GroupBy, GroupSummary,
};
pub use store::{load_session, persist_session, read_session, session_to_string, SessionWriter, SCHEMA_VERSION};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("invalid session data: {0}")]
    Invalid(String),
    #[error("no snapshots in the requested span")]
    EmptySpan,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("session file has schema version {found}, this build reads version {supported}")]
    SchemaVersion { found: u64, supported: u32 },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}
