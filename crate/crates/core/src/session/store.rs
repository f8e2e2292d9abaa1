//! Line-delimited JSON session files.
//!
//! ```text
//! {"type":"header","schema_version":1,"id":"…","config":{…},"raw_frames_path":null}
//! {"type":"event","time":12.5,"kind":"execution","gesture":"Drive","label":""}
//! {"type":"snapshot","time":4.0,"sequence":1023,…}
//! {"type":"questionnaire","answers":{"Q1":4,…,"Q10":4},"completed_at":1760400000.0}
//! {"type":"end","events":1,"snapshots":1}
//! ```
//!
//! Events and snapshots may interleave in any order; each list keeps its own
//! line order. A file without the `end` trailer, or whose trailer counts do
//! not match, is treated as truncated.

use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::metrics::MetricSnapshot;

use super::model::{QuestionnaireResponse, RecordConfig, SessionEvent, SessionRecord};
use super::SessionError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    schema_version: u32,
    id: String,
    config: RecordConfig,
    raw_frames_path: Option<String>,
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum LineRef<'a> {
    Header(&'a Header),
    Event(&'a SessionEvent),
    Snapshot(&'a MetricSnapshot),
    Questionnaire(&'a QuestionnaireResponse),
    End { events: usize, snapshots: usize },
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Header(Header),
    Event(SessionEvent),
    Snapshot(MetricSnapshot),
    Questionnaire(QuestionnaireResponse),
    End { events: usize, snapshots: usize },
}

fn write_line<W: Write>(out: &mut W, line: &LineRef<'_>) -> io::Result<()> {
    serde_json::to_writer(&mut *out, line).map_err(io::Error::other)?;
    out.write_all(b"\n")
}

/// Appends a live session to disk as it happens.
pub struct SessionWriter {
    out: BufWriter<File>,
    events: usize,
    snapshots: usize,
}

impl SessionWriter {
    pub fn create(path: &Path, id: &str, config: &RecordConfig, raw_frames_path: Option<&str>) -> Result<Self, SessionError> {
        let mut out = BufWriter::new(File::create(path)?);
        let header = Header {
            schema_version: SCHEMA_VERSION,
            id: id.to_string(),
            config: config.clone(),
            raw_frames_path: raw_frames_path.map(str::to_string),
        };
        write_line(&mut out, &LineRef::Header(&header))?;
        out.flush()?;
        Ok(Self { out, events: 0, snapshots: 0 })
    }

    pub fn event(&mut self, event: &SessionEvent) -> Result<(), SessionError> {
        write_line(&mut self.out, &LineRef::Event(event))?;
        self.out.flush()?;
        self.events += 1;
        Ok(())
    }

    pub fn snapshot(&mut self, snapshot: &MetricSnapshot) -> Result<(), SessionError> {
        write_line(&mut self.out, &LineRef::Snapshot(snapshot))?;
        self.snapshots += 1;
        Ok(())
    }

    /// Writes the questionnaire (if any) and the trailer.
    pub fn finish(mut self, questionnaire: Option<&QuestionnaireResponse>) -> Result<(), SessionError> {
        if let Some(q) = questionnaire {
            write_line(&mut self.out, &LineRef::Questionnaire(q))?;
        }
        write_line(&mut self.out, &LineRef::End { events: self.events, snapshots: self.snapshots })?;
        self.out.flush()?;
        self.out.get_ref().sync_all()?;
        Ok(())
    }
}

fn write_record<W: Write>(out: &mut W, record: &SessionRecord) -> io::Result<()> {
    let header = Header {
        schema_version: SCHEMA_VERSION,
        id: record.id.clone(),
        config: record.config.clone(),
        raw_frames_path: record.raw_frames_path.clone(),
    };
    write_line(out, &LineRef::Header(&header))?;
    for e in &record.events {
        write_line(out, &LineRef::Event(e))?;
    }
    for s in &record.metric_series {
        write_line(out, &LineRef::Snapshot(s))?;
    }
    if let Some(q) = &record.questionnaire {
        write_line(out, &LineRef::Questionnaire(q))?;
    }
    write_line(out, &LineRef::End { events: record.events.len(), snapshots: record.metric_series.len() })
}

/// Writes the record to `path` via a temporary sibling and a rename, so
/// readers never observe a half-written file.
pub fn persist_session(record: &SessionRecord, path: &Path) -> Result<(), SessionError> {
    record.validate()?;
    let mut tmp = PathBuf::from(path);
    tmp.set_extension("jsonl.tmp");
    {
        let file = File::create(&tmp)?;
        let mut out = BufWriter::new(file);
        write_record(&mut out, record)?;
        out.flush()?;
        out.get_ref().sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn session_to_string(record: &SessionRecord) -> String {
    let mut buf = Vec::new();
    write_record(&mut buf, record).expect("writing to memory");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

fn truncated(what: &str) -> SessionError {
    SessionError::Io(io::Error::new(io::ErrorKind::UnexpectedEof, format!("session file truncated: {what}")))
}

pub fn load_session(path: &Path) -> Result<SessionRecord, SessionError> {
    read_session(BufReader::new(File::open(path)?))
}

pub fn read_session<R: BufRead>(input: R) -> Result<SessionRecord, SessionError> {
    let mut lines = input.lines().enumerate();
    let first = match lines.next() {
        Some((_, line)) => line?,
        None => return Err(truncated("empty file")),
    };
    let head: serde_json::Value =
        serde_json::from_str(&first).map_err(|e| SessionError::Format { line: 1, message: e.to_string() })?;
    if head.get("type").and_then(|t| t.as_str()) != Some("header") {
        return Err(SessionError::Format { line: 1, message: "first line is not a header".into() });
    }
    match head.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        Some(v) => return Err(SessionError::SchemaVersion { found: v, supported: SCHEMA_VERSION }),
        None => return Err(SessionError::Format { line: 1, message: "header lacks schema_version".into() }),
    }
    let Ok(Line::Header(header)) = serde_json::from_value::<Line>(head) else {
        return Err(SessionError::Format { line: 1, message: "malformed header".into() });
    };

    let mut record = SessionRecord::new(header.id, header.config);
    record.raw_frames_path = header.raw_frames_path;
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Line = serde_json::from_str(&line).map_err(|e| {
            if e.is_eof() {
                truncated("partial line")
            } else {
                SessionError::Format { line: i + 1, message: e.to_string() }
            }
        })?;
        match parsed {
            Line::Header(_) => return Err(SessionError::Format { line: i + 1, message: "second header".into() }),
            Line::Event(e) => record.events.push(e),
            Line::Snapshot(s) => record.metric_series.push(s),
            Line::Questionnaire(q) => record.questionnaire = Some(q),
            Line::End { events, snapshots } => {
                if events != record.events.len() || snapshots != record.metric_series.len() {
                    return Err(truncated("trailer counts do not match the body"));
                }
                record.validate()?;
                return Ok(record);
            }
        }
    }
    Err(truncated("missing end trailer"))
}
