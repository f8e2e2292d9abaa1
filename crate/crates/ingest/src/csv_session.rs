//! CSV session files.
//!
//! ```text
//! timestamp,TP9,AF7,AF8,TP10
//! 0.000000,-12.5,7.25,6.0,
//! 0.003906,-11.0,,6.5,3.0
//! ```
//!
//! The first row is the header. A `timestamp` (or `time`) column and AF7
//! and AF8 columns are required; TP9 and TP10 are optional. Channel columns
//! may carry a `RAW_` prefix. Empty cells and `NaN` are missing values.
//! Each data row becomes one frame whose sequence number is its row index.
//! With `decimal_comma`, cells use `,` as decimal separator and `;` as
//! field delimiter.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use flowstate_core::signal::{ChannelId, SampleFrame};
use thiserror::Error;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CsvOptions {
    /// Abort on the first bad row instead of skipping it.
    pub strict: bool,
    pub decimal_comma: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct RowError {
    /// 1-based line in the file; the header is line 1.
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("header: {0}")]
    Header(String),
    #[error(transparent)]
    Row(#[from] RowError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvSession {
    pub frames: Vec<SampleFrame>,
    /// Channels present in the header.
    pub channels: Vec<ChannelId>,
    /// Rows skipped in lenient mode.
    pub row_errors: Vec<RowError>,
}

struct Layout {
    timestamp: usize,
    channels: Vec<(usize, ChannelId)>,
}

fn layout(header: &csv::StringRecord) -> Result<Layout, CsvError> {
    let mut timestamp = None;
    let mut channels: Vec<(usize, ChannelId)> = Vec::new();
    for (i, name) in header.iter().enumerate() {
        let name = name.trim().trim_start_matches('\u{feff}');
        let lower = name.to_ascii_lowercase();
        if lower == "timestamp" || lower == "time" {
            if timestamp.replace(i).is_some() {
                return Err(CsvError::Header("more than one timestamp column".into()));
            }
            continue;
        }
        let bare = if lower.starts_with("raw_") { &name[4..] } else { name };
        if let Ok(ch) = bare.parse::<ChannelId>() {
            if channels.iter().any(|(_, c)| *c == ch) {
                return Err(CsvError::Header(format!("duplicate column for {ch}")));
            }
            channels.push((i, ch));
        }
    }
    let timestamp = timestamp.ok_or_else(|| CsvError::Header("missing timestamp column".into()))?;
    for required in ChannelId::REQUIRED {
        if !channels.iter().any(|(_, c)| *c == required) {
            return Err(CsvError::Header(format!("missing required column {required}")));
        }
    }
    Ok(Layout { timestamp, channels })
}

fn parse_cell(cell: &str, decimal_comma: bool) -> Result<Option<f64>, String> {
    let cell = cell.trim();
    if cell.is_empty() {
        return Ok(None);
    }
    let owned;
    let text = if decimal_comma {
        owned = cell.replace(',', ".");
        owned.as_str()
    } else {
        cell
    };
    match text.parse::<f64>() {
        Ok(v) if v.is_nan() => Ok(None),
        Ok(v) if v.is_finite() => Ok(Some(v)),
        Ok(_) => Err(format!("non-finite value {cell:?}")),
        Err(_) => Err(format!("not a number: {cell:?}")),
    }
}

pub fn read_csv_session(path: &Path, options: CsvOptions) -> Result<CsvSession, CsvError> {
    read_csv_from(File::open(path)?, options)
}

pub fn read_csv_from<R: Read>(input: R, options: CsvOptions) -> Result<CsvSession, CsvError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(if options.decimal_comma { b';' } else { b',' })
        .flexible(true)
        .from_reader(input);
    let header = reader.headers().map_err(|e| CsvError::Header(e.to_string()))?.clone();
    let layout = layout(&header)?;
    let mut frames = Vec::new();
    let mut row_errors = Vec::new();
    for (index, row) in reader.records().enumerate() {
        let line = 2 + index as u64;
        let parsed = row.map_err(|e| e.to_string()).and_then(|row| {
            let cell = |i: usize| row.get(i).unwrap_or("");
            let timestamp =
                parse_cell(cell(layout.timestamp), options.decimal_comma)?.ok_or("empty timestamp".to_string())?;
            let mut frame = SampleFrame::new(timestamp, index as u64, [None; 4]);
            for &(col, ch) in &layout.channels {
                frame.set(ch, parse_cell(cell(col), options.decimal_comma).map_err(|m| format!("{ch}: {m}"))?);
            }
            Ok(frame)
        });
        match parsed {
            Ok(frame) => frames.push(frame),
            Err(message) => {
                let err = RowError { line, message };
                if options.strict {
                    return Err(err.into());
                }
                row_errors.push(err);
            }
        }
    }
    Ok(CsvSession { frames, channels: layout.channels.iter().map(|(_, c)| *c).collect(), row_errors })
}

/// Writes frames in the default dialect with all four channel columns.
/// Values use the shortest representation that parses back exactly.
pub fn write_csv_session<W: Write>(out: W, frames: &[SampleFrame]) -> Result<(), CsvError> {
    let mut w = csv::Writer::from_writer(out);
    let io_err = |e: csv::Error| CsvError::Io(io::Error::other(e));
    w.write_record(std::iter::once("timestamp").chain(ChannelId::ALL.iter().map(|c| c.name()))).map_err(io_err)?;
    for f in frames {
        let mut row = vec![f.timestamp.to_string()];
        row.extend(f.values.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush()?;
    Ok(())
}
