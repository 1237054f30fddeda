//! Line-delimited JSON transcripts: an optional date header, then one
//! predicate record per line.

use std::path::Path;

use chrono::NaiveDate;
use serde::Deserialize;
use thiserror::Error;

use crate::discourse::Predicate;

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Line {
    Header(NaiveDate),
    Record(Predicate),
    Blank,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    reference_date: String,
}

/// Parse one line. Blank lines and lines starting with `//` are skipped.
pub fn parse_line(text: &str) -> Result<Line, String> {
    let text = text.trim();
    if text.is_empty() || text.starts_with("//") {
        return Ok(Line::Blank);
    }
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    if value.get("reference_date").is_some() {
        let header: Header = serde_json::from_value(value).map_err(|e| e.to_string())?;
        let date = NaiveDate::parse_from_str(&header.reference_date, "%Y-%m-%d")
            .map_err(|e| format!("reference_date `{}`: {e}", header.reference_date))?;
        return Ok(Line::Header(date));
    }
    serde_json::from_value(value).map(Line::Record).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Transcript {
    pub reference_date: Option<NaiveDate>,
    pub records: Vec<Predicate>,
}

impl Transcript {
    pub fn parse(text: &str) -> Result<Transcript, TranscriptError> {
        let mut out = Transcript::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let fail = |message: String| TranscriptError::Parse { line, message };
            match parse_line(raw).map_err(fail)? {
                Line::Blank => {}
                Line::Header(_) if !out.records.is_empty() || out.reference_date.is_some() => {
                    return Err(fail("the header must come first and only once".into()));
                }
                Line::Header(date) => out.reference_date = Some(date),
                Line::Record(p) => out.records.push(p),
            }
        }
        Ok(out)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Transcript, TranscriptError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| TranscriptError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Transcript::parse(&text)
    }
}
