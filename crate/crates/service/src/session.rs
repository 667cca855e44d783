//! Sessions: a document with its well configs, the latest constraint set,
//! pool history and an append-only event log, stored as one JSON file.

use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use phraselette_core::constraints::Constraint;
use phraselette_core::model::{Document, InletId, Rephrasing, WellConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("unsupported session schema_version {found:?} (expected {SCHEMA_VERSION})")]
    SchemaVersionMismatch { found: Option<Value> },
    #[error("malformed session: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Actor {
    User,
    System,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    pub at: DateTime<Utc>,
    pub actor: Actor,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub detail: Value,
}

/// The pool of one job as of one arrival count. Entries are never edited.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HistoryEntry {
    pub inlet_id: InletId,
    pub job_id: String,
    pub generation: u64,
    /// Well completions included in this snapshot.
    pub cursor: usize,
    pub rephrasings: Vec<Rephrasing>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub schema_version: u64,
    pub document: Document,
    #[serde(default)]
    pub well_configs: Vec<WellConfig>,
    #[serde(default)]
    pub constraints: Vec<Constraint>,
    #[serde(default)]
    pub history: Vec<HistoryEntry>,
    #[serde(default)]
    pub event_log: Vec<Event>,
}

impl Session {
    pub fn new(document: Document) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            document,
            well_configs: Vec::new(),
            constraints: Vec::new(),
            history: Vec::new(),
            event_log: Vec::new(),
        }
    }

    /// Appends an event. Timestamps never go backwards even if the clock
    /// does.
    pub fn record(&mut self, actor: Actor, kind: &str, detail: Value) -> &Event {
        let now = Utc::now();
        let (seq, at) = match self.event_log.last() {
            Some(last) => (last.seq + 1, now.max(last.at)),
            None => (1, now),
        };
        self.event_log.push(Event {
            seq,
            at,
            actor,
            kind: kind.to_owned(),
            detail,
        });
        self.event_log.last().expect("just pushed")
    }

    pub fn well(&self, id: &str) -> Option<&WellConfig> {
        self.well_configs.iter().find(|w| w.well_id.as_str() == id)
    }

    pub fn from_value(v: Value) -> Result<Self, SessionError> {
        match v.get("schema_version") {
            Some(Value::Number(n)) if n.as_u64() == Some(SCHEMA_VERSION) => {}
            other => {
                return Err(SessionError::SchemaVersionMismatch {
                    found: other.cloned(),
                })
            }
        }
        Ok(serde_json::from_value(v)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sessions serialize")
    }

    /// Writes to a temporary file next to `path`, then renames it over
    /// `path`, so readers never see a partial file.
    pub fn save(&self, path: &Path) -> Result<(), SessionError> {
        let io = |source| SessionError::Io {
            path: path.to_owned(),
            source,
        };
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d.to_owned(),
            _ => PathBuf::from("."),
        };
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("session");
        let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
        let write = || -> std::io::Result<()> {
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(self.to_json().as_bytes())?;
            f.write_all(b"\n")?;
            f.sync_all()?;
            std::fs::rename(&tmp, path)
        };
        write().map_err(|e| {
            let _ = std::fs::remove_file(&tmp);
            io(e)
        })
    }

    pub fn load(path: &Path) -> Result<Self, SessionError> {
        let text = std::fs::read_to_string(path).map_err(|source| SessionError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_value(serde_json::from_str(&text)?)
    }
}
