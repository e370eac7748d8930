//! Append-only JSON-lines session store. Every mutation is one event line,
//! flushed to disk before the caller is acknowledged; opening the store
//! replays the log. A torn final line (crash mid-append) is dropped and cut
//! off so later appends start on a clean line.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use nidsx_core::survey::SurveyResponse;
use serde::{Deserialize, Serialize};

use crate::ServiceError;

/// One line of the store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum StoreEvent {
    Created { session_id: String, scenario_id: Option<String>, at: String },
    Demographics { session_id: String, values: BTreeMap<String, String>, at: String },
    Answers { session_id: String, values: BTreeMap<String, u8>, at: String },
    Completed { session_id: String, at: String },
}

impl StoreEvent {
    fn session_id(&self) -> &str {
        match self {
            StoreEvent::Created { session_id, .. }
            | StoreEvent::Demographics { session_id, .. }
            | StoreEvent::Answers { session_id, .. }
            | StoreEvent::Completed { session_id, .. } => session_id,
        }
    }
}

/// Current state of one participant session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_id: String,
    pub scenario_id: Option<String>,
    pub demographics: BTreeMap<String, String>,
    pub answers: BTreeMap<String, u8>,
    pub created_at: String,
    pub completed_at: Option<String>,
}

impl SessionRecord {
    pub fn is_completed(&self) -> bool {
        self.completed_at.is_some()
    }

    pub fn to_response(&self) -> SurveyResponse {
        SurveyResponse {
            session_id: self.session_id.clone(),
            demographics: self.demographics.clone(),
            answers: self.answers.clone(),
            started_at: Some(self.created_at.clone()),
            completed_at: self.completed_at.clone(),
        }
    }
}

#[derive(Debug)]
pub struct Store {
    path: PathBuf,
    file: File,
    sessions: BTreeMap<String, SessionRecord>,
    /// Session ids in creation order.
    order: Vec<String>,
    /// Bytes dropped from a torn final line while opening.
    pub recovered_bytes: u64,
}

fn apply(sessions: &mut BTreeMap<String, SessionRecord>, order: &mut Vec<String>, event: StoreEvent) -> Result<(), String> {
    if let StoreEvent::Created { session_id, scenario_id, at } = event {
        if sessions.contains_key(&session_id) {
            return Err(format!("session {session_id} created twice"));
        }
        order.push(session_id.clone());
        let record = SessionRecord {
            session_id: session_id.clone(),
            scenario_id,
            demographics: BTreeMap::new(),
            answers: BTreeMap::new(),
            created_at: at,
            completed_at: None,
        };
        sessions.insert(session_id, record);
        return Ok(());
    }
    let id = event.session_id().to_string();
    let record = sessions.get_mut(&id).ok_or_else(|| format!("event for unknown session {id}"))?;
    if record.is_completed() {
        return Err(format!("event after completion of session {id}"));
    }
    match event {
        StoreEvent::Demographics { values, .. } => record.demographics.extend(values),
        StoreEvent::Answers { values, .. } => record.answers.extend(values),
        StoreEvent::Completed { at, .. } => record.completed_at = Some(at),
        StoreEvent::Created { .. } => unreachable!("handled above"),
    }
    Ok(())
}

impl Store {
    /// Opens or creates the log at `path` and replays it.
    pub fn open(path: &Path) -> Result<Self, ServiceError> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| ServiceError::Store(format!("{}: {e}", parent.display())))?;
        }
        let io = |e: std::io::Error| ServiceError::Store(format!("{}: {e}", path.display()));
        let mut file = OpenOptions::new().read(true).append(true).create(true).open(path).map_err(io)?;
        let mut sessions = BTreeMap::new();
        let mut order = Vec::new();
        let mut good_len = 0u64;
        let mut reader = BufReader::new(&file);
        let mut line = Vec::new();
        let mut line_no = 0usize;
        loop {
            line.clear();
            let n = reader.read_until(b'\n', &mut line).map_err(io)?;
            if n == 0 {
                break;
            }
            line_no += 1;
            let complete = line.ends_with(b"\n");
            let text = String::from_utf8_lossy(&line);
            if text.trim().is_empty() {
                good_len += n as u64;
                continue;
            }
            match serde_json::from_str::<StoreEvent>(text.trim()) {
                Ok(event) if complete => {
                    apply(&mut sessions, &mut order, event)
                        .map_err(|e| ServiceError::Store(format!("{} line {line_no}: {e}", path.display())))?;
                    good_len += n as u64;
                }
                // An unterminated final line was never acknowledged.
                _ if !complete => break,
                Err(e) => return Err(ServiceError::Store(format!("{} line {line_no}: {e}", path.display()))),
                Ok(_) => unreachable!("guarded above"),
            }
        }
        let total = file.seek(SeekFrom::End(0)).map_err(io)?;
        let recovered_bytes = total - good_len;
        if recovered_bytes > 0 {
            log::warn!("{}: dropping {recovered_bytes} bytes of an incomplete final line", path.display());
            file.set_len(good_len).map_err(io)?;
            file.sync_all().map_err(io)?;
        }
        Ok(Self { path: path.to_path_buf(), file, sessions, order, recovered_bytes })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Validates the event against current state, makes it durable, then applies it.
    pub fn append(&mut self, event: StoreEvent) -> Result<(), ServiceError> {
        let mut probe_sessions = BTreeMap::new();
        let mut probe_order = Vec::new();
        if let Some(existing) = self.sessions.get(event.session_id()) {
            probe_sessions.insert(existing.session_id.clone(), existing.clone());
        }
        apply(&mut probe_sessions, &mut probe_order, event.clone()).map_err(ServiceError::Conflict)?;

        let mut line = serde_json::to_vec(&event).map_err(|e| ServiceError::Store(e.to_string()))?;
        line.push(b'\n');
        let io = |e: std::io::Error| ServiceError::Store(format!("{}: {e}", self.path.display()));
        self.file.write_all(&line).map_err(io)?;
        self.file.sync_data().map_err(io)?;
        apply(&mut self.sessions, &mut self.order, event).map_err(ServiceError::Conflict)
    }

    pub fn session(&self, id: &str) -> Option<&SessionRecord> {
        self.sessions.get(id)
    }

    /// All sessions in creation order.
    pub fn sessions(&self) -> impl Iterator<Item = &SessionRecord> {
        self.order.iter().filter_map(|id| self.sessions.get(id))
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}
