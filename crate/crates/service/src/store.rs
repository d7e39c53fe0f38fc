//! Trials, frames and per-annotator labeling sessions on disk.
//!
//! Each session is one (trial, annotator) pair with an append-only journal
//! under `<root>/.sessions/`. Writes to a session are serialised by its lock
//! and checked against the caller's base version.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use compass_core::context::{parse_digits, ContextError, ContextState};
use compass_core::ingest::{TrialId, FRAMES_DIR};
use compass_core::transcript::ContextTranscript;
use compass_core::TaskId;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SESSIONS_DIR: &str = ".sessions";

const FRAME_EXTENSIONS: [&str; 4] = ["png", "jpg", "jpeg", "bmp"];

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown trial {0}")]
    UnknownTrial(String),
    #[error("malformed session id {0:?}; expected <TrialId>@<annotator>")]
    BadSessionId(String),
    #[error("frame {frame} is outside 0..{frame_count}")]
    FrameOutOfRange { frame: u32, frame_count: u32 },
    #[error("invalid state: {message}")]
    InvalidState {
        variable: Option<String>,
        message: String,
    },
    #[error("stale write: base version {base} but session is at {current}")]
    VersionConflict { base: u64, current: u64 },
    #[error("frame {0} has no label to copy")]
    UnlabeledFrame(u32),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
}

impl ServiceError {
    fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> ServiceError {
        let context = context.into();
        move |source| ServiceError::Io { context, source }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ServiceError::UnknownTrial(_) => "UnknownTrial",
            ServiceError::BadSessionId(_) => "BadSessionId",
            ServiceError::FrameOutOfRange { .. } => "FrameOutOfRange",
            ServiceError::InvalidState { .. } => "InvalidState",
            ServiceError::VersionConflict { .. } => "VersionConflict",
            ServiceError::UnlabeledFrame(_) => "UnlabeledFrame",
            ServiceError::BadRequest(_) => "BadRequest",
            ServiceError::Io { .. } => "Io",
        }
    }
}

fn invalid_state(e: ContextError) -> ServiceError {
    let variable = match &e {
        ContextError::CodeOutOfVocabulary { var, .. } => Some(var.name().to_string()),
        _ => None,
    };
    ServiceError::InvalidState {
        variable,
        message: e.to_string(),
    }
}

#[derive(Debug, Clone)]
struct TrialInfo {
    id: TrialId,
    frames: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSnapshot {
    pub id: String,
    pub trial: String,
    pub annotator: String,
    pub frame_count: u32,
    pub version: u64,
    pub labels: BTreeMap<u32, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
enum JournalEntry {
    Label {
        version: u64,
        frame: u32,
        state: String,
    },
    Carry {
        version: u64,
        from: u32,
        to: u32,
        state: String,
    },
    Replace {
        version: u64,
        labels: Vec<(u32, String)>,
    },
}

impl JournalEntry {
    fn version(&self) -> u64 {
        match self {
            JournalEntry::Label { version, .. }
            | JournalEntry::Carry { version, .. }
            | JournalEntry::Replace { version, .. } => *version,
        }
    }
}

#[derive(Debug)]
struct Session {
    trial: TrialId,
    annotator: String,
    frame_count: u32,
    labels: BTreeMap<u32, ContextState>,
    version: u64,
    journal: PathBuf,
}

impl Session {
    fn apply(&mut self, entry: &JournalEntry) -> Result<(), ServiceError> {
        let task = self.trial.task;
        let parse = |s: &str| parse_digits(s).and_then(|st| st.validate(task).map(|_| st));
        match entry {
            JournalEntry::Label { frame, state, .. } => {
                self.labels.insert(*frame, parse(state).map_err(invalid_state)?);
            }
            JournalEntry::Carry { from, to, state, .. } => {
                let s = parse(state).map_err(invalid_state)?;
                for f in *from..=*to {
                    self.labels.insert(f, s);
                }
            }
            JournalEntry::Replace { labels, .. } => {
                self.labels.clear();
                for (f, s) in labels {
                    self.labels.insert(*f, parse(s).map_err(invalid_state)?);
                }
            }
        }
        self.version = entry.version();
        Ok(())
    }

    /// Appends `entry` durably, then applies it.
    fn commit(&mut self, entry: JournalEntry) -> Result<u64, ServiceError> {
        let line = serde_json::to_string(&entry).expect("journal entries serialise");
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.journal)
            .map_err(ServiceError::io(self.journal.display().to_string()))?;
        writeln!(file, "{line}")
            .and_then(|_| file.sync_data())
            .map_err(ServiceError::io(self.journal.display().to_string()))?;
        self.apply(&entry)?;
        Ok(self.version)
    }

    fn check_base(&self, base: u64) -> Result<(), ServiceError> {
        if base != self.version {
            return Err(ServiceError::VersionConflict {
                base,
                current: self.version,
            });
        }
        Ok(())
    }

    fn check_frame(&self, frame: u32) -> Result<(), ServiceError> {
        if frame >= self.frame_count {
            return Err(ServiceError::FrameOutOfRange {
                frame,
                frame_count: self.frame_count,
            });
        }
        Ok(())
    }

    fn snapshot(&self) -> SessionSnapshot {
        SessionSnapshot {
            id: format!("{}@{}", self.trial, self.annotator),
            trial: self.trial.to_string(),
            annotator: self.annotator.clone(),
            frame_count: self.frame_count,
            version: self.version,
            labels: self.labels.iter().map(|(f, s)| (*f, s.render())).collect(),
        }
    }

    fn transcript(&self) -> ContextTranscript {
        ContextTranscript::from_pairs(self.trial.task, self.labels.iter().map(|(f, s)| (*f, *s)))
            .expect("stored labels are valid and ordered")
    }
}

/// Per-variable choices offered to annotators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableOptions {
    pub name: String,
    pub options: Vec<(u8, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub id: String,
    pub task: String,
    pub frame_count: u32,
    pub label_rate: u32,
    pub variables: Vec<VariableOptions>,
}

fn task_variables(task: TaskId) -> Vec<VariableOptions> {
    let spec = compass_core::task_spec(task);
    let objects: Vec<(u8, String)> = std::iter::once((0, "nothing".to_string()))
        .chain(spec.objects().iter().map(|k| (k.code().0, k.name().to_string())))
        .collect();
    compass_core::StateVar::ALL
        .into_iter()
        .map(|var| VariableOptions {
            name: var.name().to_string(),
            options: match var {
                compass_core::StateVar::Progress => spec
                    .progress_levels()
                    .iter()
                    .map(|p| (p.code, p.name.to_string()))
                    .collect(),
                _ => objects.clone(),
            },
        })
        .collect()
}

/// Shared service state.
#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    trials: BTreeMap<TrialId, TrialInfo>,
    sessions: Mutex<HashMap<String, Arc<RwLock<Session>>>>,
}

impl Store {
    /// Indexes trials that have pre-extracted frames at
    /// `<root>/<Task>/frames/<TrialId>/`.
    pub fn open(root: impl Into<PathBuf>) -> Result<Store, ServiceError> {
        let root = root.into();
        let mut trials = BTreeMap::new();
        for task in TaskId::ALL {
            let dir = root.join(task.name()).join(FRAMES_DIR);
            let Ok(entries) = fs::read_dir(&dir) else {
                continue;
            };
            for entry in entries {
                let entry = entry.map_err(ServiceError::io(dir.display().to_string()))?;
                let name = entry.file_name().to_string_lossy().into_owned();
                let Ok(id) = name.parse::<TrialId>() else {
                    continue;
                };
                if id.task != task || !entry.path().is_dir() {
                    continue;
                }
                let frames = list_frames(&entry.path())?;
                trials.insert(id, TrialInfo { id, frames });
            }
        }
        fs::create_dir_all(root.join(SESSIONS_DIR))
            .map_err(ServiceError::io(root.join(SESSIONS_DIR).display().to_string()))?;
        Ok(Store {
            root,
            trials,
            sessions: Mutex::new(HashMap::new()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn trials(&self) -> Vec<TrialSummary> {
        self.trials
            .values()
            .map(|t| TrialSummary {
                id: t.id.to_string(),
                task: t.id.task.name().to_string(),
                frame_count: t.frames.len() as u32,
                label_rate: compass_core::transcript::DEFAULT_LABEL_RATE,
                variables: task_variables(t.id.task),
            })
            .collect()
    }

    fn trial(&self, id: &str) -> Result<&TrialInfo, ServiceError> {
        id.parse::<TrialId>()
            .ok()
            .and_then(|t| self.trials.get(&t))
            .ok_or_else(|| ServiceError::UnknownTrial(id.to_string()))
    }

    /// Image bytes and content type of frame `k`.
    pub fn frame(&self, trial: &str, k: u32) -> Result<(Vec<u8>, &'static str), ServiceError> {
        let info = self.trial(trial)?;
        let path = info
            .frames
            .get(k as usize)
            .ok_or(ServiceError::FrameOutOfRange {
                frame: k,
                frame_count: info.frames.len() as u32,
            })?;
        let bytes = fs::read(path).map_err(ServiceError::io(path.display().to_string()))?;
        let ext = path
            .extension()
            .map(|e| e.to_string_lossy().to_lowercase())
            .unwrap_or_default();
        let mime = match ext.as_str() {
            "png" => "image/png",
            "jpg" | "jpeg" => "image/jpeg",
            "bmp" => "image/bmp",
            _ => "application/octet-stream",
        };
        Ok((bytes, mime))
    }

    fn session(&self, id: &str) -> Result<Arc<RwLock<Session>>, ServiceError> {
        let (trial, annotator) = id
            .split_once('@')
            .filter(|(_, a)| {
                !a.is_empty()
                    && a.len() <= 64
                    && a.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            })
            .ok_or_else(|| ServiceError::BadSessionId(id.to_string()))?;
        let info = self.trial(trial)?;
        let key = format!("{}@{annotator}", info.id);
        let mut sessions = self.sessions.lock().unwrap();
        if let Some(s) = sessions.get(&key) {
            return Ok(Arc::clone(s));
        }
        let journal = self.root.join(SESSIONS_DIR).join(format!("{key}.jsonl"));
        let mut session = Session {
            trial: info.id,
            annotator: annotator.to_string(),
            frame_count: info.frames.len() as u32,
            labels: BTreeMap::new(),
            version: 0,
            journal: journal.clone(),
        };
        if journal.exists() {
            let file = File::open(&journal).map_err(ServiceError::io(journal.display().to_string()))?;
            for (n, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(ServiceError::io(journal.display().to_string()))?;
                if line.trim().is_empty() {
                    continue;
                }
                // a torn final line from a crash mid-append is dropped
                let Ok(entry) = serde_json::from_str::<JournalEntry>(&line) else {
                    tracing::warn!("{}: skipping unreadable journal line {}", journal.display(), n + 1);
                    continue;
                };
                session.apply(&entry)?;
            }
        }
        let session = Arc::new(RwLock::new(session));
        sessions.insert(key, Arc::clone(&session));
        Ok(session)
    }

    pub fn snapshot(&self, id: &str) -> Result<SessionSnapshot, ServiceError> {
        Ok(self.session(id)?.read().unwrap().snapshot())
    }

    /// Sets one frame's label. Returns the new version.
    pub fn put_label(
        &self,
        id: &str,
        frame: u32,
        state: &str,
        base_version: u64,
    ) -> Result<u64, ServiceError> {
        let session = self.session(id)?;
        let mut s = session.write().unwrap();
        s.check_frame(frame)?;
        let parsed = parse_digits(state)
            .and_then(|st| st.validate(s.trial.task).map(|_| st))
            .map_err(invalid_state)?;
        s.check_base(base_version)?;
        let version = s.version + 1;
        s.commit(JournalEntry::Label {
            version,
            frame,
            state: parsed.render(),
        })
    }

    /// Copies the state in force at `from_frame` onto every frame through
    /// `to_frame`.
    pub fn carry(
        &self,
        id: &str,
        from_frame: u32,
        to_frame: u32,
        base_version: Option<u64>,
    ) -> Result<u64, ServiceError> {
        let session = self.session(id)?;
        let mut s = session.write().unwrap();
        s.check_frame(from_frame)?;
        s.check_frame(to_frame)?;
        if to_frame < from_frame {
            return Err(ServiceError::BadRequest(format!(
                "to_frame {to_frame} precedes from_frame {from_frame}"
            )));
        }
        if let Some(base) = base_version {
            s.check_base(base)?;
        }
        let state = s
            .labels
            .range(..=from_frame)
            .next_back()
            .map(|(_, st)| *st)
            .ok_or(ServiceError::UnlabeledFrame(from_frame))?;
        let version = s.version + 1;
        s.commit(JournalEntry::Carry {
            version,
            from: from_frame,
            to: to_frame,
            state: state.render(),
        })
    }

    /// The session's labels as a context transcript file.
    pub fn export(&self, id: &str) -> Result<String, ServiceError> {
        Ok(self.session(id)?.read().unwrap().transcript().render())
    }

    /// Replaces all labels with a context transcript file.
    pub fn import(&self, id: &str, text: &str, base_version: u64) -> Result<u64, ServiceError> {
        let session = self.session(id)?;
        let mut s = session.write().unwrap();
        let t = ContextTranscript::parse(text, s.trial.task).map_err(|e| ServiceError::InvalidState {
            variable: None,
            message: e.to_string(),
        })?;
        for e in t.entries() {
            s.check_frame(e.frame)?;
        }
        s.check_base(base_version)?;
        let version = s.version + 1;
        s.commit(JournalEntry::Replace {
            version,
            labels: t.entries().iter().map(|e| (e.frame, e.state.render())).collect(),
        })
    }
}

fn list_frames(dir: &Path) -> Result<Vec<PathBuf>, ServiceError> {
    let mut frames: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(ServiceError::io(dir.display().to_string()))?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| {
            p.extension()
                .map(|e| e.to_string_lossy().to_lowercase())
                .is_some_and(|e| FRAME_EXTENSIONS.contains(&e.as_str()))
        })
        .collect();
    frames.sort();
    Ok(frames)
}
