//! Dataset directory layout: `<root>/<Task>/<kind>/<TrialId>.<ext>`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use walkdir::WalkDir;

use crate::context::TaskId;
use crate::transcript::{ContextTranscript, MpTranscript, DEFAULT_SAMPLE_RATE};

use super::gestures::parse_gestures;
use super::kinematics::KinematicSeries;
use super::trial::TrialId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DataKind {
    Kinematics,
    Context,
    MotionPrimitives,
    Gestures,
}

impl DataKind {
    pub const ALL: [DataKind; 4] = [
        DataKind::Kinematics,
        DataKind::Context,
        DataKind::MotionPrimitives,
        DataKind::Gestures,
    ];

    pub fn dir_name(self) -> &'static str {
        match self {
            DataKind::Kinematics => "kinematics",
            DataKind::Context => "context",
            DataKind::MotionPrimitives => "motion_primitives",
            DataKind::Gestures => "gestures",
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            DataKind::Kinematics => "csv",
            _ => "txt",
        }
    }

    fn from_dir(name: &str) -> Option<DataKind> {
        DataKind::ALL.into_iter().find(|k| k.dir_name() == name)
    }
}

/// Directory holding pre-extracted video frames; owned by the labeling
/// service and skipped by the scanner.
pub const FRAMES_DIR: &str = "frames";

pub fn path_for(root: &Path, trial: &TrialId, kind: DataKind) -> PathBuf {
    root.join(trial.task.name())
        .join(kind.dir_name())
        .join(format!("{trial}.{}", kind.extension()))
}

/// Files found for one trial.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrialFiles {
    pub files: BTreeMap<DataKind, PathBuf>,
}

impl TrialFiles {
    pub fn get(&self, kind: DataKind) -> Option<&Path> {
        self.files.get(&kind).map(PathBuf::as_path)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub path: PathBuf,
    pub message: String,
}

/// Result of walking a dataset root.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetIndex {
    pub trials: BTreeMap<TrialId, TrialFiles>,
    pub issues: Vec<Issue>,
}

/// Walks `root`, cross-linking files of the same trial. Misplaced or
/// misnamed files become issues. Hidden entries and frame folders are
/// ignored.
pub fn scan(root: &Path) -> Result<DatasetIndex, walkdir::Error> {
    let mut index = DatasetIndex::default();
    let walker = WalkDir::new(root)
        .min_depth(1)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| {
            let name = e.file_name().to_string_lossy();
            !(name.starts_with('.') || (e.depth() == 2 && name == FRAMES_DIR))
        });
    for entry in walker {
        let entry = entry?;
        if !entry.file_type().is_file() {
            continue;
        }
        let path = entry.path().to_path_buf();
        let mut issue = |message: String| {
            index.issues.push(Issue {
                path: path.clone(),
                message,
            })
        };
        let rel: Vec<String> = entry
            .path()
            .strip_prefix(root)
            .unwrap_or(entry.path())
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect();
        let [task_dir, kind_dir, file] = &rel[..] else {
            issue("not at <Task>/<kind>/<TrialId>.<ext>".into());
            continue;
        };
        let Some(task) = TaskId::ALL.into_iter().find(|t| t.name() == task_dir) else {
            issue(format!("unknown task directory {task_dir:?}"));
            continue;
        };
        let Some(kind) = DataKind::from_dir(kind_dir) else {
            issue(format!("unknown data kind {kind_dir:?}"));
            continue;
        };
        let Some((stem, ext)) = file.rsplit_once('.') else {
            issue("missing extension".into());
            continue;
        };
        if ext != kind.extension() {
            issue(format!("expected .{} for {}", kind.extension(), kind.dir_name()));
            continue;
        }
        let trial: TrialId = match stem.parse() {
            Ok(t) => t,
            Err(e) => {
                issue(e.to_string());
                continue;
            }
        };
        if trial.task != task {
            issue(format!("trial {trial} filed under {task}"));
            continue;
        }
        index
            .trials
            .entry(trial)
            .or_default()
            .files
            .insert(kind, path);
    }
    Ok(index)
}

/// Parses every indexed file, returning one issue per file that fails.
pub fn check_files(index: &DatasetIndex, kinematics_rate: u32) -> Vec<Issue> {
    let mut issues = Vec::new();
    for (trial, files) in &index.trials {
        for (kind, path) in &files.files {
            let result = fs::read_to_string(path)
                .map_err(|e| e.to_string())
                .and_then(|text| match kind {
                    DataKind::Context => ContextTranscript::parse(&text, trial.task)
                        .map(|_| ())
                        .map_err(|e| e.to_string()),
                    DataKind::MotionPrimitives => MpTranscript::parse(&text, DEFAULT_SAMPLE_RATE)
                        .map(|_| ())
                        .map_err(|e| e.to_string()),
                    DataKind::Gestures => parse_gestures(&text).map(|_| ()).map_err(|e| e.to_string()),
                    DataKind::Kinematics => KinematicSeries::read(text.as_bytes(), kinematics_rate)
                        .map(|_| ())
                        .map_err(|e| e.to_string()),
                });
            if let Err(message) = result {
                issues.push(Issue {
                    path: path.clone(),
                    message,
                });
            }
        }
    }
    issues
}
