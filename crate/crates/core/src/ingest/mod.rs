//! Dataset plumbing: trial naming, file formats, kinematics resampling and
//! velocity derivation.

mod gestures;
mod kinematics;
mod layout;
mod trial;

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::context::TaskId;
use crate::transcript::{ContextTranscript, MpTranscript, TranscriptError};

pub use gestures::{parse_gestures, render_gestures, GestureSegment};
pub use kinematics::{
    column_names, derive_velocity, resample, with_derived_velocity, ArmSeries, KinematicSeries,
    DEFAULT_VELOCITY_WINDOW,
};
pub use layout::{check_files, path_for, scan, DataKind, DatasetIndex, Issue, TrialFiles, FRAMES_DIR};
pub use trial::TrialId;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed trial name {0:?}")]
    MalformedName(String),
    #[error("cannot resample from {from} Hz to {to} Hz")]
    IncompatibleRates { from: u32, to: u32 },
    #[error("series of {len} samples is shorter than the {window}-sample window")]
    SeriesTooShort { len: usize, window: usize },
    #[error("window must be odd and at least 3, got {0}")]
    InvalidWindow(usize),
    #[error("channel has {found} samples, expected {expected}")]
    ChannelLength { expected: usize, found: usize },
    #[error("{}line {line}: {message}", path_prefix(.path))]
    Parse {
        path: Option<PathBuf>,
        line: usize,
        message: String,
    },
    #[error("{}{source}", path_prefix(.path))]
    Transcript {
        path: Option<PathBuf>,
        source: TranscriptError,
    },
    #[error("{}{source}", path_prefix(.path))]
    Io {
        path: Option<PathBuf>,
        source: std::io::Error,
    },
}

fn path_prefix(path: &Option<PathBuf>) -> String {
    path.as_ref()
        .map(|p| format!("{}: ", p.display()))
        .unwrap_or_default()
}

impl IngestError {
    fn at(self, path: &Path) -> IngestError {
        let p = Some(path.to_path_buf());
        match self {
            IngestError::Parse { line, message, .. } => IngestError::Parse { path: p, line, message },
            IngestError::Transcript { source, .. } => IngestError::Transcript { path: p, source },
            IngestError::Io { source, .. } => IngestError::Io { path: p, source },
            other => other,
        }
    }
}

fn read(path: &Path) -> Result<String, IngestError> {
    fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: Some(path.to_path_buf()),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), IngestError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| IngestError::Io {
            path: Some(dir.to_path_buf()),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| IngestError::Io {
        path: Some(path.to_path_buf()),
        source,
    })
}

pub fn load_context(path: &Path, task: TaskId) -> Result<ContextTranscript, IngestError> {
    ContextTranscript::parse(&read(path)?, task).map_err(|source| IngestError::Transcript {
        path: Some(path.to_path_buf()),
        source,
    })
}

pub fn save_context(path: &Path, t: &ContextTranscript) -> Result<(), IngestError> {
    write(path, &t.render())
}

pub fn load_mp(path: &Path, sample_rate: u32) -> Result<MpTranscript, IngestError> {
    MpTranscript::parse(&read(path)?, sample_rate).map_err(|source| IngestError::Transcript {
        path: Some(path.to_path_buf()),
        source,
    })
}

pub fn save_mp(path: &Path, t: &MpTranscript) -> Result<(), IngestError> {
    write(path, &t.render())
}

pub fn load_gestures(path: &Path) -> Result<Vec<GestureSegment>, IngestError> {
    parse_gestures(&read(path)?).map_err(|e| e.at(path))
}

pub fn save_gestures(path: &Path, segments: &[GestureSegment]) -> Result<(), IngestError> {
    write(path, &render_gestures(segments))
}

pub fn load_kinematics(path: &Path, sample_rate: u32) -> Result<KinematicSeries, IngestError> {
    let file = fs::File::open(path).map_err(|source| IngestError::Io {
        path: Some(path.to_path_buf()),
        source,
    })?;
    KinematicSeries::read(std::io::BufReader::new(file), sample_rate).map_err(|e| e.at(path))
}

pub fn save_kinematics(path: &Path, series: &KinematicSeries) -> Result<(), IngestError> {
    let mut buf = Vec::new();
    series.write(&mut buf).map_err(|e| e.at(path))?;
    write(path, &String::from_utf8(buf).expect("csv output is utf-8"))
}
