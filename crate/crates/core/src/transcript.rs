//! Context transcripts (label rate) and MP transcripts (sample rate), with
//! their line-oriented text formats.

use std::fmt::Write as _;

use thiserror::Error;

use crate::context::{parse_digits, ContextError, ContextState, TaskId};
use crate::mp::{MotionPrimitive, Side};

pub const DEFAULT_LABEL_RATE: u32 = 3;
pub const DEFAULT_SAMPLE_RATE: u32 = 30;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranscriptError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("frame {frame} does not increase on previous frame {previous}")]
    NonMonotonicFrames { previous: u32, frame: u32 },
    #[error("frame {frame}: {source}")]
    InvalidState { frame: u32, source: ContextError },
    #[error("segment [{start}, {end}) does not start after the previous one")]
    Unordered { start: u32, end: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ContextEntry {
    pub frame: u32,
    pub state: ContextState,
}

/// Frame-indexed context labels for one trial. Frames strictly increase and
/// every state is valid for `task`. A state holds until the next entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextTranscript {
    task: TaskId,
    label_rate: u32,
    entries: Vec<ContextEntry>,
}

impl ContextTranscript {
    pub fn new(task: TaskId, entries: Vec<ContextEntry>) -> Result<Self, TranscriptError> {
        Self::with_rate(task, entries, DEFAULT_LABEL_RATE)
    }

    pub fn with_rate(
        task: TaskId,
        entries: Vec<ContextEntry>,
        label_rate: u32,
    ) -> Result<Self, TranscriptError> {
        check_monotonic(entries.iter().map(|e| e.frame))?;
        for e in &entries {
            e.state
                .validate(task)
                .map_err(|source| TranscriptError::InvalidState {
                    frame: e.frame,
                    source,
                })?;
        }
        Ok(ContextTranscript {
            task,
            label_rate,
            entries,
        })
    }

    pub fn from_pairs(
        task: TaskId,
        pairs: impl IntoIterator<Item = (u32, ContextState)>,
    ) -> Result<Self, TranscriptError> {
        Self::new(
            task,
            pairs
                .into_iter()
                .map(|(frame, state)| ContextEntry { frame, state })
                .collect(),
        )
    }

    pub fn task(&self) -> TaskId {
        self.task
    }

    pub fn label_rate(&self) -> u32 {
        self.label_rate
    }

    pub fn entries(&self) -> &[ContextEntry] {
        &self.entries
    }

    pub fn states(&self) -> impl Iterator<Item = ContextState> + '_ {
        self.entries.iter().map(|e| e.state)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn last_frame(&self) -> Option<u32> {
        self.entries.last().map(|e| e.frame)
    }

    /// The state in force at `frame`, or `None` before the first entry.
    pub fn state_at(&self, frame: u32) -> Option<ContextState> {
        let idx = self.entries.partition_point(|e| e.frame <= frame);
        idx.checked_sub(1).map(|i| self.entries[i].state)
    }

    /// Renders `<frame> <state>` lines.
    pub fn render(&self) -> String {
        let mut out = String::with_capacity(self.entries.len() * 12);
        for e in &self.entries {
            let _ = writeln!(out, "{} {}", e.frame, e.state);
        }
        out
    }

    pub fn parse(text: &str, task: TaskId) -> Result<Self, TranscriptError> {
        let mut entries = Vec::new();
        let mut previous: Option<u32> = None;
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| TranscriptError::Parse {
                line: line_no,
                message,
            };
            let mut fields = line.split_whitespace();
            let (Some(frame), Some(state), None) = (fields.next(), fields.next(), fields.next())
            else {
                return Err(parse_err("expected `<frame> <state>`".into()));
            };
            let frame: u32 = frame
                .parse()
                .map_err(|_| parse_err(format!("bad frame index {frame:?}")))?;
            if let Some(p) = previous {
                if frame <= p {
                    return Err(parse_err(format!(
                        "frame {frame} does not increase on previous frame {p}"
                    )));
                }
            }
            previous = Some(frame);
            let state = parse_digits(state)
                .and_then(|s| s.validate(task).map(|_| s))
                .map_err(|e| parse_err(e.to_string()))?;
            entries.push(ContextEntry { frame, state });
        }
        Ok(ContextTranscript {
            task,
            label_rate: DEFAULT_LABEL_RATE,
            entries,
        })
    }
}

pub(crate) fn check_monotonic(frames: impl IntoIterator<Item = u32>) -> Result<(), TranscriptError> {
    let mut previous: Option<u32> = None;
    for frame in frames {
        if let Some(p) = previous {
            if frame <= p {
                return Err(TranscriptError::NonMonotonicFrames { previous: p, frame });
            }
        }
        previous = Some(frame);
    }
    Ok(())
}

/// An MP over the half-open sample interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MpSegment {
    pub start: u32,
    pub end: u32,
    pub mp: MotionPrimitive,
}

/// Interval-labelled MPs at sample rate.
///
/// In a combined transcript left- and right-side MPs may overlap in time and
/// `Idle` marks samples where neither side acts. In a side transcript the
/// segments tile `[0, total_samples)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MpTranscript {
    pub sample_rate: u32,
    pub total_samples: u32,
    pub entries: Vec<MpSegment>,
}

impl MpTranscript {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for s in &self.entries {
            let _ = writeln!(out, "{} {} {}", s.start, s.end, s.mp);
        }
        out
    }

    /// Parses `<start> <end> <MP>` lines. `total_samples` is the largest end.
    pub fn parse(text: &str, sample_rate: u32) -> Result<Self, TranscriptError> {
        let mut entries: Vec<MpSegment> = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| TranscriptError::Parse {
                line: line_no,
                message,
            };
            let mut fields = line.splitn(3, char::is_whitespace);
            let (Some(start), Some(end), Some(mp)) = (fields.next(), fields.next(), fields.next())
            else {
                return Err(parse_err("expected `<start> <end> <MP>`".into()));
            };
            let start: u32 = start
                .parse()
                .map_err(|_| parse_err(format!("bad start sample {start:?}")))?;
            let end: u32 = end
                .parse()
                .map_err(|_| parse_err(format!("bad end sample {end:?}")))?;
            if end < start {
                return Err(parse_err(format!("end {end} precedes start {start}")));
            }
            if entries.last().is_some_and(|p| start < p.start) {
                return Err(parse_err(format!("segment at {start} is out of order")));
            }
            let mp = mp.trim().parse().map_err(|e| parse_err(format!("{e}")))?;
            entries.push(MpSegment { start, end, mp });
        }
        let total_samples = entries.iter().map(|s| s.end).max().unwrap_or(0);
        Ok(MpTranscript {
            sample_rate,
            total_samples,
            entries,
        })
    }

    /// Segments acting on `side`, in order.
    pub fn side_segments(&self, side: Side) -> impl Iterator<Item = &MpSegment> {
        self.entries.iter().filter(move |s| s.mp.side() == Some(side))
    }

    /// The MPs covering each sample. Uncovered samples get an empty list.
    pub fn per_sample(&self) -> Vec<Vec<MotionPrimitive>> {
        let mut out = vec![Vec::new(); self.total_samples as usize];
        for s in &self.entries {
            for slot in &mut out[s.start as usize..s.end.min(self.total_samples) as usize] {
                slot.push(s.mp);
            }
        }
        out
    }

    /// One text label per sample: the covering MPs joined by `+`, or `Idle`.
    pub fn sample_labels(&self) -> Vec<String> {
        self.per_sample()
            .into_iter()
            .map(|mps| {
                let acting: Vec<String> = mps
                    .iter()
                    .filter(|m| !m.is_idle())
                    .map(|m| m.to_string())
                    .collect();
                if acting.is_empty() {
                    "Idle".to_string()
                } else {
                    acting.join("+")
                }
            })
            .collect()
    }

    /// True when the segments cover `[0, total_samples)` exactly once each.
    pub fn tiles(&self) -> bool {
        let mut cursor = 0;
        for s in &self.entries {
            if s.start != cursor || s.end <= s.start {
                return false;
            }
            cursor = s.end;
        }
        cursor == self.total_samples
    }
}
