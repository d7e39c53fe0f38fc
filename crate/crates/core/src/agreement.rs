//! Inter-annotator agreement (Krippendorff's alpha, nominal distance) and
//! per-variable majority consensus over context transcripts.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::context::{ContextState, StateVar, TaskId};
use crate::fsm::decompose;
use crate::transcript::{ContextEntry, ContextTranscript};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgreementError {
    #[error("no unit was labelled by two or more labelers")]
    NoPairableUnits,
    #[error("need at least two transcripts, got {0}")]
    FewerThanTwoTranscripts(usize),
    #[error("transcript {index} is for {found}, expected {expected}")]
    TaskMismatch {
        index: usize,
        expected: TaskId,
        found: TaskId,
    },
    #[error("unit {unit} has {found} values for {expected} labelers")]
    Shape {
        unit: usize,
        expected: usize,
        found: usize,
    },
}

/// Nominal labels per (unit, labeler); `None` marks a missing value.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationMatrix<L> {
    pub units: Vec<u32>,
    pub labelers: Vec<String>,
    /// `values[u][l]` is labeler `l`'s label for unit `u`.
    pub values: Vec<Vec<Option<L>>>,
}

impl<L> AnnotationMatrix<L> {
    pub fn new(
        units: Vec<u32>,
        labelers: Vec<String>,
        values: Vec<Vec<Option<L>>>,
    ) -> Result<Self, AgreementError> {
        for (unit, row) in values.iter().enumerate() {
            if row.len() != labelers.len() {
                return Err(AgreementError::Shape {
                    unit,
                    expected: labelers.len(),
                    found: row.len(),
                });
            }
        }
        Ok(AnnotationMatrix {
            units,
            labelers,
            values,
        })
    }

    /// Units with values from at least two labelers.
    pub fn pairable_units(&self) -> usize {
        self.values
            .iter()
            .filter(|row| row.iter().flatten().count() >= 2)
            .count()
    }
}

/// 0 when the labels are equal, 1 otherwise.
pub fn nominal_distance<L: PartialEq + ?Sized>(a: &L, b: &L) -> u8 {
    u8::from(a != b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alpha {
    Value(f64),
    /// Every pairable value is identical, so expected disagreement is zero.
    Undefined,
}

impl Alpha {
    pub fn value(self) -> Option<f64> {
        match self {
            Alpha::Value(v) => Some(v),
            Alpha::Undefined => None,
        }
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alpha::Value(v) => write!(f, "{v:.4}"),
            Alpha::Undefined => f.write_str("undefined"),
        }
    }
}

/// Krippendorff's alpha with nominal distance, via the coincidence matrix.
/// Units with fewer than two values do not contribute.
pub fn krippendorff_alpha<L: Ord>(m: &AnnotationMatrix<L>) -> Result<Alpha, AgreementError> {
    let mut index: BTreeMap<&L, usize> = BTreeMap::new();
    for v in m.values.iter().flatten().flatten() {
        let next = index.len();
        index.entry(v).or_insert(next);
    }
    let k = index.len();
    let mut coincidence = vec![0.0f64; k * k];
    let mut pairable = 0usize;
    let mut counts = vec![0usize; k];
    for row in &m.values {
        counts.iter_mut().for_each(|c| *c = 0);
        let mut m_u = 0usize;
        for v in row.iter().flatten() {
            counts[index[v]] += 1;
            m_u += 1;
        }
        if m_u < 2 {
            continue;
        }
        pairable += 1;
        let weight = 1.0 / (m_u - 1) as f64;
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            for d in 0..k {
                let pairs = if c == d {
                    counts[c] * (counts[c] - 1)
                } else {
                    counts[c] * counts[d]
                };
                coincidence[c * k + d] += pairs as f64 * weight;
            }
        }
    }
    if pairable == 0 {
        return Err(AgreementError::NoPairableUnits);
    }
    let marginals: Vec<f64> = (0..k)
        .map(|c| coincidence[c * k..(c + 1) * k].iter().sum())
        .collect();
    let n: f64 = marginals.iter().sum();
    let mut observed = 0.0;
    let mut expected = 0.0;
    for c in 0..k {
        for d in 0..k {
            if c != d {
                observed += coincidence[c * k + d];
                expected += marginals[c] * marginals[d];
            }
        }
    }
    if expected == 0.0 {
        return Ok(Alpha::Undefined);
    }
    Ok(Alpha::Value(1.0 - (n - 1.0) * observed / expected))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgreementBand {
    /// Above 0.8.
    NearPerfect,
    /// 0.6 to 0.8.
    Substantial,
    /// Positive but below 0.6.
    Limited,
    /// Exactly zero: agreement no better than chance.
    ChanceOnly,
    /// Negative.
    Disagreement,
}

impl AgreementBand {
    pub fn label(self) -> &'static str {
        match self {
            AgreementBand::NearPerfect => "near-perfect",
            AgreementBand::Substantial => "substantial",
            AgreementBand::Limited => "limited",
            AgreementBand::ChanceOnly => "chance-only",
            AgreementBand::Disagreement => "pronounced disagreement",
        }
    }
}

impl fmt::Display for AgreementBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

pub fn interpret_alpha(alpha: f64) -> AgreementBand {
    if alpha > 0.8 {
        AgreementBand::NearPerfect
    } else if alpha >= 0.6 {
        AgreementBand::Substantial
    } else if alpha > 0.0 {
        AgreementBand::Limited
    } else if alpha == 0.0 {
        AgreementBand::ChanceOnly
    } else {
        AgreementBand::Disagreement
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Granularity {
    /// The whole five-digit state is one nominal label.
    #[default]
    State,
    /// One alpha per state variable, averaged.
    Variable,
}

impl FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "state" => Ok(Granularity::State),
            "variable" => Ok(Granularity::Variable),
            _ => Err(format!("unknown granularity {s:?} (expected state or variable)")),
        }
    }
}

fn check_same_task(transcripts: &[ContextTranscript]) -> Result<TaskId, AgreementError> {
    if transcripts.len() < 2 {
        return Err(AgreementError::FewerThanTwoTranscripts(transcripts.len()));
    }
    let task = transcripts[0].task();
    for (index, t) in transcripts.iter().enumerate() {
        if t.task() != task {
            return Err(AgreementError::TaskMismatch {
                index,
                expected: task,
                found: t.task(),
            });
        }
    }
    Ok(task)
}

/// Puts transcripts on the union of their frames. Each transcript's state
/// holds between its labels; frames before its first label are missing.
pub fn align(transcripts: &[ContextTranscript]) -> (Vec<u32>, Vec<Vec<Option<ContextState>>>) {
    let mut frames: Vec<u32> = transcripts
        .iter()
        .flat_map(|t| t.entries().iter().map(|e| e.frame))
        .collect();
    frames.sort_unstable();
    frames.dedup();
    let rows = frames
        .iter()
        .map(|&f| transcripts.iter().map(|t| t.state_at(f)).collect())
        .collect();
    (frames, rows)
}

/// Builds the whole-state annotation matrix; labelers are numbered by input
/// order.
pub fn state_matrix(transcripts: &[ContextTranscript]) -> AnnotationMatrix<ContextState> {
    let (units, values) = align(transcripts);
    AnnotationMatrix {
        units,
        labelers: (0..transcripts.len()).map(|i| i.to_string()).collect(),
        values,
    }
}

/// Builds one annotation matrix for a single state variable.
pub fn variable_matrix(transcripts: &[ContextTranscript], var: StateVar) -> AnnotationMatrix<u8> {
    let m = state_matrix(transcripts);
    AnnotationMatrix {
        units: m.units,
        labelers: m.labelers,
        values: m
            .values
            .into_iter()
            .map(|row| row.into_iter().map(|s| s.map(|s| s.get(var))).collect())
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaReport {
    pub task: TaskId,
    pub granularity: Granularity,
    pub alpha: Alpha,
    /// Per-variable values, present for [`Granularity::Variable`].
    pub per_variable: Option<[Alpha; 5]>,
    /// Frames labelled by at least two transcripts.
    pub frames: usize,
}

/// Agreement among transcripts of one task.
///
/// In variable mode a variable whose values never vary is perfectly agreed
/// on; it counts as 1.0 in the mean.
pub fn transcript_alpha(
    transcripts: &[ContextTranscript],
    granularity: Granularity,
) -> Result<AlphaReport, AgreementError> {
    let task = check_same_task(transcripts)?;
    let whole = state_matrix(transcripts);
    let frames = whole.pairable_units();
    let (alpha, per_variable) = match granularity {
        Granularity::State => (krippendorff_alpha(&whole)?, None),
        Granularity::Variable => {
            let mut per = [Alpha::Undefined; 5];
            for var in StateVar::ALL {
                per[var.index()] = krippendorff_alpha(&variable_matrix(transcripts, var))?;
            }
            let mean = per.iter().map(|a| a.value().unwrap_or(1.0)).sum::<f64>() / 5.0;
            (Alpha::Value(mean), Some(per))
        }
    };
    Ok(AlphaReport {
        task,
        granularity,
        alpha,
        per_variable,
        frames,
    })
}

/// Frame-weighted mean of per-task alphas. Undefined values are skipped.
pub fn weighted_alpha(reports: &[(Alpha, usize)]) -> Option<f64> {
    let (sum, weight) = reports
        .iter()
        .filter_map(|(a, n)| a.value().map(|v| (v * *n as f64, *n as f64)))
        .fold((0.0, 0.0), |(s, w), (v, n)| (s + v, w + n));
    (weight > 0.0).then(|| sum / weight)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Consensus {
    pub transcript: ContextTranscript,
    pub warnings: Vec<String>,
}

fn vote(values: impl Iterator<Item = u8>, previous: Option<u8>) -> u8 {
    let mut counts = [0usize; 10];
    for v in values {
        counts[v as usize] += 1;
    }
    let best = *counts.iter().max().unwrap();
    let tied = || (0..10u8).filter(|&v| counts[v as usize] == best);
    match previous {
        Some(p) if counts[p as usize] == best => p,
        _ => tied().next().unwrap(),
    }
}

/// Majority vote per frame and per state variable.
///
/// Ties keep the previous frame's consensus value when it is among the tied
/// values, and otherwise take the smallest tied code. Consecutive consensus
/// states the task model cannot connect are reported as warnings and kept.
pub fn consensus(transcripts: &[ContextTranscript]) -> Result<Consensus, AgreementError> {
    let task = check_same_task(transcripts)?;
    let (frames, rows) = align(transcripts);
    let mut entries = Vec::with_capacity(frames.len());
    let mut warnings = Vec::new();
    let mut previous: Option<ContextState> = None;
    for (frame, row) in frames.into_iter().zip(rows) {
        let mut slots = [0u8; 5];
        for var in StateVar::ALL {
            let values = row.iter().flatten().map(|s| s.get(var));
            slots[var.index()] = vote(values, previous.map(|p| p.get(var)));
        }
        let state = ContextState::from_slots(slots);
        if let Err(e) = state.validate(task) {
            warnings.push(format!("frame {frame}: {e}"));
        }
        if let Some(p) = previous {
            if decompose(p, state, task).is_err() {
                warnings.push(format!(
                    "frame {frame}: consensus {p} -> {state} is not explained by the task model"
                ));
            }
        }
        entries.push(ContextEntry { frame, state });
        previous = Some(state);
    }
    // Slot-wise votes over valid states stay within each slot's domain.
    let transcript = ContextTranscript::with_rate(task, entries, transcripts[0].label_rate())
        .expect("votes come from valid states");
    Ok(Consensus {
        transcript,
        warnings,
    })
}
