use std::fmt;
use std::str::FromStr;

use crate::context::TaskId;

use super::IngestError;

/// Identifies one trial: `<Task>_S<nn>_T<nn>`, e.g. `Pea_on_a_Peg_S02_T05`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TrialId {
    pub task: TaskId,
    pub subject: u32,
    pub trial: u32,
}

impl TrialId {
    pub fn new(task: TaskId, subject: u32, trial: u32) -> Self {
        TrialId {
            task,
            subject,
            trial,
        }
    }
}

impl fmt::Display for TrialId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_S{:02}_T{:02}", self.task.name(), self.subject, self.trial)
    }
}

fn number(field: &str, prefix: char) -> Option<u32> {
    let digits = field.strip_prefix(prefix)?;
    if digits.len() < 2 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

impl FromStr for TrialId {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || IngestError::MalformedName(s.to_string());
        let mut parts = s.rsplitn(3, '_');
        let (Some(trial), Some(subject), Some(task)) = (parts.next(), parts.next(), parts.next())
        else {
            return Err(malformed());
        };
        let task = TaskId::ALL
            .into_iter()
            .find(|t| t.name() == task)
            .ok_or_else(malformed)?;
        let id = TrialId {
            task,
            subject: number(subject, 'S').ok_or_else(malformed)?,
            trial: number(trial, 'T').ok_or_else(malformed)?,
        };
        // only the canonical spelling round-trips (no extra zero padding)
        if id.to_string() != s {
            return Err(malformed());
        }
        Ok(id)
    }
}
