//! Five-slot context encoding shared by every task.
//!
//! A context state records, for each grasper, which object it holds and which
//! object it touches, followed by one task-specific progress variable. States
//! render as five decimal digits, e.g. `50202`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rules::task_spec;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContextError {
    #[error("malformed state {text:?}: expected exactly five digits")]
    MalformedState { text: String },
    #[error("code {code} is not valid for {var} in {task}")]
    CodeOutOfVocabulary {
        task: TaskId,
        var: StateVar,
        code: u8,
    },
    #[error("unknown task {0:?}")]
    UnknownTask(String),
}

/// The six dry-lab tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskId {
    Suturing,
    NeedlePassing,
    KnotTying,
    PegTransfer,
    PostAndSleeve,
    PeaOnAPeg,
}

impl TaskId {
    pub const ALL: [TaskId; 6] = [
        TaskId::Suturing,
        TaskId::NeedlePassing,
        TaskId::KnotTying,
        TaskId::PegTransfer,
        TaskId::PostAndSleeve,
        TaskId::PeaOnAPeg,
    ];

    /// Name used in trial ids and directory names.
    pub fn name(self) -> &'static str {
        match self {
            TaskId::Suturing => "Suturing",
            TaskId::NeedlePassing => "Needle_Passing",
            TaskId::KnotTying => "Knot_Tying",
            TaskId::PegTransfer => "Peg_Transfer",
            TaskId::PostAndSleeve => "Post_and_Sleeve",
            TaskId::PeaOnAPeg => "Pea_on_a_Peg",
        }
    }

    pub fn abbreviation(self) -> &'static str {
        match self {
            TaskId::Suturing => "S",
            TaskId::NeedlePassing => "NP",
            TaskId::KnotTying => "KT",
            TaskId::PegTransfer => "PT",
            TaskId::PostAndSleeve => "PaS",
            TaskId::PeaOnAPeg => "PoaP",
        }
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskId {
    type Err = ContextError;

    /// Accepts the trial-id name, the CamelCase variant name, or the
    /// abbreviation, ignoring case and underscores.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| *c != '_' && *c != '-')
            .flat_map(char::to_lowercase)
            .collect();
        TaskId::ALL
            .into_iter()
            .find(|t| {
                let name: String = t
                    .name()
                    .chars()
                    .filter(|c| *c != '_')
                    .flat_map(char::to_lowercase)
                    .collect();
                name == key || t.abbreviation().to_lowercase() == key
            })
            .ok_or_else(|| ContextError::UnknownTask(s.to_string()))
    }
}

/// Semantic identity of a physical object. Several kinds share a numeric code
/// because they never appear in the same task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ObjectKind {
    Block,
    Sleeve,
    Pea,
    Needle,
    Thread,
    Fabric,
    Ring,
}

impl ObjectKind {
    pub const ALL: [ObjectKind; 7] = [
        ObjectKind::Block,
        ObjectKind::Sleeve,
        ObjectKind::Pea,
        ObjectKind::Needle,
        ObjectKind::Thread,
        ObjectKind::Fabric,
        ObjectKind::Ring,
    ];

    pub fn code(self) -> ObjectCode {
        ObjectCode(match self {
            ObjectKind::Block | ObjectKind::Sleeve | ObjectKind::Pea => 1,
            ObjectKind::Needle => 2,
            ObjectKind::Thread => 3,
            ObjectKind::Fabric => 4,
            ObjectKind::Ring => 5,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            ObjectKind::Block => "Block",
            ObjectKind::Sleeve => "Sleeve",
            ObjectKind::Pea => "Pea",
            ObjectKind::Needle => "Needle",
            ObjectKind::Thread => "Thread",
            ObjectKind::Fabric => "Fabric",
            ObjectKind::Ring => "Ring",
        }
    }
}

impl fmt::Display for ObjectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ObjectKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ObjectKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or(())
    }
}

/// Numeric object code stored in a hold or contact slot. Zero means nothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ObjectCode(pub u8);

impl ObjectCode {
    pub const NOTHING: ObjectCode = ObjectCode(0);

    pub fn is_nothing(self) -> bool {
        self.0 == 0
    }
}

/// The five state variables, in rendering order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StateVar {
    LeftHold,
    LeftContact,
    RightHold,
    RightContact,
    Progress,
}

impl StateVar {
    pub const ALL: [StateVar; 5] = [
        StateVar::LeftHold,
        StateVar::LeftContact,
        StateVar::RightHold,
        StateVar::RightContact,
        StateVar::Progress,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            StateVar::LeftHold => "left_hold",
            StateVar::LeftContact => "left_contact",
            StateVar::RightHold => "right_hold",
            StateVar::RightContact => "right_contact",
            StateVar::Progress => "progress",
        }
    }
}

impl fmt::Display for StateVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A context snapshot. Slot values are kept as raw digits; validity against a
/// task is checked by [`parse_state`] and [`ContextState::validate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContextState([u8; 5]);

impl ContextState {
    pub const IDLE: ContextState = ContextState([0; 5]);

    pub fn from_slots(slots: [u8; 5]) -> Self {
        ContextState(slots)
    }

    pub fn slots(&self) -> [u8; 5] {
        self.0
    }

    pub fn get(&self, var: StateVar) -> u8 {
        self.0[var.index()]
    }

    pub fn with(mut self, var: StateVar, value: u8) -> Self {
        self.0[var.index()] = value;
        self
    }

    pub fn left_hold(&self) -> ObjectCode {
        ObjectCode(self.0[0])
    }

    pub fn left_contact(&self) -> ObjectCode {
        ObjectCode(self.0[1])
    }

    pub fn right_hold(&self) -> ObjectCode {
        ObjectCode(self.0[2])
    }

    pub fn right_contact(&self) -> ObjectCode {
        ObjectCode(self.0[3])
    }

    pub fn progress(&self) -> u8 {
        self.0[4]
    }

    /// Checks every slot against the task's vocabulary and progress domain.
    pub fn validate(&self, task: TaskId) -> Result<(), ContextError> {
        let spec = task_spec(task);
        for var in StateVar::ALL {
            let code = self.get(var);
            let ok = match var {
                StateVar::Progress => spec.progress_level(code).is_some(),
                _ => code == 0 || spec.object(ObjectCode(code)).is_some(),
            };
            if !ok {
                return Err(ContextError::CodeOutOfVocabulary { task, var, code });
            }
        }
        Ok(())
    }

    /// Renders the five-digit form.
    pub fn render(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for ContextState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in self.0 {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// Parses five digits without checking them against a task.
pub fn parse_digits(text: &str) -> Result<ContextState, ContextError> {
    let bytes = text.as_bytes();
    if bytes.len() != 5 || !bytes.iter().all(u8::is_ascii_digit) {
        return Err(ContextError::MalformedState {
            text: text.to_string(),
        });
    }
    let mut slots = [0u8; 5];
    for (slot, b) in slots.iter_mut().zip(bytes) {
        *slot = b - b'0';
    }
    Ok(ContextState(slots))
}

/// Parses a five-digit state and validates it for `task`.
pub fn parse_state(text: &str, task: TaskId) -> Result<ContextState, ContextError> {
    let state = parse_digits(text)?;
    state.validate(task)?;
    Ok(state)
}

/// Every valid state of a task, in ascending numeric order.
pub fn all_states(task: TaskId) -> Vec<ContextState> {
    let spec = task_spec(task);
    let objects: Vec<u8> = std::iter::once(0)
        .chain(spec.objects().iter().map(|k| k.code().0))
        .collect();
    let progress: Vec<u8> = spec.progress_levels().iter().map(|p| p.code).collect();
    let mut out = Vec::new();
    for &a in &objects {
        for &b in &objects {
            for &c in &objects {
                for &d in &objects {
                    for &e in &progress {
                        out.push(ContextState([a, b, c, d, e]));
                    }
                }
            }
        }
    }
    out.sort();
    out
}
