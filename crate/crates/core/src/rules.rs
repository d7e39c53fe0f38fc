//! Per-task object vocabularies, progress domains and transition-rule tables.
//!
//! Rules are stored as table rows: the eight general rows are shared by every
//! task and range over the task's objects through the generic object slot
//! `a`; task-specific rows follow. Rows are turned into concrete,
//! directed rules by [`crate::fsm`].

use std::fmt;
use std::sync::OnceLock;

use crate::context::{ContextState, ObjectCode, ObjectKind, TaskId};
use crate::mp::{Side, Target, Verb};

/// One position of a five-slot rule pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slot {
    /// `X`: any value, carried through unchanged.
    Any,
    Digit(u8),
    /// `a`: the generic object the row is instantiated for.
    Object,
    /// `b`: any value greater than zero. Only valid in a `before` pattern.
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Pattern(pub [Slot; 5]);

impl Pattern {
    /// Parses the table notation, e.g. `2XXX1` or `X0XXX`.
    pub fn parse(text: &str) -> Option<Pattern> {
        let chars: Vec<char> = text.chars().collect();
        if chars.len() != 5 {
            return None;
        }
        let mut slots = [Slot::Any; 5];
        for (slot, c) in slots.iter_mut().zip(chars) {
            *slot = match c {
                'X' => Slot::Any,
                'a' => Slot::Object,
                'b' => Slot::Positive,
                d if d.is_ascii_digit() => Slot::Digit(d as u8 - b'0'),
                _ => return None,
            };
        }
        Some(Pattern(slots))
    }

    /// Whether `state` matches, with `a` bound to `object`.
    pub fn matches(&self, state: &ContextState, object: Option<ObjectCode>) -> bool {
        self.0.iter().zip(state.slots()).all(|(slot, v)| match slot {
            Slot::Any => true,
            Slot::Digit(d) => *d == v,
            Slot::Object => object.is_some_and(|o| o.0 == v),
            Slot::Positive => v > 0,
        })
    }

    fn uses_object(&self) -> bool {
        self.0.contains(&Slot::Object)
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for slot in self.0 {
            match slot {
                Slot::Any => f.write_str("X")?,
                Slot::Digit(d) => write!(f, "{d}")?,
                Slot::Object => f.write_str("a")?,
                Slot::Positive => f.write_str("b")?,
            }
        }
        Ok(())
    }
}

/// Who performs a templated MP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Actor {
    Grasper(Side),
    /// An object held by a grasper; the side is whichever hand holds it.
    Held(ObjectKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TargetSpec {
    /// The row's generic object `a`.
    Generic,
    Fixed(Target),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MpTemplate {
    pub verb: Verb,
    pub actor: Actor,
    pub target: TargetSpec,
}

impl fmt::Display for MpTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.verb.name())?;
        match self.actor {
            Actor::Grasper(side) => f.write_str(side.letter())?,
            Actor::Held(obj) => f.write_str(obj.name())?,
        }
        match self.target {
            TargetSpec::Generic => f.write_str(", a)"),
            TargetSpec::Fixed(t) => write!(f, ", {t})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleScope {
    General,
    TaskSpecific,
}

/// One row of a rule table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionRule {
    pub mps: Vec<MpTemplate>,
    pub before: Pattern,
    pub after: Pattern,
    /// Row also applies from `after` back to `before`.
    pub bidirectional: bool,
    pub scope: RuleScope,
}

impl TransitionRule {
    /// Whether the row ranges over the task's objects.
    pub fn is_generic(&self) -> bool {
        self.before.uses_object() || self.after.uses_object()
    }
}

impl fmt::Display for TransitionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, mp) in self.mps.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{mp}")?;
        }
        let arrow = if self.bidirectional { "<->" } else { "->" };
        write!(f, ": {} {arrow} {}", self.before, self.after)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProgressLevel {
    pub code: u8,
    pub name: &'static str,
}

#[derive(Debug, Clone)]
pub struct TaskSpec {
    task: TaskId,
    objects: Vec<ObjectKind>,
    progress: Vec<ProgressLevel>,
    rules: Vec<TransitionRule>,
}

impl TaskSpec {
    pub fn task(&self) -> TaskId {
        self.task
    }

    /// Objects that may appear in hold and contact slots, excluding nothing.
    pub fn objects(&self) -> &[ObjectKind] {
        &self.objects
    }

    pub fn object(&self, code: ObjectCode) -> Option<ObjectKind> {
        self.objects.iter().copied().find(|k| k.code() == code)
    }

    pub fn progress_levels(&self) -> &[ProgressLevel] {
        &self.progress
    }

    pub fn progress_level(&self, code: u8) -> Option<ProgressLevel> {
        self.progress.iter().copied().find(|p| p.code == code)
    }

    pub fn rules(&self) -> &[TransitionRule] {
        &self.rules
    }

    pub fn general_rules(&self) -> impl Iterator<Item = &TransitionRule> {
        self.rules.iter().filter(|r| r.scope == RuleScope::General)
    }

    pub fn task_rules(&self) -> impl Iterator<Item = &TransitionRule> {
        self.rules.iter().filter(|r| r.scope == RuleScope::TaskSpecific)
    }
}

/// The specification for `task`. Built once; every call returns the same value.
pub fn task_spec(task: TaskId) -> &'static TaskSpec {
    static SPECS: OnceLock<Vec<TaskSpec>> = OnceLock::new();
    let specs = SPECS.get_or_init(|| TaskId::ALL.into_iter().map(build_spec).collect());
    &specs[TaskId::ALL.iter().position(|t| *t == task).unwrap()]
}

fn pat(text: &str) -> Pattern {
    Pattern::parse(text).unwrap_or_else(|| panic!("bad rule pattern {text}"))
}

fn grasper(verb: Verb, side: Side, target: TargetSpec) -> MpTemplate {
    MpTemplate {
        verb,
        actor: Actor::Grasper(side),
        target,
    }
}

fn held(verb: Verb, obj: ObjectKind, target: Target) -> MpTemplate {
    MpTemplate {
        verb,
        actor: Actor::Held(obj),
        target: TargetSpec::Fixed(target),
    }
}

fn row(mps: Vec<MpTemplate>, before: &str, after: &str, scope: RuleScope) -> TransitionRule {
    TransitionRule {
        mps,
        before: pat(before),
        after: pat(after),
        bidirectional: false,
        scope,
    }
}

fn general_rows() -> Vec<TransitionRule> {
    use Side::{Left as L, Right as R};
    use TargetSpec::Generic as A;
    let g = |verb, side, before, after| {
        row(vec![grasper(verb, side, A)], before, after, RuleScope::General)
    };
    // Holding subsumes contact: grasping clears the contact slot and
    // releasing puts the object back into it.
    vec![
        g(Verb::Touch, L, "X0XXX", "XaXXX"),
        g(Verb::Touch, R, "XXX0X", "XXXaX"),
        g(Verb::Grasp, L, "0aXXX", "a0XXX"),
        g(Verb::Grasp, R, "XX0aX", "XXa0X"),
        g(Verb::Release, L, "a0XXX", "0aXXX"),
        g(Verb::Release, R, "XXa0X", "XX0aX"),
        g(Verb::Untouch, L, "XaXXX", "X0XXX"),
        g(Verb::Untouch, R, "XXXaX", "XXX0X"),
    ]
}

fn needle_rows(pass_through: ObjectKind) -> Vec<TransitionRule> {
    let n = ObjectKind::Needle;
    let into = Target::Object(pass_through);
    let thread = Target::Object(ObjectKind::Thread);
    let t = |mp, before, after| row(vec![mp], before, after, RuleScope::TaskSpecific);
    vec![
        t(held(Verb::Touch, n, into), "2XXX0", "2XXX1"),
        t(held(Verb::Touch, n, into), "XX2X0", "XX2X1"),
        t(held(Verb::Push, n, into), "2XXX1", "2XXX2"),
        t(held(Verb::Push, n, into), "XX2X1", "XX2X2"),
        t(held(Verb::Pull, n, thread), "2XXX2", "2XXX0"),
        t(held(Verb::Pull, n, thread), "XX2X2", "XX2X0"),
    ]
}

fn knot_rows() -> Vec<TransitionRule> {
    let thread = TargetSpec::Fixed(Target::Object(ObjectKind::Thread));
    let pull_l = grasper(Verb::Pull, Side::Left, thread);
    let pull_r = grasper(Verb::Pull, Side::Right, thread);
    let mut wrap_l = row(vec![pull_l], "3XXX0", "3XXX1", RuleScope::TaskSpecific);
    wrap_l.bidirectional = true;
    let mut wrap_r = row(vec![pull_r], "XX3X0", "XX3X1", RuleScope::TaskSpecific);
    wrap_r.bidirectional = true;
    vec![
        wrap_l,
        wrap_r,
        row(vec![pull_l, pull_r], "3X3X1", "3X3X2", RuleScope::TaskSpecific),
        row(vec![pull_l, pull_r], "3X3X2", "3X3X3", RuleScope::TaskSpecific),
    ]
}

fn post_rows(obj: ObjectKind) -> Vec<TransitionRule> {
    vec![
        row(
            vec![held(Verb::Touch, obj, Target::Post)],
            "XXXX0",
            "XXXX1",
            RuleScope::TaskSpecific,
        ),
        row(
            vec![held(Verb::Untouch, obj, Target::Post)],
            "XXXX1",
            "XXXX0",
            RuleScope::TaskSpecific,
        ),
    ]
}

fn pea_rows() -> Vec<TransitionRule> {
    use Side::{Left as L, Right as R};
    let pea = ObjectKind::Pea;
    let p = TargetSpec::Fixed(Target::Object(pea));
    let t = |mp, before, after| row(vec![mp], before, after, RuleScope::TaskSpecific);
    vec![
        t(grasper(Verb::Grasp, L, p), "0XXX0", "1XXX1"),
        t(grasper(Verb::Grasp, R, p), "XX0X0", "XX1X1"),
        t(grasper(Verb::Pull, L, p), "1XXX1", "1XXX2"),
        t(grasper(Verb::Pull, R, p), "XX1X1", "XX1X2"),
        t(grasper(Verb::Pull, L, p), "1XXX1", "1XXX3"),
        t(grasper(Verb::Pull, R, p), "XX1X1", "XX1X3"),
        t(held(Verb::Touch, pea, Target::Object(pea)), "XXXX3", "XXXX2"),
        t(held(Verb::Untouch, pea, Target::Object(pea)), "XXXX2", "XXXX3"),
        t(held(Verb::Touch, pea, Target::Peg), "XXXX3", "XXXX4"),
        t(held(Verb::Untouch, pea, Target::Peg), "XXXX4", "XXXX3"),
        t(grasper(Verb::Release, L, p), "1XXXb", "0XXX0"),
        t(grasper(Verb::Release, R, p), "XX1Xb", "XX0X0"),
        t(grasper(Verb::Push, L, p), "1XXX2", "1XXX1"),
        t(grasper(Verb::Push, R, p), "XX1X2", "XX1X1"),
    ]
}

fn levels(names: &[&'static str]) -> Vec<ProgressLevel> {
    names
        .iter()
        .enumerate()
        .map(|(i, name)| ProgressLevel {
            code: i as u8,
            name,
        })
        .collect()
}

fn build_spec(task: TaskId) -> TaskSpec {
    use ObjectKind::*;
    let (objects, progress, specific) = match task {
        TaskId::Suturing => (
            vec![Needle, Thread, Fabric],
            levels(&["not touching", "touching", "in"]),
            needle_rows(Fabric),
        ),
        TaskId::NeedlePassing => (
            vec![Needle, Thread, Ring],
            levels(&["not touching", "touching", "in"]),
            needle_rows(Ring),
        ),
        TaskId::KnotTying => (
            vec![Thread],
            levels(&["none", "wrapped", "loose", "tight"]),
            knot_rows(),
        ),
        TaskId::PegTransfer => (vec![Block], levels(&["off", "on"]), post_rows(Block)),
        TaskId::PostAndSleeve => (vec![Sleeve], levels(&["off", "on"]), post_rows(Sleeve)),
        TaskId::PeaOnAPeg => (
            vec![Pea],
            levels(&["none", "in cup", "stuck", "not stuck", "on peg"]),
            pea_rows(),
        ),
    };
    let mut rules = general_rows();
    rules.extend(specific);
    TaskSpec {
        task,
        objects,
        progress,
        rules,
    }
}
