//! Task models as finite state machines over context states.
//!
//! Table rows from [`crate::rules`] are expanded into concrete directed rules:
//! generic rows once per vocabulary object, bidirectional rows in both
//! directions, and rows acted on by a held object once per hand that can hold
//! it. Transitions between arbitrary states are explained by the shortest
//! chain of concrete rules.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::context::{ContextState, ObjectKind, TaskId};
use crate::mp::{MotionPrimitive, Side};
use crate::rules::{task_spec, Actor, Pattern, Slot, TargetSpec, TaskSpec, TransitionRule};
use crate::transcript::{check_monotonic, ContextEntry, ContextTranscript, TranscriptError};

/// Longest rule chain considered when explaining one transition.
pub const MAX_CHAIN: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FsmError {
    #[error("rule {rule} does not apply to state {state}")]
    RuleNotApplicable { rule: String, state: ContextState },
    #[error("no chain of at most {MAX_CHAIN} rules turns {from} into {to}")]
    Undecomposable { from: ContextState, to: ContextState },
    #[error(transparent)]
    Transcript(#[from] TranscriptError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Cond {
    Any,
    Eq(u8),
    NonZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Effect {
    Keep,
    Set(u8),
}

/// Listing order for simultaneous MPs: left-hand general rules, right-hand
/// general rules, then task-progress rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleGroup {
    Left,
    Right,
    Progress,
}

/// A fully instantiated, directed rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcreteRule {
    /// Index of the originating row in the task's rule table.
    pub row: usize,
    /// The reverse direction of a bidirectional row.
    pub reversed: bool,
    pub group: RuleGroup,
    pub mps: Vec<MotionPrimitive>,
    before: [Cond; 5],
    after: [Effect; 5],
}

impl ConcreteRule {
    pub fn matches(&self, state: &ContextState) -> bool {
        self.before
            .iter()
            .zip(state.slots())
            .all(|(c, v)| match c {
                Cond::Any => true,
                Cond::Eq(d) => *d == v,
                Cond::NonZero => v > 0,
            })
    }

    pub fn apply(&self, state: &ContextState) -> Option<ContextState> {
        if !self.matches(state) {
            return None;
        }
        let mut slots = state.slots();
        for (slot, e) in slots.iter_mut().zip(self.after) {
            if let Effect::Set(v) = e {
                *slot = v;
            }
        }
        Some(ContextState::from_slots(slots))
    }

    pub fn before_pattern(&self) -> String {
        self.before
            .iter()
            .map(|c| match c {
                Cond::Any => 'X',
                Cond::Eq(d) => (b'0' + d) as char,
                Cond::NonZero => 'b',
            })
            .collect()
    }

    pub fn after_pattern(&self) -> String {
        self.after
            .iter()
            .map(|e| match e {
                Effect::Keep => 'X',
                Effect::Set(d) => (b'0' + d) as char,
            })
            .collect()
    }
}

impl fmt::Display for ConcreteRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, mp) in self.mps.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{mp}")?;
        }
        write!(f, ": {} -> {}", self.before_pattern(), self.after_pattern())
    }
}

/// The concrete rule set of one task.
#[derive(Debug)]
pub struct TaskModel {
    spec: &'static TaskSpec,
    rules: Vec<ConcreteRule>,
}

impl TaskModel {
    pub fn task(&self) -> TaskId {
        self.spec.task()
    }

    pub fn spec(&self) -> &'static TaskSpec {
        self.spec
    }

    pub fn rules(&self) -> &[ConcreteRule] {
        &self.rules
    }

    /// Indices of the rules applicable to `state`, in table order.
    pub fn applicable(&self, state: &ContextState) -> impl Iterator<Item = usize> + '_ {
        let state = *state;
        self.rules
            .iter()
            .enumerate()
            .filter(move |(_, r)| r.matches(&state))
            .map(|(i, _)| i)
    }
}

/// The model for `task`, built once.
pub fn model(task: TaskId) -> &'static TaskModel {
    static MODELS: OnceLock<Vec<TaskModel>> = OnceLock::new();
    let models = MODELS.get_or_init(|| TaskId::ALL.into_iter().map(build_model).collect());
    &models[TaskId::ALL.iter().position(|t| *t == task).unwrap()]
}

fn build_model(task: TaskId) -> TaskModel {
    let spec = task_spec(task);
    let mut rules = Vec::new();
    for (row, rule) in spec.rules().iter().enumerate() {
        let objects: Vec<Option<ObjectKind>> = if rule.is_generic() {
            spec.objects().iter().copied().map(Some).collect()
        } else {
            vec![None]
        };
        for obj in objects {
            expand(row, rule, rule.before, rule.after, false, obj, &mut rules);
            if rule.bidirectional {
                expand(row, rule, rule.after, rule.before, true, obj, &mut rules);
            }
        }
    }
    TaskModel { spec, rules }
}

fn expand(
    row: usize,
    rule: &TransitionRule,
    before: Pattern,
    after: Pattern,
    reversed: bool,
    obj: Option<ObjectKind>,
    out: &mut Vec<ConcreteRule>,
) {
    let code = obj.map(|k| k.code().0);
    let mut conds = [Cond::Any; 5];
    let mut effects = [Effect::Keep; 5];
    for i in 0..5 {
        conds[i] = match before.0[i] {
            Slot::Any => Cond::Any,
            Slot::Digit(d) => Cond::Eq(d),
            Slot::Object => Cond::Eq(code.expect("generic row without object")),
            Slot::Positive => Cond::NonZero,
        };
        effects[i] = match after.0[i] {
            Slot::Any => Effect::Keep,
            Slot::Digit(d) => Effect::Set(d),
            Slot::Object => Effect::Set(code.expect("generic row without object")),
            Slot::Positive => unreachable!("`b` only appears in before patterns"),
        };
    }

    // A held object acts through whichever hand holds it. When the pattern
    // does not already pin that hand, emit one rule per hand.
    let held = rule.mps.iter().find_map(|m| match m.actor {
        Actor::Held(k) => Some(k),
        Actor::Grasper(_) => None,
    });
    let sides: Vec<Option<Side>> = match held {
        None => vec![None],
        Some(k) => {
            let c = k.code().0;
            if conds[0] == Cond::Eq(c) {
                vec![Some(Side::Left)]
            } else if conds[2] == Cond::Eq(c) {
                vec![Some(Side::Right)]
            } else {
                vec![Some(Side::Left), Some(Side::Right)]
            }
        }
    };

    for held_side in sides {
        let mut conds = conds;
        match (held, held_side) {
            (Some(k), Some(Side::Left)) => conds[0] = Cond::Eq(k.code().0),
            (Some(k), Some(Side::Right)) => conds[2] = Cond::Eq(k.code().0),
            _ => {}
        }
        let mps: Vec<MotionPrimitive> = rule
            .mps
            .iter()
            .map(|t| {
                let target = match t.target {
                    TargetSpec::Generic => {
                        crate::mp::Target::Object(obj.expect("generic row without object"))
                    }
                    TargetSpec::Fixed(target) => target,
                };
                match t.actor {
                    Actor::Grasper(side) => MotionPrimitive::new(t.verb, side, target),
                    Actor::Held(k) => {
                        MotionPrimitive::carried(t.verb, held_side.unwrap(), k, target)
                    }
                }
            })
            .collect();
        let group = match rule.scope {
            crate::rules::RuleScope::TaskSpecific => RuleGroup::Progress,
            crate::rules::RuleScope::General => match mps[0].side() {
                Some(Side::Left) => RuleGroup::Left,
                _ => RuleGroup::Right,
            },
        };
        out.push(ConcreteRule {
            row,
            reversed,
            group,
            mps,
            before: conds,
            after: effects,
        });
    }
}

/// Applies `chain` to `start` in order.
pub fn apply<'a>(
    chain: impl IntoIterator<Item = &'a ConcreteRule>,
    start: ContextState,
) -> Result<ContextState, FsmError> {
    chain.into_iter().try_fold(start, |state, rule| {
        rule.apply(&state).ok_or_else(|| FsmError::RuleNotApplicable {
            rule: rule.to_string(),
            state,
        })
    })
}

/// The rule chain chosen to explain a transition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub task: TaskId,
    /// Indices into [`TaskModel::rules`], in application order.
    pub chain: Vec<usize>,
    pub mps: Vec<MotionPrimitive>,
    /// Another minimal chain with a different set of MPs also explained the
    /// transition; the listed one won on ordering.
    pub ambiguous: bool,
}

impl Decomposition {
    pub fn rules(&self) -> impl Iterator<Item = &'static ConcreteRule> + '_ {
        let model = model(self.task);
        self.chain.iter().map(move |&i| &model.rules[i])
    }

    pub fn len(&self) -> usize {
        self.chain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chain.is_empty()
    }
}

/// Finds the shortest rule chain turning `prev` into `next`.
///
/// Among chains of minimal length, those with the fewest Touch/Untouch MPs
/// win, so a grasp or release is reported instead of contact changes on the
/// same object. Remaining ties go to the chain whose rules sort first by
/// left, right, progress group and then by table order.
pub fn decompose(
    prev: ContextState,
    next: ContextState,
    task: TaskId,
) -> Result<Decomposition, FsmError> {
    let model = model(task);
    if prev == next {
        return Ok(Decomposition {
            task,
            chain: Vec::new(),
            mps: Vec::new(),
            ambiguous: false,
        });
    }
    let mut path = Vec::with_capacity(MAX_CHAIN);
    let mut visited = vec![prev];
    for depth in 1..=MAX_CHAIN {
        let mut found = Vec::new();
        search(model, prev, next, depth, &mut path, &mut visited, &mut found);
        if !found.is_empty() {
            return Ok(select(model, found));
        }
    }
    Err(FsmError::Undecomposable {
        from: prev,
        to: next,
    })
}

fn changed_slots(a: &ContextState, b: &ContextState) -> usize {
    a.slots()
        .iter()
        .zip(b.slots())
        .filter(|(x, y)| **x != *y)
        .count()
}

fn search(
    model: &TaskModel,
    state: ContextState,
    target: ContextState,
    remaining: usize,
    path: &mut Vec<usize>,
    visited: &mut Vec<ContextState>,
    found: &mut Vec<Vec<usize>>,
) {
    if remaining == 0 {
        if state == target {
            found.push(path.clone());
        }
        return;
    }
    // No rule changes more than two slots.
    if changed_slots(&state, &target).div_ceil(2) > remaining {
        return;
    }
    for (i, rule) in model.rules.iter().enumerate() {
        let Some(next) = rule.apply(&state) else {
            continue;
        };
        if visited.contains(&next) {
            continue;
        }
        path.push(i);
        visited.push(next);
        search(model, next, target, remaining - 1, path, visited, found);
        visited.pop();
        path.pop();
    }
}

fn contact_count(model: &TaskModel, chain: &[usize]) -> usize {
    chain
        .iter()
        .flat_map(|&i| &model.rules[i].mps)
        .filter(|m| m.verb().is_contact())
        .count()
}

fn select(model: &TaskModel, found: Vec<Vec<usize>>) -> Decomposition {
    let fewest = found
        .iter()
        .map(|c| contact_count(model, c))
        .min()
        .unwrap();
    let candidates: Vec<Vec<usize>> = found
        .into_iter()
        .filter(|c| contact_count(model, c) == fewest)
        .collect();
    let mp_sets: BTreeSet<Vec<MotionPrimitive>> = candidates
        .iter()
        .map(|c| {
            let mut mps: Vec<_> = c.iter().flat_map(|&i| model.rules[i].mps.clone()).collect();
            mps.sort();
            mps
        })
        .collect();
    let key = |c: &Vec<usize>| -> Vec<(RuleGroup, usize)> {
        c.iter().map(|&i| (model.rules[i].group, i)).collect()
    };
    let chain = candidates.iter().min_by_key(|c| key(c)).unwrap().clone();
    let mps = chain
        .iter()
        .flat_map(|&i| model.rules[i].mps.iter().copied())
        .collect();
    Decomposition {
        task: model.task(),
        chain,
        mps,
        ambiguous: mp_sets.len() > 1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Consecutive labels are identical.
    Unchanged,
    /// Explained by a single rule.
    Direct,
    /// Explained by a chain of `len` rules.
    Composite { len: usize },
    Undecomposable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairVerdict {
    pub from_frame: u32,
    pub to_frame: u32,
    pub from: ContextState,
    pub to: ContextState,
    pub verdict: Verdict,
    pub mps: Vec<MotionPrimitive>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub verdicts: Vec<PairVerdict>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn undecomposable(&self) -> usize {
        self.verdicts
            .iter()
            .filter(|v| v.verdict == Verdict::Undecomposable)
            .count()
    }

    pub fn is_clean(&self) -> bool {
        self.undecomposable() == 0
    }
}

/// Checks every consecutive pair of a transcript against the task model.
pub fn validate_transcript(t: &ContextTranscript) -> ValidationReport {
    validate_pairs(t.task(), t.entries())
}

/// As [`validate_transcript`] for raw entries, which must have strictly
/// increasing frames.
pub fn validate_entries(
    task: TaskId,
    entries: &[ContextEntry],
) -> Result<ValidationReport, FsmError> {
    check_monotonic(entries.iter().map(|e| e.frame))?;
    Ok(validate_pairs(task, entries))
}

fn validate_pairs(task: TaskId, entries: &[ContextEntry]) -> ValidationReport {
    let mut report = ValidationReport::default();
    for pair in entries.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let (verdict, mps) = match decompose(a.state, b.state, task) {
            Ok(d) => {
                if d.ambiguous {
                    report.warnings.push(format!(
                        "frames {}-{}: {} -> {} has several minimal explanations",
                        a.frame, b.frame, a.state, b.state
                    ));
                }
                let verdict = match d.len() {
                    0 => Verdict::Unchanged,
                    1 => Verdict::Direct,
                    len => Verdict::Composite { len },
                };
                (verdict, d.mps)
            }
            Err(_) => (Verdict::Undecomposable, Vec::new()),
        };
        report.verdicts.push(PairVerdict {
            from_frame: a.frame,
            to_frame: b.frame,
            from: a.state,
            to: b.state,
            verdict,
            mps,
        });
    }
    report
}

/// A reproducible walk of `length` states from the all-zero state, each step
/// applying one uniformly chosen applicable rule.
pub fn random_walk(task: TaskId, length: usize, seed: u64) -> ContextTranscript {
    let (states, _) = random_walk_with_rules(task, length, seed);
    ContextTranscript::from_pairs(
        task,
        states.into_iter().enumerate().map(|(i, s)| (i as u32, s)),
    )
    .expect("walk states are valid")
}

/// The walk's states together with the rule index taken at each step.
pub fn random_walk_with_rules(
    task: TaskId,
    length: usize,
    seed: u64,
) -> (Vec<ContextState>, Vec<usize>) {
    let model = model(task);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = ContextState::IDLE;
    let mut states = vec![state];
    let mut taken = Vec::new();
    let mut options = Vec::new();
    while states.len() < length {
        options.clear();
        options.extend(model.applicable(&state));
        let pick = options[rng.gen_range(0..options.len())];
        state = model.rules[pick].apply(&state).unwrap();
        states.push(state);
        taken.push(pick);
    }
    (states, taken)
}
