//! Surgical context modelling toolkit.
//!
//! Dry-lab tasks are modelled as finite state machines whose states are
//! five-digit context encodings and whose transitions are motion primitives.
//! The crate covers the task tables, transcript validation and translation,
//! inter-annotator agreement, sequence metrics and dataset ingest.

pub mod agreement;
pub mod context;
pub mod eval;
pub mod fsm;
pub mod ingest;
pub mod mp;
pub mod rules;
pub mod transcript;
pub mod translate;

pub use context::{parse_state, ContextError, ContextState, ObjectCode, ObjectKind, StateVar, TaskId};
pub use fsm::{decompose, random_walk, validate_transcript, Decomposition, FsmError, Verdict};
pub use mp::{MotionPrimitive, Side, Target, Verb};
pub use rules::{task_spec, TaskSpec, TransitionRule};
pub use transcript::{ContextEntry, ContextTranscript, MpSegment, MpTranscript};
pub use translate::{split_sides, translate, upsample_hold, SpanMode};
