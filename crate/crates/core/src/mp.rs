//! Motion primitives: the transition labels of a task model.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::context::ObjectKind;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot parse motion primitive {0:?}")]
pub struct MpParseError(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Verb {
    Touch,
    Untouch,
    Grasp,
    Release,
    Push,
    Pull,
    Idle,
}

impl Verb {
    pub fn name(self) -> &'static str {
        match self {
            Verb::Touch => "Touch",
            Verb::Untouch => "Untouch",
            Verb::Grasp => "Grasp",
            Verb::Release => "Release",
            Verb::Push => "Push",
            Verb::Pull => "Pull",
            Verb::Idle => "Idle",
        }
    }

    /// Touch and Untouch yield to Grasp and Release when both explain a change.
    pub fn is_contact(self) -> bool {
        matches!(self, Verb::Touch | Verb::Untouch)
    }
}

impl FromStr for Verb {
    type Err = MpParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "Touch" => Verb::Touch,
            "Untouch" => Verb::Untouch,
            "Grasp" => Verb::Grasp,
            "Release" => Verb::Release,
            "Push" => Verb::Push,
            "Pull" => Verb::Pull,
            "Idle" => Verb::Idle,
            _ => return Err(MpParseError(s.to_string())),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn letter(self) -> &'static str {
        match self {
            Side::Left => "L",
            Side::Right => "R",
        }
    }
}

/// What an MP acts on: a vocabulary object or a fixed fixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Target {
    Object(ObjectKind),
    Post,
    Peg,
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Object(k) => f.write_str(k.name()),
            Target::Post => f.write_str("Post"),
            Target::Peg => f.write_str("Peg"),
        }
    }
}

impl FromStr for Target {
    type Err = MpParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Post" => Ok(Target::Post),
            "Peg" => Ok(Target::Peg),
            _ => s
                .parse::<ObjectKind>()
                .map(Target::Object)
                .map_err(|_| MpParseError(s.to_string())),
        }
    }
}

/// A concrete motion primitive.
///
/// `carried` is set when the acting tool is an object held by the grasper on
/// `side` (a held needle pushing into fabric renders as
/// `Push(L:Needle, Fabric)`); otherwise the grasper itself acts
/// (`Grasp(L, Needle)`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MotionPrimitive {
    Idle,
    Act {
        verb: Verb,
        side: Side,
        carried: Option<ObjectKind>,
        target: Target,
    },
}

impl MotionPrimitive {
    pub fn new(verb: Verb, side: Side, target: Target) -> Self {
        MotionPrimitive::Act {
            verb,
            side,
            carried: None,
            target,
        }
    }

    pub fn carried(verb: Verb, side: Side, carried: ObjectKind, target: Target) -> Self {
        MotionPrimitive::Act {
            verb,
            side,
            carried: Some(carried),
            target,
        }
    }

    pub fn verb(&self) -> Verb {
        match self {
            MotionPrimitive::Idle => Verb::Idle,
            MotionPrimitive::Act { verb, .. } => *verb,
        }
    }

    pub fn side(&self) -> Option<Side> {
        match self {
            MotionPrimitive::Idle => None,
            MotionPrimitive::Act { side, .. } => Some(*side),
        }
    }

    pub fn is_idle(&self) -> bool {
        matches!(self, MotionPrimitive::Idle)
    }
}

impl fmt::Display for MotionPrimitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MotionPrimitive::Idle => f.write_str("Idle"),
            MotionPrimitive::Act {
                verb,
                side,
                carried: None,
                target,
            } => write!(f, "{}({}, {})", verb.name(), side.letter(), target),
            MotionPrimitive::Act {
                verb,
                side,
                carried: Some(obj),
                target,
            } => write!(f, "{}({}:{}, {})", verb.name(), side.letter(), obj, target),
        }
    }
}

impl FromStr for MotionPrimitive {
    type Err = MpParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || MpParseError(s.to_string());
        let s = s.trim();
        if s == "Idle" {
            return Ok(MotionPrimitive::Idle);
        }
        let (verb, rest) = s.split_once('(').ok_or_else(err)?;
        let args = rest.strip_suffix(')').ok_or_else(err)?;
        let verb: Verb = verb.parse().map_err(|_| err())?;
        if verb == Verb::Idle {
            return Err(err());
        }
        let (actor, target) = args.split_once(',').ok_or_else(err)?;
        let target: Target = target.trim().parse().map_err(|_| err())?;
        let (side, carried) = match actor.trim().split_once(':') {
            Some((side, obj)) => (side, Some(obj.parse::<ObjectKind>().map_err(|_| err())?)),
            None => (actor.trim(), None),
        };
        let side = match side {
            "L" => Side::Left,
            "R" => Side::Right,
            _ => return Err(err()),
        };
        Ok(MotionPrimitive::Act {
            verb,
            side,
            carried,
            target,
        })
    }
}
