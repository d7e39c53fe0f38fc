//! Context transcript to MP transcript translation.
//!
//! Context labels arrive at the label rate (3 Hz by default) and hold until
//! the next label. Each change of context is decomposed into MPs, which are
//! laid out over kinematic samples (30 Hz by default).

use std::str::FromStr;

use thiserror::Error;

use crate::context::ContextState;
use crate::fsm::{decompose, FsmError};
use crate::mp::{MotionPrimitive, Side};
use crate::transcript::{ContextTranscript, MpSegment, MpTranscript};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error("transcript has no entries")]
    EmptyTranscript,
    #[error("sample rate {sample_rate} Hz is not a positive multiple of label rate {label_rate} Hz")]
    IncompatibleRates { sample_rate: u32, label_rate: u32 },
    #[error("frames {from_frame}-{to_frame}: {source}")]
    Undecomposable {
        from_frame: u32,
        to_frame: u32,
        source: FsmError,
    },
    #[error("frame {frame}: {count} MPs on one side do not fit in {samples} samples")]
    GapTooShort { frame: u32, count: usize, samples: u32 },
}

/// Where an MP's samples go relative to the context change it causes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpanMode {
    /// From the previous change up to this one: the motion precedes its effect.
    #[default]
    Leading,
    /// From this change up to the next one.
    Trailing,
}

impl FromStr for SpanMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "leading" => Ok(SpanMode::Leading),
            "trailing" => Ok(SpanMode::Trailing),
            _ => Err(format!("unknown span mode {s:?} (expected leading or trailing)")),
        }
    }
}

fn rate_ratio(t: &ContextTranscript, sample_rate: u32) -> Result<u32, TranslateError> {
    let label_rate = t.label_rate();
    if label_rate == 0 || sample_rate == 0 || !sample_rate.is_multiple_of(label_rate) {
        return Err(TranslateError::IncompatibleRates {
            sample_rate,
            label_rate,
        });
    }
    Ok(sample_rate / label_rate)
}

/// Number of samples a transcript spans at `sample_rate`.
pub fn total_samples(t: &ContextTranscript, sample_rate: u32) -> Result<u32, TranslateError> {
    let ratio = rate_ratio(t, sample_rate)?;
    let last = t.last_frame().ok_or(TranslateError::EmptyTranscript)?;
    Ok((last + 1) * ratio)
}

/// Expands a transcript to one state per sample. Samples before the first
/// label take the first label's state.
pub fn upsample_hold(
    t: &ContextTranscript,
    sample_rate: u32,
) -> Result<Vec<ContextState>, TranslateError> {
    let ratio = rate_ratio(t, sample_rate)?;
    let total = total_samples(t, sample_rate)?;
    let entries = t.entries();
    let mut out = Vec::with_capacity(total as usize);
    let mut idx = 0;
    for sample in 0..total {
        let frame = sample / ratio;
        while idx + 1 < entries.len() && entries[idx + 1].frame <= frame {
            idx += 1;
        }
        out.push(entries[idx].state);
    }
    Ok(out)
}

/// Translates context labels into a combined (both sides) MP transcript.
pub fn translate(
    t: &ContextTranscript,
    sample_rate: u32,
    span_mode: SpanMode,
) -> Result<MpTranscript, TranslateError> {
    let ratio = rate_ratio(t, sample_rate)?;
    let total = total_samples(t, sample_rate)?;

    struct Change {
        frame: u32,
        sample: u32,
        mps: Vec<MotionPrimitive>,
    }
    let mut changes = Vec::new();
    for pair in t.entries().windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let d = decompose(a.state, b.state, t.task()).map_err(|source| {
            TranslateError::Undecomposable {
                from_frame: a.frame,
                to_frame: b.frame,
                source,
            }
        })?;
        if !d.mps.is_empty() {
            changes.push(Change {
                frame: b.frame,
                sample: b.frame * ratio,
                mps: d.mps,
            });
        }
    }

    let mut entries = Vec::new();
    let idle = |start: u32, end: u32| MpSegment {
        start,
        end,
        mp: MotionPrimitive::Idle,
    };
    match span_mode {
        SpanMode::Leading => {
            let mut prev = 0;
            for c in &changes {
                lay_out(c.frame, &c.mps, prev, c.sample, &mut entries)?;
                prev = c.sample;
            }
            if prev < total {
                entries.push(idle(prev, total));
            }
        }
        SpanMode::Trailing => {
            let first = changes.first().map_or(total, |c| c.sample);
            if first > 0 {
                entries.push(idle(0, first));
            }
            for (i, c) in changes.iter().enumerate() {
                let end = changes.get(i + 1).map_or(total, |n| n.sample);
                lay_out(c.frame, &c.mps, c.sample, end, &mut entries)?;
            }
        }
    }
    entries.sort_by_key(|s| s.start);
    Ok(MpTranscript {
        sample_rate,
        total_samples: total,
        entries,
    })
}

/// Splits `[start, end)` equally among each side's MPs, in order, with the
/// remainder going to the last MP of the side.
fn lay_out(
    frame: u32,
    mps: &[MotionPrimitive],
    start: u32,
    end: u32,
    out: &mut Vec<MpSegment>,
) -> Result<(), TranslateError> {
    let samples = end - start;
    for side in [Side::Left, Side::Right] {
        let own: Vec<MotionPrimitive> = mps.iter().copied().filter(|m| m.side() == Some(side)).collect();
        if own.is_empty() {
            continue;
        }
        let count = own.len();
        let base = samples / count as u32;
        if base == 0 {
            return Err(TranslateError::GapTooShort {
                frame,
                count,
                samples,
            });
        }
        let mut cursor = start;
        for (i, mp) in own.into_iter().enumerate() {
            let seg_end = if i + 1 == count { end } else { cursor + base };
            out.push(MpSegment {
                start: cursor,
                end: seg_end,
                mp,
            });
            cursor = seg_end;
        }
    }
    Ok(())
}

/// Separates a combined transcript into per-side transcripts, filling
/// samples where a side does nothing with `Idle`.
pub fn split_sides(t: &MpTranscript, total_samples: u32) -> (MpTranscript, MpTranscript) {
    (
        side_transcript(t, Side::Left, total_samples),
        side_transcript(t, Side::Right, total_samples),
    )
}

fn side_transcript(t: &MpTranscript, side: Side, total: u32) -> MpTranscript {
    let mut entries = Vec::new();
    let mut cursor = 0;
    let mut own: Vec<&MpSegment> = t.side_segments(side).collect();
    own.sort_by_key(|s| s.start);
    for s in own {
        let start = s.start.max(cursor);
        let end = s.end.min(total);
        if start >= end {
            continue;
        }
        if start > cursor {
            entries.push(MpSegment {
                start: cursor,
                end: start,
                mp: MotionPrimitive::Idle,
            });
        }
        entries.push(MpSegment { start, end, mp: s.mp });
        cursor = end;
    }
    if cursor < total {
        entries.push(MpSegment {
            start: cursor,
            end: total,
            mp: MotionPrimitive::Idle,
        });
    }
    MpTranscript {
        sample_rate: t.sample_rate,
        total_samples: total,
        entries,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::{parse_state, TaskId};

    fn st(t: &str) -> ContextState {
        parse_state(t, TaskId::Suturing).unwrap()
    }

    fn seg(start: u32, end: u32, mp: &str) -> MpSegment {
        MpSegment {
            start,
            end,
            mp: mp.parse().unwrap(),
        }
    }

    fn transcript(pairs: &[(u32, &str)]) -> ContextTranscript {
        ContextTranscript::from_pairs(TaskId::Suturing, pairs.iter().map(|(f, s)| (*f, st(s))))
            .unwrap()
    }

    #[test]
    fn single_touch_leading() {
        let t = transcript(&[(0, "00000"), (1, "02000")]);
        let out = translate(&t, 30, SpanMode::Leading).unwrap();
        assert_eq!(out.total_samples, 20);
        assert_eq!(out.entries, vec![seg(0, 10, "Touch(L, Needle)"), seg(10, 20, "Idle")]);
    }

    #[test]
    fn single_touch_trailing() {
        let t = transcript(&[(0, "00000"), (1, "02000")]);
        let out = translate(&t, 30, SpanMode::Trailing).unwrap();
        assert_eq!(out.entries, vec![seg(0, 10, "Idle"), seg(10, 20, "Touch(L, Needle)")]);
    }

    #[test]
    fn single_entry_is_all_idle() {
        let t = transcript(&[(0, "20302")]);
        for mode in [SpanMode::Leading, SpanMode::Trailing] {
            let out = translate(&t, 30, mode).unwrap();
            assert_eq!(out.entries, vec![seg(0, 10, "Idle")]);
        }
    }

    #[test]
    fn unchanged_pair_extends_interval() {
        let t = transcript(&[(0, "00000"), (1, "00000"), (2, "02000"), (3, "02000")]);
        let lead = translate(&t, 30, SpanMode::Leading).unwrap();
        assert_eq!(lead.entries, vec![seg(0, 20, "Touch(L, Needle)"), seg(20, 40, "Idle")]);
        let trail = translate(&t, 30, SpanMode::Trailing).unwrap();
        assert_eq!(trail.entries, vec![seg(0, 20, "Idle"), seg(20, 40, "Touch(L, Needle)")]);
    }

    #[test]
    fn same_side_mps_share_the_gap() {
        // touch and grasp skipped into one label period
        let t = transcript(&[(0, "00000"), (1, "20000")]);
        let out = translate(&t, 30, SpanMode::Leading).unwrap();
        assert_eq!(
            out.entries,
            vec![seg(0, 5, "Touch(L, Needle)"), seg(5, 10, "Grasp(L, Needle)"), seg(10, 20, "Idle")]
        );
        // three-way split of a 10-sample gap leaves the remainder on the last
        let t = transcript(&[(0, "00000"), (1, "24000")]);
        let out = translate(&t, 30, SpanMode::Leading).unwrap();
        assert_eq!(
            out.entries,
            vec![
                seg(0, 3, "Touch(L, Needle)"),
                seg(3, 6, "Grasp(L, Needle)"),
                seg(6, 10, "Touch(L, Fabric)"),
                seg(10, 20, "Idle")
            ]
        );
    }

    #[test]
    fn independent_sides_overlap() {
        let t = transcript(&[(0, "02000"), (1, "20030")]);
        let out = translate(&t, 30, SpanMode::Leading).unwrap();
        assert_eq!(
            out.entries,
            vec![seg(0, 10, "Grasp(L, Needle)"), seg(0, 10, "Touch(R, Thread)"), seg(10, 20, "Idle")]
        );
    }

    #[test]
    fn undecomposable_reports_frames() {
        let t = transcript(&[(0, "00000"), (4, "22222")]);
        let err = translate(&t, 30, SpanMode::Leading).unwrap_err();
        assert!(matches!(err, TranslateError::Undecomposable { from_frame: 0, to_frame: 4, .. }));
    }

    #[test]
    fn rate_checks() {
        let t = transcript(&[(0, "00000")]);
        assert!(matches!(translate(&t, 20, SpanMode::Leading), Err(TranslateError::IncompatibleRates { .. })));
        assert!(matches!(upsample_hold(&t, 0), Err(TranslateError::IncompatibleRates { .. })));
        let empty = ContextTranscript::new(TaskId::Suturing, vec![]).unwrap();
        assert_eq!(translate(&empty, 30, SpanMode::Leading), Err(TranslateError::EmptyTranscript));
    }

    #[test]
    fn gap_too_short_at_label_rate() {
        let t = transcript(&[(0, "00000"), (1, "20000")]);
        assert!(matches!(translate(&t, 3, SpanMode::Leading), Err(TranslateError::GapTooShort { .. })));
    }

    #[test]
    fn split_fills_idle() {
        let t = MpTranscript {
            sample_rate: 30,
            total_samples: 20,
            entries: vec![seg(0, 10, "Touch(L, Needle)")],
        };
        let (left, right) = split_sides(&t, 20);
        assert_eq!(left.entries, vec![seg(0, 10, "Touch(L, Needle)"), seg(10, 20, "Idle")]);
        assert_eq!(right.entries, vec![seg(0, 20, "Idle")]);
        assert!(left.tiles() && right.tiles());

        let idle = MpTranscript {
            sample_rate: 30,
            total_samples: 20,
            entries: vec![seg(0, 20, "Idle")],
        };
        let (l, r) = split_sides(&idle, 20);
        assert_eq!(l.entries, vec![seg(0, 20, "Idle")]);
        assert_eq!(r.entries, vec![seg(0, 20, "Idle")]);
    }

    #[test]
    fn upsample_examples() {
        let s1 = st("00000");
        let s2 = st("02000");
        let one = transcript(&[(0, "00000")]);
        assert_eq!(upsample_hold(&one, 30).unwrap(), vec![s1; 10]);
        let two = transcript(&[(0, "00000"), (1, "02000")]);
        let mut expected = vec![s1; 10];
        expected.extend(vec![s2; 10]);
        assert_eq!(upsample_hold(&two, 30).unwrap(), expected);
        // backfill before a late first label
        let late = transcript(&[(2, "02000")]);
        assert_eq!(upsample_hold(&late, 30).unwrap(), vec![s2; 30]);
    }
}
