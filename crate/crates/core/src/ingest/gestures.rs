use std::fmt::Write as _;

use super::IngestError;

/// One gesture interval, `start end label`, frames inclusive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GestureSegment {
    pub start: u32,
    pub end: u32,
    pub label: String,
}

pub fn parse_gestures(text: &str) -> Result<Vec<GestureSegment>, IngestError> {
    let mut out: Vec<GestureSegment> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| IngestError::Parse {
            path: None,
            line: line_no,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [start, end, label] = fields[..] else {
            return Err(err("expected `<start> <end> <label>`".into()));
        };
        let start: u32 = start.parse().map_err(|_| err(format!("bad start {start:?}")))?;
        let end: u32 = end.parse().map_err(|_| err(format!("bad end {end:?}")))?;
        if end < start {
            return Err(err(format!("end {end} precedes start {start}")));
        }
        if let Some(prev) = out.last() {
            if start <= prev.start {
                return Err(err(format!("start {start} does not increase on {}", prev.start)));
            }
        }
        out.push(GestureSegment {
            start,
            end,
            label: label.to_string(),
        });
    }
    Ok(out)
}

pub fn render_gestures(segments: &[GestureSegment]) -> String {
    let mut out = String::new();
    for s in segments {
        let _ = writeln!(out, "{} {} {}", s.start, s.end, s.label);
    }
    out
}
