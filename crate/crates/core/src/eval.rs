//! Label-sequence metrics: per-sample accuracy and segmental edit score.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("sequences differ in length: {truth} vs {pred}")]
    LengthMismatch { truth: usize, pred: usize },
    #[error("cannot score an empty sequence")]
    Empty,
    #[error("ground truth is empty")]
    EmptyTruth,
}

/// Fraction of positions where the labels agree.
pub fn accuracy<T: PartialEq>(truth: &[T], pred: &[T]) -> Result<f64, EvalError> {
    if truth.len() != pred.len() {
        return Err(EvalError::LengthMismatch {
            truth: truth.len(),
            pred: pred.len(),
        });
    }
    if truth.is_empty() {
        return Err(EvalError::Empty);
    }
    let hits = truth.iter().zip(pred).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Insertions, deletions and substitutions needed to turn `a` into `b`.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, x) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y {
                diag
            } else {
                1 + diag.min(up).min(row[j])
            };
            diag = up;
        }
    }
    row[b.len()]
}

/// Merges runs of equal consecutive labels into one segment label.
pub fn collapse<T: PartialEq + Clone>(labels: &[T]) -> Vec<T> {
    let mut out: Vec<T> = Vec::new();
    for l in labels {
        if out.last() != Some(l) {
            out.push(l.clone());
        }
    }
    out
}

/// `100 * (1 - d / max(|G|, |P|))` over collapsed segment sequences, where
/// `d` is their edit distance. 100 means identical segment order.
pub fn edit_score<T: PartialEq + Clone>(truth: &[T], pred: &[T]) -> Result<f64, EvalError> {
    if truth.is_empty() {
        return Err(EvalError::EmptyTruth);
    }
    let g = collapse(truth);
    let p = collapse(pred);
    let d = levenshtein(&g, &p);
    Ok(100.0 * (1.0 - d as f64 / g.len().max(p.len()) as f64))
}
