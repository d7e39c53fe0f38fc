//! Reference implementations used as test oracles. They take the slow,
//! obvious route and share no code with the library.

#![allow(dead_code)]

/// Alpha by enumerating every ordered pair of values: within units for the
/// observed disagreement, across all pairable values for the expected one.
/// Returns `None` when expected disagreement is zero.
pub fn alpha_oracle<L: PartialEq>(values: &[Vec<Option<L>>]) -> Option<f64> {
    let units: Vec<Vec<&L>> = values
        .iter()
        .map(|row| row.iter().flatten().collect::<Vec<_>>())
        .filter(|u| u.len() >= 2)
        .collect();
    let pooled: Vec<&L> = units.iter().flatten().copied().collect();
    let n = pooled.len() as f64;
    let mut observed = 0.0;
    for u in &units {
        let mut d = 0.0;
        for i in 0..u.len() {
            for j in 0..u.len() {
                if i != j && u[i] != u[j] {
                    d += 1.0;
                }
            }
        }
        observed += d / (u.len() - 1) as f64;
    }
    observed /= n;
    let mut expected = 0.0;
    for i in 0..pooled.len() {
        for j in 0..pooled.len() {
            if i != j && pooled[i] != pooled[j] {
                expected += 1.0;
            }
        }
    }
    expected /= n * (n - 1.0);
    if expected == 0.0 {
        None
    } else {
        Some(1.0 - observed / expected)
    }
}

/// Edit distance by the full (|a|+1) x (|b|+1) table.
pub fn edit_distance_oracle<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut table = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in table.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in table[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = table[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            table[i][j] = sub.min(table[i - 1][j] + 1).min(table[i][j - 1] + 1);
        }
    }
    table[a.len()][b.len()]
}

/// Edit score computed from the oracle distance after collapsing runs.
pub fn edit_score_oracle<T: PartialEq + Clone>(truth: &[T], pred: &[T]) -> f64 {
    let runs = |xs: &[T]| {
        let mut out: Vec<T> = Vec::new();
        for x in xs {
            if out.last() != Some(x) {
                out.push(x.clone());
            }
        }
        out
    };
    let (g, p) = (runs(truth), runs(pred));
    100.0 * (1.0 - edit_distance_oracle(&g, &p) as f64 / g.len().max(p.len()) as f64)
}
