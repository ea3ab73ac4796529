//! Naive reference scores written straight from the definitions, shared by
//! the oracle tests and the acceptance suite.

#![allow(dead_code)]

pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for m in 0..a.len() {
        if a[m] < b[m] {
            return false;
        }
        if a[m] > b[m] {
            strictly = true;
        }
    }
    strictly
}

pub fn k_dominates(a: &[f64], b: &[f64], k: f64) -> bool {
    let nb = (0..a.len()).filter(|&m| a[m] > b[m]).count() as f64;
    let ne = (0..a.len()).filter(|&m| a[m] == b[m]).count() as f64;
    let total = a.len() as f64;
    ne < total && nb >= (total - ne) / (k + 1.0)
}

pub fn count(rows: &[Vec<f64>], rel: impl Fn(&[f64], &[f64]) -> bool) -> Vec<f64> {
    (0..rows.len())
        .map(|i| {
            (0..rows.len())
                .filter(|&j| j != i && rel(&rows[i], &rows[j]))
                .count() as f64
        })
        .collect()
}

/// Average rank by counting: 1 + (number strictly better) + (ties - 1) / 2.
pub fn rank_on(rows: &[Vec<f64>], m: usize) -> Vec<f64> {
    (0..rows.len())
        .map(|i| {
            let better = rows.iter().filter(|r| r[m] > rows[i][m]).count() as f64;
            let same = rows.iter().filter(|r| r[m] == rows[i][m]).count() as f64;
            better + (same + 1.0) / 2.0
        })
        .collect()
}

pub fn ar(rows: &[Vec<f64>]) -> Vec<f64> {
    let mut s = vec![0.0; rows.len()];
    for m in 0..rows[0].len() {
        for (i, r) in rank_on(rows, m).into_iter().enumerate() {
            s[i] += r;
        }
    }
    s
}

pub fn mr(rows: &[Vec<f64>]) -> Vec<f64> {
    (0..rows.len())
        .map(|i| {
            (0..rows[0].len())
                .map(|m| rank_on(rows, m)[i])
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

pub fn gain(a: &[f64], b: &[f64]) -> f64 {
    let mut g = 0.0;
    for m in 0..a.len() {
        if a[m] > b[m] {
            g += a[m] - b[m];
        }
    }
    g
}

pub fn gd(rows: &[Vec<f64>]) -> Vec<f64> {
    (0..rows.len())
        .map(|i| {
            (0..rows.len())
                .filter(|&j| j != i)
                .map(|j| gain(&rows[i], &rows[j]))
                .sum()
        })
        .collect()
}

pub fn pg(rows: &[Vec<f64>]) -> Vec<f64> {
    if rows.len() < 2 {
        return vec![0.0; rows.len()];
    }
    (0..rows.len())
        .map(|i| {
            let others = (0..rows.len()).filter(|&j| j != i);
            let out = others
                .clone()
                .map(|j| gain(&rows[i], &rows[j]))
                .fold(f64::MIN, f64::max);
            let inc = others
                .map(|j| gain(&rows[j], &rows[i]))
                .fold(f64::MIN, f64::max);
            out - inc
        })
        .collect()
}

/// (n - position) / n where position counts better-or-tied entries under `higher_better`.
pub fn normalized(scores: &[f64], higher_better: bool) -> Vec<f64> {
    let n = scores.len() as f64;
    scores
        .iter()
        .map(|&s| {
            let better = scores
                .iter()
                .filter(|&&t| if higher_better { t > s } else { t < s })
                .count() as f64;
            let same = scores.iter().filter(|&&t| t == s).count() as f64;
            (n - (better + (same + 1.0) / 2.0)) / n
        })
        .collect()
}
