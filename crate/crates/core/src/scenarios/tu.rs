//! Total-unimodularity check by exhaustive minors.
//!
//! A matrix is totally unimodular when every square submatrix has
//! determinant -1, 0 or 1. The check enumerates submatrices of order
//! `1..=max_k` in lexicographic (order, rows, columns) order and reports the
//! first failure. Determinants use fraction-free Bareiss elimination in
//! `i128`.

use serde::Serialize;

use super::cloudwan::CloudWanInstance;
use crate::error::{Error, Result};
use crate::par;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TuWitness {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub det: i128,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TuReport {
    /// True when every minor up to the checked order is in {-1, 0, 1}.
    pub unimodular: bool,
    pub witness: Option<TuWitness>,
    /// Minors evaluated; equals the full count when no witness was found.
    pub checked: u64,
    pub max_k: usize,
}

pub fn determinant(m: &[Vec<i64>]) -> i128 {
    let n = m.len();
    if n == 0 {
        return 1;
    }
    let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            let Some(swap) = (k + 1..n).find(|&r| a[r][k] != 0) else {
                return 0;
            };
            a.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

fn binom(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] != i + n - k) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Checks every square submatrix of order at most `max_k` (capped at the
/// smaller dimension). Fails with a resource error when more than `limit`
/// minors would be needed.
pub fn check_tu_matrix(matrix: &[Vec<i64>], max_k: usize, workers: usize, limit: u64) -> Result<TuReport> {
    let rows = matrix.len();
    let cols = matrix.first().map_or(0, Vec::len);
    if matrix.iter().any(|r| r.len() != cols) {
        return Err(Error::Input("matrix rows differ in length".into()));
    }
    let max_k = max_k.min(rows).min(cols);
    let total: u128 = (1..=max_k).map(|k| binom(rows, k) * binom(cols, k)).sum();
    if total > limit as u128 {
        return Err(Error::Resource(format!("{total} minors to check, limit {limit}")));
    }
    let mut checked = 0u64;
    for k in 1..=max_k {
        let col_sets = combinations(cols, k);
        let row_sets = combinations(rows, k);
        // Per row set: minors checked and the first failing column set.
        let found = par::map(&row_sets, workers, |rs| {
            for (n, cs) in col_sets.iter().enumerate() {
                let sub: Vec<Vec<i64>> = rs.iter().map(|&r| cs.iter().map(|&c| matrix[r][c]).collect()).collect();
                let det = determinant(&sub);
                if det.abs() > 1 {
                    return (n as u64 + 1, Some((cs.clone(), det)));
                }
            }
            (col_sets.len() as u64, None)
        });
        for (rs, (n, hit)) in row_sets.into_iter().zip(found) {
            checked += n;
            if let Some((cs, det)) = hit {
                return Ok(TuReport {
                    unimodular: false,
                    witness: Some(TuWitness { rows: rs, cols: cs, det }),
                    checked,
                    max_k,
                });
            }
        }
    }
    Ok(TuReport {
        unimodular: true,
        witness: None,
        checked,
        max_k,
    })
}

/// Constraint matrix of slot `t`: one row per client (its demand equality),
/// then one per PoP (its load limit); one column per eligible edge in sorted
/// order.
pub fn slot_matrix(cw: &CloudWanInstance, t: usize) -> Vec<Vec<i64>> {
    let mut edges = cw.slots[t - 1].edges.clone();
    edges.sort_unstable();
    let m = cw.pops;
    let client_rows = (0..cw.clients).map(|c| edges.iter().map(|e| i64::from(e[1] == m + c + 1)).collect());
    let pop_rows = (1..=m).map(|i| edges.iter().map(|e| i64::from(e[0] == i)).collect());
    client_rows.chain(pop_rows).collect()
}

/// [`check_tu_matrix`] on the slot matrix of `t`, with a limit of ten million
/// minors.
pub fn check_totally_unimodular(cw: &CloudWanInstance, t: usize, max_k: usize, workers: usize) -> Result<TuReport> {
    if t == 0 || t > cw.slots.len() {
        return Err(Error::Input(format!("slot {t} outside 1..={}", cw.slots.len())));
    }
    check_tu_matrix(&slot_matrix(cw, t), max_k, workers, 10_000_000)
}
