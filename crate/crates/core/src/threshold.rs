//! Edge filtering and the internally cross-validated choice of how much to
//! filter.
//!
//! Dense kernels connect everything to everything; most of that weight is
//! noise. We remove edges below a quantile of the off-diagonal weight
//! distribution, and pick the quantile by leave-one-out on the training
//! side: zero the kernel diagonal (so no node can see itself), score every
//! training node against the training positives, and keep the quantile
//! whose filtered graph ranks positives above negatives best (AUC).
//!
//! Zeroing the diagonal once is what makes this a genuine leave-one-out:
//! with k_ii = 0 the node's own entry contributes nothing to any sum or
//! maximum, which is exactly what dropping it from the graph would do.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::{positive_mask, score_all, ScoreSpec};
use crate::similarity::average_ranks;

/// Outcome of the leave-one-out quantile search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    /// Winning quantile; always one of the grid values handed in.
    pub quantile: f64,
    /// Leave-one-out AUC achieved at that quantile.
    pub auc: f64,
}

/// Grid used when the caller does not supply one.
pub fn default_quantile_grid() -> Vec<f64> {
    vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99]
}

/// Linear-interpolation quantile of a sorted slice (the common "type 7"
/// definition: index h = q (m - 1), interpolate between floor and ceil).
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let m = sorted.len();
    let h = q * (m - 1) as f64;
    let lo = h.floor() as usize;
    if lo + 1 >= m {
        sorted[m - 1]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
    }
}

fn check_q(q: f64) -> Result<()> {
    if !q.is_finite() || !(0.0..=1.0).contains(&q) {
        return Err(Error::invalid(format!("quantile {q} outside [0, 1]")));
    }
    Ok(())
}

/// Quantile of arbitrary values.
pub fn vector_quantile(values: &[f64], q: f64) -> Result<f64> {
    check_q(q)?;
    if values.is_empty() {
        return Err(Error::invalid("quantile of an empty value set"));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("non-finite value {bad} in quantile input")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, q))
}

/// The strict upper triangle of a symmetric matrix, flattened row-major.
/// Diagonal entries never participate: self-weight is not an edge.
fn upper_off_diagonal(k: &Array2<f64>) -> Result<Vec<f64>> {
    let n = k.nrows();
    if n != k.ncols() || n < 2 {
        return Err(Error::invalid(format!(
            "expected a square matrix with at least 2 rows, got {}x{}",
            k.nrows(),
            k.ncols()
        )));
    }
    let mut flat = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = k[(i, j)];
            if !v.is_finite() {
                return Err(Error::invalid(format!("non-finite entry {v} at ({i}, {j})")));
            }
            flat.push(v);
        }
    }
    Ok(flat)
}

/// Quantile of the off-diagonal edge weights of a kernel matrix.
pub fn matrix_quantile(k: &Array2<f64>, q: f64) -> Result<f64> {
    check_q(q)?;
    let mut flat = upper_off_diagonal(k)?;
    flat.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&flat, q))
}

/// Removes every edge strictly below the cutoff; weights equal to the
/// cutoff survive.
pub fn filter_matrix(k: &Array2<f64>, theta: f64) -> Array2<f64> {
    k.mapv(|v| if v < theta { 0.0 } else { v })
}

/// Copy of the matrix with a zeroed diagonal.
pub fn zero_diagonal(k: &Array2<f64>) -> Array2<f64> {
    let mut out = k.clone();
    for i in 0..out.nrows().min(out.ncols()) {
        out[(i, i)] = 0.0;
    }
    out
}

/// Area under the ROC curve via the rank-sum identity. Tied scores share
/// averaged ranks, which credits each tied positive/negative pair one half.
pub fn auc(scores: &[f64], positive: &[bool]) -> Result<f64> {
    if scores.len() != positive.len() {
        return Err(Error::invalid(format!(
            "{} scores for {} labels",
            scores.len(),
            positive.len()
        )));
    }
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::invalid(format!("non-finite score {bad}")));
    }
    let p = positive.iter().filter(|&&b| b).count();
    let n = positive.len() - p;
    if p == 0 || n == 0 {
        return Err(Error::invalid(
            "AUC needs at least one positive and one negative",
        ));
    }
    let ranks = average_ranks(scores);
    let rank_sum: f64 = ranks
        .iter()
        .zip(positive)
        .filter(|&(_, &b)| b)
        .map(|(r, _)| r)
        .sum();
    let u = rank_sum - (p * (p + 1)) as f64 / 2.0;
    Ok(u / (p as f64 * n as f64))
}

/// Picks the edge-filter quantile by leave-one-out over the target nodes.
///
/// The diagonal is zeroed once; each candidate quantile is turned into a
/// weight cutoff on the off-diagonal distribution, the filtered graph is
/// scored, and the quantile with the best AUC wins. Ties keep the earlier
/// (smaller) quantile, i.e. the least aggressive filter that achieves the
/// optimum.
pub fn optimize_thresh_by_loo(
    k: &Array2<f64>,
    positives: &[usize],
    targets: &[usize],
    grid: &[f64],
    spec: &ScoreSpec,
) -> Result<ThresholdResult> {
    spec.validate()?;
    if grid.is_empty() {
        return Err(Error::invalid("empty quantile grid"));
    }
    for &q in grid {
        check_q(q)?;
    }
    if targets.is_empty() {
        return Err(Error::invalid("no target nodes to cross-validate on"));
    }
    let n = k.nrows();
    let mask = positive_mask(n, positives)?;
    let mut seen = vec![false; n];
    for &t in targets {
        if t >= n {
            return Err(Error::invalid(format!(
                "target index {t} out of range for {n} nodes"
            )));
        }
        if seen[t] {
            return Err(Error::invalid(format!("target index {t} listed twice")));
        }
        seen[t] = true;
    }
    let labels: Vec<bool> = targets.iter().map(|&t| mask[t]).collect();
    if labels.iter().all(|&b| b) || labels.iter().all(|&b| !b) {
        return Err(Error::invalid(
            "targets are single-class; the leave-one-out AUC is undefined",
        ));
    }

    let k0 = zero_diagonal(k);
    let mut flat = upper_off_diagonal(&k0)?;
    flat.sort_by(f64::total_cmp);

    let mut grid_sorted = grid.to_vec();
    grid_sorted.sort_by(f64::total_cmp);
    grid_sorted.dedup();

    let mut best_q = grid_sorted[0];
    let mut best_auc = f64::NEG_INFINITY;
    for &q in &grid_sorted {
        let theta = quantile_sorted(&flat, q);
        let filtered = filter_matrix(&k0, theta);
        let scores = score_all(&filtered, positives, targets, spec)?;
        let a = auc(&scores, &labels)?;
        if a > best_auc {
            best_auc = a;
            best_q = q;
        }
    }
    Ok(ThresholdResult {
        quantile: best_q,
        auc: best_auc,
    })
}
