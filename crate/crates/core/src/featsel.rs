//! Differential-expression statistics and top-k feature selection.
//!
//! Two rankings are offered. [`welch_t`] is the unequal-variance t-test:
//!
//! ```text
//! t = (m1 - m2) / sqrt(s1²/n1 + s2²/n2)
//! ```
//!
//! with Welch–Satterthwaite degrees of freedom. [`moderated_t`] replaces the
//! per-feature pooled variance with an empirical-Bayes compromise between the
//! feature's own variance and a prior variance estimated from all features
//! at once, which stabilises the ranking when few samples are available.
//! Both produce two-sided p-values from the t distribution.

use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::gamma::digamma;

use crate::dataset::ExpressionMatrix;
use crate::error::{Error, Result};

/// Per-feature test statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStat {
    pub feature_id: String,
    /// t statistic (0 when both classes are flat, see `degenerate`)
    pub t: f64,
    /// degrees of freedom of the reference distribution
    pub df: f64,
    /// two-sided p-value
    pub p: f64,
    /// Set when both classes had zero variance; the statistic is then pinned
    /// to t = 0, p = 1 so the ranking stays total without inventing signal.
    pub degenerate: bool,
}

struct ClassSummary {
    n1: f64,
    n2: f64,
    mean1: Vec<f64>,
    mean2: Vec<f64>,
    var1: Vec<f64>,
    var2: Vec<f64>,
}

fn summarize(matrix: &ExpressionMatrix, positive: &[bool]) -> Result<ClassSummary> {
    if positive.len() != matrix.n_samples() {
        return Err(Error::invalid(format!(
            "{} labels for {} samples",
            positive.len(),
            matrix.n_samples()
        )));
    }
    let pos: Vec<usize> = (0..positive.len()).filter(|&s| positive[s]).collect();
    let neg: Vec<usize> = (0..positive.len()).filter(|&s| !positive[s]).collect();
    if pos.len() < 2 || neg.len() < 2 {
        return Err(Error::data(format!(
            "t statistics need at least two samples per class (got {} positive, {} negative)",
            pos.len(),
            neg.len()
        )));
    }
    let values = matrix.values();
    let m = matrix.n_features();
    let mut summary = ClassSummary {
        n1: pos.len() as f64,
        n2: neg.len() as f64,
        mean1: vec![0.0; m],
        mean2: vec![0.0; m],
        var1: vec![0.0; m],
        var2: vec![0.0; m],
    };
    for f in 0..m {
        let row = values.row(f);
        let stats = |idx: &[usize]| -> (f64, f64) {
            let n = idx.len() as f64;
            let mean = idx.iter().map(|&s| row[s]).sum::<f64>() / n;
            let ss = idx.iter().map(|&s| (row[s] - mean) * (row[s] - mean)).sum::<f64>();
            (mean, ss / (n - 1.0))
        };
        let (m1, v1) = stats(&pos);
        let (m2, v2) = stats(&neg);
        summary.mean1[f] = m1;
        summary.var1[f] = v1;
        summary.mean2[f] = m2;
        summary.var2[f] = v2;
    }
    Ok(summary)
}

fn two_sided_p(t: f64, df: f64) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    2.0 * dist.cdf(-t.abs())
}

/// Welch's unequal-variance t-test for every feature; the positive class is
/// group 1, so a positive `t` means higher expression in positives.
pub fn welch_t(matrix: &ExpressionMatrix, positive: &[bool]) -> Result<Vec<FeatureStat>> {
    let s = summarize(matrix, positive)?;
    let mut out = Vec::with_capacity(matrix.n_features());
    for f in 0..matrix.n_features() {
        let a = s.var1[f] / s.n1;
        let b = s.var2[f] / s.n2;
        let se2 = a + b;
        let stat = if se2 == 0.0 {
            FeatureStat {
                feature_id: matrix.feature_ids()[f].clone(),
                t: 0.0,
                df: s.n1 + s.n2 - 2.0,
                p: 1.0,
                degenerate: true,
            }
        } else {
            let t = (s.mean1[f] - s.mean2[f]) / se2.sqrt();
            let df = se2 * se2 / (a * a / (s.n1 - 1.0) + b * b / (s.n2 - 1.0));
            FeatureStat {
                feature_id: matrix.feature_ids()[f].clone(),
                t,
                df,
                p: two_sided_p(t, df),
                degenerate: false,
            }
        };
        out.push(stat);
    }
    Ok(out)
}

/// Moderated t statistic.
///
/// The pooled variance s² of every feature (d = n1 + n2 − 2 residual degrees
/// of freedom) is shrunk towards a prior variance s0²:
///
/// ```text
/// s~² = (d0·s0² + d·s²) / (d0 + d)
/// ```
///
/// The prior weight d0 and scale s0² are estimated by matching the mean and
/// variance of log s² across features to their theoretical values under a
/// scaled-F model, and the moderated t gets d0 + d degrees of freedom. With
/// `shrinkage` set to false the function degrades to the ordinary
/// equal-variance t-test (the d0 → 0 limit).
pub fn moderated_t(
    matrix: &ExpressionMatrix,
    positive: &[bool],
    shrinkage: bool,
) -> Result<Vec<FeatureStat>> {
    let s = summarize(matrix, positive)?;
    let d = s.n1 + s.n2 - 2.0;
    let scale = 1.0 / s.n1 + 1.0 / s.n2;
    let m = matrix.n_features();

    let pooled: Vec<f64> = (0..m)
        .map(|f| ((s.n1 - 1.0) * s.var1[f] + (s.n2 - 1.0) * s.var2[f]) / d)
        .collect();

    let (d0, s0_sq) = if shrinkage {
        estimate_prior(&pooled, d)?
    } else {
        (0.0, 0.0)
    };

    let mut out = Vec::with_capacity(m);
    for f in 0..m {
        let s_tilde_sq = if d0 == 0.0 {
            pooled[f]
        } else {
            (d0 * s0_sq + d * pooled[f]) / (d0 + d)
        };
        let df = d0 + d;
        let denom = (s_tilde_sq * scale).sqrt();
        let stat = if denom == 0.0 {
            FeatureStat {
                feature_id: matrix.feature_ids()[f].clone(),
                t: 0.0,
                df,
                p: 1.0,
                degenerate: true,
            }
        } else {
            let t = (s.mean1[f] - s.mean2[f]) / denom;
            FeatureStat {
                feature_id: matrix.feature_ids()[f].clone(),
                t,
                df,
                p: two_sided_p(t, df),
                degenerate: false,
            }
        };
        out.push(stat);
    }
    Ok(out)
}

/// Moment-matching estimate of the variance prior (d0, s0²).
///
/// With z = log s², the scaled-F model implies
///
/// ```text
/// E[z]   = log s0² + ψ(d/2) − log(d/2) − ψ(d0/2) + log(d0/2)
/// Var[z] = ψ'(d/2) + ψ'(d0/2)
/// ```
///
/// so d0 solves ψ'(d0/2) = Var[z] − ψ'(d/2) and s0² follows from the mean.
/// When the observed spread of z is no larger than ψ'(d/2) the features look
/// homogeneous; d0 is then capped at a large value, which shrinks every
/// variance essentially all the way to s0².
fn estimate_prior(pooled: &[f64], d: f64) -> Result<(f64, f64)> {
    const D0_CAP: f64 = 1e6;
    let z: Vec<f64> = pooled
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v.ln())
        .collect();
    if z.len() < 2 {
        return Err(Error::data(
            "variance moderation needs at least two features with positive pooled variance",
        ));
    }
    let n = z.len() as f64;
    let mean = z.iter().sum::<f64>() / n;
    let var = z.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);

    let excess = var - trigamma(d / 2.0);
    let d0 = if excess > 1e-12 {
        (2.0 * trigamma_inverse(excess)).min(D0_CAP)
    } else {
        D0_CAP
    };
    let s0_sq =
        (mean - digamma(d / 2.0) + (d / 2.0).ln() + digamma(d0 / 2.0) - (d0 / 2.0).ln()).exp();
    Ok((d0, s0_sq))
}

/// ψ'(x): recurrence below 6, then the asymptotic Bernoulli series.
fn trigamma(mut x: f64) -> f64 {
    debug_assert!(x > 0.0);
    // shift the argument up until the asymptotic series is accurate to
    // well below 1e-12, using psi'(x) = psi'(x + 1) + 1/x^2
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // 1/x + 1/2x^2 + sum of Bernoulli terms B2..B12 over odd powers
    let tail = 1.0 / 6.0
        + inv2
            * (-1.0 / 30.0
                + inv2
                    * (1.0 / 42.0
                        + inv2 * (-1.0 / 30.0 + inv2 * (5.0 / 66.0 - inv2 * 691.0 / 2730.0))));
    acc + inv * (1.0 + inv * (0.5 + inv * tail))
}

/// Inverse of ψ' on (0, ∞); ψ' is strictly decreasing so a bisection on a
/// generous bracket is exact enough and unconditionally stable.
fn trigamma_inverse(y: f64) -> f64 {
    debug_assert!(y > 0.0);
    let (mut lo, mut hi) = (1e-9, 1e9);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if trigamma(mid) > y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Ids of the k features with the smallest p-values.
///
/// Ordering is total and deterministic: ascending p, ties broken by
/// ascending feature id (ids are unique, so input order never has to
/// arbitrate). Because the full ordering is fixed first, the top-(k−1) list
/// is always a prefix of the top-k list.
pub fn select_top_k(stats: &[FeatureStat], k: usize) -> Result<Vec<String>> {
    if k == 0 {
        return Err(Error::invalid("cannot select zero features"));
    }
    if k > stats.len() {
        return Err(Error::invalid(format!(
            "cannot select {k} features out of {}",
            stats.len()
        )));
    }
    let mut order: Vec<usize> = (0..stats.len()).collect();
    order.sort_by(|&a, &b| {
        stats[a]
            .p
            .total_cmp(&stats[b].p)
            .then_with(|| stats[a].feature_id.cmp(&stats[b].feature_id))
    });
    Ok(order[..k]
        .iter()
        .map(|&i| stats[i].feature_id.clone())
        .collect())
}
