//! Kernelized score functions.
//!
//! Every score ranks node i by how strongly row i of a kernel matrix
//! connects it to the positive set V_C. With k_ij the kernel weight between
//! nodes i and j:
//!
//! * `average` — mean of k_ij over j ∈ V_C
//! * `nearest` — max of k_ij over j ∈ V_C
//! * `knn`     — sum of the k largest k_ij over j ∈ V_C
//! * `total`   — Σ_{V_C} k_ij / (Σ_{V_C} k_ij + Σ_{V∖V_C} k_ij)
//! * `diff`    — Σ_{V_C} k_ij − Σ_{V∖V_C} k_ij
//! * `dnorm`   — diff divided by the total weight reaching i
//!
//! The sums run over the literal index sets, so k_ii participates whenever i
//! belongs to the corresponding set. The evaluation harnesses zero the
//! kernel diagonal first, which silences that term; combined with a positive
//! set restricted to the training side this is what makes a node's score
//! independent of its own label.

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};

/// Score function choice; `Knn` carries its neighbourhood size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreSpec {
    Average,
    Nearest,
    Knn { k: usize },
    Total,
    Diff,
    DiffNorm,
}

impl ScoreSpec {
    pub fn validate(&self) -> Result<()> {
        if let ScoreSpec::Knn { k: 0 } = self {
            return Err(Error::invalid("knn score needs k >= 1"));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match self {
            ScoreSpec::Average => "average".into(),
            ScoreSpec::Nearest => "nearest".into(),
            ScoreSpec::Knn { k } => format!("knn(k={k})"),
            ScoreSpec::Total => "total".into(),
            ScoreSpec::Diff => "diff".into(),
            ScoreSpec::DiffNorm => "dnorm".into(),
        }
    }

    /// Parses the CLI spelling; `knn` takes its size from `knn_k`.
    pub fn parse(name: &str, knn_k: usize) -> Result<Self> {
        let spec = match name {
            "av" | "average" => ScoreSpec::Average,
            "nn" | "nearest" => ScoreSpec::Nearest,
            "knn" => ScoreSpec::Knn { k: knn_k },
            "tot" | "total" => ScoreSpec::Total,
            "diff" => ScoreSpec::Diff,
            "dnorm" => ScoreSpec::DiffNorm,
            other => {
                return Err(Error::invalid(format!(
                    "unknown score function '{other}' (expected av, nn, knn, tot, diff or dnorm)"
                )))
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Builds the boolean membership mask for a positive index set.
pub fn positive_mask(n: usize, positives: &[usize]) -> Result<Vec<bool>> {
    if positives.is_empty() {
        return Err(Error::invalid("positive set is empty"));
    }
    let mut mask = vec![false; n];
    for &j in positives {
        if j >= n {
            return Err(Error::invalid(format!(
                "positive index {j} out of range for {n} nodes"
            )));
        }
        if mask[j] {
            return Err(Error::invalid(format!("positive index {j} listed twice")));
        }
        mask[j] = true;
    }
    Ok(mask)
}

/// Scores one kernel row against a positive-membership mask.
///
/// This is the inner worker: it assumes the mask has at least one positive
/// and matches the row length. `total` and `dnorm` return 0 when the row
/// carries no weight at all (zero denominator).
pub fn score_row(row: ArrayView1<'_, f64>, mask: &[bool], spec: &ScoreSpec) -> f64 {
    debug_assert_eq!(row.len(), mask.len());
    debug_assert!(mask.iter().any(|&m| m));
    match *spec {
        ScoreSpec::Average => {
            let mut sum = 0.0;
            let mut count = 0usize;
            for (j, &m) in mask.iter().enumerate() {
                if m {
                    sum += row[j];
                    count += 1;
                }
            }
            sum / count as f64
        }
        ScoreSpec::Nearest => {
            let mut best = f64::NEG_INFINITY;
            for (j, &m) in mask.iter().enumerate() {
                if m && row[j] > best {
                    best = row[j];
                }
            }
            best
        }
        ScoreSpec::Knn { k } => {
            let mut weights: Vec<(f64, usize)> = mask
                .iter()
                .enumerate()
                .filter(|&(_, &m)| m)
                .map(|(j, _)| (row[j], j))
                .collect();
            // descending weight; equal weights in ascending node order
            weights.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let take = k.min(weights.len());
            weights[..take].iter().map(|(w, _)| w).sum()
        }
        ScoreSpec::Total | ScoreSpec::Diff | ScoreSpec::DiffNorm => {
            let mut inside = 0.0;
            let mut outside = 0.0;
            for (j, &m) in mask.iter().enumerate() {
                if m {
                    inside += row[j];
                } else {
                    outside += row[j];
                }
            }
            match *spec {
                ScoreSpec::Total => {
                    let denom = inside + outside;
                    if denom == 0.0 {
                        0.0
                    } else {
                        inside / denom
                    }
                }
                ScoreSpec::Diff => inside - outside,
                _ => {
                    let denom = inside + outside;
                    if denom == 0.0 {
                        0.0
                    } else {
                        (inside - outside) / denom
                    }
                }
            }
        }
    }
}

/// Score of node i in the kernel matrix `k` against the positive set.
pub fn score_node(
    k: &Array2<f64>,
    i: usize,
    positives: &[usize],
    spec: &ScoreSpec,
) -> Result<f64> {
    spec.validate()?;
    let n = k.nrows();
    if i >= n {
        return Err(Error::invalid(format!(
            "node index {i} out of range for {n} nodes"
        )));
    }
    let mask = positive_mask(n, positives)?;
    Ok(score_row(k.row(i), &mask, spec))
}

/// Scores the listed target nodes; the result is aligned to `targets`.
pub fn score_all(
    k: &Array2<f64>,
    positives: &[usize],
    targets: &[usize],
    spec: &ScoreSpec,
) -> Result<Vec<f64>> {
    spec.validate()?;
    let n = k.nrows();
    let mask = positive_mask(n, positives)?;
    targets
        .iter()
        .map(|&t| {
            if t >= n {
                return Err(Error::invalid(format!(
                    "target index {t} out of range for {n} nodes"
                )));
            }
            Ok(score_row(k.row(t), &mask, spec))
        })
        .collect()
}

/// Index permutation ordering samples by descending score; equal scores fall
/// back to ascending sample id so the ranking is reproducible.
pub fn rank_samples(sample_ids: &[String], scores: &[f64]) -> Result<Vec<usize>> {
    if sample_ids.len() != scores.len() {
        return Err(Error::invalid(format!(
            "{} ids for {} scores",
            sample_ids.len(),
            scores.len()
        )));
    }
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::invalid(format!("non-finite score {bad}")));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then_with(|| sample_ids[a].cmp(&sample_ids[b]))
    });
    Ok(order)
}
