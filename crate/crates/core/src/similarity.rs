//! Sample-similarity matrices.
//!
//! Every builder takes a features × samples expression matrix and correlates
//! sample profiles (columns), producing a symmetric n × n matrix with unit
//! diagonal and entries in [−1, 1]. Only the upper triangle is computed and
//! it is mirrored verbatim, so symmetry holds bitwise, not just within a
//! tolerance.

use std::path::Path;

use ndarray::Array2;

use crate::dataset::{ExpressionMatrix, FileFormat};
use crate::error::{Error, Result};
use crate::tsv;

/// Which correlation fills the matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimilarityKind {
    Pearson,
    Spearman,
    Kendall,
}

impl std::str::FromStr for SimilarityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pearson" => Ok(SimilarityKind::Pearson),
            "spearman" => Ok(SimilarityKind::Spearman),
            "kendall" => Ok(SimilarityKind::Kendall),
            other => Err(Error::invalid(format!(
                "unknown similarity measure '{other}' (expected pearson, spearman or kendall)"
            ))),
        }
    }
}

impl std::fmt::Display for SimilarityKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            SimilarityKind::Pearson => "pearson",
            SimilarityKind::Spearman => "spearman",
            SimilarityKind::Kendall => "kendall",
        };
        f.write_str(name)
    }
}

/// Symmetric sample × sample correlation matrix.
#[derive(Debug, Clone)]
pub struct SimilarityMatrix {
    sample_ids: Vec<String>,
    values: Array2<f64>,
}

impl SimilarityMatrix {
    /// Validates every structural invariant: square shape matching the ids,
    /// bitwise symmetry, unit diagonal, finite entries within [−1, 1].
    pub fn new(sample_ids: Vec<String>, values: Array2<f64>) -> Result<Self> {
        let n = sample_ids.len();
        if n < 2 {
            return Err(Error::invalid(
                "similarity matrix needs at least two samples",
            ));
        }
        if values.nrows() != n || values.ncols() != n {
            return Err(Error::data(format!(
                "similarity matrix is {}x{} but {} sample ids were given",
                values.nrows(),
                values.ncols(),
                n
            )));
        }
        for i in 0..n {
            if values[(i, i)] != 1.0 {
                return Err(Error::data(format!(
                    "similarity diagonal for sample '{}' is {}, expected exactly 1",
                    sample_ids[i],
                    values[(i, i)]
                )));
            }
            for j in 0..n {
                let v = values[(i, j)];
                if !v.is_finite() || !(-1.0..=1.0).contains(&v) {
                    return Err(Error::data(format!(
                        "similarity between '{}' and '{}' is {v}, outside [-1, 1]",
                        sample_ids[i], sample_ids[j]
                    )));
                }
                if v.to_bits() != values[(j, i)].to_bits() {
                    return Err(Error::data(format!(
                        "similarity matrix is not symmetric at ('{}', '{}')",
                        sample_ids[i], sample_ids[j]
                    )));
                }
            }
        }
        Ok(SimilarityMatrix { sample_ids, values })
    }

    pub fn n(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn save(&self, path: &Path, format: FileFormat) -> Result<()> {
        tsv::write_matrix(
            path,
            format,
            "sample_id",
            &self.sample_ids,
            &self.sample_ids,
            &self.values,
        )
    }

    pub fn load(path: &Path, format: FileFormat) -> Result<Self> {
        let (row_ids, col_ids, values) = tsv::read_matrix(path, format)?;
        if row_ids != col_ids {
            return Err(Error::data(format!(
                "{}: row and column sample ids differ",
                path.display()
            )));
        }
        SimilarityMatrix::new(row_ids, values)
    }
}

/// Dispatches to the builder selected by `kind`.
pub fn similarity_matrix(
    matrix: &ExpressionMatrix,
    kind: SimilarityKind,
) -> Result<SimilarityMatrix> {
    match kind {
        SimilarityKind::Pearson => pearson_matrix(matrix),
        SimilarityKind::Spearman => spearman_matrix(matrix),
        SimilarityKind::Kendall => kendall_matrix(matrix),
    }
}

/// Pearson correlation between all pairs of sample profiles.
pub fn pearson_matrix(matrix: &ExpressionMatrix) -> Result<SimilarityMatrix> {
    let columns = profile_columns(matrix)?;
    pearson_of_columns(&columns, matrix.sample_ids())
}

/// Spearman correlation: Pearson on within-profile average ranks, which
/// handles ties the standard way.
pub fn spearman_matrix(matrix: &ExpressionMatrix) -> Result<SimilarityMatrix> {
    let columns = profile_columns(matrix)?;
    let ranked: Vec<Vec<f64>> = columns.iter().map(|c| average_ranks(c)).collect();
    pearson_of_columns(&ranked, matrix.sample_ids())
}

/// Kendall rank correlation (tau-b, i.e. with tie corrections in the
/// denominator). Pairs are counted in O(m log m) per sample pair by sorting
/// on one profile and counting inversions of the other with a merge sort.
pub fn kendall_matrix(matrix: &ExpressionMatrix) -> Result<SimilarityMatrix> {
    let columns = profile_columns(matrix)?;
    let ids = matrix.sample_ids();
    for (s, col) in columns.iter().enumerate() {
        if col.iter().all(|&v| v == col[0]) {
            return Err(Error::data(format!(
                "sample '{}' has a constant profile; Kendall correlation is undefined",
                ids[s]
            )));
        }
    }
    let n = columns.len();
    let mut w = Array2::zeros((n, n));
    for i in 0..n {
        w[(i, i)] = 1.0;
        for j in (i + 1)..n {
            let tau = kendall_tau_b(&columns[i], &columns[j]).clamp(-1.0, 1.0);
            w[(i, j)] = tau;
            w[(j, i)] = tau;
        }
    }
    SimilarityMatrix::new(ids.to_vec(), w)
}

fn profile_columns(matrix: &ExpressionMatrix) -> Result<Vec<Vec<f64>>> {
    if matrix.n_features() < 2 {
        return Err(Error::invalid(
            "profile correlation needs at least two features",
        ));
    }
    if matrix.n_samples() < 2 {
        return Err(Error::invalid(
            "similarity matrix needs at least two samples",
        ));
    }
    let values = matrix.values();
    Ok((0..matrix.n_samples())
        .map(|s| values.column(s).to_vec())
        .collect())
}

fn pearson_of_columns(columns: &[Vec<f64>], ids: &[String]) -> Result<SimilarityMatrix> {
    let m = columns[0].len() as f64;
    let mut centered = Vec::with_capacity(columns.len());
    let mut norms = Vec::with_capacity(columns.len());
    for (s, col) in columns.iter().enumerate() {
        let mean = col.iter().sum::<f64>() / m;
        let c: Vec<f64> = col.iter().map(|v| v - mean).collect();
        let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::data(format!(
                "sample '{}' has zero profile variance; correlation is undefined",
                ids[s]
            )));
        }
        centered.push(c);
        norms.push(norm);
    }
    let n = columns.len();
    let mut w = Array2::zeros((n, n));
    for i in 0..n {
        w[(i, i)] = 1.0;
        for j in (i + 1)..n {
            let dot: f64 = centered[i]
                .iter()
                .zip(&centered[j])
                .map(|(a, b)| a * b)
                .sum();
            let r = (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            w[(i, j)] = r;
            w[(j, i)] = r;
        }
    }
    SimilarityMatrix::new(ids.to_vec(), w)
}

/// 1-based ranks with ties replaced by the mean rank of the tied block.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // ranks start+1 ..= end, averaged
        let avg = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = avg;
        }
        start = end;
    }
    ranks
}

/// Kendall tau-b for one pair of equal-length vectors.
fn kendall_tau_b(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));
    let xs: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let mut ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();

    let pairs = |t: u64| t * (t - 1) / 2;
    let n0 = pairs(n as u64);

    // pairs tied in x, and tied in both x and y
    let mut x_ties = 0u64;
    let mut joint_ties = 0u64;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && xs[j] == xs[i] {
            j += 1;
        }
        x_ties += pairs((j - i) as u64);
        let mut a = i;
        while a < j {
            let mut b = a + 1;
            while b < j && ys[b] == ys[a] {
                b += 1;
            }
            joint_ties += pairs((b - a) as u64);
            a = b;
        }
        i = j;
    }

    // discordant pairs: inversions of y once sorted by (x, y)
    let mut buf = vec![0.0; n];
    let discordant = count_inversions(&mut ys, &mut buf);

    // pairs tied in y
    let mut sorted_y: Vec<f64> = y.to_vec();
    sorted_y.sort_by(f64::total_cmp);
    let mut y_ties = 0u64;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && sorted_y[j] == sorted_y[i] {
            j += 1;
        }
        y_ties += pairs((j - i) as u64);
        i = j;
    }

    let con_minus_dis =
        n0 as i128 - x_ties as i128 - y_ties as i128 + joint_ties as i128 - 2 * discordant as i128;
    // single square root of the product: on tie-free data the radicand is a
    // perfect square, so the denominator (and tau at +/-1) comes out exact
    let denom = ((n0 - x_ties) as f64 * (n0 - y_ties) as f64).sqrt();
    con_minus_dis as f64 / denom
}

/// Counts strict inversions (i < j with a[i] > a[j]) while merge-sorting `a`.
fn count_inversions(a: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = a.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = {
        let (left, right) = a.split_at_mut(mid);
        count_inversions(left, buf) + count_inversions(right, buf)
    };
    let (mut i, mut j) = (0, mid);
    for slot in buf[..n].iter_mut() {
        if i < mid && (j >= n || a[i] <= a[j]) {
            *slot = a[i];
            i += 1;
        } else {
            // a[j] jumps over the remaining left elements, all strictly larger
            count += (mid - i) as u64;
            *slot = a[j];
            j += 1;
        }
    }
    a.copy_from_slice(&buf[..n]);
    count
}
