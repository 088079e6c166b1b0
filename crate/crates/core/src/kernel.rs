//! Graph kernels over sample-similarity matrices.
//!
//! The workhorse is the p-step random walk kernel
//!
//! ```text
//! K = ((a − 1)·I + D^(−1/2)·W·D^(−1/2))^p        a > 1, p ≥ 0
//! ```
//!
//! where `D` is the diagonal degree matrix of the non-negative weight matrix
//! `W` (negative correlations are clipped to zero by default, or mapped
//! affinely via (w+1)/2). With `a ≥ 2` the base matrix is positive
//! semidefinite, so every power is a valid kernel. The matrix power is taken
//! by plain iterated multiplication — p stays small in practice and the
//! result is exactly reproducible — and explicitly symmetrized at the end to
//! stop round-off drift between the two triangles.
//!
//! The remaining kernels treat the rows of `W` as sample vectors and apply a
//! pointwise function of their dot product or Euclidean distance.

use std::collections::BTreeSet;
use std::path::Path;

use ndarray::Array2;

use crate::dataset::FileFormat;
use crate::error::{Error, Result};
use crate::similarity::SimilarityMatrix;
use crate::tsv;

/// How negative similarity entries are made non-negative before the random
/// walk normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NegativePolicy {
    /// `max(w, 0)`: anticorrelated pairs simply lose their edge (default).
    Clip,
    /// `(w + 1) / 2`: affine remap of [−1, 1] onto [0, 1], anticorrelation
    /// becomes a weak edge instead of none.
    Shift,
}

impl Default for NegativePolicy {
    fn default() -> Self {
        NegativePolicy::Clip
    }
}

impl std::str::FromStr for NegativePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clip" => Ok(NegativePolicy::Clip),
            "shift" => Ok(NegativePolicy::Shift),
            other => Err(Error::invalid(format!(
                "unknown negative-weight policy '{other}' (expected 'clip' or 'shift')"
            ))),
        }
    }
}

/// A kernel choice with its parameters. Parameters live inside the variant,
/// so a spec can never be missing the values its kernel needs.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    /// K = W, useful as a "no kernel" baseline.
    Identity,
    /// k(x, x') = x·x' + c
    Linear { c: f64 },
    /// k(x, x') = (alpha·x·x' + c)^degree
    Polynomial { alpha: f64, c: f64, degree: u32 },
    /// k(x, x') = exp(−‖x − x'‖² / 2σ²)
    Gaussian { sigma: f64 },
    /// k(x, x') = exp(−‖x − x'‖ / σ)
    Laplacian { sigma: f64 },
    /// k(x, x') = 1 / (1 + ‖x − x'‖² / σ²)
    Cauchy { sigma: f64 },
    /// k(x, x') = 1 / sqrt(‖x − x'‖² + c²)
    InverseMultiquadric { c: f64 },
    /// The p-step random walk kernel described in the module docs.
    RandomWalk {
        p: u32,
        a: f64,
        negatives: NegativePolicy,
    },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Identity => Ok(()),
            KernelSpec::Linear { c } => {
                finite(c, "c")?;
                Ok(())
            }
            KernelSpec::Polynomial { alpha, c, degree } => {
                finite(alpha, "alpha")?;
                finite(c, "c")?;
                if degree == 0 {
                    return Err(Error::invalid("polynomial kernel needs degree >= 1"));
                }
                Ok(())
            }
            KernelSpec::Gaussian { sigma }
            | KernelSpec::Laplacian { sigma }
            | KernelSpec::Cauchy { sigma } => {
                finite(sigma, "sigma")?;
                if sigma <= 0.0 {
                    return Err(Error::invalid("sigma must be positive"));
                }
                Ok(())
            }
            KernelSpec::InverseMultiquadric { c } => {
                finite(c, "c")?;
                if c == 0.0 {
                    return Err(Error::invalid(
                        "inverse multiquadric kernel needs a non-zero c",
                    ));
                }
                Ok(())
            }
            KernelSpec::RandomWalk { a, .. } => {
                finite(a, "a")?;
                if a <= 1.0 {
                    return Err(Error::invalid(format!(
                        "random walk kernel needs a > 1 (got {a}); a >= 2 guarantees positive semidefiniteness"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Short human-readable tag recorded as kernel provenance.
    pub fn label(&self) -> String {
        match self {
            KernelSpec::Identity => "identity".into(),
            KernelSpec::Linear { c } => format!("linear(c={c})"),
            KernelSpec::Polynomial { alpha, c, degree } => {
                format!("polynomial(alpha={alpha}, c={c}, degree={degree})")
            }
            KernelSpec::Gaussian { sigma } => format!("gaussian(sigma={sigma})"),
            KernelSpec::Laplacian { sigma } => format!("laplacian(sigma={sigma})"),
            KernelSpec::Cauchy { sigma } => format!("cauchy(sigma={sigma})"),
            KernelSpec::InverseMultiquadric { c } => format!("invmq(c={c})"),
            KernelSpec::RandomWalk { p, a, negatives } => {
                let neg = match negatives {
                    NegativePolicy::Clip => "clip",
                    NegativePolicy::Shift => "shift",
                };
                format!("rwk(p={p}, a={a}, negatives={neg})")
            }
        }
    }

    /// Applies the kernel to a similarity matrix.
    pub fn apply(&self, w: &SimilarityMatrix) -> Result<KernelMatrix> {
        self.validate()?;
        let values = match *self {
            KernelSpec::Identity => w.values().clone(),
            KernelSpec::RandomWalk { p, a, negatives } => {
                random_walk_kernel(w.values(), p, a, negatives)?
            }
            _ => pointwise_kernel(w.values(), self)?,
        };
        KernelMatrix::new(w.sample_ids().to_vec(), values, self.label())
    }
}

fn finite(v: f64, name: &str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("kernel parameter {name} must be finite")))
    }
}

/// Symmetric kernel matrix over samples, tagged with how it was produced.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    sample_ids: Vec<String>,
    values: Array2<f64>,
    provenance: String,
}

impl KernelMatrix {
    /// Validates shape, finiteness and symmetry (within 1e−12 relative to the
    /// largest entry magnitude — powers of large matrices are still accepted).
    pub fn new(sample_ids: Vec<String>, values: Array2<f64>, provenance: String) -> Result<Self> {
        let n = sample_ids.len();
        if n < 2 {
            return Err(Error::invalid("kernel matrix needs at least two samples"));
        }
        if values.nrows() != n || values.ncols() != n {
            return Err(Error::data(format!(
                "kernel matrix is {}x{} but {} sample ids were given",
                values.nrows(),
                values.ncols(),
                n
            )));
        }
        let mut max_abs = 0.0f64;
        for v in values.iter() {
            if !v.is_finite() {
                return Err(Error::data("kernel matrix contains non-finite entries"));
            }
            max_abs = max_abs.max(v.abs());
        }
        let tol = 1e-12 * max_abs.max(1.0);
        for i in 0..n {
            for j in (i + 1)..n {
                if (values[(i, j)] - values[(j, i)]).abs() > tol {
                    return Err(Error::data(format!(
                        "kernel matrix is not symmetric at ('{}', '{}')",
                        sample_ids[i], sample_ids[j]
                    )));
                }
            }
        }
        Ok(KernelMatrix {
            sample_ids,
            values,
            provenance,
        })
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

    pub fn provenance(&self) -> &str {
        &self.provenance
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
        KernelMatrix::new(row_ids, values, format!("file:{}", path.display()))
    }
}

/// The normalized transition base S = D^(−1/2)·W⁺·D^(−1/2).
///
/// Rows whose degree is zero after the non-negativity transform describe
/// isolated nodes; their rows and columns of S are left at zero and a warning
/// is logged, because such a node can never receive score mass from the
/// graph.
fn transition_base(w: &Array2<f64>, negatives: NegativePolicy) -> Result<Array2<f64>> {
    let n = check_square_symmetric(w)?;
    let wp = match negatives {
        NegativePolicy::Clip => w.mapv(|v| v.max(0.0)),
        NegativePolicy::Shift => {
            if w.iter().any(|&v| v < -1.0) {
                return Err(Error::invalid(
                    "the (w+1)/2 shift assumes weights in [-1, 1]",
                ));
            }
            w.mapv(|v| (v + 1.0) / 2.0)
        }
    };
    // sequential sums keep the result independent of ndarray's accumulation
    // strategy, so equal inputs give bit-equal kernels everywhere
    let degrees: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| wp[(i, j)]).sum::<f64>())
        .collect();
    let isolated: Vec<usize> = (0..n).filter(|&i| degrees[i] == 0.0).collect();
    if !isolated.is_empty() {
        log::warn!(
            "{} isolated node(s) (zero degree) in the similarity graph; their kernel rows stay zero",
            isolated.len()
        );
    }
    let inv_sqrt: Vec<f64> = degrees
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    let mut s = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            // fill one triangle and mirror so the base is symmetric by
            // construction, not merely up to rounding
            let v = wp[(i, j)] * inv_sqrt[i] * inv_sqrt[j];
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    Ok(s)
}

/// p-step random walk kernel of a symmetric weight matrix.
pub fn random_walk_kernel(
    w: &Array2<f64>,
    p: u32,
    a: f64,
    negatives: NegativePolicy,
) -> Result<Array2<f64>> {
    KernelSpec::RandomWalk { p, a, negatives }.validate()?;
    let mut base = transition_base(w, negatives)?;
    let n = base.nrows();
    for i in 0..n {
        base[(i, i)] += a - 1.0;
    }
    Ok(matrix_power(&base, p))
}

fn matrix_power(base: &Array2<f64>, p: u32) -> Array2<f64> {
    let n = base.nrows();
    if p == 0 {
        return Array2::eye(n);
    }
    let mut acc = base.clone();
    for _ in 1..p {
        acc = acc.dot(base);
    }
    // powers of a symmetric matrix are symmetric; put the round-off drift
    // between the triangles back on the axis
    for i in 0..n {
        for j in (i + 1)..n {
            let mean = 0.5 * (acc[(i, j)] + acc[(j, i)]);
            acc[(i, j)] = mean;
            acc[(j, i)] = mean;
        }
    }
    acc
}

/// Kernels that treat row i of `w` as the vector describing sample i.
pub fn pointwise_kernel(w: &Array2<f64>, spec: &KernelSpec) -> Result<Array2<f64>> {
    spec.validate()?;
    let n = check_square_symmetric(w)?;
    let dot = |i: usize, j: usize| -> f64 {
        (0..n).map(|k| w[(i, k)] * w[(j, k)]).sum()
    };
    let dist2 = |i: usize, j: usize| -> f64 {
        (0..n)
            .map(|k| {
                let d = w[(i, k)] - w[(j, k)];
                d * d
            })
            .sum()
    };
    let f: Box<dyn Fn(usize, usize) -> f64> = match *spec {
        KernelSpec::Linear { c } => Box::new(move |i, j| dot(i, j) + c),
        KernelSpec::Polynomial { alpha, c, degree } => {
            Box::new(move |i, j| (alpha * dot(i, j) + c).powi(degree as i32))
        }
        KernelSpec::Gaussian { sigma } => {
            Box::new(move |i, j| (-dist2(i, j) / (2.0 * sigma * sigma)).exp())
        }
        KernelSpec::Laplacian { sigma } => {
            Box::new(move |i, j| (-dist2(i, j).sqrt() / sigma).exp())
        }
        KernelSpec::Cauchy { sigma } => {
            Box::new(move |i, j| 1.0 / (1.0 + dist2(i, j) / (sigma * sigma)))
        }
        KernelSpec::InverseMultiquadric { c } => {
            Box::new(move |i, j| 1.0 / (dist2(i, j) + c * c).sqrt())
        }
        KernelSpec::Identity | KernelSpec::RandomWalk { .. } => {
            return Err(Error::invalid(format!(
                "{} is not a pointwise kernel",
                spec.label()
            )))
        }
    };
    let mut k = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v = f(i, j);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// Convergence diagnostic for the random walk kernel.
///
/// The kernels for the two largest requested step counts are averaged into a
/// reference matrix (by then the walk should have mixed), and for every
/// requested p the Pearson correlation between the off-diagonal entries of
/// K(p) and the reference is returned, sorted by p. Correlations near 1 for
/// moderate p confirm that more steps would not change the ranking anymore.
pub fn kernel_convergence(
    w: &Array2<f64>,
    p_list: &[u32],
    a: f64,
    negatives: NegativePolicy,
) -> Result<Vec<(u32, f64)>> {
    let unique: BTreeSet<u32> = p_list.iter().copied().collect();
    if unique.len() < 2 {
        return Err(Error::invalid(
            "convergence diagnostic needs at least two distinct step counts",
        ));
    }
    if w.nrows() < 3 {
        return Err(Error::invalid(
            "convergence diagnostic needs at least three samples",
        ));
    }
    KernelSpec::RandomWalk {
        p: 0,
        a,
        negatives,
    }
    .validate()?;

    let mut base = transition_base(w, negatives)?;
    let n = base.nrows();
    for i in 0..n {
        base[(i, i)] += a - 1.0;
    }

    let max_p = *unique.iter().next_back().expect("non-empty");
    let mut snapshots: Vec<(u32, Array2<f64>)> = Vec::with_capacity(unique.len());
    let mut acc = Array2::eye(n);
    if unique.contains(&0) {
        snapshots.push((0, acc.clone()));
    }
    for e in 1..=max_p {
        acc = acc.dot(&base);
        if unique.contains(&e) {
            snapshots.push((e, acc.clone()));
        }
    }

    let mut iter = snapshots.iter().rev();
    let largest = &iter.next().expect("two snapshots").1;
    let second = &iter.next().expect("two snapshots").1;
    let reference: Array2<f64> = (largest + second) / 2.0;
    let ref_flat = flat_off_diagonal(&reference);

    snapshots
        .iter()
        .map(|(p, k)| Ok((*p, pearson_vec(&flat_off_diagonal(k), &ref_flat)?)))
        .collect()
}

fn flat_off_diagonal(k: &Array2<f64>) -> Vec<f64> {
    let n = k.nrows();
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            out.push(k[(i, j)]);
        }
    }
    out
}

fn pearson_vec(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for (x, y) in a.iter().zip(b) {
        num += (x - ma) * (y - mb);
        da += (x - ma) * (x - ma);
        db += (y - mb) * (y - mb);
    }
    if da == 0.0 || db == 0.0 {
        return Err(Error::invalid(
            "correlation undefined: constant off-diagonal entries",
        ));
    }
    Ok((num / (da.sqrt() * db.sqrt())).clamp(-1.0, 1.0))
}

fn check_square_symmetric(w: &Array2<f64>) -> Result<usize> {
    let n = w.nrows();
    if n != w.ncols() {
        return Err(Error::invalid(format!(
            "weight matrix must be square, got {}x{}",
            n,
            w.ncols()
        )));
    }
    if n < 2 {
        return Err(Error::invalid("weight matrix needs at least two nodes"));
    }
    let mut max_abs = 0.0f64;
    for v in w.iter() {
        if !v.is_finite() {
            return Err(Error::invalid("weight matrix contains non-finite entries"));
        }
        max_abs = max_abs.max(v.abs());
    }
    let tol = 1e-9 * max_abs.max(1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            if (w[(i, j)] - w[(j, i)]).abs() > tol {
                return Err(Error::invalid(format!(
                    "weight matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(n)
}
