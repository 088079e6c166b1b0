//! Expression matrices, phenotype labels and synthetic cohorts.
//!
//! The matrix convention throughout the crate is features × samples: one row
//! per probe (or gene), one column per sample. Loaders are deliberately
//! strict — a non-numeric or missing cell aborts with its row/column
//! location instead of being imputed, because a silently patched value would
//! change every similarity computed downstream.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use ndarray::{Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::error::{Error, Result};
use crate::tsv;

/// On-disk layout of delimited matrix files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Tsv,
    Csv,
}

impl FileFormat {
    pub fn delimiter(self) -> u8 {
        match self {
            FileFormat::Tsv => b'\t',
            FileFormat::Csv => b',',
        }
    }
}

impl std::str::FromStr for FileFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(FileFormat::Tsv),
            "csv" => Ok(FileFormat::Csv),
            other => Err(Error::invalid(format!(
                "unknown matrix format '{other}' (expected 'tsv' or 'csv')"
            ))),
        }
    }
}

/// A features × samples matrix of finite expression values with unique,
/// non-empty row and column identifiers.
#[derive(Debug, Clone)]
pub struct ExpressionMatrix {
    feature_ids: Vec<String>,
    sample_ids: Vec<String>,
    values: Array2<f64>,
}

impl ExpressionMatrix {
    /// Builds a matrix, checking every structural invariant: consistent
    /// dimensions, at least one feature and one sample, unique non-empty
    /// identifiers and finite values.
    pub fn new(
        feature_ids: Vec<String>,
        sample_ids: Vec<String>,
        values: Array2<f64>,
    ) -> Result<Self> {
        if feature_ids.is_empty() {
            return Err(Error::data("expression matrix has no features"));
        }
        if sample_ids.is_empty() {
            return Err(Error::data("expression matrix has no samples"));
        }
        if values.nrows() != feature_ids.len() || values.ncols() != sample_ids.len() {
            return Err(Error::data(format!(
                "matrix shape {}x{} does not match {} feature ids and {} sample ids",
                values.nrows(),
                values.ncols(),
                feature_ids.len(),
                sample_ids.len()
            )));
        }
        check_unique_ids(&feature_ids, "feature")?;
        check_unique_ids(&sample_ids, "sample")?;
        for ((r, c), v) in values.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::data(format!(
                    "non-finite value {v} for feature '{}', sample '{}' (row {}, column {})",
                    feature_ids[r],
                    sample_ids[c],
                    r + 1,
                    c + 1
                )));
            }
        }
        Ok(ExpressionMatrix {
            feature_ids,
            sample_ids,
            values,
        })
    }

    pub fn n_features(&self) -> usize {
        self.feature_ids.len()
    }

    pub fn n_samples(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn feature_ids(&self) -> &[String] {
        &self.feature_ids
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    /// Per-feature means over samples.
    pub fn feature_means(&self) -> Vec<f64> {
        self.values
            .axis_iter(Axis(0))
            .map(|row| row.sum() / row.len() as f64)
            .collect()
    }

    /// Per-feature sample standard deviations (n − 1 denominator).
    pub fn feature_sds(&self) -> Result<Vec<f64>> {
        let n = self.n_samples();
        if n < 2 {
            return Err(Error::invalid(
                "standard deviation needs at least two samples",
            ));
        }
        Ok(self
            .values
            .axis_iter(Axis(0))
            .map(|row| {
                let mean = row.sum() / n as f64;
                let ss: f64 = row.iter().map(|v| (v - mean) * (v - mean)).sum();
                (ss / (n - 1) as f64).sqrt()
            })
            .collect())
    }

    /// Keeps the features whose mean expression is at least `min_mean`.
    pub fn filter_by_mean(&self, min_mean: f64) -> Result<ExpressionMatrix> {
        let means = self.feature_means();
        let keep: Vec<usize> = (0..self.n_features())
            .filter(|&f| means[f] >= min_mean)
            .collect();
        self.retain_features(&keep).map_err(|_| {
            Error::data(format!(
                "no feature has mean expression >= {min_mean}; nothing left to analyse"
            ))
        })
    }

    /// Keeps the features whose standard deviation (n − 1 denominator) is at
    /// least `min_sd`.
    pub fn filter_by_sd(&self, min_sd: f64) -> Result<ExpressionMatrix> {
        let sds = self.feature_sds()?;
        let keep: Vec<usize> = (0..self.n_features())
            .filter(|&f| sds[f] >= min_sd)
            .collect();
        self.retain_features(&keep).map_err(|_| {
            Error::data(format!(
                "no feature has standard deviation >= {min_sd}; nothing left to analyse"
            ))
        })
    }

    /// Collapses probe-level rows to gene level.
    ///
    /// For every gene with several mapped probes the probe with the highest
    /// mean expression wins; equal means are broken in favour of the probe
    /// that appears first in the input. Probes missing from the map are
    /// dropped; the second element of the returned pair counts them. Output
    /// rows keep the order in which genes are first encountered.
    pub fn collapse_probes(&self, map: &ProbeGeneMap) -> Result<(ExpressionMatrix, usize)> {
        let means = self.feature_means();
        // gene -> index of the best probe seen so far
        let mut best: HashMap<&str, usize> = HashMap::new();
        let mut gene_order: Vec<&str> = Vec::new();
        let mut unmapped = 0usize;
        for (idx, probe) in self.feature_ids.iter().enumerate() {
            let Some(gene) = map.gene_for(probe) else {
                unmapped += 1;
                continue;
            };
            match best.get(gene) {
                None => {
                    best.insert(gene, idx);
                    gene_order.push(gene);
                }
                // strict > keeps the earlier probe on ties
                Some(&cur) if means[idx] > means[cur] => {
                    best.insert(gene, idx);
                }
                Some(_) => {}
            }
        }
        if gene_order.is_empty() {
            return Err(Error::data(
                "probe collapse dropped every feature: no probe id is present in the map",
            ));
        }
        let mut values = Array2::zeros((gene_order.len(), self.n_samples()));
        let mut ids = Vec::with_capacity(gene_order.len());
        for (out, gene) in gene_order.iter().enumerate() {
            let probe_idx = best[gene];
            values.row_mut(out).assign(&self.values.row(probe_idx));
            ids.push((*gene).to_string());
        }
        let collapsed = ExpressionMatrix::new(ids, self.sample_ids.clone(), values)?;
        Ok((collapsed, unmapped))
    }

    /// Keeps the features whose id appears in `genes` (matrix order is
    /// preserved, list order is irrelevant).
    pub fn filter_by_gene_list(&self, genes: &[String]) -> Result<ExpressionMatrix> {
        let wanted: HashSet<&str> = genes.iter().map(String::as_str).collect();
        let keep: Vec<usize> = (0..self.n_features())
            .filter(|&f| wanted.contains(self.feature_ids[f].as_str()))
            .collect();
        self.retain_features(&keep)
            .map_err(|_| Error::data("gene list filter retained no features"))
    }

    /// New matrix restricted to the given sample columns (in the given order).
    pub fn subset_samples(&self, samples: &[usize]) -> Result<ExpressionMatrix> {
        for &s in samples {
            if s >= self.n_samples() {
                return Err(Error::invalid(format!(
                    "sample index {s} out of range for {} samples",
                    self.n_samples()
                )));
            }
        }
        let values = self.values.select(Axis(1), samples);
        let ids = samples.iter().map(|&s| self.sample_ids[s].clone()).collect();
        ExpressionMatrix::new(self.feature_ids.clone(), ids, values)
    }

    fn retain_features(&self, keep: &[usize]) -> Result<ExpressionMatrix> {
        if keep.is_empty() {
            return Err(Error::data("feature filter retained no features"));
        }
        let values = self.values.select(Axis(0), keep);
        let ids = keep.iter().map(|&f| self.feature_ids[f].clone()).collect();
        ExpressionMatrix::new(ids, self.sample_ids.clone(), values)
    }

    /// Writes the matrix with a header row of sample ids; the corner cell is
    /// `feature_id`. Values use the shortest decimal form that parses back to
    /// the identical `f64`, so a save/load round trip is exact.
    pub fn save(&self, path: &Path, format: FileFormat) -> Result<()> {
        tsv::write_matrix(
            path,
            format,
            "feature_id",
            &self.feature_ids,
            &self.sample_ids,
            &self.values,
        )
    }
}

/// Loads a features × samples matrix.
///
/// The first row must list the sample ids (with or without a leading corner
/// cell for the id column); every following row is a feature id followed by
/// one numeric value per sample. Ragged rows, duplicate ids and cells that do
/// not parse as finite numbers are rejected with their 1-based row/column
/// location.
pub fn load_expression(path: &Path, format: FileFormat) -> Result<ExpressionMatrix> {
    let (feature_ids, sample_ids, values) = tsv::read_matrix(path, format)?;
    ExpressionMatrix::new(feature_ids, sample_ids, values)
}

fn check_unique_ids(ids: &[String], what: &str) -> Result<()> {
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if id.is_empty() {
            return Err(Error::data(format!("empty {what} id")));
        }
        if !seen.insert(id.as_str()) {
            return Err(Error::data(format!("duplicate {what} id '{id}'")));
        }
    }
    Ok(())
}

/// Binary phenotype labels aligned to a list of sample ids; `true` marks the
/// positive class (e.g. poor prognosis).
#[derive(Debug, Clone)]
pub struct PhenotypeLabels {
    sample_ids: Vec<String>,
    positive: Vec<bool>,
}

impl PhenotypeLabels {
    pub fn new(sample_ids: Vec<String>, positive: Vec<bool>) -> Result<Self> {
        if sample_ids.len() != positive.len() {
            return Err(Error::data(format!(
                "{} sample ids but {} labels",
                sample_ids.len(),
                positive.len()
            )));
        }
        if sample_ids.is_empty() {
            return Err(Error::data("empty label set"));
        }
        check_unique_ids(&sample_ids, "sample")?;
        Ok(PhenotypeLabels {
            sample_ids,
            positive,
        })
    }

    pub fn len(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_ids.is_empty()
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn positive(&self) -> &[bool] {
        &self.positive
    }

    pub fn n_positive(&self) -> usize {
        self.positive.iter().filter(|&&p| p).count()
    }

    /// Label vector reordered to match `sample_ids`; every requested id must
    /// be present exactly once.
    pub fn for_samples(&self, sample_ids: &[String]) -> Result<Vec<bool>> {
        let by_id: HashMap<&str, bool> = self
            .sample_ids
            .iter()
            .map(String::as_str)
            .zip(self.positive.iter().copied())
            .collect();
        sample_ids
            .iter()
            .map(|id| {
                by_id
                    .get(id.as_str())
                    .copied()
                    .ok_or_else(|| Error::data(format!("no label for sample '{id}'")))
            })
            .collect()
    }

    /// Two-column file: sample id, then `1`/`0` (or `true`/`false`).
    pub fn load(path: &Path) -> Result<Self> {
        let rows = tsv::read_two_columns(path)?;
        let mut ids = Vec::with_capacity(rows.len());
        let mut positive = Vec::with_capacity(rows.len());
        for (line, (id, value)) in rows.into_iter().enumerate() {
            let flag = match value.as_str() {
                "1" | "true" => true,
                "0" | "false" => false,
                other => {
                    return Err(Error::data(format!(
                        "{}: line {}: label '{}' is not one of 1/0/true/false",
                        path.display(),
                        line + 1,
                        other
                    )))
                }
            };
            ids.push(id);
            positive.push(flag);
        }
        PhenotypeLabels::new(ids, positive)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for (id, &pos) in self.sample_ids.iter().zip(&self.positive) {
            out.push_str(id);
            out.push('\t');
            out.push_str(if pos { "1" } else { "0" });
            out.push('\n');
        }
        tsv::write_atomic(path, out.as_bytes())
    }
}

/// Labels derived from survival times: a sample is positive (poor prognosis)
/// iff its survival is strictly below `cutoff`. A sample sitting exactly on
/// the cutoff therefore lands in the negative class.
pub fn derive_labels(survival: &[(String, f64)], cutoff: f64) -> Result<PhenotypeLabels> {
    if !cutoff.is_finite() {
        return Err(Error::invalid("survival cutoff must be finite"));
    }
    let mut ids = Vec::with_capacity(survival.len());
    let mut positive = Vec::with_capacity(survival.len());
    for (id, months) in survival {
        if !months.is_finite() {
            return Err(Error::data(format!(
                "non-finite survival time for sample '{id}'"
            )));
        }
        ids.push(id.clone());
        positive.push(*months < cutoff);
    }
    let labels = PhenotypeLabels::new(ids, positive)?;
    let pos = labels.n_positive();
    if pos == 0 || pos == labels.len() {
        log::warn!(
            "survival cutoff {cutoff} puts all {} samples in one class",
            labels.len()
        );
    }
    Ok(labels)
}

/// Two-column file of sample id and survival time.
pub fn load_survival(path: &Path) -> Result<Vec<(String, f64)>> {
    let rows = tsv::read_two_columns(path)?;
    rows.into_iter()
        .enumerate()
        .map(|(line, (id, value))| {
            let months: f64 = value.parse().map_err(|_| {
                Error::data(format!(
                    "{}: line {}: cannot parse survival time '{}'",
                    path.display(),
                    line + 1,
                    value
                ))
            })?;
            Ok((id, months))
        })
        .collect()
}

/// Probe → gene mapping used by [`ExpressionMatrix::collapse_probes`].
#[derive(Debug, Clone, Default)]
pub struct ProbeGeneMap {
    probe_to_gene: HashMap<String, String>,
}

impl ProbeGeneMap {
    /// Builds the map from (probe, gene) pairs. A probe listed twice with
    /// conflicting genes is rejected; exact duplicates are tolerated.
    pub fn new(pairs: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        let mut probe_to_gene = HashMap::new();
        for (probe, gene) in pairs {
            if probe.is_empty() || gene.is_empty() {
                return Err(Error::data("probe map entries must be non-empty"));
            }
            if let Some(existing) = probe_to_gene.get(&probe) {
                if *existing != gene {
                    return Err(Error::data(format!(
                        "probe '{probe}' maps to both '{existing}' and '{gene}'"
                    )));
                }
            } else {
                probe_to_gene.insert(probe, gene);
            }
        }
        Ok(ProbeGeneMap { probe_to_gene })
    }

    /// Two-column file: probe id, gene id.
    pub fn load(path: &Path) -> Result<Self> {
        ProbeGeneMap::new(tsv::read_two_columns(path)?)
    }

    pub fn gene_for(&self, probe: &str) -> Option<&str> {
        self.probe_to_gene.get(probe).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.probe_to_gene.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probe_to_gene.is_empty()
    }
}

/// One gene id per line; blank lines and `#` comments are skipped.
pub fn load_gene_list(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io_at(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect())
}

/// Generates a two-class Gaussian cohort for tests and benchmarks.
///
/// Every feature draws a baseline level uniformly from [6, 10) and unit
/// Gaussian noise per sample; the first `n_informative` features are shifted
/// by `effect_size` in the positive class. Class labels alternate
/// (even-indexed samples are positive) so that any contiguous or random fold
/// keeps both classes represented. The same seed reproduces the cohort
/// exactly.
pub fn synth_cohort(
    n_samples: usize,
    n_features: usize,
    n_informative: usize,
    effect_size: f64,
    seed: u64,
) -> Result<(ExpressionMatrix, PhenotypeLabels)> {
    if n_samples < 2 {
        return Err(Error::invalid("synthetic cohort needs at least two samples"));
    }
    if n_features == 0 {
        return Err(Error::invalid("synthetic cohort needs at least one feature"));
    }
    if n_informative > n_features {
        return Err(Error::invalid(format!(
            "n_informative ({n_informative}) exceeds n_features ({n_features})"
        )));
    }
    if !effect_size.is_finite() {
        return Err(Error::invalid("effect size must be finite"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let baseline = Uniform::new(6.0, 10.0);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");

    let positive: Vec<bool> = (0..n_samples).map(|s| s % 2 == 0).collect();
    let mut values = Array2::zeros((n_features, n_samples));
    for f in 0..n_features {
        let base = baseline.sample(&mut rng);
        for s in 0..n_samples {
            let mut v = base + noise.sample(&mut rng);
            if f < n_informative && positive[s] {
                // alternate up- and down-shifts so the class leaves a profile
                // pattern across features, not just a uniform offset (a
                // uniform offset disappears under per-sample centering)
                v += if f % 2 == 0 { effect_size } else { -effect_size };
            }
            values[(f, s)] = v;
        }
    }

    let sample_width = n_samples.to_string().len();
    let feature_width = n_features.to_string().len();
    let sample_ids = (1..=n_samples)
        .map(|i| format!("S{i:0width$}", width = sample_width))
        .collect::<Vec<_>>();
    let feature_ids = (1..=n_features)
        .map(|i| format!("G{i:0width$}", width = feature_width))
        .collect::<Vec<_>>();

    let matrix = ExpressionMatrix::new(feature_ids, sample_ids.clone(), values)?;
    let labels = PhenotypeLabels::new(sample_ids, positive)?;
    Ok((matrix, labels))
}
