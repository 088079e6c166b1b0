//! Python bindings for pnet-core.
//!
//! The module mirrors the CLI surface: an `Expression` class for the matrix
//! plumbing, free functions for the pipeline stages, and the evaluation
//! harnesses returning their reports as JSON strings (load them with
//! `json.loads`). Configuration keys are the same strings the CLI and its
//! config files use, passed as keyword arguments:
//!
//! ```python
//! report = pnet_py.mccv_eval(expr, labels, rounds=50, train_size=28,
//!                            featsel="welch", top_k=100, score="nn", seed=17)
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use ndarray::Array2;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use pnet_core::config::{kernel_from_config, pipeline_from_config, Config, PIPELINE_KEYS};
use pnet_core::dataset::{self, ExpressionMatrix, FileFormat, PhenotypeLabels};
use pnet_core::error::Error;
use pnet_core::pipeline::{self, PipelineConfig};
use pnet_core::scoring::{self, ScoreSpec};
use pnet_core::{export, featsel, kernel, similarity, threshold};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        Error::Invalid(_) => PyValueError::new_err(e.to_string()),
        Error::Data(_) => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse_format(format: &str) -> PyResult<FileFormat> {
    format.parse().map_err(to_py)
}

/// Rectangular nested list -> Array2, with a clear error otherwise.
fn matrix_from_rows(rows: Vec<Vec<f64>>) -> PyResult<Array2<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 {
        return Err(PyValueError::new_err("matrix must be non-empty"));
    }
    let mut flat = Vec::with_capacity(nrows * ncols);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(PyValueError::new_err(format!(
                "row {i} has {} values, expected {ncols}",
                row.len()
            )));
        }
        flat.extend_from_slice(row);
    }
    Array2::from_shape_vec((nrows, ncols), flat)
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

fn matrix_to_rows(values: &Array2<f64>) -> Vec<Vec<f64>> {
    values.rows().into_iter().map(|r| r.to_vec()).collect()
}

/// Keyword arguments -> the same flat string config the CLI reads. Lists
/// become comma-separated values so grids work naturally.
fn config_from_kwargs(options: Option<&Bound<'_, PyDict>>) -> PyResult<Config> {
    let mut cfg = Config::default();
    if let Some(dict) = options {
        for (key, value) in dict.iter() {
            let key: String = key.extract()?;
            let text = if let Ok(list) = value.extract::<Vec<f64>>() {
                list.iter()
                    .map(f64::to_string)
                    .collect::<Vec<_>>()
                    .join(",")
            } else {
                value.str()?.to_string()
            };
            cfg.set(&key, text);
        }
    }
    Ok(cfg)
}

fn pipeline_config(options: Option<&Bound<'_, PyDict>>) -> PyResult<PipelineConfig> {
    let cfg = config_from_kwargs(options)?;
    let unknown = cfg.unknown_keys(PIPELINE_KEYS);
    if !unknown.is_empty() {
        return Err(PyValueError::new_err(format!(
            "unknown option(s): {}",
            unknown.join(", ")
        )));
    }
    pipeline_from_config(&cfg).map_err(to_py)
}

fn score_spec(score: &str, knn_k: usize) -> PyResult<ScoreSpec> {
    ScoreSpec::parse(score, knn_k).map_err(to_py)
}

fn json_string<T: serde::Serialize>(value: &T) -> PyResult<String> {
    serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// A features x samples expression matrix with identifiers.
#[pyclass]
#[derive(Clone)]
struct Expression {
    inner: ExpressionMatrix,
}

#[pymethods]
impl Expression {
    #[new]
    fn new(
        feature_ids: Vec<String>,
        sample_ids: Vec<String>,
        values: Vec<Vec<f64>>,
    ) -> PyResult<Self> {
        let values = matrix_from_rows(values)?;
        ExpressionMatrix::new(feature_ids, sample_ids, values)
            .map(|inner| Expression { inner })
            .map_err(to_py)
    }

    /// Read a matrix whose first row is sample ids and first column is
    /// feature ids.
    #[staticmethod]
    #[pyo3(signature = (path, format = "tsv"))]
    fn load(path: PathBuf, format: &str) -> PyResult<Self> {
        let format = parse_format(format)?;
        dataset::load_expression(&path, format)
            .map(|inner| Expression { inner })
            .map_err(to_py)
    }

    #[pyo3(signature = (path, format = "tsv"))]
    fn save(&self, path: PathBuf, format: &str) -> PyResult<()> {
        let format = parse_format(format)?;
        self.inner.save(&path, format).map_err(to_py)
    }

    #[getter]
    fn feature_ids(&self) -> Vec<String> {
        self.inner.feature_ids().to_vec()
    }

    #[getter]
    fn sample_ids(&self) -> Vec<String> {
        self.inner.sample_ids().to_vec()
    }

    #[getter]
    fn n_features(&self) -> usize {
        self.inner.n_features()
    }

    #[getter]
    fn n_samples(&self) -> usize {
        self.inner.n_samples()
    }

    fn values(&self) -> Vec<Vec<f64>> {
        matrix_to_rows(self.inner.values())
    }

    /// Drop features whose mean expression is below the threshold.
    fn filter_by_mean(&self, min_mean: f64) -> PyResult<Self> {
        self.inner
            .filter_by_mean(min_mean)
            .map(|inner| Expression { inner })
            .map_err(to_py)
    }

    /// Drop features whose standard deviation is below the threshold.
    fn filter_by_sd(&self, min_sd: f64) -> PyResult<Self> {
        self.inner
            .filter_by_sd(min_sd)
            .map(|inner| Expression { inner })
            .map_err(to_py)
    }

    /// Keep only the listed features, in matrix order.
    fn filter_by_gene_list(&self, genes: Vec<String>) -> PyResult<Self> {
        self.inner
            .filter_by_gene_list(&genes)
            .map(|inner| Expression { inner })
            .map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "Expression({} features x {} samples)",
            self.inner.n_features(),
            self.inner.n_samples()
        )
    }
}

/// Generate a synthetic labeled cohort; returns (expression, labels).
#[pyfunction]
#[pyo3(signature = (samples = 40, features = 1000, informative = 50, effect = 1.0, seed = 7))]
fn synth_cohort(
    samples: usize,
    features: usize,
    informative: usize,
    effect: f64,
    seed: u64,
) -> PyResult<(Expression, Vec<bool>)> {
    let (matrix, labels) =
        dataset::synth_cohort(samples, features, informative, effect, seed).map_err(to_py)?;
    let positive = labels.positive().to_vec();
    Ok((Expression { inner: matrix }, positive))
}

/// Load a two-column labels file, aligned to the given sample order.
#[pyfunction]
fn load_labels(path: PathBuf, sample_ids: Vec<String>) -> PyResult<Vec<bool>> {
    PhenotypeLabels::load(&path)
        .and_then(|l| l.for_samples(&sample_ids))
        .map_err(to_py)
}

/// Welch's t-test for every feature; rows of (feature_id, t, df, p).
#[pyfunction]
fn welch_t(expr: &Expression, positive: Vec<bool>) -> PyResult<Vec<(String, f64, f64, f64)>> {
    let stats = featsel::welch_t(&expr.inner, &positive).map_err(to_py)?;
    Ok(stats
        .into_iter()
        .map(|s| (s.feature_id, s.t, s.df, s.p))
        .collect())
}

/// Moderated t statistic for every feature; rows of (feature_id, t, df, p).
#[pyfunction]
#[pyo3(signature = (expr, positive, shrinkage = true))]
fn moderated_t(
    expr: &Expression,
    positive: Vec<bool>,
    shrinkage: bool,
) -> PyResult<Vec<(String, f64, f64, f64)>> {
    let stats = featsel::moderated_t(&expr.inner, &positive, shrinkage).map_err(to_py)?;
    Ok(stats
        .into_iter()
        .map(|s| (s.feature_id, s.t, s.df, s.p))
        .collect())
}

/// Ids of the top features by differential expression.
#[pyfunction]
#[pyo3(signature = (expr, positive, method = "welch", top_k = 100))]
fn select_features(
    expr: &Expression,
    positive: Vec<bool>,
    method: &str,
    top_k: usize,
) -> PyResult<Vec<String>> {
    let method = method.parse().map_err(to_py)?;
    pipeline::select_features(&expr.inner, &positive, method, top_k).map_err(to_py)
}

/// Sample-similarity matrix; returns (sample_ids, matrix).
#[pyfunction]
#[pyo3(signature = (expr, measure = "pearson"))]
fn similarity_matrix(expr: &Expression, measure: &str) -> PyResult<(Vec<String>, Vec<Vec<f64>>)> {
    let kind: similarity::SimilarityKind = measure.parse().map_err(to_py)?;
    let w = similarity::similarity_matrix(&expr.inner, kind).map_err(to_py)?;
    Ok((w.sample_ids().to_vec(), matrix_to_rows(w.values())))
}

/// Kernelize a similarity matrix. The kernel and its parameters are named
/// exactly as on the CLI: kernel, kernel_p, kernel_a, negatives, sigma, c,
/// alpha, degree.
#[pyfunction]
#[pyo3(signature = (w, **options))]
fn kernel_matrix(
    w: Vec<Vec<f64>>,
    options: Option<&Bound<'_, PyDict>>,
) -> PyResult<Vec<Vec<f64>>> {
    let w = matrix_from_rows(w)?;
    let ids: Vec<String> = (0..w.nrows()).map(|i| format!("s{i}")).collect();
    let w = similarity::SimilarityMatrix::new(ids, w).map_err(to_py)?;
    let cfg = config_from_kwargs(options)?;
    let spec = kernel_from_config(&cfg).map_err(to_py)?;
    spec.apply(&w)
        .map(|k| matrix_to_rows(k.values()))
        .map_err(to_py)
}

/// How strongly the walk kernel at each step count correlates with the
/// long-walk limit; rows of (p, correlation).
#[pyfunction]
#[pyo3(signature = (w, steps, a = 2.0, negatives = "clip"))]
fn kernel_convergence(
    w: Vec<Vec<f64>>,
    steps: Vec<u32>,
    a: f64,
    negatives: &str,
) -> PyResult<Vec<(u32, f64)>> {
    let w = matrix_from_rows(w)?;
    let negatives = negatives.parse().map_err(to_py)?;
    kernel::kernel_convergence(&w, &steps, a, negatives).map_err(to_py)
}

/// Score every node against the positive set (av, nn, knn, tot, diff or
/// dnorm).
#[pyfunction]
#[pyo3(signature = (k, positives, score = "nn", knn_k = 3))]
fn score_samples(
    k: Vec<Vec<f64>>,
    positives: Vec<usize>,
    score: &str,
    knn_k: usize,
) -> PyResult<Vec<f64>> {
    let k = matrix_from_rows(k)?;
    let spec = score_spec(score, knn_k)?;
    let targets: Vec<usize> = (0..k.nrows()).collect();
    scoring::score_all(&k, &positives, &targets, &spec).map_err(to_py)
}

/// Area under the ROC curve with average-rank tie handling.
#[pyfunction]
fn auc(scores: Vec<f64>, positive: Vec<bool>) -> PyResult<f64> {
    threshold::auc(&scores, &positive).map_err(to_py)
}

/// Pick the edge-filter quantile by internal leave-one-out; returns
/// (quantile, auc).
#[pyfunction]
#[pyo3(signature = (k, positives, grid = None, score = "nn", knn_k = 3))]
fn optimize_threshold(
    k: Vec<Vec<f64>>,
    positives: Vec<usize>,
    grid: Option<Vec<f64>>,
    score: &str,
    knn_k: usize,
) -> PyResult<(f64, f64)> {
    let k = matrix_from_rows(k)?;
    let spec = score_spec(score, knn_k)?;
    let grid = grid.unwrap_or_else(threshold::default_quantile_grid);
    let targets: Vec<usize> = (0..k.nrows()).collect();
    let result =
        threshold::optimize_thresh_by_loo(&k, &positives, &targets, &grid, &spec).map_err(to_py)?;
    Ok((result.quantile, result.auc))
}

/// Run the whole pipeline on a labeled cohort and rank every sample;
/// returns a JSON report (ranking, threshold, selected features, config).
#[pyfunction]
#[pyo3(signature = (expr, positive, **options))]
fn rank_cohort(
    expr: &Expression,
    positive: Vec<bool>,
    options: Option<&Bound<'_, PyDict>>,
) -> PyResult<String> {
    let cfg = pipeline_config(options)?;
    let out = pipeline::rank_cohort(&expr.inner, &positive, &cfg).map_err(to_py)?;

    #[derive(serde::Serialize)]
    struct Row<'a> {
        sample_id: &'a str,
        score: f64,
        positive: bool,
    }
    #[derive(serde::Serialize)]
    struct Report<'a> {
        config: &'a BTreeMap<String, String>,
        quantile: f64,
        loo_auc: f64,
        cutoff: f64,
        selected_features: &'a [String],
        ranking: Vec<Row<'a>>,
    }
    json_string(&Report {
        config: &out.config,
        quantile: out.threshold.quantile,
        loo_auc: out.threshold.auc,
        cutoff: out.cutoff,
        selected_features: &out.selected_features,
        ranking: out
            .order
            .iter()
            .map(|&i| Row {
                sample_id: &out.sample_ids[i],
                score: out.scores[i],
                positive: positive[i],
            })
            .collect(),
    })
}

/// Double leave-one-out evaluation; returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (expr, positive, **options))]
fn double_loo(
    expr: &Expression,
    positive: Vec<bool>,
    options: Option<&Bound<'_, PyDict>>,
) -> PyResult<String> {
    let cfg = pipeline_config(options)?;
    let report = pipeline::double_loo(&expr.inner, &positive, &cfg).map_err(to_py)?;
    json_string(&report)
}

/// Monte Carlo cross-validation with balanced test draws; returns the
/// report as JSON.
#[pyfunction]
#[pyo3(signature = (expr, positive, rounds, train_size, **options))]
fn mccv_eval(
    expr: &Expression,
    positive: Vec<bool>,
    rounds: usize,
    train_size: usize,
    options: Option<&Bound<'_, PyDict>>,
) -> PyResult<String> {
    let cfg = pipeline_config(options)?;
    let report =
        pipeline::mccv_eval(&expr.inner, &positive, &cfg, rounds, train_size).map_err(to_py)?;
    json_string(&report)
}

/// Repeated k-fold cross-validation; returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (expr, positive, rounds, folds, **options))]
fn kfold_eval(
    expr: &Expression,
    positive: Vec<bool>,
    rounds: usize,
    folds: usize,
    options: Option<&Bound<'_, PyDict>>,
) -> PyResult<String> {
    let cfg = pipeline_config(options)?;
    let report =
        pipeline::kfold_eval(&expr.inner, &positive, &cfg, rounds, folds).map_err(to_py)?;
    json_string(&report)
}

/// Write the cohort graph as Graphviz DOT.
#[pyfunction]
fn export_dot(
    path: PathBuf,
    sample_ids: Vec<String>,
    positive: Vec<bool>,
    scores: Vec<f64>,
    kernel: Vec<Vec<f64>>,
) -> PyResult<()> {
    let kernel = matrix_from_rows(kernel)?;
    export::export_dot(&path, &sample_ids, &positive, &scores, &kernel).map_err(to_py)
}

/// Write the cohort graph as GraphML.
#[pyfunction]
fn export_graphml(
    path: PathBuf,
    sample_ids: Vec<String>,
    positive: Vec<bool>,
    scores: Vec<f64>,
    kernel: Vec<Vec<f64>>,
) -> PyResult<()> {
    let kernel = matrix_from_rows(kernel)?;
    export::export_graphml(&path, &sample_ids, &positive, &scores, &kernel).map_err(to_py)
}

#[pymodule]
fn pnet_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Expression>()?;
    m.add_function(wrap_pyfunction!(synth_cohort, m)?)?;
    m.add_function(wrap_pyfunction!(load_labels, m)?)?;
    m.add_function(wrap_pyfunction!(welch_t, m)?)?;
    m.add_function(wrap_pyfunction!(moderated_t, m)?)?;
    m.add_function(wrap_pyfunction!(select_features, m)?)?;
    m.add_function(wrap_pyfunction!(similarity_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_convergence, m)?)?;
    m.add_function(wrap_pyfunction!(score_samples, m)?)?;
    m.add_function(wrap_pyfunction!(auc, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(rank_cohort, m)?)?;
    m.add_function(wrap_pyfunction!(double_loo, m)?)?;
    m.add_function(wrap_pyfunction!(mccv_eval, m)?)?;
    m.add_function(wrap_pyfunction!(kfold_eval, m)?)?;
    m.add_function(wrap_pyfunction!(export_dot, m)?)?;
    m.add_function(wrap_pyfunction!(export_graphml, m)?)?;
    Ok(())
}
