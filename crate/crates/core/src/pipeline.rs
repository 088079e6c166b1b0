//! End-to-end orchestration: feature selection, then the similarity graph,
//! the kernel, the cross-validated edge filter, and the score functions —
//! plus the evaluation harnesses (leave-one-out, k-fold, held-out, random
//! resampling) built from one shared train/test worker.
//!
//! Every harness follows the same discipline: anything learned — the
//! feature list, the edge-filter quantile, the score cutoff — is learned
//! from training labels only. The graph itself spans all samples (the
//! method is transductive; unlabeled points may shape the geometry), but
//! test labels are consulted exactly once, when predictions are compared
//! against them.

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::ExpressionMatrix;
use crate::error::{Error, Result};
use crate::featsel::{moderated_t, select_top_k, welch_t};
use crate::kernel::KernelSpec;
use crate::scoring::{rank_samples, score_all, ScoreSpec};
use crate::similarity::{similarity_matrix, SimilarityKind};
use crate::threshold::{
    filter_matrix, matrix_quantile, optimize_thresh_by_loo, vector_quantile, zero_diagonal,
    ThresholdResult,
};

/// How to pick the features the graph is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatSelMethod {
    /// Keep every feature.
    None,
    /// Unequal-variance two-sample t statistic, smallest p first.
    Welch,
    /// Pooled-variance t with an optional empirical-Bayes variance prior.
    Moderated { shrinkage: bool },
}

impl FeatSelMethod {
    pub fn label(&self) -> &'static str {
        match self {
            FeatSelMethod::None => "none",
            FeatSelMethod::Welch => "welch",
            FeatSelMethod::Moderated { shrinkage: true } => "moderated",
            FeatSelMethod::Moderated { shrinkage: false } => "moderated-unshrunk",
        }
    }
}

impl std::str::FromStr for FeatSelMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(FeatSelMethod::None),
            "welch" => Ok(FeatSelMethod::Welch),
            "moderated" => Ok(FeatSelMethod::Moderated { shrinkage: true }),
            "moderated-unshrunk" => Ok(FeatSelMethod::Moderated { shrinkage: false }),
            other => Err(Error::invalid(format!(
                "unknown feature selection '{other}' (expected none, welch, moderated or moderated-unshrunk)"
            ))),
        }
    }
}

/// Everything the pipeline needs to know; shared by all harnesses.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub featsel: FeatSelMethod,
    /// Number of features kept when selection is on.
    pub top_k: usize,
    pub similarity: SimilarityKind,
    pub kernel: KernelSpec,
    pub score: ScoreSpec,
    /// Candidate quantiles for the edge filter search.
    pub edge_grid: Vec<f64>,
    /// Candidate quantiles for the score cutoff on the training scores.
    pub score_grid: Vec<f64>,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            featsel: FeatSelMethod::Welch,
            top_k: 100,
            similarity: SimilarityKind::Pearson,
            kernel: KernelSpec::RandomWalk {
                p: 8,
                a: 2.0,
                negatives: Default::default(),
            },
            score: ScoreSpec::Nearest,
            edge_grid: crate::threshold::default_quantile_grid(),
            score_grid: crate::threshold::default_quantile_grid(),
            seed: 17,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self, matrix: &ExpressionMatrix) -> Result<()> {
        self.kernel.validate()?;
        self.score.validate()?;
        for (name, grid) in [("edge_grid", &self.edge_grid), ("score_grid", &self.score_grid)] {
            if grid.is_empty() {
                return Err(Error::invalid(format!("{name} is empty")));
            }
            if let Some(bad) = grid.iter().find(|q| !q.is_finite() || !(0.0..=1.0).contains(*q)) {
                return Err(Error::invalid(format!("{name} entry {bad} outside [0, 1]")));
            }
        }
        if self.featsel != FeatSelMethod::None {
            if self.top_k == 0 {
                return Err(Error::invalid("top_k must be at least 1"));
            }
            if self.top_k > matrix.n_features() {
                return Err(Error::invalid(format!(
                    "top_k {} exceeds the {} available features",
                    self.top_k,
                    matrix.n_features()
                )));
            }
        }
        Ok(())
    }

    /// Key/value snapshot of the configuration for report files.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let join = |g: &[f64]| {
            g.iter()
                .map(|q| q.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut map = BTreeMap::new();
        map.insert("featsel".into(), self.featsel.label().to_string());
        map.insert("top_k".into(), self.top_k.to_string());
        map.insert("similarity".into(), self.similarity.to_string());
        map.insert("kernel".into(), self.kernel.label());
        map.insert("score".into(), self.score.label());
        map.insert("edge_grid".into(), join(&self.edge_grid));
        map.insert("score_grid".into(), join(&self.score_grid));
        map.insert("seed".into(), self.seed.to_string());
        map
    }
}

/// Ranked feature ids for one labeled training matrix.
pub fn select_features(
    matrix: &ExpressionMatrix,
    positive: &[bool],
    method: FeatSelMethod,
    top_k: usize,
) -> Result<Vec<String>> {
    match method {
        FeatSelMethod::None => Ok(matrix.feature_ids().to_vec()),
        FeatSelMethod::Welch => select_top_k(&welch_t(matrix, positive)?, top_k),
        FeatSelMethod::Moderated { shrinkage } => {
            select_top_k(&moderated_t(matrix, positive, shrinkage)?, top_k)
        }
    }
}

/// Score cutoff for turning scores into class calls: candidate cuts are
/// quantiles of the training scores, and the cut with the best training
/// accuracy wins (ties keep the lowest cut). A sample is called positive
/// when its score lands strictly above the cut.
pub fn select_score_threshold(
    scores: &[f64],
    positive: &[bool],
    grid: &[f64],
) -> Result<f64> {
    if scores.len() != positive.len() {
        return Err(Error::invalid(format!(
            "{} scores for {} labels",
            scores.len(),
            positive.len()
        )));
    }
    if grid.is_empty() {
        return Err(Error::invalid("empty score-cut grid"));
    }
    let mut grid_sorted = grid.to_vec();
    grid_sorted.sort_by(f64::total_cmp);
    grid_sorted.dedup();
    let mut best_cut = f64::NAN;
    let mut best_acc = f64::NEG_INFINITY;
    for &q in &grid_sorted {
        let cut = vector_quantile(scores, q)?;
        let correct = scores
            .iter()
            .zip(positive)
            .filter(|&(s, &p)| (*s > cut) == p)
            .count();
        let acc = correct as f64 / scores.len() as f64;
        if acc > best_acc {
            best_acc = acc;
            best_cut = cut;
        }
    }
    Ok(best_cut)
}

/// Everything learned and measured on one train/test split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitOutcome {
    /// Feature ids the graph was built from, best first.
    pub selected_features: Vec<String>,
    /// Winning edge-filter quantile and its internal leave-one-out AUC.
    pub threshold: ThresholdResult,
    /// Edge-weight cutoff the quantile translated to.
    pub cutoff: f64,
    /// Score cutoff chosen on the training scores.
    pub score_cut: f64,
    /// Scores of the test samples, aligned with the `test` index list.
    pub test_scores: Vec<f64>,
    pub predicted: Vec<bool>,
    pub actual: Vec<bool>,
    pub errors: usize,
    pub pos_errors: usize,
    pub neg_errors: usize,
    pub n_test_pos: usize,
    pub n_test_neg: usize,
}

impl SplitOutcome {
    pub fn error_rate(&self) -> f64 {
        self.errors as f64 / self.actual.len() as f64
    }
}

fn check_split(n: usize, train: &[usize], test: &[usize]) -> Result<()> {
    if train.is_empty() || test.is_empty() {
        return Err(Error::invalid("train and test sets must be non-empty"));
    }
    let mut side = vec![0u8; n];
    for &i in train {
        if i >= n {
            return Err(Error::invalid(format!("train index {i} out of range")));
        }
        if side[i] != 0 {
            return Err(Error::invalid(format!("sample {i} listed twice in the split")));
        }
        side[i] = 1;
    }
    for &i in test {
        if i >= n {
            return Err(Error::invalid(format!("test index {i} out of range")));
        }
        if side[i] != 0 {
            return Err(Error::invalid(format!(
                "sample {i} appears on both sides of the split"
            )));
        }
        side[i] = 2;
    }
    Ok(())
}

/// Runs the full pipeline on one train/test split.
///
/// Features, the edge-filter quantile and the score cutoff are all chosen
/// using training labels only; the positive set handed to the score
/// functions is the training positives, so a test sample's own label can
/// never influence its score. Test labels are read in the final comparison
/// and nowhere else.
pub fn evaluate_split(
    matrix: &ExpressionMatrix,
    positive: &[bool],
    train: &[usize],
    test: &[usize],
    cfg: &PipelineConfig,
) -> Result<SplitOutcome> {
    let n = matrix.n_samples();
    if positive.len() != n {
        return Err(Error::invalid(format!(
            "{} labels for {} samples",
            positive.len(),
            n
        )));
    }
    check_split(n, train, test)?;

    let train_labels: Vec<bool> = train.iter().map(|&i| positive[i]).collect();
    if !train_labels.iter().any(|&b| b) || train_labels.iter().all(|&b| b) {
        return Err(Error::data(
            "training side of the split is single-class",
        ));
    }

    // features from the training samples only
    let selected = match cfg.featsel {
        FeatSelMethod::None => matrix.feature_ids().to_vec(),
        method => {
            let train_matrix = matrix.subset_samples(train)?;
            select_features(&train_matrix, &train_labels, method, cfg.top_k)?
        }
    };

    // the graph spans the whole cohort (test geometry is fair game,
    // test labels are not)
    let working = if cfg.featsel == FeatSelMethod::None {
        matrix.clone()
    } else {
        matrix.filter_by_gene_list(&selected)?
    };
    let w = similarity_matrix(&working, cfg.similarity)?;
    let k = cfg.kernel.apply(&w)?;
    let k0 = zero_diagonal(k.values());

    let eff_pos: Vec<usize> = train.iter().copied().filter(|&i| positive[i]).collect();
    let threshold = optimize_thresh_by_loo(&k0, &eff_pos, train, &cfg.edge_grid, &cfg.score)?;
    let cutoff = matrix_quantile(&k0, threshold.quantile)?;
    let filtered = filter_matrix(&k0, cutoff);

    let train_scores = score_all(&filtered, &eff_pos, train, &cfg.score)?;
    let score_cut = select_score_threshold(&train_scores, &train_labels, &cfg.score_grid)?;

    let test_scores = score_all(&filtered, &eff_pos, test, &cfg.score)?;
    let predicted: Vec<bool> = test_scores.iter().map(|&s| s > score_cut).collect();
    let actual: Vec<bool> = test.iter().map(|&i| positive[i]).collect();

    let mut errors = 0;
    let mut pos_errors = 0;
    let mut neg_errors = 0;
    for (&p, &a) in predicted.iter().zip(&actual) {
        if p != a {
            errors += 1;
            if a {
                pos_errors += 1;
            } else {
                neg_errors += 1;
            }
        }
    }
    let n_test_pos = actual.iter().filter(|&&a| a).count();

    Ok(SplitOutcome {
        selected_features: selected,
        threshold,
        cutoff,
        score_cut,
        test_scores,
        predicted,
        actual,
        errors,
        pos_errors,
        neg_errors,
        n_test_pos,
        n_test_neg: test.len() - n_test_pos,
    })
}

// ---------------------------------------------------------------------------
// whole-cohort ranking
// ---------------------------------------------------------------------------

/// Output of the one-shot ranking flow over a fully labeled cohort.
#[derive(Debug, Clone)]
pub struct RankOutput {
    /// Sample ids in matrix order.
    pub sample_ids: Vec<String>,
    /// Scores aligned with `sample_ids`.
    pub scores: Vec<f64>,
    /// Permutation ordering samples best-first.
    pub order: Vec<usize>,
    pub selected_features: Vec<String>,
    pub threshold: ThresholdResult,
    pub cutoff: f64,
    /// The filtered, diagonal-zeroed kernel the scores came from; feeds the
    /// graph exporter.
    pub filtered_kernel: Array2<f64>,
    pub config: BTreeMap<String, String>,
}

/// Scores and ranks every sample of a labeled cohort.
///
/// The kernel diagonal is zeroed before scoring, so each sample is ranked
/// by its connections to the *other* positives — its own label never feeds
/// back into its own score.
pub fn rank_cohort(
    matrix: &ExpressionMatrix,
    positive: &[bool],
    cfg: &PipelineConfig,
) -> Result<RankOutput> {
    let n = matrix.n_samples();
    if positive.len() != n {
        return Err(Error::invalid(format!(
            "{} labels for {} samples",
            positive.len(),
            n
        )));
    }
    cfg.validate(matrix)?;
    if !positive.iter().any(|&b| b) || positive.iter().all(|&b| b) {
        return Err(Error::data("cohort labels are single-class"));
    }

    let selected = select_features(matrix, positive, cfg.featsel, cfg.top_k)?;
    let working = if cfg.featsel == FeatSelMethod::None {
        matrix.clone()
    } else {
        matrix.filter_by_gene_list(&selected)?
    };
    let w = similarity_matrix(&working, cfg.similarity)?;
    let k = cfg.kernel.apply(&w)?;
    let k0 = zero_diagonal(k.values());

    let positives: Vec<usize> = (0..n).filter(|&i| positive[i]).collect();
    let targets: Vec<usize> = (0..n).collect();
    let threshold = optimize_thresh_by_loo(&k0, &positives, &targets, &cfg.edge_grid, &cfg.score)?;
    let cutoff = matrix_quantile(&k0, threshold.quantile)?;
    let filtered = filter_matrix(&k0, cutoff);
    let scores = score_all(&filtered, &positives, &targets, &cfg.score)?;
    let order = rank_samples(matrix.sample_ids(), &scores)?;

    Ok(RankOutput {
        sample_ids: matrix.sample_ids().to_vec(),
        scores,
        order,
        selected_features: selected,
        threshold,
        cutoff,
        filtered_kernel: filtered,
        config: cfg.echo(),
    })
}

// ---------------------------------------------------------------------------
// leave-one-out evaluation
// ---------------------------------------------------------------------------

/// Per-sample outcome of the leave-one-out evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LooRecord {
    pub sample_id: String,
    pub actual: bool,
    pub score: f64,
    pub predicted: bool,
    /// Edge-filter quantile chosen while this sample was held out.
    pub quantile: f64,
    /// Internal leave-one-out AUC behind that choice.
    pub loo_auc: f64,
    pub score_cut: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LooReport {
    pub config: BTreeMap<String, String>,
    pub records: Vec<LooRecord>,
    /// AUC of the held-out scores against the true labels.
    pub auc: f64,
    pub accuracy: f64,
    pub pos_error: f64,
    pub neg_error: f64,
}

/// Leave-one-out over the whole cohort: every sample is held out once,
/// features and thresholds are re-learned from the remaining samples, and
/// the held-out sample is scored against the remaining positives.
pub fn double_loo(
    matrix: &ExpressionMatrix,
    positive: &[bool],
    cfg: &PipelineConfig,
) -> Result<LooReport> {
    let n = matrix.n_samples();
    if positive.len() != n {
        return Err(Error::invalid(format!(
            "{} labels for {} samples",
            positive.len(),
            n
        )));
    }
    cfg.validate(matrix)?;

    let outcomes: Vec<(usize, SplitOutcome)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let train: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            evaluate_split(matrix, positive, &train, &[i], cfg).map(|o| (i, o))
        })
        .collect::<Result<_>>()?;

    let ids = matrix.sample_ids();
    let records: Vec<LooRecord> = outcomes
        .iter()
        .map(|(i, o)| LooRecord {
            sample_id: ids[*i].clone(),
            actual: positive[*i],
            score: o.test_scores[0],
            predicted: o.predicted[0],
            quantile: o.threshold.quantile,
            loo_auc: o.threshold.auc,
            score_cut: o.score_cut,
        })
        .collect();

    let scores: Vec<f64> = records.iter().map(|r| r.score).collect();
    let auc = crate::threshold::auc(&scores, positive)?;
    let correct = records.iter().filter(|r| r.predicted == r.actual).count();
    let n_pos = positive.iter().filter(|&&b| b).count();
    let pos_wrong = records.iter().filter(|r| r.actual && !r.predicted).count();
    let neg_wrong = records.iter().filter(|r| !r.actual && r.predicted).count();

    Ok(LooReport {
        config: cfg.echo(),
        records,
        auc,
        accuracy: correct as f64 / n as f64,
        pos_error: pos_wrong as f64 / n_pos as f64,
        neg_error: neg_wrong as f64 / (n - n_pos) as f64,
    })
}

// ---------------------------------------------------------------------------
// held-out evaluation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeldoutReport {
    pub config: BTreeMap<String, String>,
    pub train_samples: Vec<String>,
    pub test_samples: Vec<String>,
    pub selected_features: Vec<String>,
    pub quantile: f64,
    pub loo_auc: f64,
    pub cutoff: f64,
    pub score_cut: f64,
    pub test_scores: Vec<f64>,
    pub predicted: Vec<bool>,
    pub actual: Vec<bool>,
    pub accuracy: f64,
    /// Test AUC; absent when the test side is single-class.
    pub auc: Option<f64>,
}

/// Single explicit train/test split.
pub fn heldout_eval(
    matrix: &ExpressionMatrix,
    positive: &[bool],
    train: &[usize],
    test: &[usize],
    cfg: &PipelineConfig,
) -> Result<HeldoutReport> {
    cfg.validate(matrix)?;
    let o = evaluate_split(matrix, positive, train, test, cfg)?;
    let ids = matrix.sample_ids();
    let auc = if o.n_test_pos > 0 && o.n_test_neg > 0 {
        Some(crate::threshold::auc(&o.test_scores, &o.actual)?)
    } else {
        None
    };
    Ok(HeldoutReport {
        config: cfg.echo(),
        train_samples: train.iter().map(|&i| ids[i].clone()).collect(),
        test_samples: test.iter().map(|&i| ids[i].clone()).collect(),
        selected_features: o.selected_features.clone(),
        quantile: o.threshold.quantile,
        loo_auc: o.threshold.auc,
        cutoff: o.cutoff,
        score_cut: o.score_cut,
        accuracy: 1.0 - o.error_rate(),
        test_scores: o.test_scores,
        predicted: o.predicted,
        actual: o.actual,
        auc,
    })
}

// ---------------------------------------------------------------------------
// repeated-split evaluations (random resampling and k-fold)
// ---------------------------------------------------------------------------

/// One train/test split inside a round.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldRecord {
    pub fold: usize,
    pub test_samples: Vec<String>,
    pub selected_features: Vec<String>,
    pub quantile: f64,
    pub loo_auc: f64,
    pub cutoff: f64,
    pub score_cut: f64,
    pub test_scores: Vec<f64>,
    pub predicted: Vec<bool>,
    pub actual: Vec<bool>,
    pub fold_error: f64,
}

/// One evaluation round (a single split for resampling runs, a full fold
/// sweep for k-fold runs).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub aborted: bool,
    /// Present when the round was abandoned; says why.
    pub note: Option<String>,
    pub folds: Vec<FoldRecord>,
    /// Mean fold error; `None` for aborted rounds.
    pub error: Option<f64>,
    pub accuracy: Option<f64>,
    /// Share of positives misclassified, when the round tested any.
    pub pos_error: Option<f64>,
    pub neg_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatientRecord {
    pub sample_id: String,
    pub times_tested: usize,
    pub times_correct: usize,
    /// `None` when the sample never landed in a test set.
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub rounds_completed: usize,
    pub rounds_aborted: usize,
    /// Mean round accuracy.
    pub mean_accuracy: f64,
    /// Standard error of the mean accuracy over rounds; 0 for a single round.
    pub sem_accuracy: f64,
    pub mean_error: f64,
    pub mean_pos_error: f64,
    pub mean_neg_error: f64,
    /// Mean pairwise overlap of the top selected features across folds.
    pub feature_stability: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub method: String,
    pub config: BTreeMap<String, String>,
    pub rounds: Vec<RoundRecord>,
    pub summary: Summary,
    pub patients: Vec<PatientRecord>,
}

/// Width of the feature window used for the stability overlap.
const STABILITY_WIDTH: usize = 20;

fn fold_record(
    matrix: &ExpressionMatrix,
    fold: usize,
    test: &[usize],
    outcome: SplitOutcome,
) -> FoldRecord {
    let ids = matrix.sample_ids();
    FoldRecord {
        fold,
        test_samples: test.iter().map(|&i| ids[i].clone()).collect(),
        fold_error: outcome.error_rate(),
        selected_features: outcome.selected_features,
        quantile: outcome.threshold.quantile,
        loo_auc: outcome.threshold.auc,
        cutoff: outcome.cutoff,
        score_cut: outcome.score_cut,
        test_scores: outcome.test_scores,
        predicted: outcome.predicted,
        actual: outcome.actual,
    }
}

/// Folds -> round-level error and class errors.
fn finish_round(round: usize, folds: Vec<FoldRecord>) -> RoundRecord {
    let error = folds.iter().map(|f| f.fold_error).sum::<f64>() / folds.len() as f64;
    let mut pos_n = 0usize;
    let mut pos_wrong = 0usize;
    let mut neg_n = 0usize;
    let mut neg_wrong = 0usize;
    for f in &folds {
        for (&p, &a) in f.predicted.iter().zip(&f.actual) {
            if a {
                pos_n += 1;
                if !p {
                    pos_wrong += 1;
                }
            } else {
                neg_n += 1;
                if p {
                    neg_wrong += 1;
                }
            }
        }
    }
    RoundRecord {
        round,
        aborted: false,
        note: None,
        folds,
        error: Some(error),
        accuracy: Some(1.0 - error),
        pos_error: (pos_n > 0).then(|| pos_wrong as f64 / pos_n as f64),
        neg_error: (neg_n > 0).then(|| neg_wrong as f64 / neg_n as f64),
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Mean pairwise overlap of the first `width` selected features over all
/// completed folds, as a fraction of `width`.
fn feature_stability(rounds: &[RoundRecord], width: usize) -> Option<f64> {
    let tops: Vec<&[String]> = rounds
        .iter()
        .filter(|r| !r.aborted)
        .flat_map(|r| &r.folds)
        .map(|f| &f.selected_features[..width.min(f.selected_features.len())])
        .collect();
    if tops.len() < 2 || tops.iter().any(|t| t.is_empty()) {
        return None;
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..tops.len() {
        for j in (i + 1)..tops.len() {
            let overlap = tops[i].iter().filter(|id| tops[j].contains(id)).count();
            total += overlap as f64 / width.min(tops[i].len()).max(1) as f64;
            pairs += 1;
        }
    }
    Some(total / pairs as f64)
}

fn summarize(
    method: &str,
    cfg: &PipelineConfig,
    extra: &[(&str, String)],
    rounds: Vec<RoundRecord>,
    sample_ids: &[String],
) -> EvaluationReport {
    let completed: Vec<&RoundRecord> = rounds.iter().filter(|r| !r.aborted).collect();
    let accs: Vec<f64> = completed.iter().filter_map(|r| r.accuracy).collect();
    let errs: Vec<f64> = completed.iter().filter_map(|r| r.error).collect();
    let pos: Vec<f64> = completed.iter().filter_map(|r| r.pos_error).collect();
    let neg: Vec<f64> = completed.iter().filter_map(|r| r.neg_error).collect();

    let mean_accuracy = if accs.is_empty() { 0.0 } else { mean(&accs) };
    let sem_accuracy = if accs.len() >= 2 {
        let m = mean(&accs);
        let var = accs.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (accs.len() - 1) as f64;
        (var / accs.len() as f64).sqrt()
    } else {
        0.0
    };

    let mut tested = vec![0usize; sample_ids.len()];
    let mut correct = vec![0usize; sample_ids.len()];
    let index: BTreeMap<&str, usize> = sample_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    for r in &completed {
        for f in &r.folds {
            for (sid, (&p, &a)) in f.test_samples.iter().zip(f.predicted.iter().zip(&f.actual)) {
                let i = index[sid.as_str()];
                tested[i] += 1;
                if p == a {
                    correct[i] += 1;
                }
            }
        }
    }
    let patients: Vec<PatientRecord> = sample_ids
        .iter()
        .enumerate()
        .map(|(i, id)| PatientRecord {
            sample_id: id.clone(),
            times_tested: tested[i],
            times_correct: correct[i],
            accuracy: (tested[i] > 0).then(|| correct[i] as f64 / tested[i] as f64),
        })
        .collect();

    let stability = if cfg.featsel == FeatSelMethod::None {
        None
    } else {
        feature_stability(&rounds, STABILITY_WIDTH.min(cfg.top_k))
    };

    let mut config = cfg.echo();
    for (k, v) in extra {
        config.insert((*k).to_string(), v.clone());
    }

    let summary = Summary {
        rounds_completed: completed.len(),
        rounds_aborted: rounds.len() - completed.len(),
        mean_accuracy,
        sem_accuracy,
        mean_error: if errs.is_empty() { 0.0 } else { mean(&errs) },
        mean_pos_error: if pos.is_empty() { 0.0 } else { mean(&pos) },
        mean_neg_error: if neg.is_empty() { 0.0 } else { mean(&neg) },
        feature_stability: stability,
    };

    EvaluationReport {
        method: method.to_string(),
        config,
        rounds,
        summary,
        patients,
    }
}

/// Draws a test set holding roughly half positives; odd sizes round the
/// positive share up or down at random. Training always keeps at least two
/// members of each class so feature statistics stay defined.
fn balanced_split(
    positive: &[bool],
    train_size: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = positive.len();
    let test_size = n - train_size;
    let mut pos_idx: Vec<usize> = (0..n).filter(|&i| positive[i]).collect();
    let mut neg_idx: Vec<usize> = (0..n).filter(|&i| !positive[i]).collect();

    let want = test_size / 2 + if test_size % 2 == 1 && rng.gen::<bool>() { 1 } else { 0 };
    // keep two of each class on the training side
    let lo = test_size.saturating_sub(neg_idx.len().saturating_sub(2));
    let hi = test_size.min(pos_idx.len().saturating_sub(2));
    if lo > hi {
        return Err(Error::data(format!(
            "cannot build a split with {} positives / {} negatives and train size {train_size}",
            pos_idx.len(),
            neg_idx.len()
        )));
    }
    let test_pos = want.clamp(lo, hi);
    let test_neg = test_size - test_pos;

    pos_idx.shuffle(rng);
    neg_idx.shuffle(rng);
    let mut test: Vec<usize> = pos_idx[..test_pos]
        .iter()
        .chain(&neg_idx[..test_neg])
        .copied()
        .collect();
    let mut train: Vec<usize> = pos_idx[test_pos..]
        .iter()
        .chain(&neg_idx[test_neg..])
        .copied()
        .collect();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

/// Per-round random generator: same seed, its own stream, so rounds are
/// independent of each other and of execution order.
fn round_rng(seed: u64, round: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(round as u64 + 1);
    rng
}

const SPLIT_ATTEMPTS: usize = 100;

/// Monte-Carlo cross-validation: repeated random balanced splits.
///
/// A split that turns out degenerate (a constant feature wrecks the
/// correlation, a single-class training side, …) is redrawn from the same
/// per-round generator, up to 100 attempts.
pub fn mccv_eval(
    matrix: &ExpressionMatrix,
    positive: &[bool],
    cfg: &PipelineConfig,
    rounds: usize,
    train_size: usize,
) -> Result<EvaluationReport> {
    let n = matrix.n_samples();
    if positive.len() != n {
        return Err(Error::invalid(format!(
            "{} labels for {} samples",
            positive.len(),
            n
        )));
    }
    cfg.validate(matrix)?;
    if rounds == 0 {
        return Err(Error::invalid("at least one round is required"));
    }
    if train_size < 4 || train_size >= n {
        return Err(Error::invalid(format!(
            "train size {train_size} out of range (need 4 <= train < {n})"
        )));
    }

    let records: Vec<RoundRecord> = (0..rounds)
        .into_par_iter()
        .map(|r| {
            let mut rng = round_rng(cfg.seed, r);
            let mut last = String::new();
            for _ in 0..SPLIT_ATTEMPTS {
                let (train, test) = balanced_split(positive, train_size, &mut rng)?;
                match evaluate_split(matrix, positive, &train, &test, cfg) {
                    Ok(outcome) => {
                        let fold = fold_record(matrix, 0, &test, outcome);
                        return Ok(finish_round(r, vec![fold]));
                    }
                    Err(Error::Data(msg)) => last = msg, // degenerate draw: redraw
                    Err(e) => return Err(e),
                }
            }
            Err(Error::data(format!(
                "round {r}: no usable split in {SPLIT_ATTEMPTS} attempts (last: {last})"
            )))
        })
        .collect::<Result<_>>()?;

    Ok(summarize(
        "mccv",
        cfg,
        &[
            ("rounds", rounds.to_string()),
            ("train_size", train_size.to_string()),
            ("n_samples", n.to_string()),
            ("n_features", matrix.n_features().to_string()),
        ],
        records,
        matrix.sample_ids(),
    ))
}

/// Repeated k-fold cross-validation.
///
/// Folds are drawn without looking at labels, so a fold can in principle
/// leave the training side single-class; such a round is recorded as
/// aborted and excluded from the aggregates rather than silently redrawn.
pub fn kfold_eval(
    matrix: &ExpressionMatrix,
    positive: &[bool],
    cfg: &PipelineConfig,
    rounds: usize,
    folds: usize,
) -> Result<EvaluationReport> {
    let n = matrix.n_samples();
    if positive.len() != n {
        return Err(Error::invalid(format!(
            "{} labels for {} samples",
            positive.len(),
            n
        )));
    }
    cfg.validate(matrix)?;
    if rounds == 0 {
        return Err(Error::invalid("at least one round is required"));
    }
    if folds < 2 || folds > n {
        return Err(Error::invalid(format!(
            "fold count {folds} out of range (need 2 <= folds <= {n})"
        )));
    }

    let records: Vec<RoundRecord> = (0..rounds)
        .into_par_iter()
        .map(|r| {
            let mut rng = round_rng(cfg.seed, r);
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);

            // spread the remainder over the first folds
            let base = n / folds;
            let extra = n % folds;
            let mut fold_sets: Vec<Vec<usize>> = Vec::with_capacity(folds);
            let mut start = 0;
            for f in 0..folds {
                let size = base + usize::from(f < extra);
                let mut fold: Vec<usize> = perm[start..start + size].to_vec();
                fold.sort_unstable();
                fold_sets.push(fold);
                start += size;
            }

            let mut fold_records = Vec::with_capacity(folds);
            for (f, test) in fold_sets.iter().enumerate() {
                let train: Vec<usize> = (0..n).filter(|i| !test.contains(i)).collect();
                match evaluate_split(matrix, positive, &train, test, cfg) {
                    Ok(outcome) => fold_records.push(fold_record(matrix, f, test, outcome)),
                    Err(Error::Data(msg)) => {
                        return Ok(RoundRecord {
                            round: r,
                            aborted: true,
                            note: Some(format!("fold {f}: {msg}")),
                            folds: Vec::new(),
                            error: None,
                            accuracy: None,
                            pos_error: None,
                            neg_error: None,
                        })
                    }
                    Err(e) => return Err(e),
                }
            }
            Ok(finish_round(r, fold_records))
        })
        .collect::<Result<_>>()?;

    Ok(summarize(
        "kfold",
        cfg,
        &[
            ("rounds", rounds.to_string()),
            ("folds", folds.to_string()),
            ("n_samples", n.to_string()),
            ("n_features", matrix.n_features().to_string()),
        ],
        records,
        matrix.sample_ids(),
    ))
}
