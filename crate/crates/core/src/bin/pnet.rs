//! Command-line front end for the patient-network pipeline.
//!
//! Subcommands mirror the pipeline stages so intermediate artifacts can be
//! inspected or swapped: `prep` cleans an expression matrix, `select` ranks
//! features, `similarity` and `kernel` build the graph, `rank` runs the
//! whole chain, `eval-cv` / `eval-mccv` measure it, `export-graph` renders
//! it, and `synth` fabricates a labeled cohort for experiments.
//!
//! Exit codes: 0 success, 1 usage error, 2 anything the tool itself
//! reports (bad data, bad configuration, I/O trouble).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use pnet_core::config::{kernel_from_config, pipeline_from_config, Config, PIPELINE_KEYS};
use pnet_core::dataset::{
    derive_labels, load_expression, load_gene_list, load_survival, synth_cohort, FileFormat,
    PhenotypeLabels, ProbeGeneMap,
};
use pnet_core::export::{export_dot, export_graphml};
use pnet_core::kernel::{kernel_convergence, KernelMatrix, KernelSpec};
use pnet_core::pipeline::{kfold_eval, mccv_eval, rank_cohort, EvaluationReport, PipelineConfig};
use pnet_core::similarity::{similarity_matrix, SimilarityMatrix};
use pnet_core::tsv;
use pnet_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "pnet",
    version,
    about = "rank and classify samples through a filtered patient-similarity network"
)]
struct Cli {
    /// Worker threads for the parallel sections (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clean an expression matrix: collapse probes, drop flat features,
    /// restrict to a gene list, derive labels from survival times.
    Prep(PrepArgs),
    /// Rank features by differential expression and keep the best.
    Select(SelectArgs),
    /// Build the sample-sample correlation matrix.
    Similarity(SimilarityArgs),
    /// Turn a similarity matrix into a kernel.
    Kernel(KernelArgs),
    /// Run the full pipeline and rank every sample.
    Rank(RankArgs),
    /// Repeated random train/test splits.
    EvalMccv(EvalMccvArgs),
    /// Repeated k-fold cross-validation (folds = samples gives
    /// leave-one-out).
    EvalCv(EvalCvArgs),
    /// Render a filtered kernel as a styled DOT or GraphML graph.
    ExportGraph(ExportArgs),
    /// Generate a synthetic labeled cohort.
    Synth(SynthArgs),
}

#[derive(Args)]
struct PrepArgs {
    /// Expression matrix (features x samples).
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "tsv")]
    format: String,
    /// Two-column probe -> gene map; probes collapse to the gene whose
    /// probe has the highest mean expression.
    #[arg(long)]
    probe_map: Option<PathBuf>,
    /// Drop features whose mean expression is below this.
    #[arg(long)]
    min_mean: Option<f64>,
    /// Drop features whose standard deviation is below this.
    #[arg(long)]
    min_sd: Option<f64>,
    /// Keep only the listed features (one id per line).
    #[arg(long)]
    gene_list: Option<PathBuf>,
    /// Two-column sample -> survival time table.
    #[arg(long, requires = "labels_out")]
    survival: Option<PathBuf>,
    /// Samples surviving strictly less than this are labeled positive.
    #[arg(long, default_value_t = 17.5)]
    cutoff: f64,
    /// Where to write the labels derived from --survival.
    #[arg(long)]
    labels_out: Option<PathBuf>,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "tsv")]
    format: String,
    /// Two-column sample -> 0/1 label table.
    #[arg(long)]
    labels: PathBuf,
    /// none, welch, moderated or moderated-unshrunk.
    #[arg(long, default_value = "welch")]
    method: String,
    #[arg(long, default_value_t = 100)]
    top_k: usize,
    /// Selected feature ids, one per line (feeds back into prep
    /// --gene-list).
    #[arg(long)]
    output: PathBuf,
    /// Full statistics table for every feature.
    #[arg(long)]
    stats_out: Option<PathBuf>,
}

#[derive(Args)]
struct SimilarityArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "tsv")]
    format: String,
    /// pearson, spearman or kendall.
    #[arg(long, default_value = "pearson")]
    measure: String,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct KernelArgs {
    /// Similarity matrix produced by the similarity subcommand.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "tsv")]
    format: String,
    /// identity, linear, poly, gaussian, laplacian, cauchy, invmq or rwk.
    #[arg(long, default_value = "rwk")]
    kernel: String,
    /// Walk length for rwk.
    #[arg(long, default_value_t = 8)]
    kernel_p: u32,
    /// Diagonal boost for rwk; values >= 2 keep the kernel positive
    /// semidefinite.
    #[arg(long, default_value_t = 2.0)]
    kernel_a: f64,
    /// How rwk treats negative correlations: clip or shift.
    #[arg(long, default_value = "clip")]
    negatives: String,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    degree: Option<u32>,
    /// Comma-separated walk lengths; prints how strongly each kernel
    /// correlates with the long-walk limit.
    #[arg(long, value_name = "P1,P2,...")]
    convergence: Option<String>,
    #[arg(long)]
    output: PathBuf,
}

/// Pipeline knobs shared by rank and the evaluation commands. Every flag
/// overrides the matching key of --config.
#[derive(Args)]
struct PipelineFlags {
    /// Flat `key = value` file with the pipeline configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    featsel: Option<String>,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long)]
    similarity: Option<String>,
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long)]
    kernel_p: Option<u32>,
    #[arg(long)]
    kernel_a: Option<f64>,
    #[arg(long)]
    negatives: Option<String>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    degree: Option<u32>,
    #[arg(long)]
    score: Option<String>,
    #[arg(long)]
    knn_k: Option<usize>,
    #[arg(long, value_name = "Q1,Q2,...")]
    edge_grid: Option<String>,
    #[arg(long, value_name = "Q1,Q2,...")]
    score_grid: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

impl PipelineFlags {
    /// Config file (if any) with the flags layered on top.
    fn merged(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        if let Some(v) = &self.featsel {
            cfg.set("featsel", v.clone());
        }
        if let Some(v) = self.top_k {
            cfg.set("top_k", v.to_string());
        }
        if let Some(v) = &self.similarity {
            cfg.set("similarity", v.clone());
        }
        if let Some(v) = &self.kernel {
            cfg.set("kernel", v.clone());
        }
        if let Some(v) = self.kernel_p {
            cfg.set("kernel_p", v.to_string());
        }
        if let Some(v) = self.kernel_a {
            cfg.set("kernel_a", v.to_string());
        }
        if let Some(v) = &self.negatives {
            cfg.set("negatives", v.clone());
        }
        if let Some(v) = self.sigma {
            cfg.set("sigma", v.to_string());
        }
        if let Some(v) = self.c {
            cfg.set("c", v.to_string());
        }
        if let Some(v) = self.alpha {
            cfg.set("alpha", v.to_string());
        }
        if let Some(v) = self.degree {
            cfg.set("degree", v.to_string());
        }
        if let Some(v) = &self.score {
            cfg.set("score", v.clone());
        }
        if let Some(v) = self.knn_k {
            cfg.set("knn_k", v.to_string());
        }
        if let Some(v) = &self.edge_grid {
            cfg.set("edge_grid", v.clone());
        }
        if let Some(v) = &self.score_grid {
            cfg.set("score_grid", v.clone());
        }
        if let Some(v) = self.seed {
            cfg.set("seed", v.to_string());
        }
        Ok(cfg)
    }

    fn build(&self, extra_keys: &[&str]) -> Result<(Config, PipelineConfig)> {
        let cfg = self.merged()?;
        let mut known: Vec<&str> = PIPELINE_KEYS.to_vec();
        known.extend_from_slice(extra_keys);
        for key in cfg.unknown_keys(&known) {
            log::warn!("config key '{key}' is not used by this command");
        }
        let pipe = pipeline_from_config(&cfg)?;
        Ok((cfg, pipe))
    }
}

#[derive(Args)]
struct RankArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "tsv")]
    format: String,
    #[arg(long)]
    labels: PathBuf,
    /// Per-sample scores, best first.
    #[arg(long)]
    output: PathBuf,
    /// Machine-readable run report.
    #[arg(long)]
    report: Option<PathBuf>,
    /// The filtered kernel the scores came from, for export-graph.
    #[arg(long)]
    kernel_out: Option<PathBuf>,
    #[command(flatten)]
    flags: PipelineFlags,
}

#[derive(Args)]
struct EvalMccvArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "tsv")]
    format: String,
    #[arg(long)]
    labels: PathBuf,
    /// Number of random splits (config key: rounds).
    #[arg(long)]
    rounds: Option<usize>,
    /// Training-set size (config key: train_size).
    #[arg(long)]
    train_size: Option<usize>,
    /// Full evaluation report (JSON).
    #[arg(long)]
    output: PathBuf,
    /// Per-round accuracies as a two-column table.
    #[arg(long)]
    accuracies_out: Option<PathBuf>,
    #[command(flatten)]
    flags: PipelineFlags,
}

#[derive(Args)]
struct EvalCvArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "tsv")]
    format: String,
    #[arg(long)]
    labels: PathBuf,
    /// Number of fold reshuffles (config key: rounds).
    #[arg(long)]
    rounds: Option<usize>,
    /// Fold count; equal to the sample count gives leave-one-out (config
    /// key: folds).
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    accuracies_out: Option<PathBuf>,
    #[command(flatten)]
    flags: PipelineFlags,
}

#[derive(Args)]
struct ExportArgs {
    /// Kernel matrix (typically the filtered kernel from rank
    /// --kernel-out).
    #[arg(long)]
    kernel: PathBuf,
    #[arg(long, default_value = "tsv")]
    format: String,
    #[arg(long)]
    labels: PathBuf,
    /// Scores from rank; order in the file does not matter.
    #[arg(long)]
    scores: PathBuf,
    #[arg(long)]
    dot: Option<PathBuf>,
    #[arg(long)]
    graphml: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 40)]
    samples: usize,
    #[arg(long, default_value_t = 1000)]
    features: usize,
    /// Features that actually separate the classes.
    #[arg(long, default_value_t = 50)]
    informative: usize,
    /// Mean shift on the informative features.
    #[arg(long, default_value_t = 1.0)]
    effect: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    labels_out: PathBuf,
}

fn parse_format(s: &str) -> Result<FileFormat> {
    s.parse()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::invalid(format!("cannot serialise report: {e}")))?;
    text.push('\n');
    tsv::write_atomic(path, text.as_bytes())
}

fn load_labels_for(matrix_ids: &[String], path: &Path) -> Result<Vec<bool>> {
    PhenotypeLabels::load(path)?.for_samples(matrix_ids)
}

fn cmd_prep(args: PrepArgs) -> Result<()> {
    let format = parse_format(&args.format)?;
    let mut matrix = load_expression(&args.input, format)?;
    log::info!(
        "loaded {} features x {} samples",
        matrix.n_features(),
        matrix.n_samples()
    );
    if let Some(map_path) = &args.probe_map {
        let map = ProbeGeneMap::load(map_path)?;
        let (collapsed, unmapped) = matrix.collapse_probes(&map)?;
        log::info!(
            "collapsed probes: {} -> {} features ({unmapped} unmapped probes dropped)",
            matrix.n_features(),
            collapsed.n_features()
        );
        matrix = collapsed;
    }
    if let Some(min_mean) = args.min_mean {
        let filtered = matrix.filter_by_mean(min_mean)?;
        log::info!(
            "mean filter >= {min_mean}: {} -> {} features",
            matrix.n_features(),
            filtered.n_features()
        );
        matrix = filtered;
    }
    if let Some(min_sd) = args.min_sd {
        let filtered = matrix.filter_by_sd(min_sd)?;
        log::info!(
            "sd filter >= {min_sd}: {} -> {} features",
            matrix.n_features(),
            filtered.n_features()
        );
        matrix = filtered;
    }
    if let Some(list_path) = &args.gene_list {
        let genes = load_gene_list(list_path)?;
        let filtered = matrix.filter_by_gene_list(&genes)?;
        log::info!(
            "gene list: {} -> {} features",
            matrix.n_features(),
            filtered.n_features()
        );
        matrix = filtered;
    }
    if let Some(surv_path) = &args.survival {
        let survival = load_survival(surv_path)?;
        let labels = derive_labels(&survival, args.cutoff)?;
        let out = args.labels_out.as_ref().expect("clap enforces labels_out");
        labels.save(out)?;
        log::info!(
            "derived {} labels ({} positive, cutoff {})",
            labels.len(),
            labels.n_positive(),
            args.cutoff
        );
    }
    matrix.save(&args.output, format)?;
    log::info!(
        "wrote {} features x {} samples to {}",
        matrix.n_features(),
        matrix.n_samples(),
        args.output.display()
    );
    Ok(())
}

fn cmd_select(args: SelectArgs) -> Result<()> {
    let format = parse_format(&args.format)?;
    let matrix = load_expression(&args.input, format)?;
    let positive = load_labels_for(matrix.sample_ids(), &args.labels)?;
    let method = args.method.parse()?;
    let stats = match method {
        pnet_core::pipeline::FeatSelMethod::None => {
            return Err(Error::invalid(
                "select needs a statistic; use welch, moderated or moderated-unshrunk",
            ))
        }
        pnet_core::pipeline::FeatSelMethod::Welch => {
            pnet_core::featsel::welch_t(&matrix, &positive)?
        }
        pnet_core::pipeline::FeatSelMethod::Moderated { shrinkage } => {
            pnet_core::featsel::moderated_t(&matrix, &positive, shrinkage)?
        }
    };
    let selected = pnet_core::featsel::select_top_k(&stats, args.top_k)?;
    let mut out = String::new();
    for id in &selected {
        out.push_str(id);
        out.push('\n');
    }
    tsv::write_atomic(&args.output, out.as_bytes())?;
    log::info!("kept {} of {} features", selected.len(), stats.len());
    if let Some(stats_path) = &args.stats_out {
        let mut table = String::from("feature_id\tt\tdf\tp\tdegenerate\n");
        for s in &stats {
            table.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                s.feature_id, s.t, s.df, s.p, s.degenerate
            ));
        }
        tsv::write_atomic(stats_path, table.as_bytes())?;
    }
    Ok(())
}

fn cmd_similarity(args: SimilarityArgs) -> Result<()> {
    let format = parse_format(&args.format)?;
    let matrix = load_expression(&args.input, format)?;
    let kind = args.measure.parse()?;
    let w = similarity_matrix(&matrix, kind)?;
    w.save(&args.output, format)?;
    log::info!(
        "wrote {}x{} {kind} similarity to {}",
        w.n(),
        w.n(),
        args.output.display()
    );
    Ok(())
}

fn cmd_kernel(args: KernelArgs) -> Result<()> {
    let format = parse_format(&args.format)?;
    let w = SimilarityMatrix::load(&args.input, format)?;

    // reuse the config-table plumbing so flag and config spellings agree
    let mut cfg = Config::default();
    cfg.set("kernel", args.kernel.clone());
    cfg.set("kernel_p", args.kernel_p.to_string());
    cfg.set("kernel_a", args.kernel_a.to_string());
    cfg.set("negatives", args.negatives.clone());
    if let Some(v) = args.sigma {
        cfg.set("sigma", v.to_string());
    }
    if let Some(v) = args.c {
        cfg.set("c", v.to_string());
    }
    if let Some(v) = args.alpha {
        cfg.set("alpha", v.to_string());
    }
    if let Some(v) = args.degree {
        cfg.set("degree", v.to_string());
    }
    let spec = kernel_from_config(&cfg)?;

    if let Some(list) = &args.convergence {
        let steps: Vec<u32> = list
            .split(',')
            .map(|part| {
                part.trim().parse::<u32>().map_err(|_| {
                    Error::invalid(format!("--convergence: cannot parse step '{}'", part.trim()))
                })
            })
            .collect::<Result<_>>()?;
        let (a, negatives) = match spec {
            KernelSpec::RandomWalk { a, negatives, .. } => (a, negatives),
            _ => {
                return Err(Error::invalid(
                    "--convergence only makes sense for the random walk kernel",
                ))
            }
        };
        println!("p\tcorrelation_with_limit");
        for (p, corr) in kernel_convergence(w.values(), &steps, a, negatives)? {
            println!("{p}\t{corr}");
        }
    }

    let k = spec.apply(&w)?;
    k.save(&args.output, format)?;
    log::info!("wrote kernel '{}' to {}", k.provenance(), args.output.display());
    Ok(())
}

#[derive(Serialize)]
struct RankRow<'a> {
    sample_id: &'a str,
    score: f64,
    positive: bool,
}

#[derive(Serialize)]
struct RankReportFile<'a> {
    config: &'a BTreeMap<String, String>,
    quantile: f64,
    loo_auc: f64,
    cutoff: f64,
    selected_features: &'a [String],
    ranking: Vec<RankRow<'a>>,
}

fn cmd_rank(args: RankArgs) -> Result<()> {
    let format = parse_format(&args.format)?;
    let matrix = load_expression(&args.input, format)?;
    let positive = load_labels_for(matrix.sample_ids(), &args.labels)?;
    let (_, pipe) = args.flags.build(&[])?;

    let out = rank_cohort(&matrix, &positive, &pipe)?;
    let ranked_ids: Vec<String> = out
        .order
        .iter()
        .map(|&i| out.sample_ids[i].clone())
        .collect();
    let ranked_scores: Vec<f64> = out.order.iter().map(|&i| out.scores[i]).collect();
    tsv::write_scores(&args.output, &ranked_ids, &ranked_scores)?;
    log::info!(
        "ranked {} samples (edge quantile {}, internal AUC {})",
        ranked_ids.len(),
        out.threshold.quantile,
        out.threshold.auc
    );

    if let Some(report_path) = &args.report {
        let report = RankReportFile {
            config: &out.config,
            quantile: out.threshold.quantile,
            loo_auc: out.threshold.auc,
            cutoff: out.cutoff,
            selected_features: &out.selected_features,
            ranking: out
                .order
                .iter()
                .map(|&i| RankRow {
                    sample_id: &out.sample_ids[i],
                    score: out.scores[i],
                    positive: positive[i],
                })
                .collect(),
        };
        write_json(report_path, &report)?;
    }

    if let Some(kernel_path) = &args.kernel_out {
        let filtered = KernelMatrix::new(
            out.sample_ids.clone(),
            out.filtered_kernel.clone(),
            format!("filtered(quantile={}, cutoff={})", out.threshold.quantile, out.cutoff),
        )?;
        filtered.save(kernel_path, format)?;
    }
    Ok(())
}

fn write_accuracies(path: &Path, report: &EvaluationReport) -> Result<()> {
    let mut out = String::from("round\taccuracy\n");
    for r in &report.rounds {
        if let Some(acc) = r.accuracy {
            out.push_str(&format!("{}\t{}\n", r.round, acc));
        }
    }
    tsv::write_atomic(path, out.as_bytes())
}

fn cmd_eval_mccv(args: EvalMccvArgs) -> Result<()> {
    let format = parse_format(&args.format)?;
    let matrix = load_expression(&args.input, format)?;
    let positive = load_labels_for(matrix.sample_ids(), &args.labels)?;

    let mut cfg = args.flags.merged()?;
    if let Some(v) = args.rounds {
        cfg.set("rounds", v.to_string());
    }
    if let Some(v) = args.train_size {
        cfg.set("train_size", v.to_string());
    }
    let mut known = PIPELINE_KEYS.to_vec();
    known.extend_from_slice(&["rounds", "train_size"]);
    for key in cfg.unknown_keys(&known) {
        log::warn!("config key '{key}' is not used by this command");
    }
    let pipe = pipeline_from_config(&cfg)?;
    let rounds = cfg.get_or("rounds", 100usize)?;
    let train_size = cfg.get_or("train_size", 0usize)?;
    if train_size == 0 {
        return Err(Error::invalid(
            "train size missing; pass --train-size or set train_size in the config",
        ));
    }

    let report = mccv_eval(&matrix, &positive, &pipe, rounds, train_size)?;
    write_json(&args.output, &report)?;
    if let Some(acc_path) = &args.accuracies_out {
        write_accuracies(acc_path, &report)?;
    }
    log::info!(
        "{} rounds: accuracy {:.4} (sem {:.4})",
        report.summary.rounds_completed,
        report.summary.mean_accuracy,
        report.summary.sem_accuracy
    );
    Ok(())
}

fn cmd_eval_cv(args: EvalCvArgs) -> Result<()> {
    let format = parse_format(&args.format)?;
    let matrix = load_expression(&args.input, format)?;
    let positive = load_labels_for(matrix.sample_ids(), &args.labels)?;

    let mut cfg = args.flags.merged()?;
    if let Some(v) = args.rounds {
        cfg.set("rounds", v.to_string());
    }
    if let Some(v) = args.folds {
        cfg.set("folds", v.to_string());
    }
    let mut known = PIPELINE_KEYS.to_vec();
    known.extend_from_slice(&["rounds", "folds"]);
    for key in cfg.unknown_keys(&known) {
        log::warn!("config key '{key}' is not used by this command");
    }
    let pipe = pipeline_from_config(&cfg)?;
    let rounds = cfg.get_or("rounds", 1usize)?;
    let folds = cfg.get_or("folds", 0usize)?;
    if folds == 0 {
        return Err(Error::invalid(
            "fold count missing; pass --folds or set folds in the config",
        ));
    }

    let report = kfold_eval(&matrix, &positive, &pipe, rounds, folds)?;
    write_json(&args.output, &report)?;
    if let Some(acc_path) = &args.accuracies_out {
        write_accuracies(acc_path, &report)?;
    }
    log::info!(
        "{} rounds x {} folds: accuracy {:.4} (sem {:.4}), {} aborted",
        report.summary.rounds_completed,
        folds,
        report.summary.mean_accuracy,
        report.summary.sem_accuracy,
        report.summary.rounds_aborted
    );
    Ok(())
}

fn cmd_export(args: ExportArgs) -> Result<()> {
    if args.dot.is_none() && args.graphml.is_none() {
        return Err(Error::invalid("pass --dot and/or --graphml"));
    }
    let format = parse_format(&args.format)?;
    let kernel = KernelMatrix::load(&args.kernel, format)?;
    let ids = kernel.sample_ids().to_vec();
    let positive = load_labels_for(&ids, &args.labels)?;
    let scores = tsv::read_scores(&args.scores, &ids)?;
    if let Some(path) = &args.dot {
        export_dot(path, &ids, &positive, &scores, kernel.values())?;
        log::info!("wrote {}", path.display());
    }
    if let Some(path) = &args.graphml {
        export_graphml(path, &ids, &positive, &scores, kernel.values())?;
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let (matrix, labels) = synth_cohort(
        args.samples,
        args.features,
        args.informative,
        args.effect,
        args.seed,
    )?;
    matrix.save(&args.output, FileFormat::Tsv)?;
    labels.save(&args.labels_out)?;
    log::info!(
        "wrote {} features x {} samples ({} positive)",
        matrix.n_features(),
        matrix.n_samples(),
        labels.n_positive()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Error::invalid(format!("cannot size the thread pool: {e}")))?;
    }
    match cli.command {
        Command::Prep(args) => cmd_prep(args),
        Command::Select(args) => cmd_select(args),
        Command::Similarity(args) => cmd_similarity(args),
        Command::Kernel(args) => cmd_kernel(args),
        Command::Rank(args) => cmd_rank(args),
        Command::EvalMccv(args) => cmd_eval_mccv(args),
        Command::EvalCv(args) => cmd_eval_cv(args),
        Command::ExportGraph(args) => cmd_export(args),
        Command::Synth(args) => cmd_synth(args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let requested = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if requested {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err @ (Error::Data(_) | Error::Invalid(_) | Error::Io(_))) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}
