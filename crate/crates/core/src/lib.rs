//! Transductive ranking and classification of samples over similarity networks.
//!
//! The pipeline implemented here builds a weighted graph whose nodes are
//! samples (typically patients) and whose edge weights are correlations
//! between expression profiles, turns that graph into a kernel matrix,
//! prunes weak edges with an internally cross-validated quantile threshold
//! and ranks every node with a kernelized score of its similarity to the
//! labelled positive nodes.
//!
//! Modules, in pipeline order:
//!
//! * [`dataset`] — expression-matrix ingestion, probe collapsing, variance
//!   filters, label derivation and synthetic cohorts;
//! * [`featsel`] — Welch and moderated t statistics plus top-k selection;
//! * [`similarity`] — Pearson / Spearman / Kendall sample-similarity matrices;
//! * [`kernel`] — the p-step random walk kernel and pointwise kernels;
//! * [`scoring`] — the six kernelized score functions and sample ranking;
//! * [`threshold`] — quantile edge filtering and its leave-one-out optimizer;
//! * [`pipeline`] — leave-one-out / k-fold / Monte Carlo evaluation harnesses;
//! * [`export`] — DOT and GraphML graph export for visual inspection.
//!
//! The `pnet` binary in this crate wires the modules into a command-line
//! workflow; the companion `pnet-py` crate exposes the same operations to
//! Python.

pub mod config;
pub mod dataset;
pub mod error;
pub mod export;
pub mod featsel;
pub mod kernel;
pub mod pipeline;
pub mod scoring;
pub mod similarity;
pub mod threshold;
pub mod tsv;

pub use error::{Error, Result};
