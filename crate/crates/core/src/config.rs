//! Flat `key = value` run configuration.
//!
//! The format is a plain text file: one assignment per line, `#` starts a
//! comment, blank lines are ignored. Keys may not repeat — a silently
//! shadowed value in a config that drives hours of computation is the kind
//! of bug nobody finds twice. Command-line flags overwrite config values
//! through [`Config::set`].

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kernel::{KernelSpec, NegativePolicy};
use crate::pipeline::PipelineConfig;
use crate::scoring::ScoreSpec;
use crate::threshold::default_quantile_grid;

#[derive(Debug, Clone, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::invalid(format!(
                    "config line {}: expected 'key = value', got '{line}'",
                    lineno + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(Error::invalid(format!(
                    "config line {}: empty key",
                    lineno + 1
                )));
            }
            if values.insert(key.to_string(), value.to_string()).is_some() {
                return Err(Error::invalid(format!(
                    "config line {}: key '{key}' assigned twice",
                    lineno + 1
                )));
            }
        }
        Ok(Config { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io_at(path, e))?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Overwrites (or adds) a value; used for command-line overrides.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.to_string(), value.into());
    }

    /// Typed lookup falling back to a default when the key is absent.
    pub fn get_or<T>(&self, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.values.get(key) {
            None => Ok(default),
            Some(raw) => raw.parse().map_err(|e| {
                Error::invalid(format!("config key '{key}': cannot parse '{raw}' ({e})"))
            }),
        }
    }

    /// Comma-separated list of floats, e.g. `edge_grid = 0,0.25,0.5`.
    pub fn get_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(raw) = self.values.get(key) else {
            return Ok(None);
        };
        raw.split(',')
            .map(|part| {
                part.trim().parse::<f64>().map_err(|e| {
                    Error::invalid(format!(
                        "config key '{key}': cannot parse '{}' ({e})",
                        part.trim()
                    ))
                })
            })
            .collect::<Result<Vec<f64>>>()
            .map(Some)
    }

    /// Keys present in the file that the caller does not recognise.
    pub fn unknown_keys(&self, known: &[&str]) -> Vec<String> {
        self.values
            .keys()
            .filter(|k| !known.contains(&k.as_str()))
            .cloned()
            .collect()
    }
}

/// Keys consumed by [`pipeline_from_config`]; subcommands extend this list
/// with their own.
pub const PIPELINE_KEYS: &[&str] = &[
    "featsel",
    "top_k",
    "similarity",
    "kernel",
    "kernel_p",
    "kernel_a",
    "negatives",
    "sigma",
    "c",
    "alpha",
    "degree",
    "score",
    "knn_k",
    "edge_grid",
    "score_grid",
    "seed",
];

/// Builds the kernel choice out of the `kernel` name plus its parameter keys.
pub fn kernel_from_config(cfg: &Config) -> Result<KernelSpec> {
    let name = cfg.get("kernel").unwrap_or("rwk");
    let spec = match name {
        "identity" => KernelSpec::Identity,
        "linear" => KernelSpec::Linear {
            c: cfg.get_or("c", 0.0)?,
        },
        "poly" | "polynomial" => KernelSpec::Polynomial {
            alpha: cfg.get_or("alpha", 1.0)?,
            c: cfg.get_or("c", 0.0)?,
            degree: cfg.get_or("degree", 2u32)?,
        },
        "gaussian" => KernelSpec::Gaussian {
            sigma: cfg.get_or("sigma", 1.0)?,
        },
        "laplacian" => KernelSpec::Laplacian {
            sigma: cfg.get_or("sigma", 1.0)?,
        },
        "cauchy" => KernelSpec::Cauchy {
            sigma: cfg.get_or("sigma", 1.0)?,
        },
        "invmq" => KernelSpec::InverseMultiquadric {
            c: cfg.get_or("c", 1.0)?,
        },
        "rwk" | "random-walk" => KernelSpec::RandomWalk {
            p: cfg.get_or("kernel_p", 8u32)?,
            a: cfg.get_or("kernel_a", 2.0)?,
            negatives: cfg.get_or("negatives", NegativePolicy::Clip)?,
        },
        other => {
            return Err(Error::invalid(format!(
                "unknown kernel '{other}' (expected identity, linear, poly, gaussian, laplacian, cauchy, invmq or rwk)"
            )))
        }
    };
    spec.validate()?;
    Ok(spec)
}

/// Assembles the pipeline configuration, filling gaps with the defaults.
pub fn pipeline_from_config(cfg: &Config) -> Result<PipelineConfig> {
    let defaults = PipelineConfig::default();
    let score = ScoreSpec::parse(
        cfg.get("score").unwrap_or("nn"),
        cfg.get_or("knn_k", 3usize)?,
    )?;
    Ok(PipelineConfig {
        featsel: cfg.get_or("featsel", defaults.featsel)?,
        top_k: cfg.get_or("top_k", defaults.top_k)?,
        similarity: cfg.get_or("similarity", defaults.similarity)?,
        kernel: kernel_from_config(cfg)?,
        score,
        edge_grid: cfg.get_list("edge_grid")?.unwrap_or_else(default_quantile_grid),
        score_grid: cfg
            .get_list("score_grid")?
            .unwrap_or_else(default_quantile_grid),
        seed: cfg.get_or("seed", defaults.seed)?,
    })
}
