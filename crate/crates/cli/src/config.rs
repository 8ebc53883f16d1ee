//! Flat key=value configuration with CLI overrides.
//!
//! Values are applied in order: a config file first, then `--set` pairs,
//! then dedicated flags, so later sources win.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use geonas::pipeline::{known_measure, BatchMode, ScoreConfig};

#[derive(Debug, Default, Clone)]
pub struct Overrides {
    entries: Vec<(String, String)>,
}

impl Overrides {
    pub fn new() -> Self {
        Self::default()
    }

    /// Reads `key = value` lines; blank lines and `#` comments are
    /// skipped.
    pub fn load_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!(
                    "{}:{}: expected key=value, got {line:?}",
                    path.display(),
                    lineno + 1
                );
            };
            self.entries
                .push((key.trim().to_string(), value.trim().to_string()));
        }
        Ok(())
    }

    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let Some((key, value)) = pair.split_once('=') else {
            bail!("--set expects key=value, got {pair:?}");
        };
        self.set(key.trim(), value.trim());
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn apply(&self, cfg: &mut ScoreConfig) -> Result<()> {
        for (key, value) in &self.entries {
            apply_one(cfg, key, value).with_context(|| format!("config key {key}"))?;
        }
        Ok(())
    }
}

fn parse<T: std::str::FromStr>(value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| anyhow::anyhow!("bad value {value:?}: {e}"))
}

fn apply_one(cfg: &mut ScoreConfig, key: &str, value: &str) -> Result<()> {
    match key {
        "inits" => cfg.inits = parse(value)?,
        "batches" => cfg.batches = parse(value)?,
        "batch_size" => cfg.batch_size = parse(value)?,
        "gain" => cfg.gain = parse(value)?,
        "sample_bias" => cfg.sample_bias = parse(value)?,
        "batch_mode" => {
            cfg.batch_mode = match value {
                "concatenate" => BatchMode::Concatenate,
                "per_batch" => BatchMode::PerBatch,
                other => bail!("bad value {other:?}: expected concatenate or per_batch"),
            }
        }
        "measures" => {
            let names: Vec<String> = value
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
            let mut seen = BTreeSet::new();
            for n in &names {
                if !known_measure(n) {
                    bail!("unknown measure {n:?}");
                }
                if !seen.insert(n.clone()) {
                    bail!("measure {n:?} listed twice");
                }
            }
            cfg.measures = names;
        }
        "cells_per_stage" => cfg.network.cells_per_stage = parse(value)?,
        "channels" => cfg.network.initial_channels = parse(value)?,
        "input_channels" => cfg.network.input_shape.0 = parse(value)?,
        "input_height" => cfg.network.input_shape.1 = parse(value)?,
        "input_width" => cfg.network.input_shape.2 = parse(value)?,
        "bn_epsilon" => cfg.network.bn_epsilon = parse(value)?,
        "variance_threshold" => cfg.estimator.variance_threshold = parse(value)?,
        "alpha_fo" => cfg.estimator.alpha_fo = parse(value)?,
        "corrint_k1" => cfg.estimator.corrint_k1 = parse(value)?,
        "corrint_k2" => cfg.estimator.corrint_k2 = parse(value)?,
        "mle_k" => cfg.estimator.mle_k = parse(value)?,
        "mada_k" => cfg.estimator.mada_k = parse(value)?,
        "mom_k" => cfg.estimator.mom_k = parse(value)?,
        "mind_k" => cfg.estimator.mind_k = parse(value)?,
        "discard_fraction" => cfg.estimator.discard_fraction = parse(value)?,
        "carter_k" => cfg.estimator.carter_k = parse(value)?,
        "carter_seed" => cfg.estimator.carter_seed = parse(value)?,
        "carter_subsets" => {
            let sizes: Result<Vec<usize>> =
                value.split(',').map(|s| parse(s.trim())).collect();
            cfg.estimator.carter_subsets = Some(sizes?);
        }
        "exclusion_limit" => cfg.estimator.exclusion_limit = parse(value)?,
        other => bail!("unknown config key {other:?}"),
    }
    Ok(())
}
