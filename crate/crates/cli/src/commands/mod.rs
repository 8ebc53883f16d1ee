pub mod extract;
pub mod measure;
pub mod rules;
pub mod score;
pub mod selfcheck;
pub mod synth;

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use geonas::pipeline::{all_measure_names, ScoreConfig};
use geonas::ArchScore;

use crate::config::Overrides;
use crate::Knobs;

/// Builds the effective configuration from the knob flags.
pub fn build_config(knobs: &Knobs, master_seed: u64) -> Result<ScoreConfig> {
    let mut cfg = if knobs.full {
        ScoreConfig::reference(master_seed)
    } else {
        ScoreConfig::desk(master_seed)
    };
    let mut ov = Overrides::new();
    if let Some(path) = &knobs.config {
        ov.load_file(path)?;
    }
    for pair in &knobs.sets {
        ov.set_pair(pair)?;
    }
    if let Some(v) = knobs.inits {
        ov.set("inits", v);
    }
    if let Some(v) = knobs.batches {
        ov.set("batches", v);
    }
    if let Some(v) = knobs.batch_size {
        ov.set("batch_size", v);
    }
    if let Some(list) = &knobs.only {
        ov.set("measures", list);
    }
    ov.apply(&mut cfg)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Resolves --arch / --arch-file into a nonempty architecture list.
pub fn load_archs(input: &crate::ArchInput) -> Result<Vec<String>> {
    let archs = match (&input.arch, &input.arch_file) {
        (Some(a), None) => vec![a.clone()],
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(String::from)
                .collect()
        }
        _ => bail!("exactly one of --arch or --arch-file is required"),
    };
    if archs.is_empty() {
        bail!("no architectures given");
    }
    Ok(archs)
}

/// Builds the image source from --synthetic / --data.
pub fn load_source(input: &crate::DataInput) -> Result<geonas::BatchSource> {
    if input.synthetic != input.data.is_empty() {
        bail!("exactly one of --synthetic or --data is required");
    }
    if input.synthetic {
        return Ok(geonas::BatchSource::Synthetic);
    }
    let (images, labels) = geonas::io::cifar::read_cifar_binary(&input.data)?;
    let pool = geonas::pipeline::ImagePool::new(images, Some(labels))?;
    Ok(geonas::BatchSource::Pool(pool))
}

/// Column order for score tables: canonical order first, then anything
/// else alphabetically.
pub fn ordered_measures(scores: &[ArchScore]) -> Vec<String> {
    let present: BTreeSet<&String> = scores
        .iter()
        .flat_map(|s| s.measures.stats.keys())
        .collect();
    let mut out: Vec<String> = all_measure_names()
        .into_iter()
        .filter(|m| present.contains(m))
        .collect();
    for name in present {
        if !out.iter().any(|m| m == name) {
            out.push(name.clone());
        }
    }
    out
}

pub fn write_json_pretty(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    geonas::io::atomic_write(path, &bytes)?;
    Ok(())
}
