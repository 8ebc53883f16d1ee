use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Args;
use geonas::io::csvio::write_scores_csv;
use geonas::io::manifest::RunManifest;
use geonas::pipeline::{rank, rule_set, score_architecture, RuleSet};
use geonas::ArchScore;

use super::{build_config, load_archs, load_source, ordered_measures, write_json_pretty};
use crate::{ArchInput, DataInput, Knobs};

#[derive(Args, Debug)]
pub struct ScoreArgs {
    #[command(flatten)]
    arch: ArchInput,
    #[command(flatten)]
    data: DataInput,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for per-architecture JSON records and the ranked table.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    /// Rule sets to judge with: built-in names, comma-separated.
    #[arg(long, default_value = "avoid-low,top-band", value_name = "LIST")]
    rules: String,
    /// JSON file with custom rule sets (used instead of --rules).
    #[arg(long, value_name = "FILE", conflicts_with = "rules")]
    rules_file: Option<PathBuf>,
    /// Measure the ranked table is sorted by, ascending.
    #[arg(long, default_value = "fishers", value_name = "MEASURE")]
    rank_by: String,
    #[command(flatten)]
    knobs: Knobs,
}

/// On-disk JSON for one scored architecture.
#[derive(serde::Serialize, serde::Deserialize)]
pub struct ScoreRecord {
    pub schema: u32,
    pub manifest: RunManifest,
    #[serde(flatten)]
    pub score: ArchScore,
}

pub fn load_rule_sets(names: &str, file: Option<&Path>) -> Result<Vec<RuleSet>> {
    let sets: Vec<RuleSet> = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading rules {}", path.display()))?;
            match serde_json::from_str::<Vec<RuleSet>>(&text) {
                Ok(v) => v,
                Err(_) => vec![serde_json::from_str::<RuleSet>(&text)
                    .with_context(|| format!("parsing rules {}", path.display()))?],
            }
        }
        None => names
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|name| rule_set(name).map_err(Into::into))
            .collect::<Result<_>>()?,
    };
    for rs in &sets {
        for rule in &rs.rules {
            rule.validate()?;
        }
    }
    Ok(sets)
}

pub fn run(args: ScoreArgs) -> Result<bool> {
    let cfg = build_config(&args.knobs, args.seed)?;
    let archs = load_archs(&args.arch)?;
    let source = load_source(&args.data)?;
    let rule_sets = load_rule_sets(&args.rules, args.rules_file.as_deref())?;
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;

    let mut manifest = RunManifest::new("score", cfg.master_seed, &cfg.hash());
    for path in &args.data.data {
        manifest = manifest.with_input(path)?;
    }

    let mut scores = Vec::with_capacity(archs.len());
    for (ai, arch) in archs.iter().enumerate() {
        let start = Instant::now();
        let mut score =
            score_architecture(arch, &source, &cfg).with_context(|| format!("arch {ai}"))?;
        score.attach_verdicts(&rule_sets)?;
        let record = ScoreRecord {
            schema: geonas::io::manifest::SCHEMA_VERSION,
            manifest: manifest.clone(),
            score,
        };
        write_json_pretty(&args.out_dir.join(format!("score{ai:04}.json")), &record)?;
        let stats = record.score.measures.stats.values();
        let failed: usize = stats.clone().map(|s| usize::from(s.failures > 0)).sum();
        let soft: usize = stats.map(|s| usize::from(s.conditions > 0)).sum();
        println!(
            "arch {ai}: {:.1}s, {} measures, {failed} failed, {soft} with conditions",
            start.elapsed().as_secs_f64(),
            record.score.measures.stats.len(),
        );
        scores.push(record.score);
    }

    let ranked = rank(&scores, &args.rank_by)?;
    let measures = ordered_measures(&ranked);
    let rule_names: Vec<String> = rule_sets.iter().map(|r| r.name.clone()).collect();
    let csv_path = args.out_dir.join("scores.csv");
    write_scores_csv(&csv_path, &ranked, &measures, &rule_names)?;
    println!(
        "{} architectures ranked by {} -> {}",
        ranked.len(),
        args.rank_by,
        csv_path.display()
    );
    Ok(true)
}
