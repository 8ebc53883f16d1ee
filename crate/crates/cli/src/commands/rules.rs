use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use geonas::io::csvio::write_scores_csv;
use geonas::pipeline::{rank, RuleSet, Verdict};
use geonas::ArchScore;

use super::score::{load_rule_sets, ScoreRecord};
use super::{ordered_measures, write_json_pretty};

#[derive(Args, Debug)]
pub struct FilterArgs {
    /// Score JSON records produced by `geonas score`.
    #[arg(value_name = "FILE", num_args = 1..)]
    scores: Vec<PathBuf>,
    /// Rule sets to apply: built-in names, comma-separated.
    #[arg(long, default_value = "avoid-low", value_name = "LIST")]
    rules: String,
    /// JSON file with custom rule sets (used instead of --rules).
    #[arg(long, value_name = "FILE", conflicts_with = "rules")]
    rules_file: Option<PathBuf>,
    /// CSV with the surviving architectures.
    #[arg(long, value_name = "FILE")]
    out_csv: PathBuf,
    /// JSON verdict map for every input architecture.
    #[arg(long, value_name = "FILE")]
    out_json: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RankArgs {
    /// Score JSON records produced by `geonas score`.
    #[arg(value_name = "FILE", num_args = 1..)]
    scores: Vec<PathBuf>,
    /// Measure to sort by, ascending; failures sort last.
    #[arg(long, default_value = "fishers", value_name = "MEASURE")]
    by: String,
    #[arg(long, default_value = "avoid-low,top-band", value_name = "LIST")]
    rules: String,
    #[arg(long, value_name = "FILE", conflicts_with = "rules")]
    rules_file: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    out_csv: PathBuf,
    #[arg(long, value_name = "FILE")]
    out_json: Option<PathBuf>,
}

fn load_scores(paths: &[PathBuf]) -> Result<Vec<ArchScore>> {
    let mut out = Vec::with_capacity(paths.len());
    for path in paths {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading score {}", path.display()))?;
        let score = match serde_json::from_str::<ScoreRecord>(&text) {
            Ok(rec) => rec.score,
            Err(_) => serde_json::from_str::<ArchScore>(&text)
                .with_context(|| format!("parsing score {}", path.display()))?,
        };
        out.push(score);
    }
    Ok(out)
}

fn judge(
    scores: &mut [ArchScore],
    rule_sets: &[RuleSet],
) -> Result<BTreeMap<String, BTreeMap<String, Verdict>>> {
    let mut verdicts = BTreeMap::new();
    for score in scores.iter_mut() {
        score.verdicts.clear();
        score.attach_verdicts(rule_sets)?;
        verdicts.insert(score.arch.clone(), score.verdicts.clone());
    }
    Ok(verdicts)
}

#[derive(serde::Serialize)]
struct VerdictReport {
    schema: u32,
    rule_sets: Vec<String>,
    verdicts: BTreeMap<String, BTreeMap<String, Verdict>>,
}

fn write_outputs(
    scores: &[ArchScore],
    rule_sets: &[RuleSet],
    verdicts: BTreeMap<String, BTreeMap<String, Verdict>>,
    out_csv: &Path,
    out_json: Option<&Path>,
) -> Result<()> {
    let measures = ordered_measures(scores);
    let rule_names: Vec<String> = rule_sets.iter().map(|r| r.name.clone()).collect();
    write_scores_csv(out_csv, scores, &measures, &rule_names)?;
    if let Some(path) = out_json {
        let report = VerdictReport {
            schema: geonas::io::manifest::SCHEMA_VERSION,
            rule_sets: rule_names,
            verdicts,
        };
        write_json_pretty(path, &report)?;
    }
    Ok(())
}

pub fn run_filter(args: FilterArgs) -> Result<bool> {
    let rule_sets = load_rule_sets(&args.rules, args.rules_file.as_deref())?;
    let mut scores = load_scores(&args.scores)?;
    let verdicts = judge(&mut scores, &rule_sets)?;
    let kept: Vec<ArchScore> = scores
        .iter()
        .filter(|s| s.verdicts.values().all(|v| *v == Verdict::Keep))
        .cloned()
        .collect();
    write_outputs(
        &kept,
        &rule_sets,
        verdicts,
        &args.out_csv,
        args.out_json.as_deref(),
    )?;
    println!(
        "kept {} of {} architectures -> {}",
        kept.len(),
        scores.len(),
        args.out_csv.display()
    );
    Ok(true)
}

pub fn run_rank(args: RankArgs) -> Result<bool> {
    let rule_sets = load_rule_sets(&args.rules, args.rules_file.as_deref())?;
    let mut scores = load_scores(&args.scores)?;
    let verdicts = judge(&mut scores, &rule_sets)?;
    let ranked = rank(&scores, &args.by)?;
    write_outputs(
        &ranked,
        &rule_sets,
        verdicts,
        &args.out_csv,
        args.out_json.as_deref(),
    )?;
    println!(
        "{} architectures ranked by {} -> {}",
        ranked.len(),
        args.by,
        args.out_csv.display()
    );
    Ok(true)
}
