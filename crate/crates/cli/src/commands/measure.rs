use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use geonas::io::manifest::RunManifest;
use geonas::pipeline::{aggregate, measure_cloud, CloudMeasures, InitMeasures, MeasureVector};

use super::{build_config, write_json_pretty};
use crate::Knobs;

#[derive(Args, Debug)]
pub struct MeasureArgs {
    /// Feature files (.fmat or .csv); each is measured as one cloud.
    #[arg(value_name = "FILE", num_args = 1..)]
    files: Vec<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(flatten)]
    knobs: Knobs,
}

#[derive(serde::Serialize)]
struct FileMeasures {
    file: String,
    #[serde(flatten)]
    cloud: CloudMeasures,
}

#[derive(serde::Serialize)]
struct MeasureReport {
    schema: u32,
    manifest: RunManifest,
    clouds: Vec<FileMeasures>,
    aggregate: MeasureVector,
}

pub fn run(args: MeasureArgs) -> Result<bool> {
    let cfg = build_config(&args.knobs, 0)?;
    let measures = cfg.measures.clone();

    let mut manifest = RunManifest::new("measure", 0, &cfg.hash());
    let mut clouds = Vec::with_capacity(args.files.len());
    let mut inits = Vec::with_capacity(args.files.len());
    for (i, path) in args.files.iter().enumerate() {
        let fm = super::synth::read_features(path)?;
        let cloud = measure_cloud(&fm, &measures, &cfg.estimator)?;
        manifest = manifest.with_input(path)?;
        inits.push(InitMeasures {
            init_index: i,
            init_seed: 0,
            cloud: cloud.clone(),
            aborted: None,
        });
        clouds.push(FileMeasures {
            file: path.display().to_string(),
            cloud,
        });
    }

    let succeeded = clouds.iter().any(|c| !c.cloud.values.is_empty());
    let report = MeasureReport {
        schema: geonas::io::manifest::SCHEMA_VERSION,
        manifest,
        clouds,
        aggregate: aggregate(&inits, &measures),
    };
    match &args.out {
        Some(path) => write_json_pretty(path, &report)?,
        None => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    Ok(succeeded)
}
