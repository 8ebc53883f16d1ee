use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use geonas::io::manifest::RunManifest;
use geonas::io::{atomic_write, fmat};
use geonas::net::InitSpec;
use geonas::pipeline::{init_seed, make_batches};
use geonas::{build_initialized, parse_arch_string, FeatureMatrix};

use super::{build_config, load_archs, load_source};
use crate::{ArchInput, DataInput, Knobs};

#[derive(Args, Debug)]
pub struct ExtractArgs {
    #[command(flatten)]
    arch: ArchInput,
    #[command(flatten)]
    data: DataInput,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for the per-init feature files and the run manifest.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    #[command(flatten)]
    knobs: Knobs,
}

pub fn run(args: ExtractArgs) -> Result<bool> {
    let cfg = build_config(&args.knobs, args.seed)?;
    let archs = load_archs(&args.arch)?;
    let source = load_source(&args.data)?;
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;

    let batches = make_batches(&source, &cfg)?;
    for (ai, arch) in archs.iter().enumerate() {
        let cell = parse_arch_string(arch)?;
        for r in 0..cfg.inits {
            let spec = InitSpec {
                gain: cfg.gain,
                seed: init_seed(cfg.master_seed, arch, r),
                sample_bias: cfg.sample_bias,
            };
            let net = build_initialized(&cell, &cfg.network, &spec)?;
            let clouds: Vec<FeatureMatrix> = batches
                .iter()
                .map(|b| net.forward_features(b))
                .collect::<geonas::Result<_>>()
                .with_context(|| format!("arch {ai} init {r}"))?;
            let features = FeatureMatrix::concat(&clouds)?;
            let path = args.out_dir.join(format!("arch{ai:04}_init{r:02}.fmat"));
            fmat::write_fmat(&path, &features)?;
        }
        println!(
            "arch {ai}: {} inits of {} x {} features",
            cfg.inits,
            cfg.batches * cfg.batch_size,
            cfg.network.feature_width()
        );
    }

    let arch_list = args.out_dir.join("archs.txt");
    atomic_write(&arch_list, (archs.join("\n") + "\n").as_bytes())?;
    let mut manifest = RunManifest::new("extract", cfg.master_seed, &cfg.hash())
        .with_input(&arch_list)?;
    for path in &args.data.data {
        manifest = manifest.with_input(path)?;
    }
    manifest.stamped().write(&args.out_dir.join("manifest.json"))?;
    Ok(true)
}
