use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand};
use geonas::io::{atomic_write, csvio, fmat};
use geonas::synth::{embed, sample_cube, sample_gaussian, sample_sphere, synth_images, ManifoldSample};
use geonas::FeatureMatrix;

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[command(subcommand)]
    kind: Kind,
}

#[derive(Args, Debug, Clone)]
struct CloudArgs {
    /// Dimension of the sampled space.
    #[arg(long = "d", value_name = "D")]
    d: usize,
    /// Number of points.
    #[arg(long = "n", value_name = "N")]
    n: usize,
    /// Embed into this many ambient dimensions via a seeded rotation.
    #[arg(long, value_name = "M")]
    embed: Option<usize>,
    /// Gaussian noise added after embedding.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; .csv selects the text format, anything else binary.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Kind {
    /// Uniform points in the unit d-cube.
    Cube(CloudArgs),
    /// Uniform points on the unit sphere in d ambient dimensions.
    Sphere(CloudArgs),
    /// Standard Gaussian points in d dimensions.
    Gaussian(CloudArgs),
    /// Uniform-noise labeled 3x32x32 images in the CIFAR-10 binary
    /// layout.
    Images {
        #[arg(long = "n", value_name = "N")]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Uniformly random architecture strings, one per line.
    Archs {
        #[arg(long = "n", value_name = "N")]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
}

fn write_cloud(args: &CloudArgs, sample: ManifoldSample) -> Result<()> {
    let sample = match args.embed {
        Some(target) => embed(&sample, target, args.seed, args.noise)?,
        None if args.noise != 0.0 => embed(&sample, sample.data.ncols(), args.seed, args.noise)?,
        None => sample,
    };
    let true_dim = sample.true_dim;
    let fm = FeatureMatrix::new(sample.data, None)?;
    write_features(&args.out, &fm)?;
    println!(
        "true_dim {true_dim}: {} rows x {} cols -> {}",
        fm.rows(),
        fm.cols(),
        args.out.display()
    );
    Ok(())
}

pub fn write_features(path: &Path, fm: &FeatureMatrix) -> Result<()> {
    if path.extension().is_some_and(|e| e == "csv") {
        csvio::write_csv_features(path, fm)?;
    } else {
        fmat::write_fmat(path, fm)?;
    }
    Ok(())
}

pub fn read_features(path: &Path) -> Result<FeatureMatrix> {
    let fm = if path.extension().is_some_and(|e| e == "csv") {
        csvio::read_csv_features(path)
    } else {
        fmat::read_fmat(path)
    };
    fm.with_context(|| format!("reading features from {}", path.display()))
}

fn write_images(n: usize, seed: u64, out: &Path) -> Result<()> {
    if n == 0 {
        bail!("--n must be positive");
    }
    let batch = synth_images(n, (3, 32, 32), seed)?;
    let labels = batch.labels().expect("synthetic images carry labels");
    let data = batch.array();
    let mut bytes = Vec::with_capacity(n * 3073);
    for i in 0..n {
        bytes.push(labels[i] as u8);
        for c in 0..3 {
            for h in 0..32 {
                for w in 0..32 {
                    bytes.push((data[[i, c, h, w]] * 255.0).round() as u8);
                }
            }
        }
    }
    atomic_write(out, &bytes)?;
    println!("{n} images (3x32x32, 10 labels) -> {}", out.display());
    Ok(())
}

fn write_archs(n: usize, seed: u64, out: &Path) -> Result<()> {
    if n == 0 {
        bail!("--n must be positive");
    }
    let mut lines = String::new();
    for i in 0..n {
        let cell = geonas::random_arch(geonas::SeedMix::new(seed).u64(i as u64).finish());
        lines.push_str(&geonas::format_arch_string(&cell));
        lines.push('\n');
    }
    atomic_write(out, lines.as_bytes())?;
    println!("{n} architectures -> {}", out.display());
    Ok(())
}

pub fn run(args: SynthArgs) -> Result<bool> {
    match args.kind {
        Kind::Cube(a) => write_cloud(&a, sample_cube(a.d, a.n, a.seed)?)?,
        Kind::Sphere(a) => write_cloud(&a, sample_sphere(a.d, a.n, a.seed)?)?,
        Kind::Gaussian(a) => write_cloud(&a, sample_gaussian(a.d, a.n, a.seed)?)?,
        Kind::Images { n, seed, ref out } => write_images(n, seed, out)?,
        Kind::Archs { n, seed, ref out } => write_archs(n, seed, out)?,
    }
    Ok(true)
}
