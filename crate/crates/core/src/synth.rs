//! Seeded synthetic data: ground-truth manifolds for validating the
//! dimension estimators, and noise image batches so the toolkit runs
//! without an external dataset.

use ndarray::{Array2, Array4};

use crate::data::ImageBatch;
use crate::error::{Error, Result};
use crate::rng::{CounterRng, SeedMix};

/// What a manifold sample was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldKind {
    Cube,
    Sphere,
    Gaussian,
}

/// A point cloud with known intrinsic dimension.
#[derive(Debug, Clone)]
pub struct ManifoldSample {
    pub data: Array2<f64>,
    pub true_dim: usize,
    pub kind: ManifoldKind,
    pub noise_sigma: f64,
}

fn check_dims(d: usize, n: usize) -> Result<()> {
    if d < 1 {
        return Err(Error::Config("dimension must be >= 1".into()));
    }
    if n < 2 {
        return Err(Error::Config("need at least 2 samples".into()));
    }
    Ok(())
}

fn manifold_rng(kind: &str, seed: u64) -> CounterRng {
    SeedMix::new(seed).str(kind).rng()
}

/// I.i.d. uniform points in the unit cube [0, 1]^d.
pub fn sample_cube(d: usize, n: usize, seed: u64) -> Result<ManifoldSample> {
    check_dims(d, n)?;
    let mut rng = manifold_rng("cube", seed);
    let mut data = Array2::zeros((n, d));
    for i in 0..n {
        for j in 0..d {
            data[[i, j]] = rng.next_f64();
        }
    }
    Ok(ManifoldSample {
        data,
        true_dim: d,
        kind: ManifoldKind::Cube,
        noise_sigma: 0.0,
    })
}

/// Uniform points on the unit sphere in R^d (normalized Gaussians).
pub fn sample_sphere(d: usize, n: usize, seed: u64) -> Result<ManifoldSample> {
    check_dims(d, n)?;
    let mut rng = manifold_rng("sphere", seed);
    let mut data = Array2::zeros((n, d));
    for i in 0..n {
        loop {
            let v: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm > 1e-12 {
                for j in 0..d {
                    data[[i, j]] = v[j] / norm;
                }
                break;
            }
        }
    }
    Ok(ManifoldSample {
        data,
        // The sphere surface has one dimension less than its ambient
        // space.
        true_dim: d.saturating_sub(1).max(1),
        kind: ManifoldKind::Sphere,
        noise_sigma: 0.0,
    })
}

/// Standard Gaussian cloud in R^d.
pub fn sample_gaussian(d: usize, n: usize, seed: u64) -> Result<ManifoldSample> {
    check_dims(d, n)?;
    let mut rng = manifold_rng("gaussian", seed);
    let data = Array2::from_shape_fn((n, d), |_| rng.normal());
    Ok(ManifoldSample {
        data,
        true_dim: d,
        kind: ManifoldKind::Gaussian,
        noise_sigma: 0.0,
    })
}

/// A Haar-ish random D x D orthogonal matrix: QR of a Gaussian matrix
/// with the sign fixed so R has a positive diagonal.
pub fn random_orthogonal(d: usize, seed: u64) -> Array2<f64> {
    let mut rng = SeedMix::new(seed).str("orthogonal").rng();
    let g = nalgebra::DMatrix::from_fn(d, d, |_, _| rng.normal());
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            for i in 0..d {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    Array2::from_shape_fn((d, d), |(i, j)| q[(i, j)])
}

/// Pads a sample to `target_dim` columns, rotates it by a random
/// orthogonal matrix, and optionally adds isotropic Gaussian noise. The
/// intrinsic dimension is untouched.
pub fn embed(
    m: &ManifoldSample,
    target_dim: usize,
    seed: u64,
    noise_sigma: f64,
) -> Result<ManifoldSample> {
    let (n, d) = (m.data.nrows(), m.data.ncols());
    if target_dim < d {
        return Err(Error::Config(format!(
            "cannot embed {d}-column data into {target_dim} dims"
        )));
    }
    if noise_sigma < 0.0 || !noise_sigma.is_finite() {
        return Err(Error::Config("noise_sigma must be >= 0".into()));
    }
    let mut padded = Array2::zeros((n, target_dim));
    padded.slice_mut(ndarray::s![.., ..d]).assign(&m.data);
    let q = random_orthogonal(target_dim, seed);
    let mut out = padded.dot(&q);
    if noise_sigma > 0.0 {
        let mut rng = SeedMix::new(seed).str("embed-noise").rng();
        out.mapv_inplace(|v| v + noise_sigma * rng.normal());
    }
    Ok(ManifoldSample {
        data: out,
        true_dim: m.true_dim,
        kind: m.kind,
        noise_sigma,
    })
}

/// Seeded uniform-noise image batch in [0, 1] with 10 round-robin
/// labels, shaped (count, c, h, w).
pub fn synth_images(count: usize, shape: (usize, usize, usize), seed: u64) -> Result<ImageBatch> {
    if count < 2 {
        return Err(Error::Config("need at least 2 images".into()));
    }
    let (c, h, w) = shape;
    let mut rng = SeedMix::new(seed).str("images").rng();
    let mut data = Array4::zeros((count, c, h, w));
    for v in data.iter_mut() {
        *v = rng.next_f64();
    }
    let labels: Vec<u16> = (0..count).map(|i| (i % 10) as u16).collect();
    ImageBatch::new(data, Some(labels))
}
