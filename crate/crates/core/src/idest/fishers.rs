//! Separability-based dimension estimate.
//!
//! After whitening and projection to the unit sphere, the fraction of
//! sample pairs whose inner product exceeds a threshold alpha measures
//! how far the cloud is from the concentration behavior of a
//! high-dimensional sphere. Inverting the sphere's closed-form pair
//! fraction through the Lambert function turns that fraction into an
//! effective dimension.

use std::f64::consts::PI;

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::geometry::sphere_project;

use super::lambert::lambert_w0;
use super::{EstimateStatus, EstimatorParams, IdEstimate, IdMethod};

/// The profiled inseparability curve and the threshold chosen from it.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FisherSProfile {
    /// Ascending thresholds in (0, 1).
    pub alpha_grid: Vec<f64>,
    /// Fraction of ordered sample pairs (x, y) with (x, y) > alpha,
    /// one entry per grid point; non-increasing in alpha.
    pub inseparability: Vec<f64>,
    /// Threshold the estimate was read at; None when the cloud is
    /// separable over the whole grid.
    pub chosen_alpha: Option<f64>,
    /// Dimension of the whitened space the sphere lives in.
    pub retained_dims: usize,
    /// Points dropped during projection for sitting on the centroid.
    pub dropped_rows: usize,
}

/// Expected pair inseparability of a uniform n-sphere at threshold
/// alpha: (1 - a^2)^((n-1)/2) / (a * sqrt(2 pi n)).
pub fn closed_form_inseparability(alpha: f64, n: usize) -> f64 {
    let a2 = alpha * alpha;
    (1.0 - a2).powf((n as f64 - 1.0) / 2.0) / (alpha * (2.0 * PI * n as f64).sqrt())
}

/// Inverts the closed form: given alpha and an observed pair fraction,
/// returns the dimension via W(L / (2 pi p^2 a^2 (1 - a^2))) / L with
/// L = -ln(1 - a^2).
pub fn dimension_from_inseparability(alpha: f64, p_bar: f64) -> Result<f64> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha {alpha} outside (0, 1)")));
    }
    if !(p_bar > 0.0 && p_bar.is_finite()) {
        return Err(Error::Domain(format!(
            "inseparability {p_bar} must be positive"
        )));
    }
    let a2 = alpha * alpha;
    let l = -(1.0 - a2).ln();
    let arg = l / (2.0 * PI * p_bar * p_bar * a2 * (1.0 - a2));
    Ok(lambert_w0(arg)? / l)
}

/// Profiles the empirical pair inseparability over the alpha grid.
pub fn fishers_profile(x: &FeatureMatrix, params: &EstimatorParams) -> Result<FisherSProfile> {
    if x.rows() < 3 {
        return Err(Error::estimator(
            IdMethod::FisherS.name(),
            "needs at least 3 points",
        ));
    }
    let sphere = sphere_project(&x.array().view(), params.variance_threshold)?;
    let y = sphere.data();
    let r = y.nrows();
    if r < 3 {
        return Err(Error::estimator(
            IdMethod::FisherS.name(),
            "fewer than 3 points survive projection",
        ));
    }

    let mut dots = Vec::with_capacity(r * (r - 1) / 2);
    for i in 0..r {
        let ri = y.row(i);
        for j in (i + 1)..r {
            dots.push(ri.dot(&y.row(j)));
        }
    }
    dots.sort_by(|a, b| a.partial_cmp(b).expect("finite inner products"));
    let total = dots.len() as f64;
    let inseparability: Vec<f64> = params
        .alpha_grid
        .iter()
        .map(|&a| {
            let below = dots.partition_point(|&v| v <= a);
            (dots.len() - below) as f64 / total
        })
        .collect();

    let alpha_max = params
        .alpha_grid
        .iter()
        .zip(&inseparability)
        .filter(|(_, &p)| p > 0.0)
        .map(|(&a, _)| a)
        .fold(None, |acc: Option<f64>, a| Some(acc.map_or(a, |m: f64| m.max(a))));
    let chosen_alpha = alpha_max.map(|am| snap_to_grid(&params.alpha_grid, 0.8 * am));

    Ok(FisherSProfile {
        alpha_grid: params.alpha_grid.clone(),
        inseparability,
        chosen_alpha,
        retained_dims: sphere.retained_dims(),
        dropped_rows: sphere.dropped_rows(),
    })
}

pub(crate) fn snap_to_grid(grid: &[f64], target: f64) -> f64 {
    let mut best = grid[0];
    for &g in grid {
        if (g - target).abs() < (best - target).abs() {
            best = g;
        }
    }
    best
}

/// Full estimate: profile, pick alpha, invert the closed form.
pub fn estimate_fishers(
    x: &FeatureMatrix,
    params: &EstimatorParams,
) -> Result<(IdEstimate, FisherSProfile)> {
    let profile = fishers_profile(x, params)?;
    let mut est = match profile.chosen_alpha {
        None => IdEstimate {
            method: IdMethod::FisherS,
            value: f64::NAN,
            status: EstimateStatus::FullySeparable,
            diagnostics: Default::default(),
        },
        Some(alpha) => {
            let idx = profile
                .alpha_grid
                .iter()
                .position(|&a| a == alpha)
                .expect("snapped to grid");
            let p_hat = profile.inseparability[idx];
            let value = dimension_from_inseparability(alpha, p_hat)?;
            IdEstimate::ok(IdMethod::FisherS, value)
                .with_diag("chosen_alpha", alpha)
                .with_diag("p_hat", p_hat)
        }
    };
    est = est
        .with_diag("retained_dims", profile.retained_dims as f64)
        .with_diag("dropped_rows", profile.dropped_rows as f64);
    Ok((est, profile))
}
