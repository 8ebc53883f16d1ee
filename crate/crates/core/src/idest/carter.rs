//! Graph-length dimension estimate: the total edge length of the
//! k-nearest-neighbor graph grows like n^(1 - 1/d) on an n-point sample,
//! so a log-log regression over nested subset sizes recovers d.

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::rng::SeedMix;

use super::{EstimateStatus, EstimatorParams, IdEstimate, IdMethod, SharedTables};

fn subset_schedule(n: usize, params: &EstimatorParams) -> Vec<usize> {
    match &params.carter_subsets {
        Some(s) => s.clone(),
        None => vec![n / 8, n / 4, n / 2, n],
    }
}

/// Total directed k-nearest-neighbor edge length within a subset.
fn graph_length(tables: &SharedTables, subset: &[usize], k: usize) -> f64 {
    let mut total = 0.0;
    let mut dists = Vec::with_capacity(subset.len() - 1);
    for &a in subset {
        dists.clear();
        for &b in subset {
            if b != a {
                dists.push(tables.distances.get(a, b));
            }
        }
        dists.select_nth_unstable_by(k - 1, |x, y| x.partial_cmp(y).expect("finite"));
        total += dists[..k].iter().sum::<f64>();
    }
    total
}

pub(crate) fn carter_with(
    tables: &SharedTables,
    ambient_dim: usize,
    params: &EstimatorParams,
) -> Result<IdEstimate> {
    let method = IdMethod::KnnCarter;
    let n = tables.distances.n();
    let k = params.carter_k;
    let sizes = subset_schedule(n, params);
    if sizes.len() < 2 {
        return Err(Error::estimator(method.name(), "needs at least 2 subset sizes"));
    }
    let mut distinct = sizes.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() != sizes.len() {
        return Err(Error::estimator(
            method.name(),
            "repeated subset sizes make the regression degenerate",
        ));
    }
    for &s in &sizes {
        if s <= k {
            return Err(Error::estimator(
                method.name(),
                format!("subset size {s} cannot support {k} neighbors"),
            ));
        }
        if s > n {
            return Err(Error::estimator(
                method.name(),
                format!("subset size {s} exceeds the {n}-point cloud"),
            ));
        }
    }

    let mut ln_n = Vec::with_capacity(sizes.len());
    let mut ln_l = Vec::with_capacity(sizes.len());
    for (j, &s) in sizes.iter().enumerate() {
        let subset: Vec<usize> = if s == n {
            (0..n).collect()
        } else {
            let mut rng = SeedMix::new(params.carter_seed)
                .str("subset")
                .u64(j as u64)
                .rng();
            rng.sample_indices(n, s)
        };
        let l = graph_length(tables, &subset, k);
        if l <= 0.0 {
            return Err(Error::estimator(
                method.name(),
                format!("zero graph length at subset size {s}"),
            ));
        }
        ln_n.push((s as f64).ln());
        ln_l.push(l.ln());
    }

    let m = ln_n.len() as f64;
    let mean_x = ln_n.iter().sum::<f64>() / m;
    let mean_y = ln_l.iter().sum::<f64>() / m;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in ln_n.iter().zip(&ln_l) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    let gamma = sxy / sxx;
    let d_max = ambient_dim.max(1) as f64;

    if gamma >= 1.0 {
        let mut est = IdEstimate::ok(method, d_max).with_diag("gamma", gamma);
        est.status = EstimateStatus::Unstable;
        return Ok(est);
    }
    let value = (1.0 / (1.0 - gamma)).clamp(1.0, d_max);
    Ok(IdEstimate::ok(method, value).with_diag("gamma", gamma))
}

pub fn estimate_knn_carter(x: &FeatureMatrix, params: &EstimatorParams) -> Result<IdEstimate> {
    params.validate()?;
    let tables = SharedTables::build(x, params, &[IdMethod::KnnCarter])?;
    carter_with(&tables, x.cols(), params)
}
