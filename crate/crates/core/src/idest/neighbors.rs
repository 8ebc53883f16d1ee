//! Local neighbor-distance estimators: likelihood, adaptive ratio,
//! moment, and two-neighbor regression variants.

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};

use super::{check_exclusions, EstimatorParams, IdEstimate, IdMethod, SharedTables};

/// Inverse local likelihood statistic: mean of ln(T_k / T_j) over
/// j < k. None when a radius vanishes or all radii tie.
pub(crate) fn local_mle_inverse(dists: &[f64]) -> Option<f64> {
    let k = dists.len();
    let t_k = dists[k - 1];
    if dists[0] <= 0.0 || t_k <= 0.0 {
        return None;
    }
    let sum: f64 = dists[..k - 1].iter().map(|&t| (t_k / t).ln()).sum();
    let inv = sum / (k as f64 - 1.0);
    if inv > 0.0 {
        Some(inv)
    } else {
        None
    }
}

pub(crate) fn local_mada(t_half: f64, t_k: f64) -> Option<f64> {
    if t_half <= 0.0 || t_k <= t_half {
        return None;
    }
    Some(std::f64::consts::LN_2 / (t_k / t_half).ln())
}

pub(crate) fn local_mom(dists: &[f64]) -> Option<f64> {
    let w = dists[dists.len() - 1];
    let m1 = dists.iter().sum::<f64>() / dists.len() as f64;
    if w <= 0.0 || w <= m1 {
        return None;
    }
    Some(m1 / (w - m1))
}

fn require_points(method: IdMethod, n: usize, k: usize) -> Result<()> {
    if n <= k {
        Err(Error::estimator(
            method.name(),
            format!("needs more than {k} points, got {n}"),
        ))
    } else {
        Ok(())
    }
}

/// Likelihood estimate aggregated by inverting the mean of the local
/// inverse statistics.
pub(crate) fn mle_with(tables: &SharedTables, params: &EstimatorParams) -> Result<IdEstimate> {
    let method = IdMethod::Mle;
    let k = params.mle_k;
    let n = tables.distances.n();
    require_points(method, n, k)?;
    let nt = tables.neighbors_for(method, k)?;

    let mut sum_inv = 0.0;
    let mut kept = 0usize;
    for i in 0..n {
        if let Some(inv) = local_mle_inverse(&nt.distances(i)[..k]) {
            sum_inv += inv;
            kept += 1;
        }
    }
    let excluded = n - kept;
    check_exclusions(method, excluded, n, params.exclusion_limit)?;
    let value = kept as f64 / sum_inv;
    Ok(IdEstimate::ok(method, value).with_diag("excluded", excluded as f64))
}

/// Ratio estimate comparing the k-th and (k/2)-th neighbor radii,
/// aggregated by arithmetic mean.
pub(crate) fn mada_with(tables: &SharedTables, params: &EstimatorParams) -> Result<IdEstimate> {
    let method = IdMethod::Mada;
    let k = params.mada_k;
    let n = tables.distances.n();
    require_points(method, n, k)?;
    let nt = tables.neighbors_for(method, k)?;

    let mut sum = 0.0;
    let mut kept = 0usize;
    for i in 0..n {
        let t_half = nt.kth_distance(i, k / 2);
        let t_k = nt.kth_distance(i, k);
        if let Some(d) = local_mada(t_half, t_k) {
            sum += d;
            kept += 1;
        }
    }
    let excluded = n - kept;
    check_exclusions(method, excluded, n, params.exclusion_limit)?;
    Ok(IdEstimate::ok(method, sum / kept as f64).with_diag("excluded", excluded as f64))
}

/// First-moment estimate m1 / (T_k - m1), aggregated by arithmetic mean.
pub(crate) fn mom_with(tables: &SharedTables, params: &EstimatorParams) -> Result<IdEstimate> {
    let method = IdMethod::Mom;
    let k = params.mom_k;
    let n = tables.distances.n();
    require_points(method, n, k)?;
    let nt = tables.neighbors_for(method, k)?;

    let mut sum = 0.0;
    let mut kept = 0usize;
    for i in 0..n {
        if let Some(d) = local_mom(&nt.distances(i)[..k]) {
            sum += d;
            kept += 1;
        }
    }
    let excluded = n - kept;
    check_exclusions(method, excluded, n, params.exclusion_limit)?;
    Ok(IdEstimate::ok(method, sum / kept as f64).with_diag("excluded", excluded as f64))
}

/// Two-neighbor regression: the ratio mu = T_2 / T_1 follows a Pareto
/// law with shape d, recovered by fitting -ln(1 - F(mu)) = d ln mu
/// through the origin after trimming the heaviest tail entries.
pub(crate) fn twonn_with(tables: &SharedTables, params: &EstimatorParams) -> Result<IdEstimate> {
    let method = IdMethod::TwoNn;
    let n = tables.distances.n();
    if n < 20 {
        return Err(Error::estimator(
            method.name(),
            format!("needs at least 20 points, got {n}"),
        ));
    }
    let nt = tables.neighbors_for(method, 2)?;

    let mut mus = Vec::with_capacity(n);
    for i in 0..n {
        let t1 = nt.kth_distance(i, 1);
        let t2 = nt.kth_distance(i, 2);
        if t1 > 0.0 {
            mus.push(t2 / t1);
        }
    }
    let excluded = n - mus.len();
    check_exclusions(method, excluded, n, params.exclusion_limit)?;

    mus.sort_by(|a, b| a.partial_cmp(b).expect("finite ratios"));
    let m = mus.len();
    let fit_count = (m - (params.discard_fraction * m as f64).floor() as usize).min(m - 1);
    if fit_count == 0 {
        return Err(Error::estimator(method.name(), "nothing left to fit"));
    }
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (idx, &mu) in mus.iter().take(fit_count).enumerate() {
        let x = mu.ln();
        let y = -(1.0 - (idx as f64 + 1.0) / m as f64).ln();
        sxy += x * y;
        sxx += x * x;
    }
    if sxx <= 0.0 {
        return Err(Error::estimator(
            method.name(),
            "all neighbor ratios equal one",
        ));
    }
    Ok(IdEstimate::ok(method, sxy / sxx).with_diag("excluded", excluded as f64))
}

pub fn estimate_mle(x: &FeatureMatrix, params: &EstimatorParams) -> Result<IdEstimate> {
    params.validate()?;
    let tables = SharedTables::build(x, params, &[IdMethod::Mle])?;
    mle_with(&tables, params)
}

pub fn estimate_mada(x: &FeatureMatrix, params: &EstimatorParams) -> Result<IdEstimate> {
    params.validate()?;
    let tables = SharedTables::build(x, params, &[IdMethod::Mada])?;
    mada_with(&tables, params)
}

pub fn estimate_mom(x: &FeatureMatrix, params: &EstimatorParams) -> Result<IdEstimate> {
    params.validate()?;
    let tables = SharedTables::build(x, params, &[IdMethod::Mom])?;
    mom_with(&tables, params)
}

pub fn estimate_twonn(x: &FeatureMatrix, params: &EstimatorParams) -> Result<IdEstimate> {
    params.validate()?;
    let tables = SharedTables::build(x, params, &[IdMethod::TwoNn])?;
    twonn_with(&tables, params)
}
