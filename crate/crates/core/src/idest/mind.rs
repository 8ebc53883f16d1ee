//! Likelihood estimates built on the ratio of the first to the k-th
//! neighbor distance, maximized over integer dimensions (MLi) and over
//! the continuous interval (MLk).

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};

use super::{check_exclusions, EstimatorParams, IdEstimate, IdMethod, SharedTables};

/// Log-likelihood of dimension `d` for ratio samples rho in (0, 1):
/// sum of ln d + (d - 1) ln rho + (k - 1) ln(1 - rho^d).
pub(crate) fn log_likelihood(d: f64, rhos: &[f64], k: usize) -> f64 {
    let mut ll = 0.0;
    for &rho in rhos {
        let p = (d * rho.ln()).exp();
        ll += d.ln() + (d - 1.0) * rho.ln() + (k as f64 - 1.0) * (-p).ln_1p();
    }
    ll
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

pub(crate) fn mind_with(
    tables: &SharedTables,
    ambient_dim: usize,
    params: &EstimatorParams,
) -> Result<(IdEstimate, IdEstimate)> {
    let method = IdMethod::MindMli;
    let k = params.mind_k;
    let n = tables.distances.n();
    if n <= k {
        return Err(Error::estimator(
            method.name(),
            format!("needs more than {k} points, got {n}"),
        ));
    }
    let nt = tables.neighbors_for(method, k)?;

    let mut rhos = Vec::with_capacity(n);
    for i in 0..n {
        let t1 = nt.kth_distance(i, 1);
        let tk = nt.kth_distance(i, k);
        if t1 > 0.0 && t1 < tk {
            rhos.push(t1 / tk);
        }
    }
    let excluded = n - rhos.len();
    check_exclusions(method, excluded, n, params.exclusion_limit)?;
    let d_max = ambient_dim.max(1);

    let mut best_d = 1usize;
    let mut best_ll = f64::NEG_INFINITY;
    for d in 1..=d_max {
        let ll = log_likelihood(d as f64, &rhos, k);
        if ll > best_ll {
            best_ll = ll;
            best_d = d;
        }
    }
    let mli = IdEstimate::ok(IdMethod::MindMli, best_d as f64)
        .with_diag("excluded", excluded as f64);

    let mlk_value = if d_max == 1 {
        1.0
    } else {
        golden_max(
            |d| log_likelihood(d, &rhos, k),
            1.0,
            d_max as f64,
            1e-6,
        )
    };
    let mlk = IdEstimate::ok(IdMethod::MindMlk, mlk_value)
        .with_diag("excluded", excluded as f64);
    Ok((mli, mlk))
}

/// Integer and continuous likelihood maximizers over [1, ambient dim].
pub fn estimate_mind_ml(
    x: &FeatureMatrix,
    params: &EstimatorParams,
) -> Result<(IdEstimate, IdEstimate)> {
    params.validate()?;
    let tables = SharedTables::build(x, params, &[IdMethod::MindMli])?;
    mind_with(&tables, x.cols(), params)
}
