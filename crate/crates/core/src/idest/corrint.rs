//! Correlation-dimension estimate: slope of the pair-count curve
//! log C(r) between two data-driven radii.

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};

use super::{EstimatorParams, IdEstimate, IdMethod, SharedTables};

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

pub(crate) fn corrint_with(tables: &SharedTables, params: &EstimatorParams) -> Result<IdEstimate> {
    let method = IdMethod::CorrInt;
    let n = tables.distances.n();
    if n < params.corrint_k2 + 1 {
        return Err(Error::estimator(
            method.name(),
            format!("needs more than {} points, got {n}", params.corrint_k2),
        ));
    }
    let nt = tables.neighbors_for(method, params.corrint_k2)?;

    let mut r1s: Vec<f64> = (0..n).map(|i| nt.kth_distance(i, params.corrint_k1)).collect();
    let mut r2s: Vec<f64> = (0..n).map(|i| nt.kth_distance(i, params.corrint_k2)).collect();
    let r1 = median(&mut r1s);
    let r2 = median(&mut r2s);
    if r1 <= 0.0 {
        return Err(Error::estimator(method.name(), "zero neighbor radii"));
    }
    if r2 <= r1 {
        return Err(Error::estimator(
            method.name(),
            format!("radii collapse: r1 = {r1}, r2 = {r2}"),
        ));
    }

    let mut c1 = 0usize;
    let mut c2 = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = tables.distances.get(i, j);
            if d < r1 {
                c1 += 1;
            }
            if d < r2 {
                c2 += 1;
            }
        }
    }
    if c1 == 0 {
        return Err(Error::estimator(method.name(), "empty correlation sum"));
    }
    let pairs = (n * (n - 1) / 2) as f64;
    let value = ((c2 as f64 / pairs).ln() - (c1 as f64 / pairs).ln()) / (r2.ln() - r1.ln());
    Ok(IdEstimate::ok(method, value)
        .with_diag("r1", r1)
        .with_diag("r2", r2))
}

pub fn estimate_corrint(x: &FeatureMatrix, params: &EstimatorParams) -> Result<IdEstimate> {
    params.validate()?;
    let tables = SharedTables::build(x, params, &[IdMethod::CorrInt])?;
    corrint_with(&tables, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;
    use ndarray::Array2;

    fn fm(x: Array2<f64>) -> FeatureMatrix {
        FeatureMatrix::new(x, None).unwrap()
    }

    #[test]
    fn uniform_segment_is_close_to_one() {
        let mut rng = CounterRng::new(6);
        let x = Array2::from_shape_fn((1000, 1), |_| rng.uniform(0.0, 1.0));
        let est = estimate_corrint(&fm(x), &EstimatorParams::default()).unwrap();
        assert!((est.value - 1.0).abs() < 0.2, "got {}", est.value);
    }

    #[test]
    fn uniform_square_is_close_to_two() {
        let mut rng = CounterRng::new(7);
        let x = Array2::from_shape_fn((1000, 2), |_| rng.uniform(0.0, 1.0));
        let est = estimate_corrint(&fm(x), &EstimatorParams::default()).unwrap();
        assert!((est.value - 2.0).abs() < 0.4, "got {}", est.value);
    }

    #[test]
    fn identical_points_error() {
        let x = Array2::from_elem((40, 3), 1.0);
        let err = estimate_corrint(&fm(x), &EstimatorParams::default()).unwrap_err();
        assert!(err.to_string().contains("zero"), "{err}");
    }

    #[test]
    fn needs_enough_points() {
        let mut rng = CounterRng::new(8);
        let x = Array2::from_shape_fn((15, 2), |_| rng.normal());
        assert!(estimate_corrint(&fm(x), &EstimatorParams::default()).is_err());
    }
}
