//! Eigenvalue-count dimension estimate: the number of principal
//! components whose variance stays above a fixed fraction of the leading
//! one.

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::geometry::PcaModel;

use super::{EstimatorParams, IdEstimate, IdMethod};

pub fn estimate_lpca(x: &FeatureMatrix, params: &EstimatorParams) -> Result<IdEstimate> {
    let pca = PcaModel::fit(&x.array().view())?;
    let ev = pca.eigenvalues();
    let lead = ev[0];
    if lead <= 0.0 {
        return Err(Error::estimator(
            IdMethod::LPca.name(),
            "zero total variance",
        ));
    }
    let cutoff = params.alpha_fo * lead;
    let count = ev.iter().filter(|&&l| l > cutoff).count();
    Ok(IdEstimate::ok(IdMethod::LPca, count as f64)
        .with_diag("leading_eigenvalue", lead)
        .with_diag("cutoff", cutoff))
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
    fn line_in_high_dim_is_one() {
        let mut rng = CounterRng::new(1);
        let mut x = Array2::zeros((50, 64));
        let dir: Vec<f64> = (0..64).map(|_| rng.normal()).collect();
        for i in 0..50 {
            let t = rng.uniform(-2.0, 2.0);
            for j in 0..64 {
                x[[i, j]] = t * dir[j];
            }
        }
        let est = estimate_lpca(&fm(x), &EstimatorParams::default()).unwrap();
        assert_eq!(est.value, 1.0);
    }

    #[test]
    fn plane_with_tiny_noise_is_two() {
        let mut rng = CounterRng::new(2);
        let mut x = Array2::zeros((200, 10));
        for i in 0..200 {
            x[[i, 0]] = rng.normal();
            x[[i, 1]] = rng.normal();
            for j in 2..10 {
                x[[i, j]] = 1e-6 * rng.normal();
            }
        }
        let est = estimate_lpca(&fm(x), &EstimatorParams::default()).unwrap();
        assert_eq!(est.value, 2.0);
    }

    #[test]
    fn isotropic_gaussian_counts_every_axis() {
        let mut rng = CounterRng::new(3);
        let x = Array2::from_shape_fn((2000, 5), |_| rng.normal());
        let est = estimate_lpca(&fm(x), &EstimatorParams::default()).unwrap();
        assert_eq!(est.value, 5.0);
    }

    #[test]
    fn constant_cloud_errors() {
        let x = Array2::from_elem((10, 4), 3.0);
        assert!(estimate_lpca(&fm(x), &EstimatorParams::default()).is_err());
    }

    #[test]
    fn threshold_knob_matters() {
        let mut rng = CounterRng::new(4);
        let mut x = Array2::zeros((500, 3));
        // Variances 1, 0.04, 0.04: axes 2 and 3 sit at exactly 4% of the
        // leading eigenvalue in expectation.
        for i in 0..500 {
            x[[i, 0]] = rng.normal();
            x[[i, 1]] = 0.2 * rng.normal();
            x[[i, 2]] = 0.2 * rng.normal();
        }
        let strict = EstimatorParams {
            alpha_fo: 0.10,
            ..EstimatorParams::default()
        };
        let est = estimate_lpca(&fm(x), &strict).unwrap();
        assert_eq!(est.value, 1.0);
    }
}
