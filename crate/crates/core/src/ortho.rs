//! Quasi-orthogonality statistics of a centered feature cloud.
//!
//! High-dimensional random vectors concentrate near mutual right angles,
//! so the distribution of pairwise angles (and of sample-to-centroid
//! angles when labels are available) summarizes how isotropic a feature
//! space is. All angles are reported in degrees; spreads are population
//! standard deviations.

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};

/// The four angle statistics, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OrthoMeasures {
    /// Mean pairwise angle between samples.
    pub f_mean: f64,
    /// Spread of pairwise angles.
    pub f_std: f64,
    /// Mean angle between samples and their class centroid.
    pub cmean: f64,
    /// Spread of sample-to-centroid angles.
    pub cstd: f64,
}

const RAD_TO_DEG: f64 = 180.0 / std::f64::consts::PI;

fn angle_deg(dot: f64, norm_a: f64, norm_b: f64) -> f64 {
    let cos = (dot / (norm_a * norm_b)).clamp(-1.0, 1.0);
    cos.acos() * RAD_TO_DEG
}

fn mean_and_population_std(sum: f64, sum_sq: f64, n: f64) -> (f64, f64) {
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    (mean, var.sqrt())
}

fn row_norms(x: &FeatureMatrix) -> Result<Vec<f64>> {
    let data = x.array();
    let norms: Vec<f64> = data
        .rows()
        .into_iter()
        .map(|r| r.dot(&r).sqrt())
        .collect();
    let bad: Vec<usize> = norms
        .iter()
        .enumerate()
        .filter(|(_, &n)| n == 0.0)
        .map(|(i, _)| i)
        .collect();
    if !bad.is_empty() {
        return Err(Error::Degenerate(format!(
            "zero-norm rows have no direction: rows {bad:?}"
        )));
    }
    Ok(norms)
}

/// Mean and spread of the angle over all unordered sample pairs.
///
/// The caller centers the cloud first; rows must be nonzero.
pub fn pairwise_angle_stats(x: &FeatureMatrix) -> Result<(f64, f64)> {
    let data = x.array();
    let n = data.nrows();
    let norms = row_norms(x)?;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for i in 0..n {
        let ri = data.row(i);
        for j in (i + 1)..n {
            let theta = angle_deg(ri.dot(&data.row(j)), norms[i], norms[j]);
            sum += theta;
            sum_sq += theta * theta;
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    Ok(mean_and_population_std(sum, sum_sq, pairs))
}

/// Mean and spread of the angle between each sample and the centroid of
/// its own class. Centroids are plain per-class row means of the already
/// centered cloud; a sample counts toward its own centroid.
pub fn centroid_angle_stats(x: &FeatureMatrix, labels: &[u16]) -> Result<(f64, f64)> {
    let data = x.array();
    let n = data.nrows();
    let d = data.ncols();
    if labels.len() != n {
        return Err(Error::Shape(format!(
            "{} labels for {} rows",
            labels.len(),
            n
        )));
    }
    let norms = row_norms(x)?;

    let mut classes: Vec<u16> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut centroid = vec![vec![0.0f64; d]; classes.len()];
    let mut count = vec![0usize; classes.len()];
    let class_slot = |c: u16| classes.binary_search(&c).expect("class present");
    for (i, &lab) in labels.iter().enumerate() {
        let s = class_slot(lab);
        count[s] += 1;
        for (j, acc) in centroid[s].iter_mut().enumerate() {
            *acc += data[[i, j]];
        }
    }
    for (s, c) in centroid.iter_mut().enumerate() {
        for v in c.iter_mut() {
            *v /= count[s] as f64;
        }
    }
    let centroid_norm: Vec<f64> = centroid
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let bad: Vec<u16> = classes
        .iter()
        .zip(&centroid_norm)
        .filter(|(_, &n)| n == 0.0)
        .map(|(&c, _)| c)
        .collect();
    if !bad.is_empty() {
        return Err(Error::Degenerate(format!(
            "zero-norm class centroids: classes {bad:?}"
        )));
    }

    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for (i, &lab) in labels.iter().enumerate() {
        let s = class_slot(lab);
        let mut dot = 0.0;
        for (j, &cv) in centroid[s].iter().enumerate() {
            dot += data[[i, j]] * cv;
        }
        let theta = angle_deg(dot, norms[i], centroid_norm[s]);
        sum += theta;
        sum_sq += theta * theta;
    }
    Ok(mean_and_population_std(sum, sum_sq, n as f64))
}

/// Computes all four statistics; the cloud must carry labels.
pub fn ortho_measures(x: &FeatureMatrix) -> Result<OrthoMeasures> {
    let labels = x
        .labels()
        .ok_or_else(|| Error::Config("centroid angles need labeled features".into()))?
        .to_vec();
    let (f_mean, f_std) = pairwise_angle_stats(x)?;
    let (cmean, cstd) = centroid_angle_stats(x, &labels)?;
    Ok(OrthoMeasures {
        f_mean,
        f_std,
        cmean,
        cstd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;
    use ndarray::{array, Array2};

    fn fm(data: Array2<f64>) -> FeatureMatrix {
        FeatureMatrix::new(data, None).unwrap()
    }

    #[test]
    fn orthonormal_basis_is_exactly_ninety() {
        let mut x = Array2::zeros((4, 4));
        for i in 0..4 {
            x[[i, i]] = 1.0;
        }
        let (mean, std) = pairwise_angle_stats(&fm(x)).unwrap();
        assert!((mean - 90.0).abs() < 1e-12);
        assert!(std < 1e-12);
    }

    #[test]
    fn parallel_and_antiparallel_rows() {
        // acos amplifies rounding near cos = +-1, so allow a few
        // microdegrees here.
        let (mean, std) = pairwise_angle_stats(&fm(array![[1.0, 2.0], [2.0, 4.0]])).unwrap();
        assert!(mean.abs() < 1e-5 && std.abs() < 1e-12);
        let (mean, std) = pairwise_angle_stats(&fm(array![[1.0, 2.0], [-1.0, -2.0]])).unwrap();
        assert!((mean - 180.0).abs() < 1e-5 && std.abs() < 1e-12);
    }

    #[test]
    fn zero_row_is_reported() {
        let err = pairwise_angle_stats(&fm(array![[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]]))
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[1]"), "message was: {msg}");
    }

    #[test]
    fn gaussian_cloud_concentrates_near_ninety() {
        let mut rng = CounterRng::new(2024);
        let x = Array2::from_shape_fn((128, 64), |_| rng.normal());
        let (mean, std) = pairwise_angle_stats(&fm(x)).unwrap();
        assert!((88.0..=92.0).contains(&mean), "f_mean = {mean}");
        assert!((3.0..=9.0).contains(&std), "f_std = {std}");
    }

    #[test]
    fn scaling_a_row_changes_nothing() {
        let mut rng = CounterRng::new(7);
        let mut x = Array2::from_shape_fn((20, 8), |_| rng.normal());
        let labels: Vec<u16> = (0..20).map(|i| (i % 4) as u16).collect();
        let a = pairwise_angle_stats(&fm(x.clone())).unwrap();
        for v in x.row_mut(3).iter_mut() {
            *v *= 1000.0;
        }
        let b = pairwise_angle_stats(&fm(x.clone())).unwrap();
        assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
        // Scaling one row moves its class centroid, so only the pairwise
        // stats are invariant to that; a uniform rescale of the whole
        // cloud must also leave centroid angles alone.
        let ca = centroid_angle_stats(&fm(x.clone()), &labels).unwrap();
        x.mapv_inplace(|v| v * 3.5);
        let cb = centroid_angle_stats(&fm(x), &labels).unwrap();
        assert!((ca.0 - cb.0).abs() < 1e-9 && (ca.1 - cb.1).abs() < 1e-9);
    }

    #[test]
    fn singleton_classes_have_zero_angles() {
        let mut rng = CounterRng::new(5);
        let x = Array2::from_shape_fn((6, 5), |_| rng.normal());
        let labels: Vec<u16> = (0..6).collect::<Vec<_>>().iter().map(|&v| v as u16).collect();
        let (cmean, cstd) = centroid_angle_stats(&fm(x), &labels).unwrap();
        assert!(cmean.abs() < 1e-6);
        assert!(cstd.abs() < 1e-6);
    }

    #[test]
    fn cancelling_class_centroid_errors() {
        let x = array![[1.0, 2.0], [-1.0, -2.0]];
        let err = centroid_angle_stats(&fm(x), &[3, 3]).unwrap_err();
        assert!(err.to_string().contains("[3]"));
    }

    #[test]
    fn balanced_gaussian_classes_are_oblique() {
        let mut rng = CounterRng::new(31);
        let x = Array2::from_shape_fn((128, 64), |_| rng.normal());
        let labels: Vec<u16> = (0..128).map(|i| (i % 10) as u16).collect();
        let (cmean, _) = centroid_angle_stats(&fm(x), &labels).unwrap();
        assert!((60.0..=90.0).contains(&cmean), "cmean = {cmean}");
    }

    #[test]
    fn label_count_must_match() {
        let x = array![[1.0, 0.0], [0.0, 1.0]];
        assert!(centroid_angle_stats(&fm(x), &[0]).is_err());
    }

    #[test]
    fn combined_measures_need_labels() {
        let x = array![[1.0, 0.0], [0.0, 1.0]];
        assert!(ortho_measures(&fm(x.clone())).is_err());
        let labeled = FeatureMatrix::new(x, Some(vec![0, 1])).unwrap();
        let m = ortho_measures(&labeled).unwrap();
        assert!((m.f_mean - 90.0).abs() < 1e-12);
        assert!(m.cmean.abs() < 1e-6);
    }
}
