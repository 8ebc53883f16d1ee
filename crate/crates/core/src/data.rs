//! Core data containers: feature clouds and image batches.

use ndarray::{Array2, Array4};

use crate::error::{Error, Result};

/// A cloud of feature vectors, one row per sample, with optional class
/// labels aligned to rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: Array2<f64>,
    labels: Option<Vec<u16>>,
}

impl FeatureMatrix {
    /// Builds a feature matrix, checking finiteness, the two-row minimum
    /// and label alignment.
    pub fn new(data: Array2<f64>, labels: Option<Vec<u16>>) -> Result<Self> {
        if data.nrows() < 2 {
            return Err(Error::Shape(format!(
                "feature matrix needs at least 2 rows, got {}",
                data.nrows()
            )));
        }
        if data.ncols() == 0 {
            return Err(Error::Shape("feature matrix needs at least 1 column".into()));
        }
        if let Some(labels) = &labels {
            if labels.len() != data.nrows() {
                return Err(Error::Shape(format!(
                    "{} labels for {} rows",
                    labels.len(),
                    data.nrows()
                )));
            }
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::Degenerate("non-finite feature entry".into()));
        }
        Ok(FeatureMatrix { data, labels })
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn labels(&self) -> Option<&[u16]> {
        self.labels.as_deref()
    }

    pub fn into_parts(self) -> (Array2<f64>, Option<Vec<u16>>) {
        (self.data, self.labels)
    }

    /// Stacks several clouds with the same width into one, concatenating
    /// labels when every part carries them.
    pub fn concat(parts: &[FeatureMatrix]) -> Result<FeatureMatrix> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Shape("cannot concatenate zero feature matrices".into()))?;
        let cols = first.cols();
        let total: usize = parts.iter().map(|p| p.rows()).sum();
        let mut data = Array2::zeros((total, cols));
        let mut offset = 0;
        let all_labeled = parts.iter().all(|p| p.labels.is_some());
        let mut labels = all_labeled.then(Vec::new);
        for part in parts {
            if part.cols() != cols {
                return Err(Error::Shape(format!(
                    "feature width mismatch: {} vs {}",
                    part.cols(),
                    cols
                )));
            }
            data.slice_mut(ndarray::s![offset..offset + part.rows(), ..])
                .assign(&part.data);
            if let (Some(out), Some(src)) = (labels.as_mut(), part.labels.as_ref()) {
                out.extend_from_slice(src);
            }
            offset += part.rows();
        }
        FeatureMatrix::new(data, labels)
    }
}

/// A batch of images in NCHW layout with optional per-sample labels.
#[derive(Debug, Clone)]
pub struct ImageBatch {
    data: Array4<f64>,
    labels: Option<Vec<u16>>,
}

impl ImageBatch {
    pub fn new(data: Array4<f64>, labels: Option<Vec<u16>>) -> Result<Self> {
        // Batch statistics need at least two samples for a variance.
        if data.shape()[0] < 2 {
            return Err(Error::Shape(format!(
                "image batch needs at least 2 samples, got {}",
                data.shape()[0]
            )));
        }
        if let Some(labels) = &labels {
            if labels.len() != data.shape()[0] {
                return Err(Error::Shape(format!(
                    "{} labels for {} samples",
                    labels.len(),
                    data.shape()[0]
                )));
            }
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::Degenerate("non-finite image value".into()));
        }
        Ok(ImageBatch { data, labels })
    }

    pub fn len(&self) -> usize {
        self.data.shape()[0]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// (channels, height, width) of one sample.
    pub fn sample_shape(&self) -> (usize, usize, usize) {
        let s = self.data.shape();
        (s[1], s[2], s[3])
    }

    pub fn array(&self) -> &Array4<f64> {
        &self.data
    }

    pub fn labels(&self) -> Option<&[u16]> {
        self.labels.as_deref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_single_row() {
        let err = FeatureMatrix::new(Array2::zeros((1, 4)), None);
        assert!(err.is_err());
    }

    #[test]
    fn rejects_nan() {
        let data = array![[0.0, 1.0], [f64::NAN, 2.0]];
        assert!(FeatureMatrix::new(data, None).is_err());
    }

    #[test]
    fn rejects_misaligned_labels() {
        let data = Array2::zeros((3, 2));
        assert!(FeatureMatrix::new(data, Some(vec![1, 2])).is_err());
    }

    #[test]
    fn concat_stacks_rows_and_labels() {
        let a = FeatureMatrix::new(array![[1.0, 2.0], [3.0, 4.0]], Some(vec![0, 1])).unwrap();
        let b = FeatureMatrix::new(array![[5.0, 6.0], [7.0, 8.0]], Some(vec![2, 3])).unwrap();
        let joined = FeatureMatrix::concat(&[a, b]).unwrap();
        assert_eq!(joined.rows(), 4);
        assert_eq!(joined.labels(), Some(&[0, 1, 2, 3][..]));
        assert_eq!(joined.array()[[3, 1]], 8.0);
    }

    #[test]
    fn concat_rejects_width_mismatch() {
        let a = FeatureMatrix::new(Array2::zeros((2, 2)), None).unwrap();
        let b = FeatureMatrix::new(Array2::zeros((2, 3)), None).unwrap();
        assert!(FeatureMatrix::concat(&[a, b]).is_err());
    }
}
