//! Shared geometric machinery: centering, pairwise distances, nearest
//! neighbors, principal components, and projection of whitened clouds to
//! the unit sphere.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Subtracts the column mean from every column in place.
pub fn center(data: &mut Array2<f64>) {
    let n = data.nrows() as f64;
    for mut col in data.columns_mut() {
        let mean = col.sum() / n;
        col.mapv_inplace(|v| v - mean);
    }
}

/// Dense symmetric Euclidean distance matrix with zero diagonal.
///
/// Distances are plain sums of squared coordinate differences taken in
/// column order, so they are bit-reproducible against a naive
/// implementation; nothing is factored through a Gram matrix.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    d: Array2<f64>,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.d.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[[i, j]]
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.d.view()
    }

    /// Distances from point `i` to every other point, excluding itself.
    pub fn row_without_self(&self, i: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n() - 1);
        for j in 0..self.n() {
            if j != i {
                out.push(self.d[[i, j]]);
            }
        }
        out
    }
}

pub fn pairwise_distances(data: &ArrayView2<f64>) -> Result<DistanceMatrix> {
    let n = data.nrows();
    if n < 2 {
        return Err(Error::Shape("need at least 2 points for distances".into()));
    }
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        let ri = data.row(i);
        for j in (i + 1)..n {
            let rj = data.row(j);
            let mut s = 0.0;
            for (a, b) in ri.iter().zip(rj.iter()) {
                let diff = a - b;
                s += diff * diff;
            }
            let dist = s.sqrt();
            d[[i, j]] = dist;
            d[[j, i]] = dist;
        }
    }
    Ok(DistanceMatrix { d })
}

/// K nearest neighbors of every point, self excluded.
///
/// Neighbors are sorted by increasing distance; exact ties are broken by
/// the lower point index, which keeps the table fully deterministic.
#[derive(Debug, Clone)]
pub struct NeighborTable {
    k: usize,
    indices: Vec<Vec<usize>>,
    distances: Vec<Vec<f64>>,
    duplicate_pairs: usize,
}

impl NeighborTable {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_points(&self) -> usize {
        self.indices.len()
    }

    /// Indices of the k nearest neighbors of point `i`, nearest first.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.indices[i]
    }

    /// Distances to the k nearest neighbors of point `i`, nearest first.
    pub fn distances(&self, i: usize) -> &[f64] {
        &self.distances[i]
    }

    /// Distance to the j-th nearest neighbor (1-based order statistic).
    pub fn kth_distance(&self, i: usize, j: usize) -> f64 {
        self.distances[i][j - 1]
    }

    /// Number of unordered point pairs at exactly zero distance.
    pub fn duplicate_pairs(&self) -> usize {
        self.duplicate_pairs
    }
}

pub fn knn(dm: &DistanceMatrix, k: usize) -> Result<NeighborTable> {
    let n = dm.n();
    if k < 1 {
        return Err(Error::Config("k must be >= 1".into()));
    }
    if k >= n {
        return Err(Error::Config(format!(
            "k = {k} requires more than {n} points"
        )));
    }
    let mut indices = Vec::with_capacity(n);
    let mut distances = Vec::with_capacity(n);
    let mut duplicate_pairs = 0usize;
    for i in 0..n {
        let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| {
            dm.get(i, a)
                .partial_cmp(&dm.get(i, b))
                .expect("finite distances")
                .then(a.cmp(&b))
        });
        order.truncate(k);
        for &j in &order {
            if j > i && dm.get(i, j) == 0.0 {
                duplicate_pairs += 1;
            }
        }
        distances.push(order.iter().map(|&j| dm.get(i, j)).collect());
        indices.push(order);
    }
    Ok(NeighborTable {
        k,
        indices,
        distances,
        duplicate_pairs,
    })
}

/// Principal components of a point cloud, fitted once and reusable for
/// projection at any retained width.
///
/// Components are sorted by decreasing eigenvalue and sign-fixed so the
/// entry of largest magnitude in each component is positive; negative
/// eigenvalues arising from roundoff are clamped to zero.
#[derive(Debug, Clone)]
pub struct PcaModel {
    mean: Vec<f64>,
    /// (input_dim, input_dim), columns are components.
    components: Array2<f64>,
    eigenvalues: Vec<f64>,
}

impl PcaModel {
    /// Fits on rows of `data` with the unbiased (n - 1) covariance.
    pub fn fit(data: &ArrayView2<f64>) -> Result<Self> {
        let n = data.nrows();
        let d = data.ncols();
        if n < 2 {
            return Err(Error::Shape("PCA needs at least 2 rows".into()));
        }
        let mut centered = data.to_owned();
        let mean: Vec<f64> = data
            .mean_axis(Axis(0))
            .expect("nonempty rows")
            .to_vec();
        center(&mut centered);

        let cov_nd = centered.t().dot(&centered) / (n as f64 - 1.0);
        let cov = DMatrix::from_fn(d, d, |r, c| cov_nd[[r, c]]);
        let eig = SymmetricEigen::new(cov);

        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .partial_cmp(&eig.eigenvalues[a])
                .expect("finite eigenvalues")
                .then(a.cmp(&b))
        });

        let mut components = Array2::zeros((d, d));
        let mut eigenvalues = Vec::with_capacity(d);
        for (slot, &src) in order.iter().enumerate() {
            eigenvalues.push(eig.eigenvalues[src].max(0.0));
            let col = eig.eigenvectors.column(src);
            let mut best = 0usize;
            for r in 1..d {
                if col[r].abs() > col[best].abs() {
                    best = r;
                }
            }
            let flip = if col[best] < 0.0 { -1.0 } else { 1.0 };
            for r in 0..d {
                components[[r, slot]] = flip * col[r];
            }
        }
        Ok(PcaModel {
            mean,
            components,
            eigenvalues,
        })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Eigenvalues in decreasing order, clamped at zero.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn components(&self) -> &Array2<f64> {
        &self.components
    }

    /// Smallest number of leading components whose eigenvalue mass
    /// reaches `threshold` of the total. Returns 0 when total variance
    /// vanishes.
    pub fn retained_for(&self, threshold: f64) -> usize {
        let total: f64 = self.eigenvalues.iter().sum();
        if total <= 0.0 {
            return 0;
        }
        let target = threshold * total;
        let mut cum = 0.0;
        for (i, &l) in self.eigenvalues.iter().enumerate() {
            if l <= 0.0 {
                // Zero modes carry no mass; anything still missing is
                // roundoff, so stop here.
                return i.max(1);
            }
            cum += l;
            if cum >= target {
                return i + 1;
            }
        }
        self.eigenvalues.len()
    }

    /// Projects rows onto the `m` leading components after removing the
    /// fitted mean.
    pub fn transform(&self, data: &ArrayView2<f64>, m: usize) -> Result<Array2<f64>> {
        let d = self.mean.len();
        if data.ncols() != d {
            return Err(Error::Shape(format!(
                "expected {d} columns, got {}",
                data.ncols()
            )));
        }
        if m == 0 || m > d {
            return Err(Error::Config(format!("cannot retain {m} of {d} components")));
        }
        let mut centered = data.to_owned();
        for (j, mv) in self.mean.iter().enumerate() {
            centered.column_mut(j).mapv_inplace(|v| v - mv);
        }
        let sub = self.components.slice(ndarray::s![.., ..m]);
        Ok(centered.dot(&sub))
    }
}

/// A centered, whitened cloud projected to the unit sphere, ready for
/// separability analysis.
#[derive(Debug, Clone)]
pub struct SphereCloud {
    data: Array2<f64>,
    retained_dims: usize,
    dropped_rows: usize,
}

impl SphereCloud {
    /// Unit-norm rows, one per surviving point.
    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn num_points(&self) -> usize {
        self.data.nrows()
    }

    /// Dimension of the sphere's ambient space after reduction.
    pub fn retained_dims(&self) -> usize {
        self.retained_dims
    }

    /// Points discarded because they collapsed onto the centroid.
    pub fn dropped_rows(&self) -> usize {
        self.dropped_rows
    }
}

/// Centers the cloud, keeps the leading principal components covering
/// `variance_threshold` of the variance, rescales each kept axis to unit
/// variance, and projects every point onto the unit sphere.
///
/// Points with vanishing whitened norm sit at the centroid and carry no
/// direction; they are dropped and counted.
pub fn sphere_project(data: &ArrayView2<f64>, variance_threshold: f64) -> Result<SphereCloud> {
    if !(0.0 < variance_threshold && variance_threshold <= 1.0) {
        return Err(Error::Config(
            "variance_threshold must be in (0, 1]".into(),
        ));
    }
    let pca = PcaModel::fit(data)?;
    let m = pca.retained_for(variance_threshold);
    if m == 0 {
        return Err(Error::Degenerate(
            "point cloud has no variance to project".into(),
        ));
    }
    let mut y = pca.transform(data, m)?;
    for (j, &l) in pca.eigenvalues()[..m].iter().enumerate() {
        if l <= 0.0 {
            return Err(Error::Degenerate(
                "retained component has zero variance".into(),
            ));
        }
        let s = 1.0 / l.sqrt();
        y.column_mut(j).mapv_inplace(|v| v * s);
    }

    let mut kept: Vec<usize> = Vec::with_capacity(y.nrows());
    for (i, row) in y.rows().into_iter().enumerate() {
        let norm = row.dot(&row).sqrt();
        if norm > 1e-12 {
            kept.push(i);
        }
    }
    let dropped = y.nrows() - kept.len();
    if kept.len() < 2 {
        return Err(Error::Degenerate(
            "fewer than 2 points survive sphere projection".into(),
        ));
    }
    let mut out = Array2::zeros((kept.len(), m));
    for (dst, &src) in kept.iter().enumerate() {
        let row = y.row(src);
        let norm = row.dot(&row).sqrt();
        for j in 0..m {
            out[[dst, j]] = row[j] / norm;
        }
    }
    Ok(SphereCloud {
        data: out,
        retained_dims: m,
        dropped_rows: dropped,
    })
}
