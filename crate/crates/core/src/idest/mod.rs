//! Intrinsic-dimension estimators.
//!
//! Nine estimators share one interface: they consume a feature cloud and
//! return an [`IdEstimate`] carrying the value, a status flag, and scalar
//! diagnostics. Points whose local statistic is undefined (duplicates,
//! tied radii) are excluded and counted; estimators fail hard once more
//! than [`EstimatorParams::exclusion_limit`] of the cloud is excluded.

pub mod carter;
pub mod corrint;
pub mod fishers;
pub mod lambert;
pub mod lpca;
pub mod mind;
pub mod neighbors;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::geometry::{knn, pairwise_distances, DistanceMatrix, NeighborTable};

pub use fishers::FisherSProfile;
pub use lambert::lambert_w0;

/// The estimator family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[derive(serde::Serialize, serde::Deserialize)]
pub enum IdMethod {
    #[serde(rename = "fishers")]
    FisherS,
    #[serde(rename = "lpca")]
    LPca,
    #[serde(rename = "corrint")]
    CorrInt,
    #[serde(rename = "knn")]
    KnnCarter,
    #[serde(rename = "mada")]
    Mada,
    #[serde(rename = "mind_mli")]
    MindMli,
    #[serde(rename = "mind_mlk")]
    MindMlk,
    #[serde(rename = "mle")]
    Mle,
    #[serde(rename = "mom")]
    Mom,
    #[serde(rename = "twonn")]
    TwoNn,
}

impl IdMethod {
    pub const ALL: [IdMethod; 10] = [
        IdMethod::FisherS,
        IdMethod::LPca,
        IdMethod::CorrInt,
        IdMethod::KnnCarter,
        IdMethod::Mada,
        IdMethod::MindMli,
        IdMethod::MindMlk,
        IdMethod::Mle,
        IdMethod::Mom,
        IdMethod::TwoNn,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            IdMethod::FisherS => "fishers",
            IdMethod::LPca => "lpca",
            IdMethod::CorrInt => "corrint",
            IdMethod::KnnCarter => "knn",
            IdMethod::Mada => "mada",
            IdMethod::MindMli => "mind_mli",
            IdMethod::MindMlk => "mind_mlk",
            IdMethod::Mle => "mle",
            IdMethod::Mom => "mom",
            IdMethod::TwoNn => "twonn",
        }
    }
}

impl fmt::Display for IdMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IdMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        IdMethod::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::UnknownMeasure(s.to_string()))
    }
}

/// Outcome flag attached to every estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateStatus {
    /// A finite estimate was produced.
    Ok,
    /// Every point was separable at every profiled threshold, so the
    /// separability analysis has no finite reading.
    FullySeparable,
    /// The regression diverged; the value is clamped to the ambient
    /// dimension.
    Unstable,
}

impl EstimateStatus {
    pub fn name(self) -> &'static str {
        match self {
            EstimateStatus::Ok => "ok",
            EstimateStatus::FullySeparable => "fully_separable",
            EstimateStatus::Unstable => "unstable",
        }
    }
}

/// One estimator's output.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IdEstimate {
    pub method: IdMethod,
    /// Finite and nonnegative when status is `Ok`; NaN only with an
    /// explicit non-`Ok` status.
    pub value: f64,
    pub status: EstimateStatus,
    /// Scalar diagnostics such as chosen thresholds or exclusion counts.
    pub diagnostics: BTreeMap<String, f64>,
}

impl IdEstimate {
    pub(crate) fn ok(method: IdMethod, value: f64) -> Self {
        IdEstimate {
            method,
            value,
            status: EstimateStatus::Ok,
            diagnostics: BTreeMap::new(),
        }
    }

    pub(crate) fn with_diag(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_string(), value);
        self
    }

    /// True when the value is usable for aggregation.
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

/// Tunable knobs with the defaults used throughout.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EstimatorParams {
    /// Separability thresholds profiled by the Fisher estimator.
    pub alpha_grid: Vec<f64>,
    /// Variance mass kept by the whitening projection.
    pub variance_threshold: f64,
    /// Eigenvalue cutoff relative to the leading eigenvalue.
    pub alpha_fo: f64,
    /// Correlation-sum radii come from these two neighbor ranks.
    pub corrint_k1: usize,
    pub corrint_k2: usize,
    pub mle_k: usize,
    /// Must be even; the estimator compares ranks k and k/2.
    pub mada_k: usize,
    pub mom_k: usize,
    pub mind_k: usize,
    /// Fraction of the largest ratio statistics dropped before the
    /// two-neighbor regression.
    pub discard_fraction: f64,
    pub carter_k: usize,
    /// Subset sizes for the graph-length regression; None derives
    /// {N/8, N/4, N/2, N}.
    pub carter_subsets: Option<Vec<usize>>,
    /// Seed for drawing the regression subsets.
    pub carter_seed: u64,
    /// Hard-error threshold on the excluded-point fraction.
    pub exclusion_limit: f64,
}

impl Default for EstimatorParams {
    fn default() -> Self {
        let alpha_grid = (0..20).map(|i| 0.60 + 0.02 * i as f64).collect();
        EstimatorParams {
            alpha_grid,
            variance_threshold: 0.99,
            alpha_fo: 0.05,
            corrint_k1: 10,
            corrint_k2: 20,
            mle_k: 20,
            mada_k: 20,
            mom_k: 20,
            mind_k: 10,
            discard_fraction: 0.1,
            carter_k: 5,
            carter_subsets: None,
            carter_seed: 0,
            exclusion_limit: 0.2,
        }
    }
}

impl EstimatorParams {
    pub fn validate(&self) -> Result<()> {
        if self.alpha_grid.is_empty() {
            return Err(Error::Config("alpha_grid must be nonempty".into()));
        }
        let mut prev = 0.0;
        for &a in &self.alpha_grid {
            if !(0.0 < a && a < 1.0) {
                return Err(Error::Config(format!("alpha {a} outside (0, 1)")));
            }
            if a <= prev {
                return Err(Error::Config("alpha_grid must be strictly ascending".into()));
            }
            prev = a;
        }
        if !(0.0 < self.variance_threshold && self.variance_threshold <= 1.0) {
            return Err(Error::Config("variance_threshold must be in (0, 1]".into()));
        }
        if !(0.0 < self.alpha_fo && self.alpha_fo < 1.0) {
            return Err(Error::Config("alpha_fo must be in (0, 1)".into()));
        }
        for (name, k) in [
            ("corrint_k1", self.corrint_k1),
            ("corrint_k2", self.corrint_k2),
            ("mle_k", self.mle_k),
            ("mada_k", self.mada_k),
            ("mom_k", self.mom_k),
            ("mind_k", self.mind_k),
            ("carter_k", self.carter_k),
        ] {
            if k < 2 {
                return Err(Error::Config(format!("{name} must be >= 2, got {k}")));
            }
        }
        if self.corrint_k1 >= self.corrint_k2 {
            return Err(Error::Config("corrint_k1 must be below corrint_k2".into()));
        }
        if !self.mada_k.is_multiple_of(2) {
            return Err(Error::Config("mada_k must be even".into()));
        }
        if !(0.0..0.5).contains(&self.discard_fraction) {
            return Err(Error::Config("discard_fraction must be in [0, 0.5)".into()));
        }
        if !(0.0..=1.0).contains(&self.exclusion_limit) {
            return Err(Error::Config("exclusion_limit must be in [0, 1]".into()));
        }
        if let Some(s) = &self.carter_subsets {
            if s.len() < 2 {
                return Err(Error::Config("carter_subsets needs >= 2 sizes".into()));
            }
        }
        Ok(())
    }

    /// Largest neighbor rank any of the given methods will read.
    fn max_neighbor_rank(&self, methods: &[IdMethod]) -> usize {
        methods
            .iter()
            .map(|m| match m {
                IdMethod::CorrInt => self.corrint_k2,
                IdMethod::Mle => self.mle_k,
                IdMethod::Mada => self.mada_k,
                IdMethod::Mom => self.mom_k,
                IdMethod::MindMli | IdMethod::MindMlk => self.mind_k,
                IdMethod::TwoNn => 2,
                _ => 0,
            })
            .max()
            .unwrap_or(0)
    }
}

/// Fraction-of-cloud exclusion guard shared by the local estimators.
pub(crate) fn check_exclusions(
    method: IdMethod,
    excluded: usize,
    total: usize,
    limit: f64,
) -> Result<()> {
    if total == 0 || excluded == total {
        return Err(Error::estimator(
            method.name(),
            "no points left after excluding degenerate neighborhoods",
        ));
    }
    if excluded as f64 > limit * total as f64 {
        return Err(Error::estimator(
            method.name(),
            format!("{excluded} of {total} points degenerate (limit {limit})"),
        ));
    }
    Ok(())
}

/// Distance structures computed once and shared by the neighbor-based
/// estimators.
pub struct SharedTables {
    pub distances: DistanceMatrix,
    pub neighbors: Option<NeighborTable>,
}

impl SharedTables {
    pub fn build(x: &FeatureMatrix, params: &EstimatorParams, methods: &[IdMethod]) -> Result<Self> {
        let distances = pairwise_distances(&x.array().view())?;
        let want = params.max_neighbor_rank(methods);
        let neighbors = if want > 0 {
            let k = want.min(distances.n() - 1);
            Some(knn(&distances, k)?)
        } else {
            None
        };
        Ok(SharedTables {
            distances,
            neighbors,
        })
    }

    pub(crate) fn neighbors_for(&self, method: IdMethod, k: usize) -> Result<&NeighborTable> {
        let nt = self
            .neighbors
            .as_ref()
            .ok_or_else(|| Error::estimator(method.name(), "neighbor table missing"))?;
        if nt.k() < k {
            return Err(Error::estimator(
                method.name(),
                format!("needs {k} neighbors, cloud supports {}", nt.k()),
            ));
        }
        Ok(nt)
    }
}

/// Runs the selected estimators over one cloud, sharing the distance and
/// neighbor tables. Per-method failures are reported in place so one
/// degenerate estimator does not discard the rest.
pub fn estimate_all(
    x: &FeatureMatrix,
    params: &EstimatorParams,
    methods: &[IdMethod],
) -> Result<Vec<(IdMethod, Result<IdEstimate>)>> {
    params.validate()?;
    let tables = SharedTables::build(x, params, methods)?;
    let mut out = Vec::with_capacity(methods.len());
    let mut mind_cache: Option<(Result<IdEstimate>, Result<IdEstimate>)> = None;
    for &m in methods {
        let r = match m {
            IdMethod::FisherS => fishers::estimate_fishers(x, params).map(|(e, _)| e),
            IdMethod::LPca => lpca::estimate_lpca(x, params),
            IdMethod::CorrInt => corrint::corrint_with(&tables, params),
            IdMethod::KnnCarter => carter::carter_with(&tables, x.cols(), params),
            IdMethod::Mle => neighbors::mle_with(&tables, params),
            IdMethod::Mada => neighbors::mada_with(&tables, params),
            IdMethod::Mom => neighbors::mom_with(&tables, params),
            IdMethod::TwoNn => neighbors::twonn_with(&tables, params),
            IdMethod::MindMli | IdMethod::MindMlk => {
                if mind_cache.is_none() {
                    mind_cache = Some(match mind::mind_with(&tables, x.cols(), params) {
                        Ok((a, b)) => (Ok(a), Ok(b)),
                        Err(e) => {
                            let msg = e.to_string();
                            (
                                Err(e),
                                Err(Error::estimator(IdMethod::MindMlk.name(), msg)),
                            )
                        }
                    });
                }
                let (mli, mlk) = mind_cache.as_ref().expect("cache filled");
                let pick = if m == IdMethod::MindMli { mli } else { mlk };
                match pick {
                    Ok(e) => Ok(e.clone()),
                    Err(e) => Err(Error::estimator(m.name(), e.to_string())),
                }
            }
        };
        out.push((m, r));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;
    use ndarray::Array2;

    #[test]
    fn method_names_round_trip() {
        for m in IdMethod::ALL {
            assert_eq!(m.name().parse::<IdMethod>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.name()));
            let back: IdMethod = serde_json::from_str(&json).unwrap();
            assert_eq!(back, m);
        }
        assert!("bogus".parse::<IdMethod>().is_err());
    }

    #[test]
    fn default_params_validate() {
        let p = EstimatorParams::default();
        p.validate().unwrap();
        assert_eq!(p.alpha_grid.len(), 20);
        assert!((p.alpha_grid[0] - 0.60).abs() < 1e-12);
        assert!((p.alpha_grid[19] - 0.98).abs() < 1e-12);
    }

    #[test]
    fn param_validation_rejects_bad_values() {
        let bad = [
            EstimatorParams {
                mada_k: 7,
                ..Default::default()
            },
            EstimatorParams {
                corrint_k1: 30,
                ..Default::default()
            },
            EstimatorParams {
                discard_fraction: 0.5,
                ..Default::default()
            },
            EstimatorParams {
                alpha_grid: vec![0.6, 0.6],
                ..Default::default()
            },
        ];
        for p in bad {
            assert!(p.validate().is_err());
        }
    }

    #[test]
    fn estimate_all_reports_every_method() {
        let mut rng = CounterRng::new(77);
        let x = Array2::from_shape_fn((120, 6), |_| rng.normal());
        let fm = FeatureMatrix::new(x, None).unwrap();
        let out = estimate_all(&fm, &EstimatorParams::default(), &IdMethod::ALL).unwrap();
        assert_eq!(out.len(), 10);
        for (m, r) in &out {
            let e = r.as_ref().unwrap_or_else(|e| panic!("{m} failed: {e}"));
            assert!(e.value.is_finite(), "{m} produced {:?}", e.value);
            assert!(e.value >= 0.0);
        }
    }

    #[test]
    fn exclusion_guard_thresholds() {
        assert!(check_exclusions(IdMethod::Mle, 0, 100, 0.2).is_ok());
        assert!(check_exclusions(IdMethod::Mle, 20, 100, 0.2).is_ok());
        assert!(check_exclusions(IdMethod::Mle, 21, 100, 0.2).is_err());
        assert!(check_exclusions(IdMethod::Mle, 100, 100, 0.2).is_err());
    }
}
