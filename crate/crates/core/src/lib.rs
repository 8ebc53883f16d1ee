//! Scores untrained convolutional architectures by the geometry of the
//! feature space they induce at random initialization.
//!
//! A cell-based network is built from a compact architecture string,
//! initialized with seeded Kaiming-uniform weights, and run forward on image
//! batches. The resulting feature rows are treated as a point cloud and
//! summarized two ways:
//!
//! * angle statistics between feature vectors and between class centroids
//!   ([`ortho`]), reported in degrees;
//! * intrinsic dimension under nine estimators ([`idest`]).
//!
//! [`pipeline`] repeats this over several initializations, aggregates
//! mean/std per measure, and applies threshold rules to keep, drop, or
//! pass on each architecture. Everything downstream of the master seed is
//! deterministic, including parallel runs.

pub mod arch;
pub mod data;
pub mod error;
pub mod geometry;
pub mod idest;
pub mod io;
pub mod net;
pub mod ortho;
pub mod pipeline;
pub mod rng;
pub mod selfcheck;
pub mod synth;

pub use arch::{format_arch_string, parse_arch_string, random_arch, CellSpec, OpKind};
pub use data::{FeatureMatrix, ImageBatch};
pub use error::{Error, Result};
pub use idest::{estimate_all, EstimateStatus, EstimatorParams, IdEstimate, IdMethod};
pub use net::{build_initialized, build_network, InitSpec, Network, NetworkConfig};
pub use ortho::{ortho_measures, OrthoMeasures};
pub use pipeline::{
    apply_rules, rank, rule_set, score_architecture, ArchScore, BatchMode, BatchSource,
    RuleSet, ScoreConfig, Verdict,
};
pub use rng::{CounterRng, SeedMix};
