//! Untrained cell-based networks: assembly, Kaiming-uniform weight
//! sampling, and feature extraction from the global-average-pooling
//! activation.
//!
//! The macro skeleton is a 3x3 stem conv + batch norm, three stages of
//! `N` identical cells at channel widths (C, 2C, 4C), residual reduction
//! blocks between stages, and a final norm / ReLU / global average pool.
//! With `C` initial channels the feature width is always `4C`.

pub mod ops;

use ndarray::{Array4, ArrayView4};

use crate::arch::{CellSpec, OpKind};
use crate::data::{FeatureMatrix, ImageBatch};
use crate::error::{Error, Result};
use crate::rng::{CounterRng, SeedMix};

/// Macro-architecture knobs.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NetworkConfig {
    /// Cells stacked per stage (N).
    pub cells_per_stage: usize,
    /// Stem output channels (C); stages run at (C, 2C, 4C).
    pub initial_channels: usize,
    /// Input (channels, height, width).
    pub input_shape: (usize, usize, usize),
    /// Stabilizer for batch-statistics normalization.
    pub bn_epsilon: f64,
}

impl NetworkConfig {
    pub fn new(
        cells_per_stage: usize,
        initial_channels: usize,
        input_shape: (usize, usize, usize),
        bn_epsilon: f64,
    ) -> Result<Self> {
        let cfg = NetworkConfig {
            cells_per_stage,
            initial_channels,
            input_shape,
            bn_epsilon,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Fast desk-scale default: one cell per stage, 16 channels, CIFAR
    /// input geometry.
    pub fn desk() -> Self {
        NetworkConfig {
            cells_per_stage: 1,
            initial_channels: 16,
            input_shape: (3, 32, 32),
            bn_epsilon: 1e-5,
        }
    }

    /// Full-scale benchmark geometry: five cells per stage.
    pub fn full_depth() -> Self {
        NetworkConfig {
            cells_per_stage: 5,
            ..Self::desk()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells_per_stage < 1 {
            return Err(Error::Config("cells_per_stage must be >= 1".into()));
        }
        if self.initial_channels < 1 {
            return Err(Error::Config("initial_channels must be >= 1".into()));
        }
        if self.bn_epsilon <= 0.0 || !self.bn_epsilon.is_finite() {
            return Err(Error::Config("bn_epsilon must be positive".into()));
        }
        let (c, h, w) = self.input_shape;
        if c < 1 {
            return Err(Error::Config("input must have at least one channel".into()));
        }
        // Two stride-2 reductions; both the conv and the pooled residual
        // path must agree on the downsampled size.
        if h < 8 || w < 8 || h % 4 != 0 || w % 4 != 0 {
            return Err(Error::Config(format!(
                "input height/width must be >= 8 and divisible by 4, got {h}x{w}"
            )));
        }
        Ok(())
    }

    pub fn stage_channels(&self) -> [usize; 3] {
        let c = self.initial_channels;
        [c, 2 * c, 4 * c]
    }

    /// Width of the extracted feature vectors.
    pub fn feature_width(&self) -> usize {
        4 * self.initial_channels
    }
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self::desk()
    }
}

/// Weight-sampling parameters: every conv weight is drawn from
/// U(-b, b) with b = gain * sqrt(3 / fan_in).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct InitSpec {
    pub gain: f64,
    pub seed: u64,
    /// Sample biases from the same bound; when false biases stay zero.
    pub sample_bias: bool,
}

impl InitSpec {
    pub fn new(seed: u64) -> Self {
        InitSpec {
            gain: std::f64::consts::SQRT_2,
            seed,
            sample_bias: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gain.is_finite() && self.gain > 0.0) {
            return Err(Error::Config("gain must be positive".into()));
        }
        Ok(())
    }
}

/// Uniform bound for a layer: b = gain * sqrt(3 / fan_in).
pub fn kaiming_bound(gain: f64, fan_in: usize) -> f64 {
    gain * (3.0 / fan_in as f64).sqrt()
}

/// One convolution layer with its stable id for seed derivation.
#[derive(Debug, Clone)]
pub struct Conv2d {
    layer_id: u32,
    weight: Array4<f64>,
    bias: Vec<f64>,
    stride: usize,
    pad: usize,
}

impl Conv2d {
    fn new(counter: &mut u32, out_ch: usize, in_ch: usize, k: usize, stride: usize, pad: usize) -> Self {
        let layer_id = *counter;
        *counter += 1;
        Conv2d {
            layer_id,
            weight: Array4::zeros((out_ch, in_ch, k, k)),
            bias: vec![0.0; out_ch],
            stride,
            pad,
        }
    }

    pub fn fan_in(&self) -> usize {
        let s = self.weight.shape();
        s[1] * s[2] * s[3]
    }

    pub fn layer_id(&self) -> u32 {
        self.layer_id
    }

    pub fn weight(&self) -> &Array4<f64> {
        &self.weight
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// Fills weights (and optionally biases) from the layer's derived
    /// stream. The stream depends only on (seed, layer_id), so layers can
    /// be initialized in any order.
    fn init(&mut self, spec: &InitSpec) {
        let mut rng = SeedMix::new(spec.seed)
            .str("layer")
            .u64(self.layer_id as u64)
            .rng();
        let b = kaiming_bound(spec.gain, self.fan_in());
        for w in self.weight.iter_mut() {
            *w = b * (2.0 * rng.next_f64() - 1.0);
        }
        for v in self.bias.iter_mut() {
            *v = if spec.sample_bias {
                b * (2.0 * rng.next_f64() - 1.0)
            } else {
                0.0
            };
        }
    }

    fn forward(&self, x: &ArrayView4<f64>) -> Array4<f64> {
        ops::conv2d(x, &self.weight, Some(&self.bias), self.stride, self.pad)
    }
}

/// A cell edge compiled against its stage width.
#[derive(Debug, Clone)]
enum EdgeOp {
    Zero,
    Identity,
    /// ReLU -> conv -> batch norm.
    ConvBlock(Conv2d),
    /// 3x3 average pool, stride 1, padded.
    Pool,
}

#[derive(Debug, Clone)]
struct BuiltCell {
    num_nodes: usize,
    /// (target, source, op) in (target, source) order.
    edges: Vec<(usize, usize, EdgeOp)>,
}

/// Residual block halving the spatial size and doubling channels:
/// ReLU-conv(s2)-BN, ReLU-conv-BN on the main path; 2x2 average pool
/// plus 1x1 conv on the shortcut.
#[derive(Debug, Clone)]
struct Reduction {
    conv_a: Conv2d,
    conv_b: Conv2d,
    shortcut: Conv2d,
}

/// A fully assembled network. Weights are zero until initialized.
#[derive(Debug, Clone)]
pub struct Network {
    cfg: NetworkConfig,
    cell: CellSpec,
    stem: Conv2d,
    stages: Vec<Vec<BuiltCell>>,
    reductions: Vec<Reduction>,
    initialized: bool,
}

/// Assembles the macro skeleton around one repeated cell.
pub fn build_network(cell: &CellSpec, cfg: &NetworkConfig) -> Result<Network> {
    cfg.validate()?;
    let mut counter: u32 = 0;
    let stem = Conv2d::new(&mut counter, cfg.initial_channels, cfg.input_shape.0, 3, 1, 1);
    let widths = cfg.stage_channels();
    let mut stages = Vec::with_capacity(3);
    let mut reductions = Vec::new();
    for (si, &width) in widths.iter().enumerate() {
        if si > 0 {
            let prev = widths[si - 1];
            reductions.push(Reduction {
                conv_a: Conv2d::new(&mut counter, width, prev, 3, 2, 1),
                conv_b: Conv2d::new(&mut counter, width, width, 3, 1, 1),
                shortcut: Conv2d::new(&mut counter, width, prev, 1, 1, 0),
            });
        }
        let mut stage = Vec::with_capacity(cfg.cells_per_stage);
        for _ in 0..cfg.cells_per_stage {
            let edges = cell
                .edges()
                .iter()
                .map(|e| {
                    let op = match e.op {
                        OpKind::None => EdgeOp::Zero,
                        OpKind::SkipConnect => EdgeOp::Identity,
                        OpKind::NorConv1x1 => {
                            EdgeOp::ConvBlock(Conv2d::new(&mut counter, width, width, 1, 1, 0))
                        }
                        OpKind::NorConv3x3 => {
                            EdgeOp::ConvBlock(Conv2d::new(&mut counter, width, width, 3, 1, 1))
                        }
                        OpKind::AvgPool3x3 => EdgeOp::Pool,
                    };
                    (e.target, e.source, op)
                })
                .collect();
            stage.push(BuiltCell {
                num_nodes: cell.num_nodes(),
                edges,
            });
        }
        stages.push(stage);
    }
    Ok(Network {
        cfg: cfg.clone(),
        cell: cell.clone(),
        stem,
        stages,
        reductions,
        initialized: false,
    })
}

impl Network {
    pub fn config(&self) -> &NetworkConfig {
        &self.cfg
    }

    pub fn cell(&self) -> &CellSpec {
        &self.cell
    }

    pub fn feature_width(&self) -> usize {
        self.cfg.feature_width()
    }

    pub fn is_initialized(&self) -> bool {
        self.initialized
    }

    /// All conv layers in construction order.
    pub fn conv_layers(&self) -> Vec<&Conv2d> {
        let mut layers: Vec<&Conv2d> = vec![&self.stem];
        for (si, stage) in self.stages.iter().enumerate() {
            if si > 0 {
                let r = &self.reductions[si - 1];
                layers.extend([&r.conv_a, &r.conv_b, &r.shortcut]);
            }
            for cell in stage {
                for (_, _, op) in &cell.edges {
                    if let EdgeOp::ConvBlock(conv) = op {
                        layers.push(conv);
                    }
                }
            }
        }
        layers
    }

    fn conv_layers_mut(&mut self) -> Vec<&mut Conv2d> {
        let mut layers: Vec<&mut Conv2d> = vec![&mut self.stem];
        let stages = self.stages.iter_mut();
        let mut reductions = self.reductions.iter_mut();
        for (si, stage) in stages.enumerate() {
            if si > 0 {
                let r = reductions.next().expect("one reduction between stages");
                layers.extend([&mut r.conv_a, &mut r.conv_b, &mut r.shortcut]);
            }
            for cell in stage {
                for (_, _, op) in &mut cell.edges {
                    if let EdgeOp::ConvBlock(conv) = op {
                        layers.push(conv);
                    }
                }
            }
        }
        layers
    }

    /// Samples every conv weight from its layer-specific U(-b, b).
    pub fn init_kaiming(&mut self, spec: &InitSpec) -> Result<()> {
        spec.validate()?;
        for conv in self.conv_layers_mut() {
            conv.init(spec);
        }
        self.initialized = true;
        Ok(())
    }

    /// Runs the untrained forward pass and returns the global-average-
    /// pooling features, one row per sample. Batch-norm layers use the
    /// current batch's statistics throughout.
    pub fn forward_features(&self, batch: &ImageBatch) -> Result<FeatureMatrix> {
        if batch.sample_shape() != self.cfg.input_shape {
            return Err(Error::Shape(format!(
                "batch shape {:?} does not match configured input {:?}",
                batch.sample_shape(),
                self.cfg.input_shape
            )));
        }
        let eps = self.cfg.bn_epsilon;

        let mut x = self.stem.forward(&batch.array().view());
        ops::batch_norm(&mut x.view_mut(), eps);
        check_finite(&x, "stem")?;

        for (si, stage) in self.stages.iter().enumerate() {
            if si > 0 {
                x = self.forward_reduction(&self.reductions[si - 1], x, eps);
                check_finite(&x, &format!("reduction {}", si - 1))?;
            }
            for (ci, cell) in stage.iter().enumerate() {
                x = self.forward_cell(cell, x, eps);
                check_finite(&x, &format!("stage {si} cell {ci}"))?;
            }
        }

        ops::batch_norm(&mut x.view_mut(), eps);
        ops::relu(&mut x.view_mut());
        let features = ops::global_avg_pool(&x.view());
        let fm = FeatureMatrix::new(features, batch.labels().map(|l| l.to_vec()))
            .map_err(|_| Error::NonFinite {
                layer: "global average pool".into(),
            })?;
        Ok(fm)
    }

    fn forward_cell(&self, cell: &BuiltCell, input: Array4<f64>, eps: f64) -> Array4<f64> {
        let shape = (
            input.shape()[0],
            input.shape()[1],
            input.shape()[2],
            input.shape()[3],
        );
        let mut nodes: Vec<Array4<f64>> = Vec::with_capacity(cell.num_nodes);
        nodes.push(input);
        for target in 1..cell.num_nodes {
            let mut acc = Array4::zeros(shape);
            for (t, s, op) in &cell.edges {
                if *t != target {
                    continue;
                }
                let src = &nodes[*s];
                match op {
                    EdgeOp::Zero => {}
                    EdgeOp::Identity => acc += src,
                    EdgeOp::Pool => acc += &ops::avg_pool(&src.view(), 3, 1, 1),
                    EdgeOp::ConvBlock(conv) => {
                        let mut t = src.clone();
                        ops::relu(&mut t.view_mut());
                        let mut t = conv.forward(&t.view());
                        ops::batch_norm(&mut t.view_mut(), eps);
                        acc += &t;
                    }
                }
            }
            nodes.push(acc);
        }
        nodes.pop().expect("cell has at least two nodes")
    }

    fn forward_reduction(&self, red: &Reduction, input: Array4<f64>, eps: f64) -> Array4<f64> {
        let mut main = input.clone();
        ops::relu(&mut main.view_mut());
        let mut main = red.conv_a.forward(&main.view());
        ops::batch_norm(&mut main.view_mut(), eps);
        ops::relu(&mut main.view_mut());
        let mut main = red.conv_b.forward(&main.view());
        ops::batch_norm(&mut main.view_mut(), eps);

        let pooled = ops::avg_pool(&input.view(), 2, 2, 0);
        let shortcut = red.shortcut.forward(&pooled.view());
        main + shortcut
    }
}

fn check_finite(x: &Array4<f64>, layer: &str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite {
            layer: layer.to_string(),
        })
    }
}

/// Convenience: build + init in one call.
pub fn build_initialized(cell: &CellSpec, cfg: &NetworkConfig, spec: &InitSpec) -> Result<Network> {
    let mut net = build_network(cell, cfg)?;
    net.init_kaiming(spec)?;
    Ok(net)
}

/// Draws `count` samples from U(-b, b) for a layer with the given fan-in,
/// using the same stream derivation as layer initialization.
pub fn sample_kaiming_stream(gain: f64, fan_in: usize, seed: u64, count: usize) -> Vec<f64> {
    let b = kaiming_bound(gain, fan_in);
    let mut rng = CounterRng::new(seed);
    (0..count).map(|_| b * (2.0 * rng.next_f64() - 1.0)).collect()
}
