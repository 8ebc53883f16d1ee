//! The measurement protocol: many random initializations x many data
//! batches -> one measure vector per architecture, plus the selection
//! rules that turn measure vectors into keep / drop verdicts.

use std::collections::BTreeMap;

use ndarray::{Array4, Axis};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::arch::parse_arch_string;
use crate::data::{FeatureMatrix, ImageBatch};
use crate::error::{Error, Result};
use crate::geometry::center;
use crate::idest::{estimate_all, EstimateStatus, EstimatorParams, IdMethod};
use crate::net::{build_initialized, InitSpec, NetworkConfig};
use crate::ortho;
use crate::rng::SeedMix;
use crate::synth::synth_images;

/// Names of the four angle statistics, in report order.
pub const ORTHO_MEASURE_NAMES: [&str; 4] = ["f_mean", "f_std", "cmean", "cstd"];

/// Every measure the toolkit can report: the four angle statistics plus
/// the ten dimension estimates.
pub fn all_measure_names() -> Vec<String> {
    let mut names: Vec<String> = ORTHO_MEASURE_NAMES.iter().map(|s| s.to_string()).collect();
    names.extend(IdMethod::ALL.iter().map(|m| m.name().to_string()));
    names
}

/// Whether `name` is one of the reportable measures.
pub fn known_measure(name: &str) -> bool {
    ORTHO_MEASURE_NAMES.contains(&name) || name.parse::<IdMethod>().is_ok()
}

/// Whether per-init measures are taken on the concatenated cloud or per
/// batch and then averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchMode {
    /// One B x batch_size row cloud per init.
    Concatenate,
    /// Measure each batch separately, average per measure.
    PerBatch,
}

/// Full scoring configuration.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScoreConfig {
    /// Number of random initializations (R).
    pub inits: usize,
    /// Batches per init (B).
    pub batches: usize,
    pub batch_size: usize,
    pub master_seed: u64,
    pub gain: f64,
    pub sample_bias: bool,
    pub batch_mode: BatchMode,
    pub network: NetworkConfig,
    pub estimator: EstimatorParams,
    /// Measure names to compute; see [`all_measure_names`].
    pub measures: Vec<String>,
}

impl ScoreConfig {
    /// Small, fast settings: 3 inits, one 64-sample batch, shallow net.
    pub fn desk(master_seed: u64) -> Self {
        ScoreConfig {
            inits: 3,
            batches: 1,
            batch_size: 64,
            master_seed,
            gain: std::f64::consts::SQRT_2,
            sample_bias: true,
            batch_mode: BatchMode::Concatenate,
            network: NetworkConfig::desk(),
            estimator: EstimatorParams::default(),
            measures: all_measure_names(),
        }
    }

    /// The full protocol: 50 inits, ten 128-sample batches, five cells
    /// per stage.
    pub fn reference(master_seed: u64) -> Self {
        ScoreConfig {
            inits: 50,
            batches: 10,
            batch_size: 128,
            network: NetworkConfig::full_depth(),
            ..Self::desk(master_seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.inits < 1 {
            return Err(Error::Config("inits must be >= 1".into()));
        }
        if self.batches < 1 {
            return Err(Error::Config("batches must be >= 1".into()));
        }
        if self.batch_size < 2 {
            return Err(Error::Config("batch_size must be >= 2".into()));
        }
        if !(self.gain.is_finite() && self.gain > 0.0) {
            return Err(Error::Config("gain must be positive".into()));
        }
        if self.measures.is_empty() {
            return Err(Error::Config("no measures requested".into()));
        }
        for m in &self.measures {
            if !known_measure(m) {
                return Err(Error::UnknownMeasure(m.clone()));
            }
        }
        self.network.validate()?;
        self.estimator.validate()
    }

    /// SHA-256 over the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        let mut out = String::with_capacity(64);
        for b in digest {
            out.push_str(&format!("{b:02x}"));
        }
        out
    }
}

/// Where the image batches come from.
pub enum BatchSource {
    /// Seeded uniform-noise images.
    Synthetic,
    /// Subsampled batches from a fixed dataset held in memory.
    Pool(ImagePool),
}

impl BatchSource {
    pub fn label(&self) -> &'static str {
        match self {
            BatchSource::Synthetic => "synthetic",
            BatchSource::Pool(_) => "pool",
        }
    }
}

/// An in-memory image dataset, NCHW.
pub struct ImagePool {
    data: Array4<f64>,
    labels: Option<Vec<u16>>,
}

impl ImagePool {
    pub fn new(data: Array4<f64>, labels: Option<Vec<u16>>) -> Result<Self> {
        if data.shape()[0] < 2 {
            return Err(Error::Shape("pool needs at least 2 images".into()));
        }
        if let Some(l) = &labels {
            if l.len() != data.shape()[0] {
                return Err(Error::Shape(format!(
                    "{} labels for {} images",
                    l.len(),
                    data.shape()[0]
                )));
            }
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape("pool contains non-finite values".into()));
        }
        Ok(ImagePool { data, labels })
    }

    pub fn len(&self) -> usize {
        self.data.shape()[0]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample_shape(&self) -> (usize, usize, usize) {
        let s = self.data.shape();
        (s[1], s[2], s[3])
    }

    fn take(&self, indices: &[usize]) -> Result<ImageBatch> {
        let (c, h, w) = self.sample_shape();
        let mut out = Array4::zeros((indices.len(), c, h, w));
        for (dst, &src) in indices.iter().enumerate() {
            out.index_axis_mut(Axis(0), dst)
                .assign(&self.data.index_axis(Axis(0), src));
        }
        let labels = self
            .labels
            .as_ref()
            .map(|l| indices.iter().map(|&i| l[i]).collect());
        ImageBatch::new(out, labels)
    }
}

/// Seed for batch `b`; batches are shared across inits and
/// architectures so clouds differ only through the weights.
pub fn batch_seed(master_seed: u64, b: usize) -> u64 {
    SeedMix::new(master_seed).str("batch").u64(b as u64).finish()
}

/// Seed for initialization `r` of one architecture.
pub fn init_seed(master_seed: u64, arch: &str, r: usize) -> u64 {
    SeedMix::new(master_seed).str(arch).u64(r as u64).finish()
}

/// Draws the `cfg.batches` image batches every init of every architecture
/// sees, in order.
pub fn make_batches(source: &BatchSource, cfg: &ScoreConfig) -> Result<Vec<ImageBatch>> {
    let shape = cfg.network.input_shape;
    let mut batches = Vec::with_capacity(cfg.batches);
    for b in 0..cfg.batches {
        let seed = batch_seed(cfg.master_seed, b);
        let batch = match source {
            BatchSource::Synthetic => synth_images(cfg.batch_size, shape, seed)?,
            BatchSource::Pool(pool) => {
                if pool.sample_shape() != shape {
                    return Err(Error::Shape(format!(
                        "pool images {:?} do not match configured input {:?}",
                        pool.sample_shape(),
                        shape
                    )));
                }
                if pool.len() < cfg.batch_size {
                    return Err(Error::Config(format!(
                        "pool of {} images cannot fill batches of {}",
                        pool.len(),
                        cfg.batch_size
                    )));
                }
                let mut rng = SeedMix::new(seed).str("draw").rng();
                let indices = rng.sample_indices(pool.len(), cfg.batch_size);
                pool.take(&indices)?
            }
        };
        batches.push(batch);
    }
    Ok(batches)
}

/// Per-measure outcomes from one feature cloud.
///
/// `values` holds finite readings; `statuses` holds documented soft
/// conditions (a fully separable cloud, an unstable regression) under
/// which an estimator declines or qualifies its reading; `failures`
/// holds hard errors. A measure with a qualified value can appear in
/// both `values` and `statuses`.
#[derive(Debug, Clone, Default, serde::Serialize, serde::Deserialize)]
pub struct CloudMeasures {
    pub values: BTreeMap<String, f64>,
    pub statuses: BTreeMap<String, String>,
    pub failures: BTreeMap<String, String>,
}

/// Centers a copy of the cloud and computes the requested measures.
/// Estimator failures land in `failures` without aborting the rest.
pub fn measure_cloud(
    x: &FeatureMatrix,
    measures: &[String],
    params: &EstimatorParams,
) -> Result<CloudMeasures> {
    for m in measures {
        if !known_measure(m) {
            return Err(Error::UnknownMeasure(m.clone()));
        }
    }
    let mut data = x.array().to_owned();
    center(&mut data);
    let centered = FeatureMatrix::new(data, x.labels().map(|l| l.to_vec()))
        .map_err(|e| Error::Shape(format!("centered cloud invalid: {e}")))?;

    let mut out = CloudMeasures::default();
    let want = |name: &str| measures.iter().any(|m| m == name);

    if want("f_mean") || want("f_std") {
        match ortho::pairwise_angle_stats(&centered) {
            Ok((mean, std)) => {
                if want("f_mean") {
                    out.values.insert("f_mean".into(), mean);
                }
                if want("f_std") {
                    out.values.insert("f_std".into(), std);
                }
            }
            Err(e) => {
                for name in ["f_mean", "f_std"] {
                    if want(name) {
                        out.failures.insert(name.into(), e.to_string());
                    }
                }
            }
        }
    }
    if want("cmean") || want("cstd") {
        let res = match centered.labels() {
            Some(labels) => {
                let labels = labels.to_vec();
                ortho::centroid_angle_stats(&centered, &labels)
            }
            None => Err(Error::Config(
                "centroid angles need labeled features".into(),
            )),
        };
        match res {
            Ok((mean, std)) => {
                if want("cmean") {
                    out.values.insert("cmean".into(), mean);
                }
                if want("cstd") {
                    out.values.insert("cstd".into(), std);
                }
            }
            Err(e) => {
                for name in ["cmean", "cstd"] {
                    if want(name) {
                        out.failures.insert(name.into(), e.to_string());
                    }
                }
            }
        }
    }

    let methods: Vec<IdMethod> = measures
        .iter()
        .filter_map(|m| m.parse::<IdMethod>().ok())
        .collect();
    if !methods.is_empty() {
        match estimate_all(&centered, params, &methods) {
            Ok(results) => {
                for (m, r) in results {
                    match r {
                        Ok(est) => {
                            if est.status != EstimateStatus::Ok {
                                out.statuses.insert(m.name().into(), est.status.name().into());
                            }
                            if est.value.is_finite() {
                                out.values.insert(m.name().into(), est.value);
                            } else if est.status == EstimateStatus::Ok {
                                out.failures
                                    .insert(m.name().into(), "non-finite estimate".into());
                            }
                        }
                        Err(e) => {
                            out.failures.insert(m.name().into(), e.to_string());
                        }
                    }
                }
            }
            Err(e) => {
                let msg = e.to_string();
                for m in methods {
                    out.failures.insert(m.name().into(), msg.clone());
                }
            }
        }
    }
    Ok(out)
}

/// One initialization's outcome.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct InitMeasures {
    pub init_index: usize,
    pub init_seed: u64,
    #[serde(flatten)]
    pub cloud: CloudMeasures,
    /// Set when the forward pass produced non-finite activations and the
    /// init was abandoned.
    pub aborted: Option<String>,
}

/// Aggregate of one measure across initializations.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MeasureStat {
    /// Mean over successful inits; None when no init produced a value.
    pub mean: Option<f64>,
    /// Population standard deviation over successful inits.
    pub std: Option<f64>,
    pub successes: usize,
    /// Inits where the estimator reported a soft condition instead of, or
    /// qualifying, a value.
    pub conditions: usize,
    /// Inits where the measure hard-failed (estimator error or aborted
    /// forward pass).
    pub failures: usize,
    /// First failure message, else first condition name.
    pub note: Option<String>,
}

/// Per-measure aggregates, keyed by measure name.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MeasureVector {
    pub stats: BTreeMap<String, MeasureStat>,
}

impl MeasureVector {
    pub fn get(&self, name: &str) -> Option<&MeasureStat> {
        self.stats.get(name)
    }

    pub fn mean(&self, name: &str) -> Option<f64> {
        self.stats.get(name).and_then(|s| s.mean)
    }

    /// std / |mean| for one measure, when both exist and the mean is
    /// nonzero.
    pub fn relative_std(&self, name: &str) -> Option<f64> {
        let s = self.stats.get(name)?;
        match (s.mean, s.std) {
            (Some(m), Some(sd)) if m != 0.0 => Some(sd / m.abs()),
            _ => None,
        }
    }
}

/// Fixed-order mean/std aggregation of per-init measures.
pub fn aggregate(inits: &[InitMeasures], measures: &[String]) -> MeasureVector {
    let mut out = MeasureVector::default();
    for name in measures {
        let mut values = Vec::new();
        let mut conditions = 0usize;
        let mut failures = 0usize;
        let mut hard_note = None;
        let mut soft_note = None;
        for init in inits {
            if let Some(msg) = &init.aborted {
                failures += 1;
                hard_note.get_or_insert_with(|| format!("init {}: {msg}", init.init_index));
                continue;
            }
            if let Some(status) = init.cloud.statuses.get(name) {
                conditions += 1;
                soft_note.get_or_insert_with(|| format!("init {}: {status}", init.init_index));
            }
            match init.cloud.values.get(name) {
                Some(&v) => values.push(v),
                None => {
                    if let Some(msg) = init.cloud.failures.get(name) {
                        failures += 1;
                        hard_note.get_or_insert_with(|| format!("init {}: {msg}", init.init_index));
                    } else if !init.cloud.statuses.contains_key(name) {
                        failures += 1;
                    }
                }
            }
        }
        let (mean, std) = if values.is_empty() {
            (None, None)
        } else {
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            (Some(mean), Some(var.sqrt()))
        };
        out.stats.insert(
            name.clone(),
            MeasureStat {
                mean,
                std,
                successes: values.len(),
                conditions,
                failures,
                note: hard_note.or(soft_note),
            },
        );
    }
    out
}

/// Everything needed to replay a score bit-identically.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Provenance {
    pub master_seed: u64,
    pub config_hash: String,
    pub source: String,
    pub init_seeds: Vec<u64>,
    pub batch_seeds: Vec<u64>,
}

/// Scored architecture: measures, verdicts, and replay provenance.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ArchScore {
    pub arch: String,
    pub measures: MeasureVector,
    pub verdicts: BTreeMap<String, Verdict>,
    pub provenance: Provenance,
}

/// Runs the full protocol for one architecture. Initializations run in
/// parallel; all reductions use the init order, so results do not depend
/// on the worker count.
pub fn score_architecture(
    arch: &str,
    source: &BatchSource,
    cfg: &ScoreConfig,
) -> Result<ArchScore> {
    cfg.validate()?;
    let cell = parse_arch_string(arch)?;
    let batches = make_batches(source, cfg)?;
    let init_seeds: Vec<u64> = (0..cfg.inits)
        .map(|r| init_seed(cfg.master_seed, arch, r))
        .collect();

    let inits: Vec<InitMeasures> = (0..cfg.inits)
        .into_par_iter()
        .map(|r| run_one_init(r, init_seeds[r], &cell, &batches, cfg))
        .collect();

    let measures = aggregate(&inits, &cfg.measures);
    Ok(ArchScore {
        arch: arch.to_string(),
        measures,
        verdicts: BTreeMap::new(),
        provenance: Provenance {
            master_seed: cfg.master_seed,
            config_hash: cfg.hash(),
            source: source.label().to_string(),
            init_seeds,
            batch_seeds: (0..cfg.batches)
                .map(|b| batch_seed(cfg.master_seed, b))
                .collect(),
        },
    })
}

fn run_one_init(
    r: usize,
    seed: u64,
    cell: &crate::arch::CellSpec,
    batches: &[ImageBatch],
    cfg: &ScoreConfig,
) -> InitMeasures {
    let spec = InitSpec {
        gain: cfg.gain,
        seed,
        sample_bias: cfg.sample_bias,
    };
    let mut out = InitMeasures {
        init_index: r,
        init_seed: seed,
        cloud: CloudMeasures::default(),
        aborted: None,
    };

    let net = match build_initialized(cell, &cfg.network, &spec) {
        Ok(n) => n,
        Err(e) => {
            out.aborted = Some(e.to_string());
            return out;
        }
    };

    let mut clouds = Vec::with_capacity(batches.len());
    for batch in batches {
        match net.forward_features(batch) {
            Ok(f) => clouds.push(f),
            Err(e) => {
                out.aborted = Some(e.to_string());
                return out;
            }
        }
    }

    let measured = match cfg.batch_mode {
        BatchMode::Concatenate => {
            let cloud = match FeatureMatrix::concat(&clouds) {
                Ok(c) => c,
                Err(e) => {
                    out.aborted = Some(e.to_string());
                    return out;
                }
            };
            measure_cloud(&cloud, &cfg.measures, &cfg.estimator)
        }
        BatchMode::PerBatch => {
            let mut per_batch = Vec::with_capacity(clouds.len());
            let mut err = None;
            for c in &clouds {
                match measure_cloud(c, &cfg.measures, &cfg.estimator) {
                    Ok(m) => per_batch.push(m),
                    Err(e) => {
                        err = Some(e);
                        break;
                    }
                }
            }
            match err {
                Some(e) => Err(e),
                None => Ok(average_cloud_measures(&per_batch, &cfg.measures)),
            }
        }
    };
    match measured {
        Ok(m) => out.cloud = m,
        Err(e) => out.aborted = Some(e.to_string()),
    }
    out
}

/// Per-measure average over batches; a measure fails only when it
/// produced no value on any batch, and soft conditions carry through
/// from the first batch that reported one.
fn average_cloud_measures(per_batch: &[CloudMeasures], measures: &[String]) -> CloudMeasures {
    let mut out = CloudMeasures::default();
    for name in measures {
        let values: Vec<f64> = per_batch
            .iter()
            .filter_map(|m| m.values.get(name).copied())
            .collect();
        if let Some(status) = per_batch.iter().find_map(|m| m.statuses.get(name)) {
            out.statuses.insert(name.clone(), status.clone());
        }
        if values.is_empty() {
            if let Some(note) = per_batch.iter().find_map(|m| m.failures.get(name)) {
                out.failures.insert(name.clone(), note.clone());
            } else if !out.statuses.contains_key(name) {
                out.failures.insert(name.clone(), "not computed".into());
            }
        } else {
            out.values
                .insert(name.clone(), values.iter().sum::<f64>() / values.len() as f64);
        }
    }
    out
}

/// A closed interval with optional open ends.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Interval {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

impl Interval {
    pub fn at_most(hi: f64) -> Self {
        Interval {
            lo: None,
            hi: Some(hi),
        }
    }

    pub fn between(lo: f64, hi: f64) -> Self {
        Interval {
            lo: Some(lo),
            hi: Some(hi),
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo.is_none_or(|lo| v >= lo) && self.hi.is_none_or(|hi| v <= hi)
    }

    pub fn well_formed(&self) -> bool {
        match (self.lo, self.hi) {
            (Some(lo), Some(hi)) => lo <= hi,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Keep,
    Drop,
}

/// One predicate on a measure mean: for `Keep` polarity the value must
/// lie in the union of the intervals; for `Drop` polarity a value in the
/// union rejects the architecture.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FilterRule {
    pub measure: String,
    pub intervals: Vec<Interval>,
    pub polarity: Polarity,
}

impl FilterRule {
    pub fn keep_at_most(measure: &str, hi: f64) -> Self {
        FilterRule {
            measure: measure.to_string(),
            intervals: vec![Interval::at_most(hi)],
            polarity: Polarity::Keep,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !known_measure(&self.measure) {
            return Err(Error::UnknownMeasure(self.measure.clone()));
        }
        if self.intervals.is_empty() {
            return Err(Error::Config(format!(
                "rule on {} has no intervals",
                self.measure
            )));
        }
        for iv in &self.intervals {
            if !iv.well_formed() {
                return Err(Error::Config(format!(
                    "rule on {} has an empty interval",
                    self.measure
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RuleSet {
    pub name: String,
    pub rules: Vec<FilterRule>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Keep,
    Drop,
    /// A rule's measure failed on every init, so no decision is possible.
    Unknown,
}

/// The two built-in rule sets.
///
/// "avoid-low" keeps architectures whose dimension estimates stay under
/// the per-estimator thresholds; "top-band" keeps the narrow separability
/// band combined with a pairwise-angle window.
pub fn default_rules() -> Vec<RuleSet> {
    let avoid_low = RuleSet {
        name: "avoid-low".to_string(),
        rules: vec![
            FilterRule::keep_at_most("fishers", 2.5),
            FilterRule::keep_at_most("lpca", 2.5),
            FilterRule::keep_at_most("mind_mli", 8.0),
            FilterRule::keep_at_most("mind_mlk", 8.0),
            FilterRule::keep_at_most("corrint", 5.0),
            FilterRule::keep_at_most("mle", 6.0),
            FilterRule::keep_at_most("mom", 6.0),
            FilterRule::keep_at_most("mada", 6.0),
            FilterRule::keep_at_most("twonn", 8.0),
        ],
    };
    let top_band = RuleSet {
        name: "top-band".to_string(),
        rules: vec![
            FilterRule {
                measure: "fishers".to_string(),
                intervals: vec![Interval::between(1.5, 2.5)],
                polarity: Polarity::Keep,
            },
            FilterRule {
                measure: "f_mean".to_string(),
                intervals: vec![Interval::between(85.0, 88.0), Interval::between(90.0, 92.5)],
                polarity: Polarity::Keep,
            },
        ],
    };
    vec![avoid_low, top_band]
}

/// Looks up a built-in rule set; "none" is the empty (all-keep) set.
pub fn rule_set(name: &str) -> Result<RuleSet> {
    if name == "none" {
        return Ok(RuleSet {
            name: "none".to_string(),
            rules: Vec::new(),
        });
    }
    default_rules()
        .into_iter()
        .find(|r| r.name == name)
        .ok_or_else(|| Error::UnknownRuleSet(name.to_string()))
}

/// Evaluates a rule set against measure means.
///
/// Any definitively violated rule drops the architecture; otherwise an
/// undecidable rule (its measure failed on every init) yields Unknown;
/// otherwise the architecture is kept. Rules referencing measures that
/// were never requested are an error.
pub fn apply_rules(measures: &MeasureVector, rules: &RuleSet) -> Result<Verdict> {
    let mut unknown = false;
    for rule in &rules.rules {
        rule.validate()?;
        let stat = measures.get(&rule.measure).ok_or_else(|| {
            Error::Config(format!(
                "rule set {} references measure {} absent from the score",
                rules.name, rule.measure
            ))
        })?;
        let value = match stat.mean {
            Some(v) => v,
            None => {
                unknown = true;
                continue;
            }
        };
        let in_union = rule.intervals.iter().any(|iv| iv.contains(value));
        let violated = match rule.polarity {
            Polarity::Keep => !in_union,
            Polarity::Drop => in_union,
        };
        if violated {
            return Ok(Verdict::Drop);
        }
    }
    Ok(if unknown { Verdict::Unknown } else { Verdict::Keep })
}

impl ArchScore {
    /// Applies each rule set and stores the verdicts under the set name.
    pub fn attach_verdicts(&mut self, rule_sets: &[RuleSet]) -> Result<()> {
        for rs in rule_sets {
            let v = apply_rules(&self.measures, rs)?;
            self.verdicts.insert(rs.name.clone(), v);
        }
        Ok(())
    }
}

/// Sorts scores by a measure mean, ascending; architectures whose
/// measure failed sort last; ties break on the arch string.
pub fn rank(scores: &[ArchScore], key: &str) -> Result<Vec<ArchScore>> {
    if !known_measure(key) {
        return Err(Error::UnknownMeasure(key.to_string()));
    }
    let mut out: Vec<ArchScore> = scores.to_vec();
    out.sort_by(|a, b| {
        let va = a.measures.mean(key);
        let vb = b.measures.mean(key);
        match (va, vb) {
            (Some(x), Some(y)) => x
                .partial_cmp(&y)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.arch.cmp(&b.arch)),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => a.arch.cmp(&b.arch),
        }
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::random_arch;

    fn tiny_cfg(seed: u64) -> ScoreConfig {
        ScoreConfig {
            inits: 2,
            batches: 2,
            batch_size: 24,
            network: NetworkConfig::new(1, 4, (3, 16, 16), 1e-5).unwrap(),
            ..ScoreConfig::desk(seed)
        }
    }

    #[test]
    fn measure_names_cover_both_families() {
        let names = all_measure_names();
        assert_eq!(names.len(), 14);
        assert!(names.contains(&"f_mean".to_string()));
        assert!(names.contains(&"mind_mlk".to_string()));
        assert!(known_measure("twonn"));
        assert!(!known_measure("accuracy"));
    }

    #[test]
    fn desk_and_reference_configs_validate() {
        ScoreConfig::desk(0).validate().unwrap();
        let r = ScoreConfig::reference(0);
        r.validate().unwrap();
        assert_eq!(r.inits, 50);
        assert_eq!(r.batches, 10);
        assert_eq!(r.batch_size, 128);
        assert_eq!(r.network.feature_width(), 64);
    }

    #[test]
    fn config_hash_tracks_content() {
        let a = ScoreConfig::desk(1);
        let mut b = ScoreConfig::desk(1);
        assert_eq!(a.hash(), b.hash());
        b.batch_size = 32;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn scoring_is_deterministic() {
        let arch = random_arch(40).to_arch_string();
        let cfg = tiny_cfg(123);
        let a = score_architecture(&arch, &BatchSource::Synthetic, &cfg).unwrap();
        let b = score_architecture(&arch, &BatchSource::Synthetic, &cfg).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_eq!(a.provenance.init_seeds.len(), 2);
        assert_eq!(a.provenance.source, "synthetic");
    }

    #[test]
    fn single_init_has_zero_std() {
        let arch = random_arch(41).to_arch_string();
        let cfg = ScoreConfig {
            inits: 1,
            ..tiny_cfg(7)
        };
        let score = score_architecture(&arch, &BatchSource::Synthetic, &cfg).unwrap();
        for (name, stat) in &score.measures.stats {
            if stat.successes > 0 {
                assert_eq!(stat.std, Some(0.0), "std for {name}");
            }
        }
    }

    #[test]
    fn aggregation_matches_manual_mean() {
        let mk = |vals: &[(&str, f64)]| InitMeasures {
            init_index: 0,
            init_seed: 0,
            cloud: CloudMeasures {
                values: vals.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
                statuses: BTreeMap::new(),
                failures: BTreeMap::new(),
            },
            aborted: None,
        };
        let inits = vec![mk(&[("mle", 2.0)]), mk(&[("mle", 4.0)]), mk(&[("mle", 6.0)])];
        let agg = aggregate(&inits, &["mle".to_string()]);
        let stat = agg.get("mle").unwrap();
        assert!((stat.mean.unwrap() - 4.0).abs() < 1e-12);
        let expect_std = (8.0f64 / 3.0).sqrt();
        assert!((stat.std.unwrap() - expect_std).abs() < 1e-12);
        assert_eq!(stat.successes, 3);
        assert_eq!(stat.failures, 0);
    }

    #[test]
    fn soft_conditions_are_not_hard_failures() {
        let separable = InitMeasures {
            init_index: 0,
            init_seed: 0,
            cloud: CloudMeasures {
                values: BTreeMap::new(),
                statuses: [("fishers".to_string(), "fully_separable".to_string())]
                    .into_iter()
                    .collect(),
                failures: BTreeMap::new(),
            },
            aborted: None,
        };
        let qualified = InitMeasures {
            init_index: 1,
            init_seed: 1,
            cloud: CloudMeasures {
                values: [("fishers".to_string(), 64.0)].into_iter().collect(),
                statuses: [("fishers".to_string(), "unstable".to_string())]
                    .into_iter()
                    .collect(),
                failures: BTreeMap::new(),
            },
            aborted: None,
        };
        let agg = aggregate(&[separable, qualified], &["fishers".to_string()]);
        let stat = agg.get("fishers").unwrap();
        assert_eq!(stat.successes, 1);
        assert_eq!(stat.conditions, 2);
        assert_eq!(stat.failures, 0);
        assert!(stat.note.as_ref().unwrap().contains("fully_separable"));
    }

    #[test]
    fn aborted_inits_count_as_failures() {
        let ok = InitMeasures {
            init_index: 0,
            init_seed: 0,
            cloud: CloudMeasures {
                values: [("f_mean".to_string(), 90.0)].into_iter().collect(),
                statuses: BTreeMap::new(),
                failures: BTreeMap::new(),
            },
            aborted: None,
        };
        let bad = InitMeasures {
            init_index: 1,
            init_seed: 1,
            cloud: CloudMeasures::default(),
            aborted: Some("non-finite activations".into()),
        };
        let agg = aggregate(&[ok, bad], &["f_mean".to_string()]);
        let stat = agg.get("f_mean").unwrap();
        assert_eq!(stat.successes, 1);
        assert_eq!(stat.failures, 1);
        assert!(stat.note.as_ref().unwrap().contains("init 1"));
    }

    #[test]
    fn measure_subset_is_respected() {
        let arch = random_arch(42).to_arch_string();
        let cfg = ScoreConfig {
            measures: vec!["f_mean".to_string(), "fishers".to_string()],
            ..tiny_cfg(9)
        };
        let score = score_architecture(&arch, &BatchSource::Synthetic, &cfg).unwrap();
        let keys: Vec<&String> = score.measures.stats.keys().collect();
        assert_eq!(keys, vec!["f_mean", "fishers"]);
    }

    #[test]
    fn unknown_measure_is_rejected() {
        let cfg = ScoreConfig {
            measures: vec!["accuracy".to_string()],
            ..tiny_cfg(0)
        };
        assert!(matches!(
            score_architecture(&random_arch(0).to_arch_string(), &BatchSource::Synthetic, &cfg),
            Err(Error::UnknownMeasure(_))
        ));
    }

    #[test]
    fn per_batch_mode_runs() {
        let arch = random_arch(43).to_arch_string();
        let cfg = ScoreConfig {
            batch_mode: BatchMode::PerBatch,
            measures: vec!["f_mean".to_string(), "lpca".to_string()],
            ..tiny_cfg(11)
        };
        let score = score_architecture(&arch, &BatchSource::Synthetic, &cfg).unwrap();
        assert!(score.measures.mean("f_mean").is_some());
    }

    #[test]
    fn pool_batches_draw_from_the_pool() {
        let base = synth_images(50, (3, 16, 16), 5).unwrap();
        let pool = ImagePool::new(base.array().to_owned(), base.labels().map(|l| l.to_vec()))
            .unwrap();
        let arch = random_arch(44).to_arch_string();
        let cfg = ScoreConfig {
            measures: vec!["f_mean".to_string()],
            ..tiny_cfg(13)
        };
        let score = score_architecture(&arch, &BatchSource::Pool(pool), &cfg).unwrap();
        assert_eq!(score.provenance.source, "pool");
        assert!(score.measures.mean("f_mean").is_some());
    }

    #[test]
    fn pool_must_be_large_enough() {
        let base = synth_images(10, (3, 16, 16), 5).unwrap();
        let pool = ImagePool::new(base.array().to_owned(), None).unwrap();
        let cfg = tiny_cfg(13);
        assert!(score_architecture(
            &random_arch(45).to_arch_string(),
            &BatchSource::Pool(pool),
            &cfg
        )
        .is_err());
    }

    #[test]
    fn default_rules_have_expected_shape() {
        let sets = default_rules();
        assert_eq!(sets.len(), 2);
        assert_eq!(sets[0].name, "avoid-low");
        assert_eq!(sets[0].rules.len(), 9);
        assert_eq!(sets[1].name, "top-band");
        assert_eq!(sets[1].rules.len(), 2);
        for rs in &sets {
            for r in &rs.rules {
                r.validate().unwrap();
            }
        }
        assert!(rule_set("avoid-low").is_ok());
        assert!(rule_set("none").unwrap().rules.is_empty());
        assert!(matches!(rule_set("bogus"), Err(Error::UnknownRuleSet(_))));
    }

    fn vector_with(entries: &[(&str, f64)]) -> MeasureVector {
        let mut mv = MeasureVector::default();
        for (k, v) in entries {
            mv.stats.insert(
                k.to_string(),
                MeasureStat {
                    mean: Some(*v),
                    std: Some(0.0),
                    successes: 1,
                    conditions: 0,
                    failures: 0,
                    note: None,
                },
            );
        }
        mv
    }

    #[test]
    fn verdict_logic() {
        let top_band = rule_set("top-band").unwrap();
        let keep = vector_with(&[("fishers", 2.0), ("f_mean", 91.0)]);
        assert_eq!(apply_rules(&keep, &top_band).unwrap(), Verdict::Keep);
        let gap = vector_with(&[("fishers", 2.0), ("f_mean", 89.0)]);
        assert_eq!(apply_rules(&gap, &top_band).unwrap(), Verdict::Drop);

        let empty = RuleSet {
            name: "none".into(),
            rules: vec![],
        };
        assert_eq!(apply_rules(&gap, &empty).unwrap(), Verdict::Keep);

        let missing = vector_with(&[("fishers", 2.0)]);
        assert!(apply_rules(&missing, &top_band).is_err());

        let mut failed = vector_with(&[("fishers", 2.0)]);
        failed.stats.insert(
            "f_mean".into(),
            MeasureStat {
                mean: None,
                std: None,
                successes: 0,
                conditions: 0,
                failures: 3,
                note: Some("zero rows".into()),
            },
        );
        assert_eq!(apply_rules(&failed, &top_band).unwrap(), Verdict::Unknown);

        // A definite violation beats an unknown.
        let mut drop_wins = failed.clone();
        drop_wins.stats.get_mut("fishers").unwrap().mean = Some(9.0);
        assert_eq!(apply_rules(&drop_wins, &top_band).unwrap(), Verdict::Drop);
    }

    #[test]
    fn drop_polarity_rejects_inside_the_region() {
        let rs = RuleSet {
            name: "custom".into(),
            rules: vec![FilterRule {
                measure: "mle".into(),
                intervals: vec![Interval::between(3.0, 5.0)],
                polarity: Polarity::Drop,
            }],
        };
        assert_eq!(
            apply_rules(&vector_with(&[("mle", 4.0)]), &rs).unwrap(),
            Verdict::Drop
        );
        assert_eq!(
            apply_rules(&vector_with(&[("mle", 6.0)]), &rs).unwrap(),
            Verdict::Keep
        );
    }

    #[test]
    fn ranking_sorts_and_breaks_ties_on_arch() {
        let mk = |arch: &str, v: Option<f64>| ArchScore {
            arch: arch.to_string(),
            measures: match v {
                Some(v) => vector_with(&[("mle", v)]),
                None => {
                    let mut mv = MeasureVector::default();
                    mv.stats.insert(
                        "mle".into(),
                        MeasureStat {
                            mean: None,
                            std: None,
                            successes: 0,
                            conditions: 0,
                            failures: 1,
                            note: None,
                        },
                    );
                    mv
                }
            },
            verdicts: BTreeMap::new(),
            provenance: Provenance {
                master_seed: 0,
                config_hash: String::new(),
                source: "synthetic".into(),
                init_seeds: vec![],
                batch_seeds: vec![],
            },
        };
        let scores = vec![
            mk("b", Some(2.0)),
            mk("a", Some(2.0)),
            mk("c", Some(1.0)),
            mk("d", None),
        ];
        let ranked = rank(&scores, "mle").unwrap();
        let order: Vec<&str> = ranked.iter().map(|s| s.arch.as_str()).collect();
        assert_eq!(order, vec!["c", "a", "b", "d"]);
        assert!(rank(&scores, "nope").is_err());

        let mut inputs: Vec<&str> = scores.iter().map(|s| s.arch.as_str()).collect();
        let mut outputs: Vec<&str> = ranked.iter().map(|s| s.arch.as_str()).collect();
        inputs.sort_unstable();
        outputs.sort_unstable();
        assert_eq!(inputs, outputs);
    }

    #[test]
    fn interval_membership() {
        assert!(Interval::at_most(2.5).contains(2.5));
        assert!(!Interval::at_most(2.5).contains(2.6));
        assert!(Interval::between(85.0, 88.0).contains(85.0));
        assert!(Interval::between(85.0, 88.0).contains(88.0));
        assert!(!Interval::between(85.0, 88.0).contains(88.01));
        assert!(Interval { lo: Some(3.0), hi: None }.contains(1e9));
        assert!(!Interval::between(5.0, 4.0).well_formed());
    }
}
