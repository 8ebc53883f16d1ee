//! Acceptance gate: numbered end-to-end checks with stated tolerances.
//! Each test prints one PASS/FAIL line (visible with --nocapture).

use std::time::Instant;

use geonas::geometry::{knn, pairwise_distances};
use geonas::idest::fishers::{closed_form_inseparability, dimension_from_inseparability};
use geonas::idest::lambert::{branch_point, lambert_w0};
use geonas::idest::{estimate_all, EstimatorParams, IdMethod};
use geonas::net::{kaiming_bound, sample_kaiming_stream, NetworkConfig};
use geonas::ortho::pairwise_angle_stats;
use geonas::pipeline::{
    apply_rules, init_seed, make_batches, rule_set, score_architecture, BatchSource, MeasureStat,
    MeasureVector, ScoreConfig,
};
use geonas::rng::CounterRng;
use geonas::synth::{embed, sample_cube};
use geonas::{
    build_initialized, parse_arch_string, random_arch, BatchMode, FeatureMatrix, InitSpec, Verdict,
};
use ndarray::Array2;

fn report(num: u32, name: &str, ok: bool, detail: &str) {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {num} {name}: {tag} ({detail})");
    assert!(ok, "criterion {num} {name} failed: {detail}");
}

#[test]
fn criterion_01_separability_inversion() {
    let start = Instant::now();
    let params = EstimatorParams::default();
    let mut worst = 0.0f64;
    for &alpha in &params.alpha_grid {
        for n in 1..=30usize {
            let p = closed_form_inseparability(alpha, n);
            let d = dimension_from_inseparability(alpha, p).expect("inversion");
            worst = worst.max((d - n as f64).abs());
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        1,
        "separability-inversion",
        worst < 1e-9 && elapsed < 1.0,
        &format!("worst |error| {worst:.2e}, {elapsed:.3}s"),
    );
}

#[test]
fn criterion_02_lambert_kernel() {
    let shift = -branch_point();
    let y_lo = 1e-9f64;
    let y_hi = 1e6 + shift;
    let ratio = (y_hi / y_lo).ln();
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let t = i as f64 / 999.0;
        let x = y_lo * (t * ratio).exp() - shift;
        let w = lambert_w0(x).expect("domain");
        let rel = (w * w.exp() - x).abs() / x.abs().max(1.0);
        worst = worst.max(rel);
    }
    report(
        2,
        "lambert-kernel",
        worst < 1e-12,
        &format!("worst relative residual {worst:.2e} over 1000 points"),
    );
}

#[test]
fn criterion_03_estimator_envelopes() {
    let start = Instant::now();
    let methods: Vec<IdMethod> = IdMethod::ALL
        .iter()
        .copied()
        .filter(|m| *m != IdMethod::KnnCarter)
        .collect();
    let params = EstimatorParams::default();
    let mut ok = true;
    let mut details = Vec::new();
    for d in [2usize, 4, 8] {
        let cloud = sample_cube(d, 2000, 21 + d as u64)
            .and_then(|m| embed(&m, 64, 77 + d as u64, 0.0))
            .expect("cube");
        let fm = FeatureMatrix::new(cloud.data, None).expect("features");
        let results = estimate_all(&fm, &params, &methods).expect("estimates");
        let (lo, hi) = (0.6 * d as f64, 1.5 * d as f64);
        for (m, r) in results {
            let est = r.unwrap_or_else(|e| panic!("{} failed on {d}-cube: {e}", m.name()));
            let inside = est.value.is_finite() && (lo..=hi).contains(&est.value);
            ok &= inside;
            if !inside {
                details.push(format!("{}@{d}={:.2} outside [{lo},{hi}]", m.name(), est.value));
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed < 120.0;
    if details.is_empty() {
        details.push(format!("9 estimators x 3 cubes inside, {elapsed:.1}s"));
    }
    report(3, "estimator-envelopes", ok, &details.join("; "));
}

#[test]
fn criterion_04_orthogonality_concentration() {
    let mut rng = CounterRng::new(2024);
    let x = Array2::from_shape_fn((128, 64), |_| rng.normal());
    let (f_mean, _) = pairwise_angle_stats(&FeatureMatrix::new(x, None).unwrap()).unwrap();
    let mean_ok = (88.0..=92.0).contains(&f_mean);

    let mut votes = 0;
    for seed in 0..10u64 {
        let mut stds = Vec::new();
        for d in [16usize, 64, 256] {
            let mut rng = CounterRng::new(1000 + seed * 3 + d as u64);
            let x = Array2::from_shape_fn((128, d), |_| rng.normal());
            let (_, std) = pairwise_angle_stats(&FeatureMatrix::new(x, None).unwrap()).unwrap();
            stds.push(std);
        }
        if stds[0] >= stds[1] && stds[1] >= stds[2] {
            votes += 1;
        }
    }
    report(
        4,
        "orthogonality-concentration",
        mean_ok && votes > 5,
        &format!("f_mean {f_mean:.2}, non-increasing f_std in {votes}/10 seeds"),
    );
}

#[test]
fn criterion_05_kaiming_sampling() {
    let gain = std::f64::consts::SQRT_2;
    let b = kaiming_bound(gain, 27);
    let expect_b = (6.0f64 / 27.0).sqrt();
    let samples = sample_kaiming_stream(gain, 27, 12345, 1_000_000);
    let inside = samples.iter().all(|&w| w > -b && w < b);
    let var = samples.iter().map(|w| w * w).sum::<f64>() / samples.len() as f64;
    let target = b * b / 3.0;
    let rel = (var - target).abs() / target;
    report(
        5,
        "kaiming-sampling",
        (b - expect_b).abs() < 1e-15 && inside && rel < 0.02,
        &format!("b {b:.6}, all inside: {inside}, variance off by {:.3}%", rel * 100.0),
    );
}

#[test]
fn criterion_06_protocol_shapes() {
    let cell = parse_arch_string(
        "|nor_conv_3x3~0|+|skip_connect~0|nor_conv_1x1~1|+|avg_pool_3x3~0|none~1|nor_conv_3x3~2|",
    )
    .unwrap();

    // C=16 gives 64-wide GAP features.
    let desk = NetworkConfig::desk();
    assert_eq!(desk.initial_channels, 16);
    let net = build_initialized(&cell, &desk, &InitSpec::new(5)).unwrap();
    let batch = geonas::synth::synth_images(4, desk.input_shape, 3).unwrap();
    let features = net.forward_features(&batch).unwrap();
    let width_ok = features.cols() == 64 && desk.feature_width() == 64;

    // Full protocol: 50 inits, ten batches of 128, concatenated to a
    // 1280-row cloud per init (checked at a narrow width to stay fast).
    let mut cfg = ScoreConfig::reference(9);
    let proto_ok =
        cfg.inits == 50 && cfg.batches == 10 && cfg.batch_size == 128
            && cfg.batch_mode == BatchMode::Concatenate;
    cfg.network.initial_channels = 4;
    let batches = make_batches(&BatchSource::Synthetic, &cfg).unwrap();
    let spec = InitSpec {
        gain: cfg.gain,
        seed: init_seed(cfg.master_seed, "arch", 0),
        sample_bias: cfg.sample_bias,
    };
    let net = build_initialized(&cell, &cfg.network, &spec).unwrap();
    let clouds: Vec<FeatureMatrix> = batches
        .iter()
        .map(|b| net.forward_features(b).unwrap())
        .collect();
    let cloud = FeatureMatrix::concat(&clouds).unwrap();
    let rows_ok = cloud.rows() == 1280 && cloud.cols() == 16;

    report(
        6,
        "protocol-shapes",
        width_ok && proto_ok && rows_ok,
        &format!(
            "desk width {}, reference R/B/batch {}, {}x{} concatenated cloud",
            features.cols(),
            if proto_ok { "50/10/128" } else { "wrong" },
            cloud.rows(),
            cloud.cols()
        ),
    );
}

#[test]
fn criterion_07_determinism() {
    let arch = random_arch(17).to_arch_string();
    let cfg = ScoreConfig::desk(2026);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        let score =
            pool.install(|| score_architecture(&arch, &BatchSource::Synthetic, &cfg).unwrap());
        serde_json::to_string_pretty(&score).unwrap()
    };
    let once = run(1);
    let again = run(1);
    let wide = run(8);
    report(
        7,
        "determinism",
        once == again && once == wide,
        &format!(
            "repeat identical: {}, 1 vs 8 workers identical: {}",
            once == again,
            once == wide
        ),
    );
}

#[test]
fn criterion_08_rule_fidelity() {
    let avoid_low = rule_set("avoid-low").unwrap();
    let top_band = rule_set("top-band").unwrap();

    let thresholds = [
        ("fishers", 2.5),
        ("lpca", 2.5),
        ("mind_mli", 8.0),
        ("mind_mlk", 8.0),
        ("corrint", 5.0),
        ("mle", 6.0),
        ("mom", 6.0),
        ("mada", 6.0),
        ("twonn", 8.0),
    ];
    let vector = |entries: &[(&str, f64)]| {
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
    };
    let at = |overrides: &[(&str, f64)]| {
        let mut entries: Vec<(&str, f64)> = thresholds.to_vec();
        entries.push(("f_mean", 91.0));
        for (k, v) in overrides {
            if let Some(e) = entries.iter_mut().find(|e| e.0 == *k) {
                e.1 = *v;
            } else {
                entries.push((*k, *v));
            }
        }
        vector(&entries)
    };

    let mut ok = true;
    let mut bad = Vec::new();
    // Exactly at every threshold: closed intervals keep.
    if apply_rules(&at(&[]), &avoid_low).unwrap() != Verdict::Keep {
        ok = false;
        bad.push("all-at-threshold should keep".to_string());
    }
    // One measure just above its threshold drops, one at a time.
    for (name, limit) in thresholds {
        let v = at(&[(name, limit + 1e-9)]);
        if apply_rules(&v, &avoid_low).unwrap() != Verdict::Drop {
            ok = false;
            bad.push(format!("{name} above {limit} should drop"));
        }
    }
    // The band: fishers in [1.5, 2.5] and f_mean in [85,88] or [90,92.5].
    let band_cases = [
        (2.0, 91.0, Verdict::Keep),
        (2.0, 86.0, Verdict::Keep),
        (1.5, 85.0, Verdict::Keep),
        (2.5, 92.5, Verdict::Keep),
        (2.5, 88.0, Verdict::Keep),
        (2.0, 90.0, Verdict::Keep),
        (2.0, 89.0, Verdict::Drop),
        (2.0, 84.9, Verdict::Drop),
        (2.0, 92.6, Verdict::Drop),
        (1.4, 91.0, Verdict::Drop),
        (2.6, 91.0, Verdict::Drop),
        (4.0, 91.0, Verdict::Drop),
    ];
    for (fishers, f_mean, expect) in band_cases {
        let v = vector(&[("fishers", fishers), ("f_mean", f_mean)]);
        let got = apply_rules(&v, &top_band).unwrap();
        if got != expect {
            ok = false;
            bad.push(format!(
                "band fishers={fishers} f_mean={f_mean}: {got:?} != {expect:?}"
            ));
        }
    }
    // From the drop side of the low-dimension screen.
    let v = at(&[("fishers", 4.0)]);
    if apply_rules(&v, &avoid_low).unwrap() != Verdict::Drop {
        ok = false;
        bad.push("fishers 4.0 should drop".to_string());
    }
    let detail = if bad.is_empty() {
        format!("{} threshold cases + {} band cases", thresholds.len() + 2, band_cases.len())
    } else {
        bad.join("; ")
    };
    report(8, "rule-fidelity", ok, &detail);
}

#[test]
fn criterion_10_knn_oracle() {
    let mut ok = true;
    let mut checked = 0usize;
    for seed in 0..100u64 {
        let mut rng = CounterRng::new(seed * 7 + 1);
        let n = 2 + (rng.next_u64() % 199) as usize;
        let d = 1 + (rng.next_u64() % 32) as usize;
        let k = 1 + (rng.next_u64() % (n as u64 - 1).min(12)) as usize;
        let x = Array2::from_shape_fn((n, d), |_| rng.uniform(-3.0, 3.0));
        let dm = pairwise_distances(&x.view()).unwrap();
        let table = knn(&dm, k).unwrap();
        for i in 0..n {
            let mut naive: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let mut s = 0.0;
                    for c in 0..d {
                        let diff = x[[i, c]] - x[[j, c]];
                        s += diff * diff;
                    }
                    (s.sqrt(), j)
                })
                .collect();
            naive.sort_by(|a, b| {
                a.0.partial_cmp(&b.0)
                    .unwrap()
                    .then_with(|| a.1.cmp(&b.1))
            });
            let expect_idx: Vec<usize> = naive.iter().take(k).map(|p| p.1).collect();
            let expect_dist: Vec<f64> = naive.iter().take(k).map(|p| p.0).collect();
            if table.neighbors(i) != expect_idx.as_slice()
                || table.distances(i) != expect_dist.as_slice()
            {
                ok = false;
            }
        }
        checked += 1;
    }
    report(
        10,
        "knn-oracle",
        ok && checked == 100,
        &format!("{checked} random instances, indices and distances exact"),
    );
}
