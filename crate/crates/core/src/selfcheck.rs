//! Built-in oracle suite: fast numeric checks that the installed binary
//! reproduces the library's core invariants.

use crate::data::FeatureMatrix;
use crate::geometry::{knn, pairwise_distances};
use crate::idest::fishers::{closed_form_inseparability, dimension_from_inseparability};
use crate::idest::lambert::{branch_point, lambert_w0};
use crate::idest::{estimate_all, EstimatorParams, IdMethod};
use crate::net::kaiming_bound;
use crate::ortho::pairwise_angle_stats;
use crate::rng::CounterRng;
use crate::synth::{embed, sample_cube};

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        passed,
        detail,
    }
}

fn lambert_residuals() -> CheckResult {
    let lo = branch_point() + 1e-9;
    let mut worst = 0.0f64;
    for i in 0..200 {
        let t = i as f64 / 199.0;
        let x = lo + (1e6 - lo) * (t * 14.0).exp_m1() / 14.0f64.exp_m1();
        match lambert_w0(x) {
            Ok(w) => {
                let rel = (w * w.exp() - x).abs() / x.abs().max(1.0);
                worst = worst.max(rel);
            }
            Err(e) => return check("lambert-round-trip", false, e.to_string()),
        }
    }
    check(
        "lambert-round-trip",
        worst < 1e-12,
        format!("worst relative residual {worst:.2e}"),
    )
}

fn separability_inversion() -> CheckResult {
    let params = EstimatorParams::default();
    let mut worst = 0.0f64;
    for &alpha in &params.alpha_grid {
        for n in 1..=30usize {
            let p = closed_form_inseparability(alpha, n);
            match dimension_from_inseparability(alpha, p) {
                Ok(d) => worst = worst.max((d - n as f64).abs()),
                Err(e) => return check("separability-inversion", false, e.to_string()),
            }
        }
    }
    check(
        "separability-inversion",
        worst < 1e-9,
        format!("worst |error| {worst:.2e}"),
    )
}

fn cube_envelope() -> CheckResult {
    let d = 2usize;
    let cube = match sample_cube(d, 1000, 5).and_then(|m| embed(&m, 16, 6, 0.0)) {
        Ok(m) => m,
        Err(e) => return check("cube-envelope", false, e.to_string()),
    };
    let fm = match FeatureMatrix::new(cube.data, None) {
        Ok(f) => f,
        Err(e) => return check("cube-envelope", false, e.to_string()),
    };
    let methods: Vec<IdMethod> = IdMethod::ALL
        .iter()
        .copied()
        .filter(|m| *m != IdMethod::KnnCarter)
        .collect();
    let results = match estimate_all(&fm, &EstimatorParams::default(), &methods) {
        Ok(r) => r,
        Err(e) => return check("cube-envelope", false, e.to_string()),
    };
    let lo = 0.6 * d as f64;
    let hi = 1.5 * d as f64;
    let mut details = Vec::new();
    let mut ok = true;
    for (m, r) in results {
        match r {
            Ok(est) if est.value.is_finite() => {
                let inside = (lo..=hi).contains(&est.value);
                ok &= inside;
                details.push(format!("{m}={:.2}{}", est.value, if inside { "" } else { "!" }));
            }
            Ok(est) => {
                ok = false;
                details.push(format!("{m}:{:?}", est.status));
            }
            Err(e) => {
                ok = false;
                details.push(format!("{m}:{e}"));
            }
        }
    }
    check("cube-envelope", ok, details.join(" "))
}

fn orthogonality_concentration() -> CheckResult {
    let mut rng = CounterRng::new(404);
    let x = ndarray::Array2::from_shape_fn((128, 64), |_| rng.normal());
    let fm = match FeatureMatrix::new(x, None) {
        Ok(f) => f,
        Err(e) => return check("orthogonality-concentration", false, e.to_string()),
    };
    match pairwise_angle_stats(&fm) {
        Ok((mean, std)) => check(
            "orthogonality-concentration",
            (88.0..=92.0).contains(&mean) && (3.0..=9.0).contains(&std),
            format!("f_mean {mean:.2}, f_std {std:.2}"),
        ),
        Err(e) => check("orthogonality-concentration", false, e.to_string()),
    }
}

fn kaiming_sampling() -> CheckResult {
    let b = kaiming_bound(std::f64::consts::SQRT_2, 27);
    let mut rng = CounterRng::new(99);
    let n = 100_000;
    let mut sum_sq = 0.0;
    let mut inside = true;
    for _ in 0..n {
        let w = b * (2.0 * rng.next_f64() - 1.0);
        inside &= w > -b && w < b;
        sum_sq += w * w;
    }
    let var = sum_sq / n as f64;
    let target = b * b / 3.0;
    let rel = (var - target).abs() / target;
    check(
        "kaiming-sampling",
        inside && rel < 0.02,
        format!("bound ok: {inside}, variance off by {:.3}%", rel * 100.0),
    )
}

fn knn_against_oracle() -> CheckResult {
    let mut rng = CounterRng::new(1234);
    let n = 60;
    let x = ndarray::Array2::from_shape_fn((n, 4), |_| rng.uniform(-1.0, 1.0));
    let dm = match pairwise_distances(&x.view()) {
        Ok(d) => d,
        Err(e) => return check("knn-oracle", false, e.to_string()),
    };
    let nt = match knn(&dm, 6) {
        Ok(t) => t,
        Err(e) => return check("knn-oracle", false, e.to_string()),
    };
    for i in 0..n {
        let mut pairs: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| {
                let mut s = 0.0;
                for c in 0..4 {
                    let diff = x[[i, c]] - x[[j, c]];
                    s += diff * diff;
                }
                (s.sqrt(), j)
            })
            .collect();
        pairs.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        let expect: Vec<usize> = pairs.iter().take(6).map(|p| p.1).collect();
        if nt.neighbors(i) != expect.as_slice() {
            return check("knn-oracle", false, format!("mismatch at point {i}"));
        }
    }
    check("knn-oracle", true, "60 points, k=6, exact match".into())
}

/// Runs every bundled check.
pub fn run_all() -> Vec<CheckResult> {
    vec![
        lambert_residuals(),
        separability_inversion(),
        cube_envelope(),
        orthogonality_concentration(),
        kaiming_sampling(),
        knn_against_oracle(),
    ]
}

pub fn all_passed(results: &[CheckResult]) -> bool {
    results.iter().all(|r| r.passed)
}
