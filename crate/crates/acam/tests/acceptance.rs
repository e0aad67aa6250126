//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line with its measured values.
//!
//! Criterion 3 asserts the full window-noise robustness target (error
//! below 0.05 up to 0.3 V of window variation).
//! Center-coupled Gaussian window noise makes that target unreachable for
//! any ridge fit — the smoothing bias alone floors the error near 0.09 at
//! 0.3 V — so that check fails by design of the target; see the README's
//! "Known limitations". The quantization half of the criterion passes.

use acam::analysis::{
    gamma_scaling_check, kernel_sweep, op_count, residual_stats, scaling_r_squared, sense_margin,
    DensityConfig, KernelSweepConfig, OpCountMode, ResidualConfig,
};
use acam::array::AcamArray;
use acam::fewshot::{sweep_accuracy, synth_embeddings, FewshotConfig};
use acam::kernel::{
    fit, predict_acam, predict_exact, surrogate_kernel, surrogate_support_radius,
    AcamPipelineConfig, KernelSpec, CALIBRATED_LAMBDA,
};
use acam::search::analog_hamming;
use acam::window::MatchWindow;
use acam::VoltageRange;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn report(criterion: u32, name: &str, detail: &str) {
    println!("criterion {criterion} ({name}): PASS [{detail}]");
}

#[test]
fn criterion_01_surrogate_kernel_identities() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..1000 {
        let d = rng.gen_range(1..6);
        let gamma: f64 = rng.gen_range(0.01..1.0);
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let y: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();

        // self-similarity is exactly 1
        assert_eq!(surrogate_kernel(&x, &x, gamma).unwrap(), 1.0);

        // symmetry to 1e-12
        let kxy = surrogate_kernel(&x, &y, gamma).unwrap();
        let kyx = surrogate_kernel(&y, &x, gamma).unwrap();
        assert!((kxy - kyx).abs() <= 1e-12);

        // zero at and beyond the support radius
        let radius = surrogate_support_radius(gamma);
        let dir: Vec<f64> = {
            let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let n = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-9);
            v.iter().map(|a| a / n).collect()
        };
        // the boundary coordinates themselves carry rounding error, so allow
        // a machine-precision sliver there and demand exact zero just beyond
        for scale in [1.0, 1.0 + 1e-9, 1.5, 10.0] {
            let far: Vec<f64> = x
                .iter()
                .zip(&dir)
                .map(|(a, u)| a + u * radius * scale)
                .collect();
            let k = surrogate_kernel(&x, &far, gamma).unwrap();
            if scale == 1.0 {
                assert!(k <= 1e-12, "boundary value {k}");
            } else {
                assert_eq!(k, 0.0, "beyond-radius value {k} at scale {scale}");
            }
        }
    }
    report(
        1,
        "surrogate kernel identities",
        &format!("1000 random pairs, {:.2?}", t0.elapsed()),
    );
}

/// Independent oracle: naive Gram assembly plus Gauss-Jordan elimination,
/// sharing no code with the library solver.
mod oracle {
    pub fn gram(points: &[Vec<f64>], eval: impl Fn(&[f64], &[f64]) -> f64) -> Vec<Vec<f64>> {
        let m = points.len();
        let mut k = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in 0..m {
                k[i][j] = eval(&points[i], &points[j]);
            }
        }
        k
    }

    pub fn gauss_jordan(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a
            .iter()
            .zip(b)
            .map(|(row, &bi)| {
                let mut r = row.clone();
                r.push(bi);
                r
            })
            .collect();
        for col in 0..n {
            let piv =
                (col..n).max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())?;
            if m[piv][col].abs() < 1e-300 {
                return None;
            }
            m.swap(col, piv);
            let p = m[col][col];
            for k in 0..=n {
                m[col][k] /= p;
            }
            for row in 0..n {
                if row != col {
                    let f = m[row][col];
                    for k in 0..=n {
                        m[row][k] -= f * m[col][k];
                    }
                }
            }
        }
        Some((0..n).map(|i| m[i][n]).collect())
    }
}

#[test]
fn criterion_02_ridge_fit_matches_elimination_oracle() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst_residual = 0.0f64;
    for case in 0..50 {
        let m = rng.gen_range(1..=32);
        let d = rng.gen_range(1..=3);
        let points: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..d).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lambda: f64 = rng.gen_range(0.02..0.5);
        let gamma: f64 = rng.gen_range(0.05..0.5);
        let (spec, eval): (KernelSpec, Box<dyn Fn(&[f64], &[f64]) -> f64>) = match case % 3 {
            0 => (
                KernelSpec::rbf(gamma).unwrap(),
                Box::new(move |a: &[f64], b: &[f64]| {
                    let r2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                    (-r2 / (2.0 * gamma * gamma)).exp()
                }),
            ),
            1 => (
                KernelSpec::acam_surrogate(gamma).unwrap(),
                Box::new(move |a: &[f64], b: &[f64]| {
                    let r2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                    (2.0 - (r2 / (2.0 * gamma * gamma)).exp()).max(0.0)
                }),
            ),
            _ => (
                KernelSpec::laplace(gamma * 10.0).unwrap(),
                Box::new(move |a: &[f64], b: &[f64]| {
                    let r2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                    (-(gamma * 10.0) * r2.sqrt()).exp()
                }),
            ),
        };

        let model = fit(&points, &y, spec, lambda).expect("regularized fit");

        // oracle-assembled system
        let mut a = oracle::gram(&points, eval);
        for i in 0..m {
            a[i][i] += lambda * m as f64;
        }
        let norm_y: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut rss = 0.0;
        for i in 0..m {
            let ax: f64 = (0..m).map(|j| a[i][j] * model.alpha[j]).sum();
            rss += (ax - y[i]).powi(2);
        }
        let rel = rss.sqrt() / norm_y.max(f64::MIN_POSITIVE);
        worst_residual = worst_residual.max(rel);
        assert!(rel <= 1e-8, "case {case}: relative residual {rel:.3e}");

        let alpha_oracle = oracle::gauss_jordan(&a, &y).expect("oracle solve");
        let diff: f64 = model
            .alpha
            .iter()
            .zip(&alpha_oracle)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let scale: f64 = alpha_oracle.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(
            diff <= 1e-6 * (1.0 + scale),
            "case {case}: oracle gap {diff:.3e}"
        );
    }
    report(
        2,
        "ridge fit vs elimination oracle",
        &format!(
            "50 systems m<=32, worst relative residual {worst_residual:.2e}, {:.2?}",
            t0.elapsed()
        ),
    );
}

#[test]
fn criterion_03_regression_error_under_quantization_and_window_noise() {
    let t0 = Instant::now();
    let cfg = KernelSweepConfig {
        gammas: vec![0.1],
        quant_bits: vec![Some(4)],
        noise_stds: vec![0.0, 0.1, 0.2, 0.3],
        lambda: CALIBRATED_LAMBDA,
        n_seeds: 10,
        seed: 303,
        ..KernelSweepConfig::default()
    };
    let cells = kernel_sweep(&cfg).unwrap();
    let detail: Vec<String> = cells
        .iter()
        .map(|c| format!("sigma={} mse={:.4}", c.noise_std, c.mse_true))
        .collect();
    println!(
        "criterion 3 (4-bit quantization + window-noise error): measured {} in {:.2?}",
        detail.join(", "),
        t0.elapsed()
    );
    for c in &cells {
        assert!(
            c.mse_true < 0.03 + 0.02,
            "10-seed mean error {:.4} at 4-bit quantization, window noise {} V \
             (center-coupled window noise cannot meet the 0.05 target above ~0.05 V; \
             see README known limitations)",
            c.mse_true,
            c.noise_std
        );
    }
    report(
        3,
        "4-bit quantization + window-noise error",
        &detail.join(", "),
    );
}

#[test]
fn criterion_04_fitting_regime_ordering() {
    let t0 = Instant::now();
    let cfg = KernelSweepConfig {
        gammas: vec![0.1, 0.4, 0.02],
        quant_bits: vec![None],
        noise_stds: vec![0.0],
        lambda: CALIBRATED_LAMBDA,
        n_seeds: 10,
        seed: 404,
        ..KernelSweepConfig::default()
    };
    let cells = kernel_sweep(&cfg).unwrap();
    let get = |g: f64| cells.iter().find(|c| c.gamma == g).unwrap().mse_true;
    let (m_mid, m_wide, m_narrow) = (get(0.1), get(0.4), get(0.02));
    assert!(
        m_mid < m_wide,
        "expected error at gamma 0.1 ({m_mid:.4}) below gamma 0.4 ({m_wide:.4})"
    );
    assert!(
        m_mid < m_narrow,
        "expected error at gamma 0.1 ({m_mid:.4}) below gamma 0.02 ({m_narrow:.4})"
    );
    report(
        4,
        "fitting-regime ordering",
        &format!(
            "mse(0.1)={m_mid:.4} < mse(0.4)={m_wide:.4}, mse(0.02)={m_narrow:.4}, {:.2?}",
            t0.elapsed()
        ),
    );
}

#[test]
fn criterion_05_residual_means_and_variances() {
    let t0 = Instant::now();
    let cfg = ResidualConfig {
        noise_stds: vec![0.01, 0.02, 0.04, 0.08],
        n_seeds: 10,
        seed: 505,
        ..ResidualConfig::default()
    };
    let stats = residual_stats(&cfg).unwrap();
    let mut prev = -1.0;
    let mut detail = Vec::new();
    for s in &stats {
        assert!(
            s.mean.abs() <= 0.05,
            "residual mean {} at window noise {}",
            s.mean,
            s.noise_std
        );
        assert!(
            s.variance >= prev,
            "variance decreased at window noise {}: {} after {prev}",
            s.noise_std,
            s.variance
        );
        prev = s.variance;
        detail.push(format!(
            "sigma={}: mean={:+.4} var={:.4}",
            s.noise_std, s.mean, s.variance
        ));
    }
    report(
        5,
        "residual trend",
        &format!("{}, {:.2?}", detail.join("; "), t0.elapsed()),
    );
}

#[test]
fn criterion_06_gamma_scaling_law() {
    let t0 = Instant::now();
    let pairs = gamma_scaling_check(606).unwrap();
    assert_eq!(pairs.len(), 5);
    let mut worst = 0.0f64;
    for p in &pairs {
        let diff = (p.mse_unscaled - p.mse_scaled).abs();
        worst = worst.max(diff);
        assert!(diff <= 1e-9, "pair omega={} differs by {diff:.3e}", p.omega);
        if p.scale == 1.0 {
            assert_eq!(p.mse_unscaled, p.mse_scaled, "identity member not exact");
        }
    }
    let r2 = scaling_r_squared(&pairs);
    assert!(r2 > 0.99, "R^2 {r2}");
    report(
        6,
        "gamma scaling law",
        &format!(
            "5 pairs, worst |mse gap| {worst:.2e}, R^2 {r2:.6}, {:.2?}",
            t0.elapsed()
        ),
    );
}

#[test]
fn criterion_07_sense_margin_calibration() {
    let t0 = Instant::now();
    let cfg = DensityConfig::calibrated();
    let m3 = sense_margin(3, &cfg).unwrap().sense_margin;
    let m4 = sense_margin(4, &cfg).unwrap().sense_margin;
    assert!((700.0..=1300.0).contains(&m3), "3-bit margin {m3}");
    assert!((70.0..=130.0).contains(&m4), "4-bit margin {m4}");
    let mut prev = f64::INFINITY;
    let mut logs = Vec::new();
    for bits in 1..=6 {
        let p = sense_margin(bits, &cfg).unwrap();
        let log = p.sense_margin.log10();
        assert!(
            log < prev,
            "log10 margin not strictly decreasing at {bits} bits"
        );
        prev = log;
        logs.push(format!("{bits}b:{:.3}", log));
    }
    report(
        7,
        "sense-margin calibration",
        &format!(
            "margin(3)={m3:.1}, margin(4)={m4:.1}, log10 {}, {:.2?}",
            logs.join(" "),
            t0.elapsed()
        ),
    );
}

#[test]
fn criterion_08_fewshot_property_suite() {
    let t0 = Instant::now();
    let range = VoltageRange::default();
    // separable clusters: std = 2% of the operating range
    let table = synth_embeddings(20, 8, 64, 0.02 * range.width(), 808, &range).unwrap();
    let base = FewshotConfig::default();
    let windows = [0.2, 0.3, 0.4, 0.5, 0.6, 0.7];
    let cells = sweep_accuracy(&table, 5, 5, 500, &windows, &[0.0, 0.1], 808, &base).unwrap();

    // (a) separable clusters classify perfectly at the default window
    let acc_default = cells
        .iter()
        .find(|c| c.window_size == 0.4 && c.noise_std == 0.0)
        .unwrap()
        .accuracy;
    assert_eq!(acc_default, 1.0, "separable accuracy {acc_default}");

    // (b) plateau across window sizes 0.2..0.7 V
    let clean: Vec<f64> = cells
        .iter()
        .filter(|c| c.noise_std == 0.0)
        .map(|c| c.accuracy)
        .collect();
    let (lo, hi) = clean
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &a| {
            (l.min(a), h.max(a))
        });
    assert!(hi - lo < 0.05, "plateau spread {}", hi - lo);

    // (c) window noise of 0.1 V costs fewer than 10 points
    let acc_noisy = cells
        .iter()
        .find(|c| c.window_size == 0.4 && c.noise_std == 0.1)
        .unwrap()
        .accuracy;
    assert!(
        acc_default - acc_noisy < 0.10,
        "noise degradation {}",
        acc_default - acc_noisy
    );

    // informational only: accuracy on externally supplied real embeddings
    let external = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../data/external_embeddings.csv"
    );
    if std::path::Path::new(external).exists() {
        let t = acam::fewshot::load_embeddings(external).unwrap();
        let ext = sweep_accuracy(&t, 5, 5, 500, &[0.4], &[0.0], 808, &base).unwrap();
        println!(
            "criterion 8 (informational): external embeddings accuracy {:.3} vs 0.90-0.95 reference band",
            ext[0].accuracy
        );
    }

    report(
        8,
        "few-shot property suite",
        &format!(
            "separable acc {acc_default:.3}, plateau spread {:.3}, noise cost {:.3}, {:.2?}",
            hi - lo,
            acc_default - acc_noisy,
            t0.elapsed()
        ),
    );
}

#[test]
fn criterion_09_search_matches_naive_membership_count() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let range = VoltageRange::new(-0.5, 3.5).unwrap();
    for _ in 0..100 {
        let m = rng.gen_range(1..=64);
        let d = rng.gen_range(1..=64);
        let windows: Vec<Vec<MatchWindow>> = (0..m)
            .map(|_| {
                (0..d)
                    .map(|_| {
                        let a: f64 = rng.gen_range(-0.4..3.0);
                        let w: f64 = rng.gen_range(0.0..0.5);
                        MatchWindow::new(a, a + w).unwrap()
                    })
                    .collect()
            })
            .collect();
        let array = AcamArray::new(windows, range).unwrap();
        let query: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.5..3.5)).collect();
        let got = analog_hamming(&array, &query).unwrap();

        let mut expect = vec![0.0f64; m];
        for (i, e) in expect.iter_mut().enumerate() {
            for (j, &q) in query.iter().enumerate() {
                let w = array.window(i, j);
                if q >= w.lower() && q <= w.upper() {
                    *e += 1.0;
                }
            }
        }
        assert_eq!(got.scores, expect);
        let best = expect
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
            .unwrap()
            .0;
        assert_eq!(got.best_row, best);
    }
    report(
        9,
        "search oracle equivalence",
        &format!("100 arrays up to 64x64, exact, {:.2?}", t0.elapsed()),
    );
}

#[test]
fn criterion_10_array_pipeline_equals_exact_prediction() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let x: Vec<Vec<f64>> = (0..32).map(|_| vec![rng.gen_range(0.0..1.0)]).collect();
    let y: Vec<f64> = x.iter().map(|p| (5.0 * p[0]).sin()).collect();
    let model = fit(
        &x,
        &y,
        KernelSpec::acam_surrogate(0.1).unwrap(),
        CALIBRATED_LAMBDA,
    )
    .unwrap();
    let cfg = AcamPipelineConfig::exact();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let q = vec![rng.gen_range(-0.2..1.2)];
        let a = predict_acam(&model, &q, &cfg).unwrap();
        let b = predict_exact(&model, &q).unwrap();
        let gap = (a - b).abs();
        worst = worst.max(gap);
        assert!(gap <= 1e-12 * b.abs().max(1.0), "gap {gap:.3e}");
    }
    report(
        10,
        "array pipeline identity",
        &format!("100 queries, worst gap {worst:.2e}, {:.2?}", t0.elapsed()),
    );
}

#[test]
fn criterion_11_operation_count_accounting() {
    let t0 = Instant::now();
    // documented formula m * (3d + 4): hand tally at m = d = 1 is
    // sub + square + accumulate + scale + exp + multiply + add = 7
    assert_eq!(op_count(1, 1, OpCountMode::ExactSoftware).unwrap(), 7);
    let c = op_count(64, 64, OpCountMode::ExactSoftware).unwrap();
    assert_eq!(c, 64 * (3 * 64 + 4));
    assert!(
        (c as f64 / 4096.0) >= 1.0 && (c as f64 / 4096.0) <= 4.0,
        "count {c} not of order 4096"
    );
    assert_eq!(op_count(64, 64, OpCountMode::Acam).unwrap(), 1);
    assert_eq!(op_count(7, 3, OpCountMode::Acam).unwrap(), 1);
    report(
        11,
        "operation counts",
        &format!("software {c} (order 4096), array 1, {:.2?}", t0.elapsed()),
    );
}
