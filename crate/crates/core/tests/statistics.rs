//! Monte Carlo behaviour of the estimators, whitening and detection pipeline.

use num_complex::Complex64;

use toepwhite::bounds::mp_threshold;
use toepwhite::detector::{
    calibrate_threshold, empirical_quantile, estimate_for_mode, glrt_statistic, whiten, Calibration,
    EstimatorMode, TrialRunner, DEFAULT_FLOOR_RATIO,
};
use toepwhite::estimators::{estimate_covariance, EstimatorKind};
use toepwhite::experiments::{
    run_concentration, run_detection_vs_n, run_power_vs_snr, ConcentrationConfig, DetectionCurveConfig,
    PowerCurveConfig,
};
use toepwhite::linalg::{CMatrix, HermitianEigen};
use toepwhite::model::{sample_complex_gaussian_matrix, sample_noise, Hypothesis, NoiseModel, Scenario};
use toepwhite::parallel::Execution;

const EXEC: Execution = Execution::Parallel;

fn exceed_rate(values: &[f64], gamma: f64) -> f64 {
    values.iter().filter(|&&v| v >= gamma).count() as f64 / values.len() as f64
}

fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

#[test]
fn unbiased_estimate_is_usually_positive_definite() {
    let (n, t) = (64, 128);
    let model = NoiseModel::ar1(0.6, t).unwrap();
    let trials = 1000;
    let positive = (0..trials)
        .filter(|&seed| {
            let y = sample_noise(seed, &model, n, t).unwrap().data;
            let r = estimate_covariance(&y, EstimatorKind::Unbiased).unwrap().into_matrix();
            HermitianEigen::new(&r).unwrap().min() > 0.0
        })
        .count();
    println!("unbiased PD fraction: {positive}/{trials}");
    assert!(positive as f64 >= 0.99 * trials as f64);
}

#[test]
fn oracle_whitening_removes_lag_one_correlation() {
    let (n, t) = (200, 64);
    let model = NoiseModel::ar1(0.6, t).unwrap();
    let mid = t / 2;
    let mut raw = Vec::new();
    let mut white = Vec::new();
    for seed in 0..1000 {
        let v = sample_noise(seed, &model, n, t).unwrap().data;
        let (w, floored) = whiten(&v, model.matrix(), DEFAULT_FLOOR_RATIO).unwrap();
        assert!(!floored);
        let lag1 = |m: &CMatrix| {
            ((0..n).map(|r| m[(r, mid + 1)] * m[(r, mid)].conj()).sum::<Complex64>() / n as f64).re
        };
        raw.push(lag1(&v));
        white.push(lag1(&w));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let sd = |v: &[f64]| {
        let m = mean(v);
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
    };
    let se = sd(&white) / (white.len() as f64).sqrt();
    assert!(mean(&white).abs() <= 3.0 * se, "whitened lag-1 mean {} se {se}", mean(&white));
    assert!((mean(&raw) - 0.6).abs() < 0.01);
}

#[test]
fn whitened_statistic_matches_direct_form() {
    for seed in 0..20 {
        let y = sample_complex_gaussian_matrix(seed, 8, 24);
        let r = estimate_covariance(&y, EstimatorKind::Biased).unwrap().into_matrix();
        let direct = glrt_statistic(&y, &r, DEFAULT_FLOOR_RATIO).unwrap().alpha;
        let (w, _) = whiten(&y, &r, DEFAULT_FLOOR_RATIO).unwrap();
        let via = glrt_statistic(&w, &CMatrix::identity(24, 24), DEFAULT_FLOOR_RATIO).unwrap().alpha;
        assert!((direct - via).abs() <= 1e-10 * direct);
    }
}

#[test]
fn signal_leaks_into_self_estimate_but_not_pure_noise() {
    let scenario = Scenario::ar1(20, 40, 0.6, 10.0, 1.0).unwrap();
    for seed in 0..5 {
        let y = scenario.observe(Hypothesis::H1, seed).unwrap().data;
        let pn = scenario.pure_noise(seed).unwrap().data;
        let biased = estimate_for_mode(&y, EstimatorMode::Biased, &scenario.noise, None).unwrap();
        let biased_pn = estimate_for_mode(&y, EstimatorMode::BiasedPn, &scenario.noise, Some(&pn)).unwrap();
        assert!((&biased - &biased_pn).norm() > 1e-3 * biased.norm());
        assert_eq!(
            estimate_for_mode(&y, EstimatorMode::Oracle, &scenario.noise, None).unwrap(),
            *scenario.noise.matrix()
        );
    }
}

#[test]
fn median_rate_calibration_splits_fresh_trials() {
    let scenario = Scenario::ar1(10, 20, 0.6, 10.0, 1.0).unwrap();
    let cal = Calibration { rate: 0.5, trials: 1000, seed: 1 };
    let gamma = calibrate_threshold(EstimatorMode::Biased, &scenario, &cal, DEFAULT_FLOOR_RATIO, EXEC).unwrap();
    let runner = TrialRunner::new(scenario, &[EstimatorMode::Biased], DEFAULT_FLOOR_RATIO).unwrap();
    let fresh = runner.simulate(Hypothesis::H0, 1000, 2, EXEC).unwrap();
    let rate = exceed_rate(&fresh[0], gamma);
    // calibration and evaluation samples each contribute one binomial error
    assert!((rate - 0.5).abs() <= 3.0 * 2f64.sqrt() * binomial_se(0.5, 1000), "{rate}");
}

#[test]
fn oracle_threshold_matches_white_wishart_quantile() {
    // under oracle whitening the statistic is that of white noise, so an
    // independent sample of raw CN(0,1) blocks gives the reference quantile
    let (n, t, trials) = (20, 40, 4000);
    let reference: Vec<f64> = (0..trials as u64)
        .map(|s| {
            let w = sample_complex_gaussian_matrix(1_000_000 + s, n, t);
            let g = &w * w.adjoint();
            let eig = HermitianEigen::new(&g).unwrap();
            n as f64 * eig.max() / g.trace().re
        })
        .collect();
    let expected = empirical_quantile(&reference, 0.05).unwrap();

    let scenario = Scenario::ar1(n, t, 0.6, 10.0, 1.0).unwrap();
    let cal = Calibration { rate: 0.05, trials, seed: 3 };
    let gamma = calibrate_threshold(EstimatorMode::Oracle, &scenario, &cal, DEFAULT_FLOOR_RATIO, EXEC).unwrap();
    println!("oracle gamma {gamma:.4}, white reference {expected:.4}, edge {:.4}", mp_threshold(0.5).unwrap());
    assert!((gamma - expected).abs() < 0.05, "{gamma} vs {expected}");
    // finite N: the 95% point still sits below the asymptotic edge
    assert!(gamma < mp_threshold(0.5).unwrap());
}

#[test]
fn fixed_threshold_separates_hypotheses_as_n_grows() {
    let gamma = 3.2;
    let trials = 2000;
    let mut h0_rates = Vec::new();
    let mut h1_rates = Vec::new();
    for n in [10usize, 20, 40] {
        let scenario = Scenario::ar1(n, 2 * n, 0.6, 10.0, 1.0).unwrap();
        let runner = TrialRunner::new(scenario, &[EstimatorMode::Biased], DEFAULT_FLOOR_RATIO).unwrap();
        h0_rates.push(exceed_rate(&runner.simulate(Hypothesis::H0, trials, 10 + n as u64, EXEC).unwrap()[0], gamma));
        h1_rates.push(exceed_rate(&runner.simulate(Hypothesis::H1, trials, 20 + n as u64, EXEC).unwrap()[0], gamma));
    }
    println!("P[alpha >= 3.2]: H0 {h0_rates:?}, H1 {h1_rates:?}");
    for w in h0_rates.windows(2) {
        assert!(w[1] <= w[0] + 2.0 * binomial_se(w[0].max(0.01), trials));
    }
    for w in h1_rates.windows(2) {
        assert!(w[1] >= w[0] - 2.0 * binomial_se(w[0].max(0.01), trials));
    }
    // self-estimated whitening keeps H0 exceedances of 3.2 at or near zero
    assert!(h0_rates[2] <= h0_rates[0] && h1_rates[2] > h1_rates[0]);
}

#[test]
fn zero_power_gives_complementary_detection_error() {
    let mut cfg = DetectionCurveConfig::new(vec![10], 5);
    cfg.p = 0.0;
    cfg.modes = vec![EstimatorMode::Biased, EstimatorMode::Oracle];
    cfg.trials = 2000;
    cfg.calib_trials = 2000;
    for row in run_detection_vs_n(&cfg).unwrap() {
        assert!((row.detect_error - 0.95).abs() <= 0.025, "{row:?}");
    }
}

#[test]
fn detection_error_falls_with_n() {
    let mut cfg = DetectionCurveConfig::new(vec![10, 20, 30], 6);
    cfg.modes = vec![EstimatorMode::Biased, EstimatorMode::Oracle];
    cfg.trials = 1000;
    cfg.calib_trials = 1000;
    let rows = run_detection_vs_n(&cfg).unwrap();
    for mode in ["biased", "oracle"] {
        let curve: Vec<_> = rows.iter().filter(|r| r.method == mode).collect();
        for w in curve.windows(2) {
            assert!(w[1].detect_error <= w[0].detect_error + 2.0 * w[0].std_err.max(w[1].std_err), "{w:?}");
        }
    }
}

#[test]
fn oracle_error_nearly_vanishes_at_n50() {
    let mut cfg = DetectionCurveConfig::new(vec![50], 7);
    cfg.modes = vec![EstimatorMode::Oracle];
    cfg.trials = 5000;
    cfg.calib_trials = 5000;
    let rows = run_detection_vs_n(&cfg).unwrap();
    println!("N=50 oracle detection error {}", rows[0].detect_error);
    assert!(rows[0].detect_error <= 0.002);
}

#[test]
fn power_rises_with_snr() {
    let mut cfg = PowerCurveConfig::new(vec![-10.0, -6.0, -2.0, 0.0, 2.0, 4.0], 8);
    cfg.modes = vec![EstimatorMode::Biased, EstimatorMode::BiasedPn, EstimatorMode::Oracle];
    cfg.trials = 1000;
    cfg.calib_trials = 1000;
    let rows = run_power_vs_snr(&cfg).unwrap();
    for mode in ["biased", "biased-pn", "oracle"] {
        let curve: Vec<_> = rows.iter().filter(|r| r.method == mode).collect();
        for w in curve.windows(2) {
            assert!(w[1].power >= w[0].power - 2.0 * w[0].std_err.max(w[1].std_err), "{w:?}");
        }
        assert!(curve.last().unwrap().power >= 0.99, "{mode} at 4 dB");
        assert!((curve[0].power - 0.05).abs() <= 0.03, "{mode} at -10 dB");
    }
}

#[test]
fn huge_deviation_is_censored() {
    let cfg = ConcentrationConfig {
        a: 0.6,
        c: 0.5,
        x: 1e6,
        n_grid: vec![4, 6],
        trials: 100,
        seed: 1,
        execution: EXEC,
    };
    let rows = run_concentration(&cfg).unwrap();
    for row in rows.iter().filter(|r| !r.method.ends_with("theory")) {
        assert!(row.censored && row.prob == 0.0);
        assert!((row.log_prob_over_t - (-(100f64).ln() / row.t as f64)).abs() < 1e-15);
    }
}

#[test]
fn empirical_tails_sit_below_theory() {
    let cfg = ConcentrationConfig {
        a: 0.6,
        c: 0.5,
        x: 2.0,
        n_grid: vec![20],
        trials: 5000,
        seed: 9,
        execution: EXEC,
    };
    let rows = run_concentration(&cfg).unwrap();
    let get = |m: &str| rows.iter().find(|r| r.method == m).unwrap().log_prob_over_t;
    assert!(get("biased") <= get("biased-theory"));
    assert!(get("unbiased") <= get("unbiased-theory"));
    assert!(get("biased") < get("unbiased"));
}
