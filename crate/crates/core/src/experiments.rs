//! Seeded Monte Carlo campaigns: tail probabilities of the covariance error
//! against the bound exponents, detection error versus array size, and
//! detection power versus SNR. Each campaign emits rectangular CSV rows.
//!
//! Per-trial seeds are `derive_seed(master, [experiment, phase, point, trial])`
//! (the power sweep drops `point` so every SNR reuses the same noise draws).
//! Aggregation only counts, so output does not depend on the worker count.

use std::io::{self, Write};

use crate::bounds::{biased_exponent, unbiased_exponent, BoundQuery};
use crate::detector::{empirical_quantile, Calibration, EstimatorMode, TrialRunner, DEFAULT_FLOOR_RATIO};
use crate::error::{Error, Result};
use crate::estimators::{estimate_lags_fft, EstimatorKind};
use crate::linalg::spectral_norm;
use crate::model::{sample_noise, Hypothesis, NoiseModel, Scenario};
use crate::parallel::{try_map_trials, Execution};
use crate::seed::derive_seed;
use crate::toeplitz::{default_grid_size, symbol_sup_norm};

const CONCENTRATION_ID: u64 = 1;
const DETECTION_ID: u64 = 2;
const POWER_ID: u64 = 3;

const CALIBRATION_PHASE: u64 = 0;
const NULL_PHASE: u64 = 1;
const ALTERNATIVE_PHASE: u64 = 2;

/// Steering angle used by the detection campaigns, in degrees.
pub const DEFAULT_THETA_DEG: f64 = 10.0;

pub const MIN_TRIALS: usize = 100;

/// `T = N / c`, which must come out integral.
pub fn samples_for(sensors: usize, c: f64) -> Result<usize> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("aspect ratio must be > 0, got {c}")));
    }
    let t = sensors as f64 / c;
    let rounded = t.round();
    if (t - rounded).abs() > 1e-9 * t.max(1.0) || rounded < 2.0 {
        return Err(Error::InvalidParameter(format!(
            "N = {sensors} and c = {c} give non-integral or too small T = {t}"
        )));
    }
    Ok(rounded as usize)
}

fn check_campaign(grid_len: usize, trials: usize) -> Result<()> {
    if grid_len == 0 {
        return Err(Error::InvalidParameter("sweep must be non-empty".into()));
    }
    if trials < MIN_TRIALS {
        return Err(Error::InvalidParameter(format!(
            "at least {MIN_TRIALS} trials per point required, got {trials}"
        )));
    }
    Ok(())
}

fn std_err(prob: f64, trials: usize) -> f64 {
    (prob * (1.0 - prob) / trials as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationConfig {
    pub a: f64,
    pub c: f64,
    pub x: f64,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub execution: Execution,
}

/// One `(N, method)` point of the concentration campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationRow {
    pub n: usize,
    pub t: usize,
    pub x: f64,
    pub method: String,
    pub prob: f64,
    pub log_prob_over_t: f64,
    pub std_err: f64,
    /// No exceedance observed; the ordinate is the resolution bound `-log(trials) / T`.
    pub censored: bool,
    pub trials: usize,
    pub seed: u64,
}

/// Empirical `(1/T) log P[||R_hat - R|| > x]` for both estimators on pure
/// noise, with the two theory exponents alongside.
pub fn run_concentration(cfg: &ConcentrationConfig) -> Result<Vec<ConcentrationRow>> {
    check_campaign(cfg.n_grid.len(), cfg.trials)?;
    if !(cfg.x > 0.0) {
        return Err(Error::InvalidParameter(format!("x must be > 0, got {}", cfg.x)));
    }
    let mut rows = Vec::with_capacity(4 * cfg.n_grid.len());
    for (point, &n) in cfg.n_grid.iter().enumerate() {
        let t = samples_for(n, cfg.c)?;
        let model = NoiseModel::ar1(cfg.a, t)?;
        let sup_norm = symbol_sup_norm(model.covariance(), default_grid_size(t))?;
        let r = model.matrix();

        let hits = try_map_trials(cfg.execution, cfg.trials, |trial| {
            let seed = derive_seed(cfg.seed, &[CONCENTRATION_ID, NULL_PHASE, point as u64, trial]);
            let y = sample_noise(seed, &model, n, t)?;
            let biased = estimate_lags_fft(&y.data, EstimatorKind::Biased)?;
            let unbiased = biased.rescaled(EstimatorKind::Unbiased);
            let err_b = spectral_norm(&(biased.to_toeplitz().into_matrix() - r))?;
            let err_u = spectral_norm(&(unbiased.to_toeplitz().into_matrix() - r))?;
            Ok([err_b > cfg.x, err_u > cfg.x])
        })?;

        for (idx, kind) in EstimatorKind::ALL.into_iter().enumerate() {
            let count = hits.iter().filter(|h| h[idx]).count();
            let prob = count as f64 / cfg.trials as f64;
            let censored = count == 0;
            let log_prob_over_t = if censored {
                -(cfg.trials as f64).ln() / t as f64
            } else {
                prob.ln() / t as f64
            };
            rows.push(ConcentrationRow {
                n,
                t,
                x: cfg.x,
                method: kind.as_str().to_string(),
                prob,
                log_prob_over_t,
                std_err: std_err(prob, cfg.trials),
                censored,
                trials: cfg.trials,
                seed: cfg.seed,
            });
        }

        let query = BoundQuery::new(cfg.x, cfg.c, sup_norm, t)?;
        for (method, exponent) in [
            ("biased-theory", biased_exponent(&query)?),
            ("unbiased-theory", unbiased_exponent(&query)?),
        ] {
            rows.push(ConcentrationRow {
                n,
                t,
                x: cfg.x,
                method: method.to_string(),
                prob: (-(t as f64) * exponent).exp(),
                log_prob_over_t: -exponent,
                std_err: 0.0,
                censored: false,
                trials: cfg.trials,
                seed: cfg.seed,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionCurveConfig {
    pub a: f64,
    pub c: f64,
    pub p: f64,
    pub theta_deg: f64,
    pub far: f64,
    pub n_grid: Vec<usize>,
    pub modes: Vec<EstimatorMode>,
    pub trials: usize,
    pub calib_trials: usize,
    pub seed: u64,
    pub floor_ratio: f64,
    pub execution: Execution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerCurveConfig {
    pub a: f64,
    pub c: f64,
    pub n: usize,
    pub theta_deg: f64,
    pub far: f64,
    pub snr_grid_db: Vec<f64>,
    pub modes: Vec<EstimatorMode>,
    pub trials: usize,
    pub calib_trials: usize,
    pub seed: u64,
    pub floor_ratio: f64,
    pub execution: Execution,
}

impl DetectionCurveConfig {
    /// Detection-error sweep over `n_grid` with the remaining settings at their defaults.
    pub fn new(n_grid: Vec<usize>, seed: u64) -> Self {
        Self {
            a: 0.6,
            c: 0.5,
            p: 1.0,
            theta_deg: DEFAULT_THETA_DEG,
            far: 0.05,
            n_grid,
            modes: vec![
                EstimatorMode::Biased,
                EstimatorMode::Unbiased,
                EstimatorMode::White,
                EstimatorMode::Oracle,
            ],
            trials: 10_000,
            calib_trials: 10_000,
            seed,
            floor_ratio: DEFAULT_FLOOR_RATIO,
            execution: Execution::Parallel,
        }
    }
}

impl PowerCurveConfig {
    /// Power sweep over `snr_grid_db` with the remaining settings at their defaults.
    pub fn new(snr_grid_db: Vec<f64>, seed: u64) -> Self {
        Self {
            a: 0.6,
            c: 0.5,
            n: 20,
            theta_deg: DEFAULT_THETA_DEG,
            far: 0.05,
            snr_grid_db,
            modes: vec![
                EstimatorMode::Biased,
                EstimatorMode::Unbiased,
                EstimatorMode::BiasedPn,
                EstimatorMode::UnbiasedPn,
                EstimatorMode::Oracle,
            ],
            trials: 10_000,
            calib_trials: 10_000,
            seed,
            floor_ratio: DEFAULT_FLOOR_RATIO,
            execution: Execution::Parallel,
        }
    }
}

/// One `(N, SNR, method)` point of a detection campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRow {
    pub n: usize,
    pub t: usize,
    pub snr_db: f64,
    pub p: f64,
    pub method: String,
    pub gamma: f64,
    pub far_target: f64,
    pub far_empirical: f64,
    pub power: f64,
    pub detect_error: f64,
    pub std_err: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Per-mode thresholds and their measured false-alarm rates on fresh H0 trials.
struct NullCalibration {
    gammas: Vec<f64>,
    far_empirical: Vec<f64>,
}

fn calibrate_modes(
    runner: &TrialRunner,
    far: f64,
    calib_trials: usize,
    trials: usize,
    seeds: (u64, u64),
    execution: Execution,
) -> Result<NullCalibration> {
    Calibration {
        rate: far,
        trials: calib_trials,
        seed: seeds.0,
    }
    .validate()?;
    let calib = runner.simulate(Hypothesis::H0, calib_trials, seeds.0, execution)?;
    let gammas = calib
        .iter()
        .map(|alphas| empirical_quantile(alphas, far))
        .collect::<Result<Vec<_>>>()?;
    let null = runner.simulate(Hypothesis::H0, trials, seeds.1, execution)?;
    let far_empirical = null
        .iter()
        .zip(&gammas)
        .map(|(alphas, g)| fraction_at_least(alphas, *g))
        .collect();
    Ok(NullCalibration {
        gammas,
        far_empirical,
    })
}

fn fraction_at_least(values: &[f64], gamma: f64) -> f64 {
    values.iter().filter(|&&a| a >= gamma).count() as f64 / values.len() as f64
}

fn snr_db(p: f64) -> f64 {
    10.0 * p.log10()
}

fn detection_rows(
    runner: &TrialRunner,
    null: &NullCalibration,
    alternative: &[Vec<f64>],
    p: f64,
    far: f64,
    trials: usize,
    seed: u64,
) -> Vec<DetectionRow> {
    let scenario = runner.scenario();
    runner
        .modes()
        .iter()
        .enumerate()
        .map(|(m, mode)| {
            let power = fraction_at_least(&alternative[m], null.gammas[m]);
            DetectionRow {
                n: scenario.sensors,
                t: scenario.samples,
                snr_db: snr_db(p),
                p,
                method: mode.as_str().to_string(),
                gamma: null.gammas[m],
                far_target: far,
                far_empirical: null.far_empirical[m],
                power,
                detect_error: 1.0 - power,
                std_err: std_err(power, trials),
                trials,
                seed,
            }
        })
        .collect()
}

/// Detection error `1 - P[alpha >= gamma | H1]` versus `N` at fixed power,
/// each mode with its own FAR-calibrated threshold.
pub fn run_detection_vs_n(cfg: &DetectionCurveConfig) -> Result<Vec<DetectionRow>> {
    check_campaign(cfg.n_grid.len(), cfg.trials)?;
    let mut rows = Vec::new();
    for (point, &n) in cfg.n_grid.iter().enumerate() {
        let t = samples_for(n, cfg.c)?;
        let scenario = Scenario::ar1(n, t, cfg.a, cfg.theta_deg, cfg.p)?;
        let runner = TrialRunner::new(scenario, &cfg.modes, cfg.floor_ratio)?;
        let path = |phase| derive_seed(cfg.seed, &[DETECTION_ID, phase, point as u64]);
        let null = calibrate_modes(
            &runner,
            cfg.far,
            cfg.calib_trials,
            cfg.trials,
            (path(CALIBRATION_PHASE), path(NULL_PHASE)),
            cfg.execution,
        )?;
        let alternative = runner.simulate(Hypothesis::H1, cfg.trials, path(ALTERNATIVE_PHASE), cfg.execution)?;
        rows.extend(detection_rows(&runner, &null, &alternative, cfg.p, cfg.far, cfg.trials, cfg.seed));
    }
    Ok(rows)
}

/// Power `P[alpha >= gamma | H1]` versus SNR at fixed `N`, with `p = 10^(SNR/10)`.
pub fn run_power_vs_snr(cfg: &PowerCurveConfig) -> Result<Vec<DetectionRow>> {
    check_campaign(cfg.snr_grid_db.len(), cfg.trials)?;
    if cfg.snr_grid_db.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidParameter("SNR grid must be finite".into()));
    }
    let t = samples_for(cfg.n, cfg.c)?;
    let base = Scenario::ar1(cfg.n, t, cfg.a, cfg.theta_deg, 0.0)?;
    let null_runner = TrialRunner::new(base.clone(), &cfg.modes, cfg.floor_ratio)?;
    let path = |phase| derive_seed(cfg.seed, &[POWER_ID, phase]);
    let null = calibrate_modes(
        &null_runner,
        cfg.far,
        cfg.calib_trials,
        cfg.trials,
        (path(CALIBRATION_PHASE), path(NULL_PHASE)),
        cfg.execution,
    )?;
    let mut rows = Vec::new();
    for &snr in &cfg.snr_grid_db {
        let p = 10f64.powf(snr / 10.0);
        let runner = TrialRunner::new(base.with_power(p)?, &cfg.modes, cfg.floor_ratio)?;
        let alternative = runner.simulate(Hypothesis::H1, cfg.trials, path(ALTERNATIVE_PHASE), cfg.execution)?;
        let mut point_rows = detection_rows(&runner, &null, &alternative, p, cfg.far, cfg.trials, cfg.seed);
        for row in &mut point_rows {
            row.snr_db = snr;
        }
        rows.extend(point_rows);
    }
    Ok(rows)
}

/// Formats a float with 9 significant digits, `%.9g`-style.
pub fn format_sig9(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    // the exponent is taken after rounding to 9 digits (9.9999999999 -> 1e1)
    let sci = format!("{:.8e}", v);
    let (mantissa, e) = sci.split_once('e').expect("scientific format");
    let exp: i32 = e.parse().expect("exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, v))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub const CONCENTRATION_HEADER: &str = "N,T,x,method,prob,log_prob_over_T,std_err,censored,trials,seed";
pub const DETECTION_HEADER: &str =
    "N,T,snr_db,p,method,gamma,far_target,far_empirical,power,detect_error,std_err,trials,seed";

pub fn write_concentration_csv<W: Write>(rows: &[ConcentrationRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{CONCENTRATION_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.t,
            format_sig9(r.x),
            r.method,
            format_sig9(r.prob),
            format_sig9(r.log_prob_over_t),
            format_sig9(r.std_err),
            r.censored,
            r.trials,
            r.seed
        )?;
    }
    Ok(())
}

pub fn write_detection_csv<W: Write>(rows: &[DetectionRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{DETECTION_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.t,
            format_sig9(r.snr_db),
            format_sig9(r.p),
            r.method,
            format_sig9(r.gamma),
            format_sig9(r.far_target),
            format_sig9(r.far_empirical),
            format_sig9(r.power),
            format_sig9(r.detect_error),
            format_sig9(r.std_err),
            r.trials,
            r.seed
        )?;
    }
    Ok(())
}
