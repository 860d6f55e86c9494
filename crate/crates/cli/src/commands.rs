use std::fs;
use std::io::Write;
use std::path::Path;

use toepwhite::detector::{
    calibrate_threshold, detect, Calibration, DetectionConfig, EstimatorMode, ThresholdMode,
    DEFAULT_FLOOR_RATIO,
};
use toepwhite::estimators::estimate_lags_fft;
use toepwhite::experiments::{
    format_sig9, run_concentration, run_detection_vs_n, run_power_vs_snr, samples_for,
    write_concentration_csv, write_detection_csv, ConcentrationConfig, DetectionCurveConfig,
    PowerCurveConfig, DEFAULT_THETA_DEG,
};
use toepwhite::io::{load_observation, save_observation};
use toepwhite::model::{ObservationMatrix, Scenario};
use toepwhite::parallel::{with_workers, Execution};
use toepwhite::seed::derive_seed;
use toepwhite::selftest;

use crate::{
    CalibrateArgs, CliError, Command, Common, ConcentrationArgs, DetectArgs, DetectionCurveArgs,
    EstimateArgs, ModelArgs, PowerCurveArgs,
};

const DEFAULT_SEED: u64 = 1;
const SEED_ENV: &str = "TOEPWHITE_SEED";

/// Sub-seed paths for single-shot commands.
const OBSERVATION_PATH: u64 = 0;
const CALIBRATION_PATH: u64 = 1;

pub fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Estimate(args) => estimate(args),
        Command::Detect(args) => detect_cmd(args),
        Command::Calibrate(args) => calibrate(args),
        Command::Concentration(args) => concentration(args),
        Command::DetectionCurve(args) => detection_curve(args),
        Command::PowerCurve(args) => power_curve(args),
        Command::Selftest(args) => selftest_cmd(args),
    }
}

fn resolve_seed(common: &Common) -> Result<u64, CliError> {
    if let Some(seed) = common.seed {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV) {
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| CliError::Validation(format!("{SEED_ENV}={text:?} is not a u64 seed"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn in_pool<R: Send>(common: &Common, f: impl FnOnce() -> Result<R, CliError> + Send) -> Result<R, CliError> {
    with_workers(common.workers, f)?
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, bytes)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn samples(model: &ModelArgs, sensors: usize) -> Result<usize, CliError> {
    match model.t {
        Some(t) => Ok(t),
        None => Ok(samples_for(sensors, model.c)?),
    }
}

fn scenario(model: &ModelArgs, sensors: usize, samples: usize) -> Result<Scenario, CliError> {
    Ok(Scenario::ar1(sensors, samples, model.a, DEFAULT_THETA_DEG, model.p)?)
}

fn load(path: &Path) -> Result<ObservationMatrix, CliError> {
    load_observation(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn estimate(args: EstimateArgs) -> Result<(), CliError> {
    let seed = resolve_seed(&args.common)?;
    let obs = match &args.input {
        Some(path) => load(path)?,
        None => {
            let t = samples(&args.model, args.model.n)?;
            scenario(&args.model, args.model.n, t)?
                .observe(args.hypothesis.into(), derive_seed(seed, &[OBSERVATION_PATH]))?
        }
    };
    if let Some(path) = &args.emit_sample {
        save_observation(path, &obs.data)?;
    }
    let est = estimate_lags_fft(&obs.data, args.estimator)?;
    let mut buf = Vec::new();
    writeln!(buf, "k,re,im")?;
    for (k, r) in est.lags.iter().enumerate() {
        writeln!(buf, "{k},{},{}", format_sig9(r.re), format_sig9(r.im))?;
    }
    emit(args.out.as_deref(), &buf)
}

fn detect_cmd(args: DetectArgs) -> Result<(), CliError> {
    let seed = resolve_seed(&args.common)?;
    let (obs, pure_noise, scn) = match &args.input {
        Some(path) => {
            let obs = load(path)?;
            let pn = args.noise_input.as_deref().map(load).transpose()?;
            let scn = scenario(&args.model, obs.sensors(), obs.samples())?;
            (obs, pn.map(|o| o.data), scn)
        }
        None => {
            let t = samples(&args.model, args.model.n)?;
            let scn = scenario(&args.model, args.model.n, t)?;
            let trial = derive_seed(seed, &[OBSERVATION_PATH]);
            let obs = scn.observe(args.hypothesis.into(), trial)?;
            let pn = if args.estimator.needs_pure_noise() {
                Some(scn.pure_noise(trial)?.data)
            } else {
                None
            };
            (obs, pn, scn)
        }
    };
    let threshold = match args.gamma {
        Some(g) => ThresholdMode::Fixed(g),
        None => ThresholdMode::CalibratedFar(Calibration {
            rate: args.far.unwrap_or(0.05),
            trials: args.calib_trials,
            seed: derive_seed(seed, &[CALIBRATION_PATH]),
        }),
    };
    let config = DetectionConfig::new(args.estimator, threshold);
    let result = in_pool(&args.common, || {
        Ok(detect(&obs.data, &config, &scn, pure_noise.as_ref(), Execution::Parallel)?)
    })?;
    let mut buf = Vec::new();
    writeln!(buf, "estimator = {}", result.estimator)?;
    writeln!(buf, "alpha = {}", format_sig9(result.alpha))?;
    writeln!(buf, "gamma = {}", format_sig9(result.gamma))?;
    writeln!(buf, "decision = {}", result.decision)?;
    if result.whitening_floored {
        writeln!(buf, "whitening_floored = true")?;
    }
    emit(None, &buf)
}

fn calibrate(args: CalibrateArgs) -> Result<(), CliError> {
    let seed = resolve_seed(&args.common)?;
    let t = samples(&args.model, args.model.n)?;
    let scn = scenario(&args.model, args.model.n, t)?;
    let calibration = Calibration {
        rate: args.far,
        trials: args.calib_trials,
        seed: derive_seed(seed, &[CALIBRATION_PATH]),
    };
    let gamma = in_pool(&args.common, || {
        Ok(calibrate_threshold(
            args.estimator,
            &scn,
            &calibration,
            DEFAULT_FLOOR_RATIO,
            Execution::Parallel,
        )?)
    })?;
    let mut buf = Vec::new();
    writeln!(buf, "N,T,method,far,gamma,calib_trials,seed")?;
    writeln!(
        buf,
        "{},{t},{},{},{},{},{seed}",
        args.model.n,
        args.estimator,
        format_sig9(args.far),
        format_sig9(gamma),
        args.calib_trials
    )?;
    emit(args.out.as_deref(), &buf)
}

fn concentration(args: ConcentrationArgs) -> Result<(), CliError> {
    let cfg = ConcentrationConfig {
        a: args.a,
        c: args.c,
        x: args.x,
        n_grid: args.n_grid.0,
        trials: args.trials,
        seed: resolve_seed(&args.common)?,
        execution: Execution::Parallel,
    };
    let rows = in_pool(&args.common, || Ok(run_concentration(&cfg)?))?;
    let mut buf = Vec::new();
    write_concentration_csv(&rows, &mut buf)?;
    emit(args.out.as_deref(), &buf)
}

fn check_modes(modes: &[EstimatorMode]) -> Result<(), CliError> {
    for (i, m) in modes.iter().enumerate() {
        if modes[..i].contains(m) {
            return Err(CliError::Validation(format!("estimator {m} listed twice")));
        }
    }
    Ok(())
}

fn detection_curve(args: DetectionCurveArgs) -> Result<(), CliError> {
    check_modes(&args.estimator.0)?;
    let mut cfg = DetectionCurveConfig::new(args.n_grid.0, resolve_seed(&args.common)?);
    cfg.a = args.a;
    cfg.c = args.c;
    cfg.p = args.p;
    cfg.far = args.far;
    cfg.modes = args.estimator.0;
    cfg.trials = args.trials;
    cfg.calib_trials = args.calib_trials;
    let rows = in_pool(&args.common, || Ok(run_detection_vs_n(&cfg)?))?;
    let mut buf = Vec::new();
    write_detection_csv(&rows, &mut buf)?;
    emit(args.out.as_deref(), &buf)
}

fn power_curve(args: PowerCurveArgs) -> Result<(), CliError> {
    check_modes(&args.estimator.0)?;
    let mut cfg = PowerCurveConfig::new(args.snr_grid.0, resolve_seed(&args.common)?);
    cfg.a = args.a;
    cfg.c = args.c;
    cfg.n = args.n;
    cfg.far = args.far;
    cfg.modes = args.estimator.0;
    cfg.trials = args.trials;
    cfg.calib_trials = args.calib_trials;
    let rows = in_pool(&args.common, || Ok(run_power_vs_snr(&cfg)?))?;
    let mut buf = Vec::new();
    write_detection_csv(&rows, &mut buf)?;
    emit(args.out.as_deref(), &buf)
}

fn selftest_cmd(args: crate::SelftestArgs) -> Result<(), CliError> {
    let report = selftest::run(resolve_seed(&args.common)?)?;
    let mut buf = Vec::new();
    for check in &report.checks {
        let status = if check.passed() { "PASS" } else { "FAIL" };
        writeln!(
            buf,
            "{status} {}: worst {:.3e} (tolerance {:.0e})",
            check.name, check.worst, check.tolerance
        )?;
    }
    emit(None, &buf)?;
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::Runtime("selftest failed".into()))
    }
}
