//! Online single-source detection: estimate the noise covariance from the
//! observation, whiten, and compare the GLRT statistic
//! `alpha = N ||Y R^-1 Y^H|| / tr(Y R^-1 Y^H)` with a threshold.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::estimators::{estimate_covariance, EstimatorKind};
use crate::linalg::{gram, matmul, CMatrix, HermitianEigen};
use crate::model::{Hypothesis, NoiseModel, Scenario};
use crate::parallel::{try_map_trials, Execution};
use crate::seed::derive_seed;

/// Eigenvalue floor (relative to the largest) applied before inverting `R_hat`.
pub const DEFAULT_FLOOR_RATIO: f64 = 1e-8;

/// How `R_hat` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorMode {
    /// Biased correlogram of the observation itself.
    Biased,
    /// Unbiased correlogram of the observation itself.
    Unbiased,
    /// The true `R_T`.
    Oracle,
    /// `I_T`, i.e. no whitening.
    White,
    /// Biased correlogram of a separate pure-noise block.
    BiasedPn,
    /// Unbiased correlogram of a separate pure-noise block.
    UnbiasedPn,
}

impl EstimatorMode {
    pub const ALL: [EstimatorMode; 6] = [
        EstimatorMode::Biased,
        EstimatorMode::Unbiased,
        EstimatorMode::Oracle,
        EstimatorMode::White,
        EstimatorMode::BiasedPn,
        EstimatorMode::UnbiasedPn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorMode::Biased => "biased",
            EstimatorMode::Unbiased => "unbiased",
            EstimatorMode::Oracle => "oracle",
            EstimatorMode::White => "white",
            EstimatorMode::BiasedPn => "biased-pn",
            EstimatorMode::UnbiasedPn => "unbiased-pn",
        }
    }

    pub fn needs_pure_noise(self) -> bool {
        matches!(self, EstimatorMode::BiasedPn | EstimatorMode::UnbiasedPn)
    }

    fn estimator_kind(self) -> Option<EstimatorKind> {
        match self {
            EstimatorMode::Biased | EstimatorMode::BiasedPn => Some(EstimatorKind::Biased),
            EstimatorMode::Unbiased | EstimatorMode::UnbiasedPn => Some(EstimatorKind::Unbiased),
            EstimatorMode::Oracle | EstimatorMode::White => None,
        }
    }
}

impl fmt::Display for EstimatorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown estimator mode {s:?}")))
    }
}

/// Monte Carlo settings for threshold calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    /// Target false-alarm rate.
    pub rate: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Calibration {
    pub const MIN_TRIALS: usize = 1000;

    pub fn validate(&self) -> Result<()> {
        if !(self.rate > 0.0 && self.rate < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "false-alarm rate must lie in (0, 1), got {}",
                self.rate
            )));
        }
        if self.trials < Self::MIN_TRIALS {
            return Err(Error::InvalidParameter(format!(
                "calibration needs at least {} trials, got {}",
                Self::MIN_TRIALS,
                self.trials
            )));
        }
        if (self.trials as f64) * self.rate < 20.0 {
            return Err(Error::InsufficientTrials {
                trials: self.trials,
                rate: self.rate,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdMode {
    Fixed(f64),
    CalibratedFar(Calibration),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionConfig {
    pub estimator: EstimatorMode,
    pub threshold: ThresholdMode,
    pub floor_ratio: f64,
}

impl DetectionConfig {
    pub fn new(estimator: EstimatorMode, threshold: ThresholdMode) -> Self {
        Self {
            estimator,
            threshold,
            floor_ratio: DEFAULT_FLOOR_RATIO,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionResult {
    pub alpha: f64,
    pub gamma: f64,
    pub decision: Hypothesis,
    /// Whether eigenvalue flooring was needed to invert `R_hat`.
    pub whitening_floored: bool,
    pub estimator: EstimatorMode,
}

/// Value of the GLRT statistic together with the flooring flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlrtStatistic {
    pub alpha: f64,
    pub floored: bool,
}

/// `U Lambda^{-1/2}` for the floored eigendecomposition of `R_hat`.
///
/// `Y R_hat^{-1} Y^H = Z Z^H` with `Z = Y U Lambda^{-1/2}`.
#[derive(Debug, Clone)]
pub struct Whitener {
    half: CMatrix,
    eigen: HermitianEigen,
    pub floored: bool,
}

impl Whitener {
    pub fn new(r_hat: &CMatrix, floor_ratio: f64) -> Result<Self> {
        if r_hat.iter().all(|z| z.norm() == 0.0) {
            return Err(Error::ZeroMatrix);
        }
        let (eigen, floored) = HermitianEigen::new(r_hat)?.floored(floor_ratio)?;
        let mut half = eigen.vectors.clone();
        for (j, &v) in eigen.values.iter().enumerate() {
            half.column_mut(j).scale_mut(1.0 / v.sqrt());
        }
        Ok(Self {
            half,
            eigen,
            floored,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            half: CMatrix::identity(dim, dim),
            eigen: HermitianEigen {
                values: DVector::from_element(dim, 1.0),
                vectors: CMatrix::identity(dim, dim),
            },
            floored: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.half.nrows()
    }

    /// `Y R_hat^{-1/2}` with the Hermitian inverse square root.
    pub fn whiten(&self, y: &CMatrix) -> CMatrix {
        matmul(&matmul(y, &self.half), &self.eigen.vectors.adjoint())
    }

    pub fn statistic(&self, y: &CMatrix) -> Result<GlrtStatistic> {
        if y.ncols() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "observation has T = {}, whitener has dimension {}",
                y.ncols(),
                self.dim()
            )));
        }
        let z = matmul(y, &self.half);
        Ok(GlrtStatistic {
            alpha: gram_ratio(&z)?,
            floored: self.floored,
        })
    }
}

/// `N lambda_max(Z Z^H) / tr(Z Z^H)`.
fn gram_ratio(z: &CMatrix) -> Result<f64> {
    let n = z.nrows();
    if n == 0 || z.ncols() == 0 {
        return Err(Error::EmptyObservation);
    }
    let gram = gram(z);
    let trace: f64 = gram.diagonal().iter().map(|d| d.re).sum();
    if !(trace > 0.0) {
        return Err(Error::DegenerateObservation);
    }
    if n == 1 {
        return Ok(1.0);
    }
    let values = gram.symmetric_eigenvalues();
    let top = values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    Ok(n as f64 * top / trace)
}

/// GLRT statistic of `Y` whitened by `R_hat` (floored as needed).
pub fn glrt_statistic(y: &CMatrix, r_hat: &CMatrix, floor_ratio: f64) -> Result<GlrtStatistic> {
    if y.iter().all(|z| z.norm() == 0.0) && y.nrows() > 0 {
        return Err(Error::DegenerateObservation);
    }
    Whitener::new(r_hat, floor_ratio)?.statistic(y)
}

/// `Y R_hat^{-1/2}`; the flag reports eigenvalue flooring.
pub fn whiten(y: &CMatrix, r_hat: &CMatrix, floor_ratio: f64) -> Result<(CMatrix, bool)> {
    if r_hat.shape() != (y.ncols(), y.ncols()) {
        return Err(Error::DimensionMismatch(format!(
            "R_hat {:?} against T = {}",
            r_hat.shape(),
            y.ncols()
        )));
    }
    let w = Whitener::new(r_hat, floor_ratio)?;
    Ok((w.whiten(y), w.floored))
}

/// `R_hat` for a given mode.
///
/// `oracle` supplies the true covariance; PN modes estimate from `pure_noise`.
pub fn estimate_for_mode(
    y: &CMatrix,
    mode: EstimatorMode,
    oracle: &NoiseModel,
    pure_noise: Option<&CMatrix>,
) -> Result<CMatrix> {
    let t = y.ncols();
    match mode {
        EstimatorMode::Biased | EstimatorMode::Unbiased => {
            let kind = mode.estimator_kind().expect("estimating mode");
            Ok(estimate_covariance(y, kind)?.into_matrix())
        }
        EstimatorMode::Oracle => {
            if oracle.dim() != t {
                return Err(Error::DimensionMismatch(format!(
                    "oracle covariance has dimension {}, observation has T = {t}",
                    oracle.dim()
                )));
            }
            Ok(oracle.matrix().clone())
        }
        EstimatorMode::White => Ok(CMatrix::identity(t, t)),
        EstimatorMode::BiasedPn | EstimatorMode::UnbiasedPn => {
            let pn = pure_noise.ok_or(Error::MissingNoiseBlock(mode.as_str()))?;
            if pn.shape() != y.shape() {
                return Err(Error::DimensionMismatch(format!(
                    "pure-noise block {:?} against observation {:?}",
                    pn.shape(),
                    y.shape()
                )));
            }
            let kind = mode.estimator_kind().expect("estimating mode");
            Ok(estimate_covariance(pn, kind)?.into_matrix())
        }
    }
}

/// H1 iff `alpha >= gamma`.
pub fn decide(alpha: f64, gamma: f64) -> Hypothesis {
    if alpha >= gamma {
        Hypothesis::H1
    } else {
        Hypothesis::H0
    }
}

/// Evaluates the statistic of several modes on simulated trials of one scenario.
///
/// Fixed whiteners (Oracle, White) are factored once up front.
#[derive(Debug, Clone)]
pub struct TrialRunner {
    scenario: Scenario,
    modes: Vec<EstimatorMode>,
    floor_ratio: f64,
    oracle: Option<Whitener>,
}

impl TrialRunner {
    pub fn new(scenario: Scenario, modes: &[EstimatorMode], floor_ratio: f64) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidParameter("at least one estimator mode required".into()));
        }
        let oracle = if modes.contains(&EstimatorMode::Oracle) {
            Some(Whitener::new(scenario.noise.matrix(), floor_ratio)?)
        } else {
            None
        };
        Ok(Self {
            scenario,
            modes: modes.to_vec(),
            floor_ratio,
            oracle,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn modes(&self) -> &[EstimatorMode] {
        &self.modes
    }

    /// Statistic of every mode on `Y` (and the pure-noise block if needed).
    pub fn statistics(&self, y: &CMatrix, pure_noise: Option<&CMatrix>) -> Result<Vec<GlrtStatistic>> {
        if y.iter().all(|z| z.norm() == 0.0) {
            return Err(Error::DegenerateObservation);
        }
        self.modes
            .iter()
            .map(|&mode| match mode {
                EstimatorMode::Oracle => self.oracle.as_ref().expect("built in new").statistic(y),
                EstimatorMode::White => Ok(GlrtStatistic {
                    alpha: gram_ratio(y)?,
                    floored: false,
                }),
                _ => {
                    let r_hat = estimate_for_mode(y, mode, &self.scenario.noise, pure_noise)?;
                    Whitener::new(&r_hat, self.floor_ratio)?.statistic(y)
                }
            })
            .collect()
    }

    /// Simulates one trial under `hypothesis` and returns every mode's alpha.
    pub fn trial(&self, hypothesis: Hypothesis, trial_seed: u64) -> Result<Vec<f64>> {
        let y = self.scenario.observe(hypothesis, trial_seed)?;
        let pn = if self.modes.iter().any(|m| m.needs_pure_noise()) {
            Some(self.scenario.pure_noise(trial_seed)?.data)
        } else {
            None
        };
        Ok(self
            .statistics(&y.data, pn.as_ref())?
            .into_iter()
            .map(|s| s.alpha)
            .collect())
    }

    /// `alpha` per mode (outer) and trial (inner) for `trials` simulations keyed
    /// by `derive_seed(seed, [trial])`.
    pub fn simulate(
        &self,
        hypothesis: Hypothesis,
        trials: usize,
        seed: u64,
        execution: Execution,
    ) -> Result<Vec<Vec<f64>>> {
        let rows = try_map_trials(execution, trials, |i| {
            self.trial(hypothesis, derive_seed(seed, &[i]))
        })?;
        Ok((0..self.modes.len())
            .map(|m| rows.iter().map(|r| r[m]).collect())
            .collect())
    }
}

/// Empirical `(1 - rate)` quantile: the order statistic with exactly
/// `floor(rate * n)` samples strictly above or equal to it when values are distinct.
pub fn empirical_quantile(values: &[f64], rate: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("no samples to take a quantile of".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let above = ((rate * n as f64).floor() as usize).clamp(1, n);
    Ok(sorted[n - above])
}

/// Threshold giving false-alarm rate `calibration.rate` for `mode` under H0,
/// from `calibration.trials` simulations of the full pipeline.
pub fn calibrate_threshold(
    mode: EstimatorMode,
    scenario: &Scenario,
    calibration: &Calibration,
    floor_ratio: f64,
    execution: Execution,
) -> Result<f64> {
    calibration.validate()?;
    let runner = TrialRunner::new(scenario.clone(), &[mode], floor_ratio)?;
    let alphas = runner.simulate(Hypothesis::H0, calibration.trials, calibration.seed, execution)?;
    empirical_quantile(&alphas[0], calibration.rate)
}

/// Full single-shot decision on an observation.
///
/// `scenario` provides the oracle covariance and the H0 model used for
/// calibration; `pure_noise` is required by the PN modes.
pub fn detect(
    y: &CMatrix,
    config: &DetectionConfig,
    scenario: &Scenario,
    pure_noise: Option<&CMatrix>,
    execution: Execution,
) -> Result<DetectionResult> {
    let r_hat = estimate_for_mode(y, config.estimator, &scenario.noise, pure_noise)?;
    let stat = glrt_statistic(y, &r_hat, config.floor_ratio)?;
    let gamma = match config.threshold {
        ThresholdMode::Fixed(g) => {
            if !g.is_finite() {
                return Err(Error::InvalidParameter(format!("threshold must be finite, got {g}")));
            }
            g
        }
        ThresholdMode::CalibratedFar(cal) => {
            calibrate_threshold(config.estimator, scenario, &cal, config.floor_ratio, execution)?
        }
    };
    Ok(DetectionResult {
        alpha: stat.alpha,
        gamma,
        decision: decide(stat.alpha, gamma),
        whitening_floored: stat.floored,
        estimator: config.estimator,
    })
}
