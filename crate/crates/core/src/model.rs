//! Seeded generation of stationary Gaussian noise blocks, rank-one sources
//! and the composite observation under either hypothesis.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_sqrt, matmul, CMatrix, CVector};
use crate::seed::{derive_seed, NOISE_STREAM, PURE_NOISE_STREAM, SIGNAL_STREAM};
use crate::toeplitz::{build_toeplitz, CovarianceSequence};

/// Lags `r_k = a^|k|` of a unit-variance AR(1) process.
pub fn ar1_sequence(a: f64, dim: usize) -> Result<CovarianceSequence> {
    if !(0.0..1.0).contains(&a) {
        return Err(Error::InvalidParameter(format!(
            "AR(1) coefficient must lie in [0, 1), got {a}"
        )));
    }
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    let lags: Vec<f64> = (0..dim).map(|k| a.powi(k as i32)).collect();
    CovarianceSequence::from_real(&lags)
}

fn standard_complex_normal(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// `rows x cols` matrix of i.i.d. CN(0, 1) entries, filled row by row.
pub fn sample_complex_gaussian_matrix(seed: u64, rows: usize, cols: usize) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<Complex64> = (0..rows * cols)
        .map(|_| standard_complex_normal(&mut rng))
        .collect();
    CMatrix::from_row_slice(rows, cols, &data)
}

fn sample_complex_gaussian_vector(seed: u64, len: usize) -> CVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CVector::from_iterator(len, (0..len).map(|_| standard_complex_normal(&mut rng)))
}

/// Which hypothesis generated an observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    /// Noise only.
    H0,
    /// One source plus noise.
    H1,
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hypothesis::H0 => "H0",
            Hypothesis::H1 => "H1",
        })
    }
}

/// Stationary Gaussian noise `V = W R^{1/2}` with the square-root factor cached.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    covariance: CovarianceSequence,
    matrix: CMatrix,
    factor: Option<CMatrix>,
}

impl NoiseModel {
    pub fn new(covariance: CovarianceSequence) -> Result<Self> {
        let matrix = build_toeplitz(&covariance).into_matrix();
        let dim = covariance.len();
        // R = I needs no mixing, which keeps V == W bit-for-bit
        let factor = if matrix == CMatrix::identity(dim, dim) {
            None
        } else {
            Some(hermitian_sqrt(&matrix)?)
        };
        Ok(Self {
            covariance,
            matrix,
            factor,
        })
    }

    pub fn ar1(a: f64, dim: usize) -> Result<Self> {
        Self::new(ar1_sequence(a, dim)?)
    }

    pub fn dim(&self) -> usize {
        self.covariance.len()
    }

    pub fn covariance(&self) -> &CovarianceSequence {
        &self.covariance
    }

    /// Dense `R_T`.
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Hermitian square root of `R_T`.
    pub fn factor(&self) -> CMatrix {
        self.factor
            .clone()
            .unwrap_or_else(|| CMatrix::identity(self.dim(), self.dim()))
    }

    fn color(&self, white: CMatrix) -> CMatrix {
        match &self.factor {
            Some(f) => matmul(&white, f),
            None => white,
        }
    }
}

/// Complex `N x T` sample block with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMatrix {
    pub data: CMatrix,
    /// Generating hypothesis, unknown for loaded data.
    pub hypothesis: Option<Hypothesis>,
    /// Noise seed, unknown for loaded data.
    pub seed: Option<u64>,
}

impl ObservationMatrix {
    pub fn simulated(data: CMatrix, hypothesis: Hypothesis, seed: u64) -> Self {
        Self {
            data,
            hypothesis: Some(hypothesis),
            seed: Some(seed),
        }
    }

    pub fn from_data(data: CMatrix) -> Self {
        Self {
            data,
            hypothesis: None,
            seed: None,
        }
    }

    /// Number of sensors `N`.
    pub fn sensors(&self) -> usize {
        self.data.nrows()
    }

    /// Number of time samples `T`.
    pub fn samples(&self) -> usize {
        self.data.ncols()
    }

    /// `c = N / T`.
    pub fn aspect_ratio(&self) -> f64 {
        self.sensors() as f64 / self.samples() as f64
    }
}

/// Noise-only observation `V = W R^{1/2}`.
pub fn sample_noise(
    seed: u64,
    model: &NoiseModel,
    sensors: usize,
    samples: usize,
) -> Result<ObservationMatrix> {
    if sensors == 0 || samples == 0 {
        return Err(Error::InvalidParameter("N and T must be >= 1".into()));
    }
    if model.dim() != samples {
        return Err(Error::DimensionMismatch(format!(
            "noise model has dimension {}, observation needs T = {samples}",
            model.dim()
        )));
    }
    let w = sample_complex_gaussian_matrix(seed, sensors, samples);
    Ok(ObservationMatrix::simulated(model.color(w), Hypothesis::H0, seed))
}

/// `h_n = sqrt(p / N) exp(2 pi i theta n)` with `theta` given in degrees and
/// converted to radians, so `|h|^2 = p`.
pub fn steering_vector(sensors: usize, theta_deg: f64, power: f64) -> Result<CVector> {
    if !(power >= 0.0) || !power.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "source power must be finite and >= 0, got {power}"
        )));
    }
    if sensors == 0 {
        return Err(Error::InvalidParameter("N must be >= 1".into()));
    }
    let amplitude = (power / sensors as f64).sqrt();
    let step = 2.0 * PI * theta_deg.to_radians();
    Ok(CVector::from_fn(sensors, |n, _| {
        Complex64::from_polar(amplitude, step * n as f64)
    }))
}

/// Rank-one source `P = h s^H Gamma^{1/2}`.
#[derive(Debug, Clone)]
pub struct SourceModel {
    pub channel: CVector,
    pub power: f64,
    pub angle_deg: f64,
    /// `Gamma^{1/2}`; `None` means `Gamma = I`.
    signal_factor: Option<CMatrix>,
}

impl SourceModel {
    /// Steering-vector channel with white source waveform.
    pub fn steering(sensors: usize, theta_deg: f64, power: f64) -> Result<Self> {
        Ok(Self {
            channel: steering_vector(sensors, theta_deg, power)?,
            power,
            angle_deg: theta_deg,
            signal_factor: None,
        })
    }

    /// Replaces the source covariance `Gamma` (Hermitian PSD, `T x T`).
    pub fn with_signal_covariance(mut self, gamma: &CMatrix) -> Result<Self> {
        self.signal_factor = Some(hermitian_sqrt(gamma)?);
        Ok(self)
    }

    pub fn sensors(&self) -> usize {
        self.channel.len()
    }
}

/// `P = h s^H Gamma^{1/2}` with `s ~ CN(0, I_T)` drawn from `seed`.
pub fn sample_signal(seed: u64, source: &SourceModel, samples: usize) -> Result<CMatrix> {
    if let Some(f) = &source.signal_factor {
        if f.nrows() != samples {
            return Err(Error::DimensionMismatch(format!(
                "signal covariance has dimension {}, need T = {samples}",
                f.nrows()
            )));
        }
    }
    let s = sample_complex_gaussian_vector(seed, samples);
    // s^H Gamma^{1/2} = (Gamma^{1/2} s)^H because the factor is Hermitian
    let row = match &source.signal_factor {
        Some(f) => (f * s).adjoint(),
        None => s.adjoint(),
    };
    Ok(&source.channel * row)
}

/// `Y = V` under H0 and `Y = h s^H + V` under H1, from separate seeds.
pub fn observe(
    hypothesis: Hypothesis,
    noise_seed: u64,
    signal_seed: u64,
    noise: &NoiseModel,
    source: &SourceModel,
    sensors: usize,
    samples: usize,
) -> Result<ObservationMatrix> {
    if source.sensors() != sensors {
        return Err(Error::DimensionMismatch(format!(
            "channel has {} sensors, observation needs N = {sensors}",
            source.sensors()
        )));
    }
    let mut obs = sample_noise(noise_seed, noise, sensors, samples)?;
    if hypothesis == Hypothesis::H1 {
        obs.data += sample_signal(signal_seed, source, samples)?;
        obs.hypothesis = Some(Hypothesis::H1);
    }
    Ok(obs)
}

/// A complete sensing scenario: dimensions, noise and source.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub sensors: usize,
    pub samples: usize,
    pub noise: NoiseModel,
    pub source: SourceModel,
}

impl Scenario {
    pub fn new(sensors: usize, samples: usize, noise: NoiseModel, source: SourceModel) -> Result<Self> {
        if noise.dim() != samples || source.sensors() != sensors {
            return Err(Error::DimensionMismatch(format!(
                "scenario {sensors}x{samples} against noise dim {} and channel length {}",
                noise.dim(),
                source.sensors()
            )));
        }
        Ok(Self {
            sensors,
            samples,
            noise,
            source,
        })
    }

    /// AR(1) noise and a steering-vector source at the given power.
    pub fn ar1(sensors: usize, samples: usize, a: f64, theta_deg: f64, power: f64) -> Result<Self> {
        Self::new(
            sensors,
            samples,
            NoiseModel::ar1(a, samples)?,
            SourceModel::steering(sensors, theta_deg, power)?,
        )
    }

    /// Same scenario with a different source power.
    pub fn with_power(&self, power: f64) -> Result<Self> {
        let mut next = self.clone();
        next.source = SourceModel::steering(self.sensors, self.source.angle_deg, power)?;
        Ok(next)
    }

    /// Observation for one trial; noise and signal use disjoint sub-seeds.
    pub fn observe(&self, hypothesis: Hypothesis, trial_seed: u64) -> Result<ObservationMatrix> {
        observe(
            hypothesis,
            derive_seed(trial_seed, &[NOISE_STREAM]),
            derive_seed(trial_seed, &[SIGNAL_STREAM]),
            &self.noise,
            &self.source,
            self.sensors,
            self.samples,
        )
    }

    /// An independent noise-only block of the same shape.
    pub fn pure_noise(&self, trial_seed: u64) -> Result<ObservationMatrix> {
        sample_noise(
            derive_seed(trial_seed, &[PURE_NOISE_STREAM]),
            &self.noise,
            self.sensors,
            self.samples,
        )
    }
}
