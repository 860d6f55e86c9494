//! Biased and unbiased correlogram estimators of the lag sequence, their
//! Toeplitz assembly, and the quadratic-form identities that tie the
//! estimated symbol back to the sample Gram matrix.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::toeplitz::{
    build_toeplitz, fourier_vector, unbias_weights, CovarianceSequence, HermitianToeplitzMatrix,
};

/// Normalization of the lag-`k` sum: `1/(NT)` or `1/(N(T-|k|))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    Biased,
    Unbiased,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 2] = [EstimatorKind::Biased, EstimatorKind::Unbiased];

    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorKind::Biased => "biased",
            EstimatorKind::Unbiased => "unbiased",
        }
    }

    fn divisor(self, sensors: usize, samples: usize, lag: usize) -> f64 {
        match self {
            EstimatorKind::Biased => (sensors * samples) as f64,
            EstimatorKind::Unbiased => (sensors * (samples - lag)) as f64,
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "biased" => Ok(EstimatorKind::Biased),
            "unbiased" => Ok(EstimatorKind::Unbiased),
            other => Err(Error::InvalidParameter(format!("unknown estimator kind {other:?}"))),
        }
    }
}

/// Estimated lags `r_0..r_{T-1}` tagged with kind and the `(N, T)` they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct AutocovarianceEstimate {
    pub lags: Vec<Complex64>,
    pub kind: EstimatorKind,
    pub sensors: usize,
    pub samples: usize,
}

impl AutocovarianceEstimate {
    /// Lag `k` for `|k| < T`.
    pub fn lag(&self, k: isize) -> Complex64 {
        let z = self.lags[k.unsigned_abs()];
        if k >= 0 {
            z
        } else {
            z.conj()
        }
    }

    pub fn to_sequence(&self) -> CovarianceSequence {
        CovarianceSequence::new(self.lags.clone())
            .expect("estimated lag 0 is real and nonnegative by construction")
    }

    pub fn to_toeplitz(&self) -> HermitianToeplitzMatrix {
        build_toeplitz(&self.to_sequence())
    }

    /// Re-normalizes to the other estimator kind (`r^u_k = r^b_k T / (T - |k|)`).
    pub fn rescaled(&self, kind: EstimatorKind) -> Self {
        let lags = self
            .lags
            .iter()
            .enumerate()
            .map(|(k, z)| {
                let raw = z * self.kind.divisor(self.sensors, self.samples, k);
                raw / kind.divisor(self.sensors, self.samples, k)
            })
            .collect();
        Self {
            lags,
            kind,
            ..self.clone()
        }
    }
}

/// Recursive pairwise summation; fixed association order for a given length.
fn pairwise_sum(values: &[Complex64]) -> Complex64 {
    const BLOCK: usize = 16;
    if values.len() <= BLOCK {
        values.iter().fold(Complex64::new(0.0, 0.0), |acc, v| acc + v)
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

fn check_nonempty(y: &CMatrix) -> Result<()> {
    if y.nrows() == 0 || y.ncols() == 0 {
        return Err(Error::EmptyObservation);
    }
    Ok(())
}

fn finish(raw: Vec<Complex64>, kind: EstimatorKind, sensors: usize, samples: usize) -> AutocovarianceEstimate {
    let mut lags: Vec<Complex64> = raw
        .into_iter()
        .enumerate()
        .map(|(k, z)| z / kind.divisor(sensors, samples, k))
        .collect();
    // lag 0 is a sum of squared moduli
    lags[0].im = 0.0;
    AutocovarianceEstimate {
        lags,
        kind,
        sensors,
        samples,
    }
}

/// Direct evaluation of `sum_{n,t} y_{n,t+k} conj(y_{n,t})` for every lag.
/// `O(N T^2)`.
pub fn estimate_lags_direct(y: &CMatrix, kind: EstimatorKind) -> Result<AutocovarianceEstimate> {
    check_nonempty(y)?;
    let (n, t) = y.shape();
    let mut products = Vec::with_capacity(n * t);
    let raw = (0..t)
        .map(|k| {
            products.clear();
            for row in 0..n {
                for s in 0..t - k {
                    products.push(y[(row, s + k)] * y[(row, s)].conj());
                }
            }
            pairwise_sum(&products)
        })
        .collect();
    Ok(finish(raw, kind, n, t))
}

/// Same lags through zero-padded FFT autocorrelation of each row.
/// `O(N T log T)`.
pub fn estimate_lags_fft(y: &CMatrix, kind: EstimatorKind) -> Result<AutocovarianceEstimate> {
    check_nonempty(y)?;
    let (n, t) = y.shape();
    // length >= 2T - 1 makes the circular correlation linear
    let len = (2 * t).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let mut acc = vec![Complex64::new(0.0, 0.0); len];
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for row in 0..n {
        buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for s in 0..t {
            buf[s] = y[(row, s)];
        }
        fwd.process(&mut buf);
        for (a, z) in acc.iter_mut().zip(&buf) {
            *a += z.norm_sqr();
        }
    }
    inv.process(&mut acc);
    let scale = 1.0 / len as f64;
    let raw = acc[..t].iter().map(|z| z * scale).collect();
    Ok(finish(raw, kind, n, t))
}

/// Toeplitz assembly of the (FFT-path) lag estimate.
pub fn estimate_covariance(y: &CMatrix, kind: EstimatorKind) -> Result<HermitianToeplitzMatrix> {
    Ok(estimate_lags_fft(y, kind)?.to_toeplitz())
}

fn sample_gram(y: &CMatrix) -> CMatrix {
    (y.adjoint() * y).unscale(y.nrows() as f64)
}

/// `d^H (G o W) d` for the sample Gram matrix `G = Y^H Y / N` and weights `W`.
pub fn weighted_gram_symbol(y: &CMatrix, lambda: f64, weights: &DMatrix<f64>) -> Result<f64> {
    check_nonempty(y)?;
    let t = y.ncols();
    if weights.shape() != (t, t) {
        return Err(Error::DimensionMismatch(format!(
            "weights {:?} against T = {t}",
            weights.shape()
        )));
    }
    let d = fourier_vector(t, lambda)?.entries;
    let gram = sample_gram(y);
    let weighted = gram.zip_map(weights, |g, w| g * w);
    Ok((d.adjoint() * weighted * &d)[(0, 0)].re)
}

/// `d_T(lambda)^H (Y^H Y / N) d_T(lambda)`, which equals the symbol of the
/// biased lag estimate at `lambda`.
pub fn oracle_biased_symbol(y: &CMatrix, lambda: f64) -> Result<f64> {
    check_nonempty(y)?;
    let t = y.ncols();
    weighted_gram_symbol(y, lambda, &DMatrix::from_element(t, t, 1.0))
}

/// `d_T(lambda)^H ((Y^H Y / N) o B_T) d_T(lambda)`, which equals the symbol of
/// the unbiased lag estimate at `lambda`.
pub fn oracle_unbiased_symbol(y: &CMatrix, lambda: f64) -> Result<f64> {
    check_nonempty(y)?;
    weighted_gram_symbol(y, lambda, &unbias_weights(y.ncols())?.weights)
}

/// Both sides of `x^H (A o B) y = tr(D_x^H A D_y B^T)`.
pub fn hadamard_trace_identity(
    x: &CVector,
    y: &CVector,
    a: &CMatrix,
    b: &CMatrix,
) -> Result<(Complex64, Complex64)> {
    let m = x.len();
    if y.len() != m || a.shape() != (m, m) || b.shape() != (m, m) {
        return Err(Error::DimensionMismatch(format!(
            "x: {}, y: {}, A: {:?}, B: {:?}",
            m,
            y.len(),
            a.shape(),
            b.shape()
        )));
    }
    let hadamard = a.component_mul(b);
    let left = (x.adjoint() * hadamard * y)[(0, 0)];
    let dx = CMatrix::from_diagonal(x);
    let dy = CMatrix::from_diagonal(y);
    let right = (dx.adjoint() * a * dy * b.transpose()).trace();
    Ok((left, right))
}
