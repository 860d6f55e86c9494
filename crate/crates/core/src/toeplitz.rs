//! Hermitian Toeplitz matrices, their spectral symbol and the fixed vectors
//! and weight matrices used by the estimator identities.
//!
//! Convention: a lag sequence `r_k = E[v_{t+k} conj(v_t)]` generates the
//! matrix with entries `[R]_{i,j} = r_{j-i}` and the symbol
//! `Upsilon(lambda) = sum_k r_k exp(-i k lambda)`. With this orientation
//! `E[V^H V] / N = R` for rows `V = W R^{1/2}`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::linalg::{power_iteration_norm, CMatrix, CVector, PowerIteration};

/// Tolerated imaginary part of `r_0`, relative to `sum |r_k|`.
const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Covariance lags `r_0..r_{T-1}`; negative lags follow from `r_{-k} = conj(r_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSequence {
    lags: Vec<Complex64>,
}

impl CovarianceSequence {
    pub fn new(lags: Vec<Complex64>) -> Result<Self> {
        if lags.is_empty() {
            return Err(Error::InvalidParameter(
                "covariance sequence needs at least one lag".into(),
            ));
        }
        if lags.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite covariance lag".into()));
        }
        let scale: f64 = lags.iter().map(|z| z.norm()).sum();
        let residual = lags[0].im.abs();
        if residual > SYMMETRY_TOLERANCE * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::SymmetryViolation { residual });
        }
        if lags[0].re < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "r_0 must be nonnegative, got {}",
                lags[0].re
            )));
        }
        let mut lags = lags;
        lags[0].im = 0.0;
        Ok(Self { lags })
    }

    pub fn from_real(lags: &[f64]) -> Result<Self> {
        Self::new(lags.iter().map(|&r| Complex64::new(r, 0.0)).collect())
    }

    /// White noise of variance `sigma2` over `dim` lags.
    pub fn white(sigma2: f64, dim: usize) -> Result<Self> {
        let mut lags = vec![0.0; dim];
        if let Some(first) = lags.first_mut() {
            *first = sigma2;
        }
        Self::from_real(&lags)
    }

    /// Number of stored lags, i.e. the Toeplitz dimension `T`.
    pub fn len(&self) -> usize {
        self.lags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lags.is_empty()
    }

    pub fn lags(&self) -> &[Complex64] {
        &self.lags
    }

    /// Lag `k` for `|k| < T`, using conjugate symmetry for negative `k`.
    pub fn lag(&self, k: isize) -> Complex64 {
        let idx = k.unsigned_abs();
        if k >= 0 {
            self.lags[idx]
        } else {
            self.lags[idx].conj()
        }
    }

    /// Same lags, truncated to the first `dim` entries.
    pub fn truncated(&self, dim: usize) -> Result<Self> {
        if dim == 0 || dim > self.len() {
            return Err(Error::InvalidParameter(format!(
                "cannot truncate {} lags to {dim}",
                self.len()
            )));
        }
        Ok(Self {
            lags: self.lags[..dim].to_vec(),
        })
    }
}

/// Dense realization of the Toeplitz matrix generated by a lag sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianToeplitzMatrix {
    sequence: CovarianceSequence,
    dense: CMatrix,
}

impl HermitianToeplitzMatrix {
    pub fn dim(&self) -> usize {
        self.sequence.len()
    }

    pub fn sequence(&self) -> &CovarianceSequence {
        &self.sequence
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.dense
    }

    pub fn into_matrix(self) -> CMatrix {
        self.dense
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.dense[(i, j)]
    }
}

/// Entry `(i, j)` is `r_{j-i}`.
pub fn build_toeplitz(sequence: &CovarianceSequence) -> HermitianToeplitzMatrix {
    let t = sequence.len();
    let dense = CMatrix::from_fn(t, t, |i, j| sequence.lag(j as isize - i as isize));
    HermitianToeplitzMatrix {
        sequence: sequence.clone(),
        dense,
    }
}

/// `y = R x` through a circulant embedding of size `2T` (or larger power of two).
pub fn toeplitz_matvec_fft(sequence: &CovarianceSequence, x: &CVector) -> Result<CVector> {
    let t = sequence.len();
    if x.len() != t {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} against Toeplitz dimension {t}",
            x.len()
        )));
    }
    let len = (2 * t).next_power_of_two();
    // first column of the embedding: c_m = R[m, 0] = r_{-m}
    let mut column = vec![Complex64::new(0.0, 0.0); len];
    for m in 0..t {
        column[m] = sequence.lag(-(m as isize));
    }
    for m in 1..t {
        column[len - m] = sequence.lag(m as isize);
    }
    let mut padded = vec![Complex64::new(0.0, 0.0); len];
    padded[..t].copy_from_slice(x.as_slice());

    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    fwd.process(&mut column);
    fwd.process(&mut padded);
    for (p, c) in padded.iter_mut().zip(&column) {
        *p *= c;
    }
    inv.process(&mut padded);
    let scale = 1.0 / len as f64;
    Ok(CVector::from_iterator(
        t,
        padded[..t].iter().map(|z| z * scale),
    ))
}

/// Spectral norm of `R_T` by power iteration on the FFT matvec.
pub fn toeplitz_power_norm(sequence: &CovarianceSequence, settings: PowerIteration) -> f64 {
    power_iteration_norm(
        sequence.len(),
        |x| toeplitz_matvec_fft(sequence, x).expect("dimension checked by construction"),
        settings,
    )
}

/// `Upsilon_T(lambda) = sum_{|k|<T} r_k exp(-i k lambda)`.
///
/// The two-sided sum is accumulated in full and its imaginary residual checked
/// against `1e-12 * sum |r_k|` before being discarded.
pub fn symbol_eval(sequence: &CovarianceSequence, lambda: f64) -> Result<f64> {
    if !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("non-finite angle {lambda}")));
    }
    let t = sequence.len() as isize;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    for k in -(t - 1)..t {
        let r = sequence.lag(k);
        acc += r * Complex64::from_polar(1.0, -(k as f64) * lambda);
        scale += r.norm();
    }
    if acc.im.abs() > SYMMETRY_TOLERANCE * scale.max(f64::MIN_POSITIVE) * t as f64 {
        return Err(Error::SymmetryViolation {
            residual: acc.im.abs(),
        });
    }
    Ok(acc.re)
}

/// Grid size used when none is requested: `max(4T, 4096)`.
pub fn default_grid_size(dim: usize) -> usize {
    (4 * dim).max(4096)
}

/// The symbol of a lag sequence sampled on a uniform angular grid.
#[derive(Debug, Clone)]
pub struct SpectralSymbol {
    sequence: CovarianceSequence,
    grid: Vec<f64>,
    sup_norm: f64,
}

impl SpectralSymbol {
    /// Samples `Upsilon_T` at `2 pi j / grid_size` with one FFT.
    pub fn new(sequence: &CovarianceSequence, grid_size: usize) -> Result<Self> {
        let t = sequence.len();
        if grid_size < 4 * t {
            return Err(Error::InvalidParameter(format!(
                "grid size {grid_size} below 4T = {}",
                4 * t
            )));
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); grid_size];
        buf[0] = sequence.lag(0);
        for k in 1..t {
            buf[k] += sequence.lag(k as isize);
            buf[grid_size - k] += sequence.lag(-(k as isize));
        }
        FftPlanner::new()
            .plan_fft_forward(grid_size)
            .process(&mut buf);
        let grid: Vec<f64> = buf.iter().map(|z| z.re).collect();
        let sup_norm = grid.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        Ok(Self {
            sequence: sequence.clone(),
            grid,
            sup_norm,
        })
    }

    pub fn eval(&self, lambda: f64) -> Result<f64> {
        symbol_eval(&self.sequence, lambda)
    }

    pub fn grid_values(&self) -> &[f64] {
        &self.grid
    }

    pub fn grid_angle(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.grid.len() as f64
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }
}

/// `max_j |Upsilon_T(2 pi j / grid_size)|`.
pub fn symbol_sup_norm(sequence: &CovarianceSequence, grid_size: usize) -> Result<f64> {
    Ok(SpectralSymbol::new(sequence, grid_size)?.sup_norm())
}

/// Unit-norm vector `d_T(lambda)` with entries `exp(-i lambda t) / sqrt(T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierVector {
    pub angle: f64,
    pub entries: CVector,
}

pub fn fourier_vector(dim: usize, lambda: f64) -> Result<FourierVector> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    let scale = 1.0 / (dim as f64).sqrt();
    let entries = CVector::from_fn(dim, |t, _| {
        Complex64::from_polar(scale, -lambda * t as f64)
    });
    Ok(FourierVector {
        angle: lambda,
        entries,
    })
}

impl FourierVector {
    /// The diagonal matrix `D_T(lambda) = diag(d_T(lambda))`.
    pub fn diagonal(&self) -> CMatrix {
        CMatrix::from_diagonal(&self.entries)
    }
}

/// The weight matrix `B_T` with entries `T / (T - |i - j|)`.
///
/// Hadamard multiplication by `B_T` turns biased correlogram sums into
/// unbiased ones.
#[derive(Debug, Clone, PartialEq)]
pub struct UnbiasWeightMatrix {
    pub weights: DMatrix<f64>,
}

pub fn unbias_weights(dim: usize) -> Result<UnbiasWeightMatrix> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be >= 1".into()));
    }
    let t = dim as f64;
    let weights = DMatrix::from_fn(dim, dim, |i, j| t / (t - i.abs_diff(j) as f64));
    Ok(UnbiasWeightMatrix { weights })
}

impl UnbiasWeightMatrix {
    pub fn dim(&self) -> usize {
        self.weights.nrows()
    }

    /// `tr(B^2) = sum_{i,j} B_ij^2` (B is symmetric).
    pub fn trace_of_square(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum()
    }

    pub fn as_complex(&self) -> CMatrix {
        self.weights.map(|w| Complex64::new(w, 0.0))
    }
}

/// `H_m = 1 + 1/2 + ... + 1/m`, with `H_0 = 0`.
pub fn harmonic(m: usize) -> f64 {
    (1..=m).map(|k| 1.0 / k as f64).sum()
}

/// Closed form `tr(B_T^2) = T + 2 T^2 H_{T-1}`.
pub fn unbias_trace_closed_form(dim: usize) -> f64 {
    let t = dim as f64;
    t + 2.0 * t * t * harmonic(dim.saturating_sub(1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ar1(a: f64, t: usize) -> CovarianceSequence {
        CovarianceSequence::from_real(&(0..t).map(|k| a.powi(k as i32)).collect::<Vec<_>>())
            .unwrap()
    }

    #[test]
    fn sequence_validation() {
        assert!(CovarianceSequence::new(vec![]).is_err());
        assert!(CovarianceSequence::from_real(&[-1.0]).is_err());
        assert!(matches!(
            CovarianceSequence::new(vec![c(1.0, 0.5)]),
            Err(Error::SymmetryViolation { .. })
        ));
        let s = CovarianceSequence::new(vec![c(1.0, 0.0), c(0.2, 0.3)]).unwrap();
        assert_eq!(s.lag(-1), c(0.2, -0.3));
    }

    #[test]
    fn toeplitz_scalar_and_ar1() {
        let m = build_toeplitz(&CovarianceSequence::from_real(&[1.0]).unwrap());
        assert_eq!(m.as_matrix(), &CMatrix::identity(1, 1));

        let m = build_toeplitz(&ar1(0.6, 3));
        for i in 0..3usize {
            for j in 0..3 {
                let expected = 0.6_f64.powi(i.abs_diff(j) as i32);
                assert!((m.entry(i, j).re - expected).abs() < 1e-15);
            }
        }
        assert!((m.entry(0, 2).re - 0.36).abs() < 1e-15);
    }

    #[test]
    fn toeplitz_complex_orientation() {
        let s = CovarianceSequence::new(vec![c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        let m = build_toeplitz(&s);
        let expected = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(1.0, 0.0)]);
        assert_eq!(m.as_matrix(), &expected);
        assert_eq!(m.entry(0, 1), m.entry(1, 0).conj());
    }

    #[test]
    fn fft_matvec_matches_dense() {
        let s = CovarianceSequence::new(vec![c(2.0, 0.0), c(0.3, -0.4), c(0.1, 0.2), c(-0.05, 0.0), c(0.0, 0.01)])
            .unwrap();
        let x = CVector::from_fn(5, |i, _| c(i as f64 - 1.5, 0.5 * i as f64));
        let dense = build_toeplitz(&s).as_matrix() * &x;
        let fast = toeplitz_matvec_fft(&s, &x).unwrap();
        assert!((dense - fast).norm() < 1e-13);
    }

    #[test]
    fn symbol_white_and_ar1() {
        let white = CovarianceSequence::from_real(&[1.0]).unwrap();
        for lambda in [0.0, 1.0, 3.0, 6.0] {
            assert!((symbol_eval(&white, lambda).unwrap() - 1.0).abs() < 1e-15);
        }
        let s = ar1(0.6, 512);
        assert!((symbol_eval(&s, 0.0).unwrap() - 4.0).abs() < 1e-10);
        assert!((symbol_eval(&s, PI).unwrap() - 0.25).abs() < 1e-10);
        let closed = |l: f64| (1.0 - 0.36) / (1.0 - 1.2 * l.cos() + 0.36);
        for lambda in [0.3, 1.7, 2.9] {
            assert!((symbol_eval(&s, lambda).unwrap() - closed(lambda)).abs() < 1e-10);
        }
    }

    #[test]
    fn symbol_complex_sequence_is_real_and_oriented() {
        // r_1 = i  =>  Upsilon(l) = 1 + i e^{-il} - i e^{il} = 1 + 2 sin(l)
        let s = CovarianceSequence::new(vec![c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        for lambda in [0.2, 1.0, 4.0] {
            let v = symbol_eval(&s, lambda).unwrap();
            assert!((v - (1.0 + 2.0 * lambda.sin())).abs() < 1e-14);
        }
        assert!(symbol_eval(&s, f64::NAN).is_err());
    }

    #[test]
    fn sup_norm_examples() {
        let white = CovarianceSequence::white(2.5, 8).unwrap();
        assert!((symbol_sup_norm(&white, 4096).unwrap() - 2.5).abs() < 1e-12);
        let s = ar1(0.6, 512);
        let sup = symbol_sup_norm(&s, default_grid_size(512)).unwrap();
        assert!((sup - 4.0).abs() < 1e-3);
        let s = CovarianceSequence::from_real(&[0.0, 1.0]).unwrap();
        assert!((symbol_sup_norm(&s, 4096).unwrap() - 2.0).abs() < 1e-12);
        assert!(symbol_sup_norm(&s, 7).is_err());
    }

    #[test]
    fn grid_matches_pointwise_eval() {
        let s = CovarianceSequence::new(vec![c(1.0, 0.0), c(0.4, 0.2), c(-0.1, 0.3)]).unwrap();
        let sym = SpectralSymbol::new(&s, 64).unwrap();
        for j in [0, 5, 17, 40, 63] {
            let direct = sym.eval(sym.grid_angle(j)).unwrap();
            assert!((direct - sym.grid_values()[j]).abs() < 1e-13);
        }
    }

    #[test]
    fn fourier_vector_examples() {
        let d = fourier_vector(4, 0.0).unwrap();
        assert!(d.entries.iter().all(|z| (*z - c(0.5, 0.0)).norm() < 1e-15));
        let d = fourier_vector(4, PI / 2.0).unwrap();
        let expected = [c(0.5, 0.0), c(0.0, -0.5), c(-0.5, 0.0), c(0.0, 0.5)];
        for (z, e) in d.entries.iter().zip(expected) {
            assert!((z - e).norm() < 1e-15);
        }
        assert!((d.diagonal().trace() - d.entries.sum()).norm() < 1e-15);
        assert!(fourier_vector(0, 1.0).is_err());
    }

    #[test]
    fn unbias_weight_examples() {
        let b = unbias_weights(1).unwrap();
        assert_eq!(b.weights[(0, 0)], 1.0);
        let b = unbias_weights(3).unwrap();
        assert_eq!(b.weights[(0, 1)], 1.5);
        assert_eq!(b.weights[(2, 0)], 3.0);
        assert!((b.trace_of_square() - 30.0).abs() < 1e-12);
        assert!((unbias_trace_closed_form(3) - 30.0).abs() < 1e-12);
        assert!((unbias_weights(2).unwrap().trace_of_square() - 10.0).abs() < 1e-12);
        assert!(unbias_weights(0).is_err());
    }
}
