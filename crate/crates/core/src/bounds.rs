//! Leading-order exponents of the tail bounds on `||R_hat - R||`, the
//! deterministic bias of the biased symbol, and the Marchenko-Pastur edge.
//!
//! The bounds read `P[||R_hat - R|| > x] <= exp(-T (E + o(1)))`; only `E` is
//! computed here; the finite-`T` corrections are not modeled.

use crate::error::{Error, Result};
use crate::toeplitz::CovarianceSequence;

/// Parameters of a tail-bound evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundQuery {
    /// Deviation level `x`.
    pub x: f64,
    /// Aspect ratio `c = N / T`.
    pub c: f64,
    /// `||Upsilon||_inf`.
    pub sup_norm: f64,
    /// Dimension `T`; only the unbiased exponent uses it.
    pub dim: usize,
}

impl BoundQuery {
    pub fn new(x: f64, c: f64, sup_norm: f64, dim: usize) -> Result<Self> {
        let q = Self { x, c, sup_norm, dim };
        q.validate()?;
        Ok(q)
    }

    fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.x) || !positive(self.c) || !positive(self.sup_norm) || self.dim < 2 {
            return Err(Error::InvalidParameter(format!(
                "bound query needs x, c, sup_norm > 0 and T >= 2, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// `c (x/M - log(1 + x/M))` with `M = ||Upsilon||_inf`.
pub fn biased_exponent(q: &BoundQuery) -> Result<f64> {
    q.validate()?;
    let u = q.x / q.sup_norm;
    Ok(q.c * (u - u.ln_1p()))
}

/// `c x^2 / (4 M^2 log T)`.
pub fn unbiased_exponent(q: &BoundQuery) -> Result<f64> {
    q.validate()?;
    Ok(q.c * q.x * q.x / (4.0 * q.sup_norm * q.sup_norm * (q.dim as f64).ln()))
}

/// `sum_{|k|<T} |k r_k| / T`.
pub fn bias_remainder(sequence: &CovarianceSequence, dim: usize) -> Result<f64> {
    if dim == 0 || dim > sequence.len() {
        return Err(Error::InvalidParameter(format!(
            "T = {dim} outside 1..={}",
            sequence.len()
        )));
    }
    let one_sided: f64 = sequence.lags()[..dim]
        .iter()
        .enumerate()
        .map(|(k, r)| k as f64 * r.norm())
        .sum();
    Ok(2.0 * one_sided / dim as f64)
}

/// Right edge `(1 + sqrt(c))^2` of the Marchenko-Pastur support.
pub fn mp_threshold(c: f64) -> Result<f64> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("aspect ratio must be > 0, got {c}")));
    }
    Ok((1.0 + c.sqrt()).powi(2))
}
