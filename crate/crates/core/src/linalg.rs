//! Dense Hermitian linear algebra on `DMatrix<Complex64>`.
//!
//! Everything here goes through a full Hermitian eigendecomposition. The
//! matrices in this crate are at most a few hundred rows, where that is both
//! fast enough and the most robust route to square roots, inverses and norms.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Eigenvalues below `-PSD_TOLERANCE * max(1, lambda_max)` reject a matrix as
/// not positive semidefinite; anything between that and zero is clamped.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Relative asymmetry (against the Frobenius norm) tolerated by Hermitian inputs.
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;

fn split(m: &CMatrix) -> (DMatrix<f64>, DMatrix<f64>) {
    (m.map(|z| z.re), m.map(|z| z.im))
}

fn join(re: &DMatrix<f64>, im: &DMatrix<f64>) -> CMatrix {
    re.zip_map(im, Complex64::new)
}

/// `A B` through four real products, which use the blocked `f64` kernel.
pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    join(&re, &im)
}

/// `Z Z^H`, Hermitian by construction.
pub fn gram(z: &CMatrix) -> CMatrix {
    let (zr, zi) = split(z);
    let re = &zr * zr.transpose() + &zi * zi.transpose();
    let cross = &zi * zr.transpose();
    let im = &cross - cross.transpose();
    join(&re, &im)
}

/// Largest entry-wise deviation `|m_ij - conj(m_ji)|`.
pub fn hermitian_asymmetry(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for j in 0..n {
        for i in j..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Rejects non-square or visibly non-Hermitian matrices.
pub fn check_hermitian(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let asymmetry = hermitian_asymmetry(m);
    if asymmetry > HERMITIAN_TOLERANCE * m.norm().max(f64::MIN_POSITIVE) {
        return Err(Error::NotHermitian { asymmetry });
    }
    Ok(())
}

/// `(M + M^H) / 2`.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigenpairs of a Hermitian matrix, eigenvalues in ascending order.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: DVector<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(m: &CMatrix) -> Result<Self> {
        check_hermitian(m)?;
        let eig = SymmetricEigen::new(hermitize(m));
        let n = eig.eigenvalues.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
        let mut vectors = CMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Ok(Self { values, vectors })
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// `U f(Lambda) U^H`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (j, &v) in self.values.iter().enumerate() {
            let s = f(v);
            scaled.column_mut(j).scale_mut(s);
        }
        matmul(&scaled, &self.vectors.adjoint())
    }

    /// Raises every eigenvalue below `floor_ratio * max|lambda|` to that floor.
    /// The flag reports whether any eigenvalue was moved.
    pub fn floored(&self, floor_ratio: f64) -> Result<(Self, bool)> {
        check_floor_ratio(floor_ratio)?;
        let scale = self.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        if scale == 0.0 {
            return Err(Error::ZeroMatrix);
        }
        let floor = floor_ratio * scale;
        let mut flagged = false;
        let values = self.values.map(|v| {
            if v < floor {
                flagged = true;
                floor
            } else {
                v
            }
        });
        Ok((
            Self {
                values,
                vectors: self.vectors.clone(),
            },
            flagged,
        ))
    }
}

fn check_floor_ratio(floor_ratio: f64) -> Result<()> {
    if !(floor_ratio > 0.0 && floor_ratio <= 1e-3) {
        return Err(Error::InvalidParameter(format!(
            "floor_ratio must lie in (0, 1e-3], got {floor_ratio}"
        )));
    }
    Ok(())
}

/// Unique Hermitian positive semidefinite square root.
///
/// Slightly negative eigenvalues (rounding) are clamped to zero; clearly
/// negative ones are an error.
pub fn hermitian_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let eig = HermitianEigen::new(m)?;
    let min = eig.min();
    if min < -PSD_TOLERANCE * eig.max().max(1.0) {
        return Err(Error::NotPositiveSemidefinite {
            min_eigenvalue: min,
        });
    }
    Ok(hermitize(&eig.reconstruct_with(|v| v.max(0.0).sqrt())))
}

/// Spectral norm of a Hermitian matrix, i.e. its largest absolute eigenvalue.
pub fn spectral_norm(m: &CMatrix) -> Result<f64> {
    check_hermitian(m)?;
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let values = hermitize(m).symmetric_eigenvalues();
    Ok(values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())))
}

/// Inverse through the eigendecomposition with eigenvalue flooring.
///
/// Returns the inverse and whether flooring was applied.
pub fn regularized_hermitian_inverse(m: &CMatrix, floor_ratio: f64) -> Result<(CMatrix, bool)> {
    check_floor_ratio(floor_ratio)?;
    if m.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return Err(Error::ZeroMatrix);
    }
    let (eig, flagged) = HermitianEigen::new(m)?.floored(floor_ratio)?;
    Ok((hermitize(&eig.reconstruct_with(|v| 1.0 / v)), flagged))
}

/// Settings for [`power_iteration_norm`].
#[derive(Debug, Clone, Copy)]
pub struct PowerIteration {
    pub max_iters: usize,
    pub rel_tol: f64,
    pub seed: u64,
}

impl Default for PowerIteration {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            rel_tol: 1e-14,
            seed: 0x5eed,
        }
    }
}

/// Largest absolute eigenvalue of a Hermitian operator given only its matvec.
///
/// Iterates on `A^2` (two matvecs per step) so that eigenvalues `+l` and `-l`
/// cannot stall the iteration.
pub fn power_iteration_norm(
    dim: usize,
    matvec: impl Fn(&CVector) -> CVector,
    settings: PowerIteration,
) -> f64 {
    if dim == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut x = CVector::from_fn(dim, |_, _| {
        Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
    });
    x.unscale_mut(x.norm());
    let mut estimate = 0.0_f64;
    let mut stable = 0;
    for _ in 0..settings.max_iters {
        let y = matvec(&matvec(&x));
        let norm = y.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = norm.sqrt();
        x = y.unscale(norm);
        if (next - estimate).abs() <= settings.rel_tol * next {
            stable += 1;
            // a few consecutive quiet steps guard against slow drift
            if stable >= 5 {
                return next;
            }
        } else {
            stable = 0;
        }
        estimate = next;
    }
    estimate
}

/// Power-iteration spectral norm of a dense Hermitian matrix.
pub fn power_iteration_dense(m: &CMatrix, settings: PowerIteration) -> f64 {
    power_iteration_norm(m.nrows(), |x| m * x, settings)
}
