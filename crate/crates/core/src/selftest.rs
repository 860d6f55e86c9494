//! Runtime verification of the exact identities the estimators rely on.

use std::f64::consts::PI;

use crate::error::Result;
use crate::estimators::{
    estimate_lags_direct, estimate_lags_fft, hadamard_trace_identity, oracle_biased_symbol,
    oracle_unbiased_symbol, EstimatorKind,
};
use crate::linalg::{CMatrix, CVector};
use crate::model::sample_complex_gaussian_matrix;
use crate::seed::derive_seed;
use crate::toeplitz::{symbol_eval, unbias_trace_closed_form, unbias_weights};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    /// Largest relative error observed.
    pub worst: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.worst <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

pub fn run(seed: u64) -> Result<Report> {
    let shapes: Vec<(usize, usize)> = [4, 8, 16]
        .iter()
        .flat_map(|&n| [8, 16, 32].map(|t| (n, t)))
        .collect();
    let angles: Vec<f64> = (0..8).map(|j| 2.0 * PI * j as f64 / 8.0 + 0.1).collect();

    let mut biased_worst = 0.0_f64;
    let mut unbiased_worst = 0.0_f64;
    let mut fft_worst = 0.0_f64;
    for (i, &(n, t)) in shapes.iter().cycle().take(100).enumerate() {
        let y = sample_complex_gaussian_matrix(derive_seed(seed, &[1, i as u64]), n, t);
        let b = estimate_lags_fft(&y, EstimatorKind::Biased)?;
        let u = estimate_lags_fft(&y, EstimatorKind::Unbiased)?;
        let direct = estimate_lags_direct(&y, EstimatorKind::Biased)?;
        let scale = direct.lags[0].norm();
        for (p, q) in direct.lags.iter().zip(&b.lags) {
            fft_worst = fft_worst.max((p - q).norm() / scale);
        }
        if i >= 50 {
            continue;
        }
        for &lambda in &angles {
            biased_worst = biased_worst.max(rel(
                oracle_biased_symbol(&y, lambda)?,
                symbol_eval(&b.to_sequence(), lambda)?,
            ));
            unbiased_worst = unbiased_worst.max(rel(
                oracle_unbiased_symbol(&y, lambda)?,
                symbol_eval(&u.to_sequence(), lambda)?,
            ));
        }
    }

    let mut hadamard_worst = 0.0_f64;
    for i in 0..50 {
        let m = 3 + (i as usize % 8);
        let draw = |k: u64, rows, cols| sample_complex_gaussian_matrix(derive_seed(seed, &[2, i, k]), rows, cols);
        let x: CVector = draw(0, m, 1).column(0).into();
        let yv: CVector = draw(1, m, 1).column(0).into();
        let a: CMatrix = draw(2, m, m);
        let b: CMatrix = draw(3, m, m);
        let (left, right) = hadamard_trace_identity(&x, &yv, &a, &b)?;
        let scale = x.norm() * yv.norm() * a.norm() * b.norm();
        hadamard_worst = hadamard_worst.max((left - right).norm() / scale);
    }

    let mut trace_worst = 0.0_f64;
    for t in 1..=64 {
        let numeric = unbias_weights(t)?.trace_of_square();
        trace_worst = trace_worst.max(rel(numeric, unbias_trace_closed_form(t)));
    }

    Ok(Report {
        checks: vec![
            Check { name: "biased symbol quadratic form", worst: biased_worst, tolerance: 1e-10 },
            Check { name: "unbiased symbol quadratic form", worst: unbiased_worst, tolerance: 1e-10 },
            Check { name: "hadamard trace identity", worst: hadamard_worst, tolerance: 1e-12 },
            Check { name: "fft vs direct lags", worst: fft_worst, tolerance: 1e-10 },
            Check { name: "weight matrix trace identity", worst: trace_worst, tolerance: 1e-9 },
        ],
    })
}
