//! Exact and moment oracles computed independently of the library code paths.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use toepwhite::linalg::spectral_norm;
use toepwhite::model::{
    sample_complex_gaussian_matrix, sample_noise, sample_signal, steering_vector, Hypothesis,
    NoiseModel, Scenario, SourceModel,
};
use toepwhite::toeplitz::{unbias_trace_closed_form, unbias_weights};

fn rational(n: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Mean and standard error of the mean.
fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn assert_within_3se(values: &[f64], expected: f64, what: &str) {
    let (mean, se) = mean_se(values);
    assert!(
        (mean - expected).abs() <= 3.0 * se,
        "{what}: mean {mean} vs {expected} (se {se})"
    );
}

#[test]
fn weight_trace_matches_rational_oracle() {
    for t in 1..=64usize {
        let mut trace = BigRational::zero();
        for i in 0..t {
            for j in 0..t {
                let w = rational(t) / rational(t - i.abs_diff(j));
                trace += &w * &w;
            }
        }
        let harmonic: BigRational = (1..t).map(|k| BigRational::new(1.into(), k.into())).sum();
        let closed = rational(t) + rational(2 * t * t) * harmonic;
        assert_eq!(trace, closed, "T = {t}");

        let exact = trace.to_f64().unwrap();
        let numeric = unbias_weights(t).unwrap().trace_of_square();
        assert!((numeric - exact).abs() <= 1e-9 * exact, "T = {t}");
        assert!((unbias_trace_closed_form(t) - exact).abs() <= 1e-9 * exact, "T = {t}");
    }
}

#[test]
fn weight_norm_constant_is_reported() {
    // ||B_T|| <= sqrt(2) T (sqrt(log T) + C) with C unspecified: fit and report it
    let mut fitted = f64::NEG_INFINITY;
    for t in [4usize, 8, 16, 32, 64, 128, 256] {
        let norm = spectral_norm(&unbias_weights(t).unwrap().as_complex()).unwrap();
        let c = norm / (2f64.sqrt() * t as f64) - (t as f64).ln().sqrt();
        println!("T = {t:4}  ||B_T|| = {norm:10.3}  implied C = {c:.4}");
        fitted = fitted.max(c);
    }
    println!("fitted C = {fitted:.4}");
    assert!(fitted.is_finite());
}

#[test]
fn complex_gaussian_moments() {
    let entries: Vec<Complex64> = (0..3)
        .flat_map(|s| sample_complex_gaussian_matrix(1000 + s, 64, 64).iter().copied().collect::<Vec<_>>())
        .collect();
    let n = entries.len() as f64;
    let mean = entries.iter().sum::<Complex64>() / n;
    assert!(mean.norm() <= 4.0 / n.sqrt(), "mean {mean}");

    let power: Vec<f64> = entries.iter().map(|z| z.norm_sqr()).collect();
    assert_within_3se(&power, 1.0, "E|z|^2");

    // |z|^2 ~ Exp(1): variance 1, and the sample variance has variance ~ 8/n
    let (m, _) = mean_se(&power);
    let var = power.iter().map(|p| (p - m).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((var - 1.0).abs() <= 3.0 * (8.0 / n).sqrt(), "Var|z|^2 = {var}");

    for part in [
        entries.iter().map(|z| z.re * z.re).collect::<Vec<_>>(),
        entries.iter().map(|z| z.im * z.im).collect::<Vec<_>>(),
    ] {
        assert_within_3se(&part, 0.5, "component variance");
    }
    // circularity: E z^2 = 0
    let pseudo: Vec<f64> = entries.iter().map(|z| (z * z).re).collect();
    assert_within_3se(&pseudo, 0.0, "Re E z^2");
}

#[test]
fn ar1_noise_lag_moments() {
    let (n, t, a) = (200, 64, 0.6);
    let model = NoiseModel::ar1(a, t).unwrap();
    let mid = t / 2;
    let mut lag0 = Vec::new();
    let mut lag1 = Vec::new();
    let mut lag3 = Vec::new();
    for seed in 0..1000 {
        let v = sample_noise(seed, &model, n, t).unwrap().data;
        let avg = |k: usize| {
            (0..n).map(|r| v[(r, mid + k)] * v[(r, mid)].conj()).sum::<Complex64>() / n as f64
        };
        lag0.push(avg(0).re);
        lag1.push(avg(1).re);
        lag3.push(avg(3).re);
    }
    assert_within_3se(&lag0, 1.0, "r_0");
    assert_within_3se(&lag1, a, "r_1");
    assert_within_3se(&lag3, a.powi(3), "r_3");
}

#[test]
fn steering_vector_values() {
    // 2 pi theta = pi/2 with theta in radians
    let theta_deg = 0.25_f64.to_degrees();
    let h = steering_vector(4, theta_deg, 4.0).unwrap();
    let expected = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, -1.0),
    ];
    for (got, want) in h.iter().zip(expected) {
        assert!((got - want).norm() < 1e-12, "{got} vs {want}");
    }
    assert!((h.norm_squared() - 4.0).abs() < 1e-12);
}

#[test]
fn signal_is_rank_one_with_expected_energy() {
    let (n, t, p) = (20, 40, 1.0);
    let source = SourceModel::steering(n, 10.0, p).unwrap();
    let mut energies = Vec::new();
    for seed in 0..1000 {
        let sig = sample_signal(seed, &source, t).unwrap();
        let sv = sig.clone().svd(false, false).singular_values;
        let fro = sig.norm();
        let mut sv: Vec<f64> = sv.iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        assert!((sv[0] - fro).abs() <= 1e-10 * fro);
        assert!(sv[1] <= 1e-10 * fro);
        energies.push(fro * fro);
    }
    // E ||P||_F^2 = ||h||^2 tr(Gamma) = p T
    assert_within_3se(&energies, p * t as f64, "E||P||_F^2");
}

#[test]
fn observation_energy_under_h1() {
    let (n, t, p) = (20usize, 40usize, 1.0);
    let scenario = Scenario::ar1(n, t, 0.6, 10.0, p).unwrap();
    let energies: Vec<f64> = (0..1000)
        .map(|seed| scenario.observe(Hypothesis::H1, seed).unwrap().data.norm_squared())
        .collect();
    assert_within_3se(&energies, t as f64 * (p + n as f64), "E||Y||_F^2");
}
