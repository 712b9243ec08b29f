//! Dense reference implementations used as oracles by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn sz() -> CMat {
    CMat::from_diagonal(&CVec::from_vec(vec![c(1.0), c(0.0), c(-1.0)]))
}

pub fn sx() -> CMat {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_row_slice(3, 3, &[c(0.0), c(r), c(0.0), c(r), c(0.0), c(r), c(0.0), c(r), c(0.0)])
}

/// `op` acting on `site` of an `n`-site chain; site 0 is the leftmost tensor factor.
pub fn embed(op: &CMat, site: usize, n: usize) -> CMat {
    let mut out = CMat::identity(1, 1);
    for k in 0..n {
        let factor = if k == site { op.clone() } else { CMat::identity(3, 3) };
        out = out.kronecker(&factor);
    }
    out
}

pub fn problem_matrix(n: usize, j: f64, h: f64, d: f64) -> CMat {
    let dim = 3usize.pow(n as u32);
    let mut m = CMat::zeros(dim, dim);
    let z: Vec<CMat> = (0..n).map(|i| embed(&sz(), i, n)).collect();
    for i in 0..n {
        m -= &z[i] * c(h);
        m += &z[i] * &z[i] * c(d);
        if i + 1 < n {
            m -= &z[i] * &z[i + 1] * c(j);
        }
    }
    m
}

pub fn driver_matrix(n: usize) -> CMat {
    let dim = 3usize.pow(n as u32);
    (0..n).fold(CMat::zeros(dim, dim), |acc, i| acc - embed(&sx(), i, n))
}

/// `exp(-i H tau)` through the matrix exponential.
pub fn propagator(h: &CMat, tau: f64) -> CMat {
    (h * Complex64::new(0.0, -tau)).exp()
}

pub fn driver_ground(n: usize) -> CVec {
    let v = CVec::from_vec(vec![c(0.5), c(std::f64::consts::FRAC_1_SQRT_2), c(0.5)]);
    (0..n).fold(CVec::from_element(1, c(1.0)), |acc, _| acc.kronecker(&v))
}

pub fn schedule_f(profile: &str, t: f64) -> f64 {
    match profile {
        "log" => (1.0 + t).ln(),
        "sqrt" => t.sqrt(),
        "linear" => t,
        "quadratic" => t * t,
        _ => panic!("unknown profile {profile}"),
    }
}

/// Midpoint matrix-exponential stepper for `H_P + g(t) H_D` over `[t0, t0 + total]`.
pub fn dense_evolve(hp: &CMat, hd: &CMat, g: impl Fn(f64) -> f64, t0: f64, total: f64, dt: f64) -> CVec {
    let steps = (total / dt).round() as usize;
    let dt = total / steps as f64;
    let n = (hp.nrows() as f64).log(3.0).round() as usize;
    let mut psi = driver_ground(n);
    for k in 0..steps {
        let tm = t0 + (k as f64 + 0.5) * dt;
        let h = hp + hd * c(g(tm));
        psi = propagator(&h, dt) * psi;
    }
    psi
}

/// Probability on the lowest diagonal entries of `hp` (ties within 1e-9).
pub fn ground_weight(hp: &CMat, psi: &CVec) -> f64 {
    let diag: Vec<f64> = (0..hp.nrows()).map(|k| hp[(k, k)].re).collect();
    let e0 = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    (0..diag.len()).filter(|&k| diag[k] - e0 <= 1e-9).map(|k| psi[k].norm_sqr()).sum()
}

pub fn max_diff(a: &[Complex64], b: &CVec) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
