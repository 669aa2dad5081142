//! Exact samplers for the symmetric stable law and for `F_β`, plus the
//! density and distribution function of `F_β` (used by the grid sampler).

use rand::Rng;
use std::f64::consts::PI;

use super::StableIndex;
use crate::quad::{self, Tolerance};

/// Uniform on the open interval (0, 1).
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// One draw with characteristic function `exp(-|u|^β)`
/// (Chambers–Mallows–Stuck, symmetric case).
pub fn draw_symmetric_stable<R: Rng + ?Sized>(beta: StableIndex, rng: &mut R) -> f64 {
    let b = beta.value();
    let u = PI * (open_unit(rng) - 0.5);
    if b == 1.0 {
        return u.tan();
    }
    let e = -open_unit(rng).ln();
    let cu = u.cos();
    (b * u).sin() / cu.powf(1.0 / b) * (((1.0 - b) * u).cos() / e).powf((1.0 - b) / b)
}

pub fn sample_symmetric_stable<R: Rng + ?Sized>(beta: StableIndex, n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| draw_symmetric_stable(beta, rng)).collect()
}

/// Kanter's function for a one-sided stable law of index `a ∈ (0, 1)`.
fn kanter(a: f64, phi: f64) -> f64 {
    let num = (a * phi).sin().powf(a / (1.0 - a)) * ((1.0 - a) * phi).sin();
    num / phi.sin().powf(1.0 / (1.0 - a))
}

/// One draw from `F_β`: twice a one-sided stable variable of index β/2 with
/// Laplace transform `exp(-t^{β/2})`, so that `E exp(-tV) = exp(-(2t)^{β/2})`.
pub fn draw_positive_stable<R: Rng + ?Sized>(beta: StableIndex, rng: &mut R) -> f64 {
    let a = 0.5 * beta.value();
    let u = PI * open_unit(rng);
    let e = -open_unit(rng).ln();
    2.0 * (kanter(a, u) / e).powf((1.0 - a) / a)
}

pub fn sample_positive_stable<R: Rng + ?Sized>(beta: StableIndex, n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| draw_positive_stable(beta, rng)).collect()
}

const ZOLOTAREV_TOL: Tolerance = Tolerance { abs: 1e-14, rel: 1e-9, max_evals: 20_000 };

/// Density of `F_β` at `v > 0` (Zolotarev's integral representation).
pub fn positive_stable_pdf(v: f64, beta: StableIndex) -> f64 {
    if v <= 0.0 {
        return 0.0;
    }
    let a = 0.5 * beta.value();
    let s = 0.5 * v;
    let z = s.powf(-a / (1.0 - a));
    let integral = quad::integrate_scalar(
        |phi| {
            let k = kanter(a, phi);
            k * (-k * z).exp()
        },
        0.0,
        PI,
        8,
        ZOLOTAREV_TOL,
    )
    .unwrap_or(0.0);
    // density of S at s, then the change of variables v = 2s
    let fs = a / (1.0 - a) * s.powf(-1.0 / (1.0 - a)) * integral / PI;
    0.5 * fs
}

/// Distribution function of `F_β`.
pub fn positive_stable_cdf(v: f64, beta: StableIndex) -> f64 {
    if v <= 0.0 {
        return 0.0;
    }
    let a = 0.5 * beta.value();
    let z = (0.5 * v).powf(-a / (1.0 - a));
    quad::integrate_scalar(|phi| (-kanter(a, phi) * z).exp(), 0.0, PI, 8, ZOLOTAREV_TOL).unwrap_or(0.0) / PI
}
