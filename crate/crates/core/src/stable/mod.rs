//! The symmetric β-stable law with characteristic function `exp(-|u|^β)`
//! and the positive β/2-stable law `F_β` that mixes it as a normal
//! variance mixture.
//!
//! The free functions in this module ([`stable_pdf`], [`stable_cdf`],
//! [`stable_score`], [`stable_scores`]) evaluate by direct quadrature of the
//! inversion integral. [`StableLaw`] tabulates the same quantities once per
//! index and is what the likelihood code uses in its inner loops.

mod conditional;
mod fisher;
mod law;
mod sampling;
mod series;

pub use conditional::{ConditionalVarianceSampler, EnvelopeMode};
pub use fisher::{fisher_constants, FisherConstants};
pub use law::StableLaw;
pub use sampling::{
    draw_positive_stable, draw_symmetric_stable, positive_stable_cdf, positive_stable_pdf,
    sample_positive_stable, sample_symmetric_stable,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, Tolerance};

/// Stable index `β ∈ [1, 2)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct StableIndex(f64);

impl StableIndex {
    pub fn new(beta: f64) -> Result<Self> {
        if (1.0..2.0).contains(&beta) {
            Ok(StableIndex(beta))
        } else {
            Err(Error::InvalidArgument(format!("stable index must lie in [1, 2), got {beta}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for StableIndex {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        StableIndex::new(v)
    }
}

impl From<StableIndex> for f64 {
    fn from(b: StableIndex) -> f64 {
        b.0
    }
}

/// Accuracy settings for the inversion integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Above this `|x|` the asymptotic tail series replaces quadrature.
    pub tail_switch: f64,
    pub max_nodes: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { abs_tol: 1e-12, rel_tol: 1e-10, tail_switch: 10.0, max_nodes: 400_000 }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0 && self.tail_switch > 0.0 && self.max_nodes >= 16) {
            return Err(Error::InvalidArgument(format!("invalid quadrature config {self:?}")));
        }
        Ok(())
    }

    fn tolerance(&self) -> Tolerance {
        Tolerance { abs: self.abs_tol, rel: self.rel_tol, max_evals: self.max_nodes }
    }
}

/// Truncation point for `∫ t^k e^{-t^β} ... dt`: smallest `T` with
/// `T^k e^{-T^β}` below the absolute tolerance.
fn truncation(beta: f64, k: f64, tol: f64) -> f64 {
    let target = -(tol * 1e-2).ln();
    let mut t = target.powf(1.0 / beta);
    for _ in 0..8 {
        t = (target + k * t.max(1.0).ln()).powf(1.0 / beta);
    }
    t
}

/// Inversion integrals at `x ≥ 0`:
/// `[φ(x), φ'(x), φ''(x), F(x) - 1/2]`.
pub(crate) fn inversion(x: f64, beta: f64, quad: &QuadratureConfig) -> Result<[f64; 4]> {
    let upper = truncation(beta, 2.0, quad.abs_tol);
    let panels = 4 + (upper * x / std::f64::consts::PI).ceil() as usize;
    let pi = std::f64::consts::PI;
    let r = quad::integrate(
        |t| {
            let damp = (-t.powf(beta)).exp();
            let (s, c) = (t * x).sin_cos();
            let sinc = if x == 0.0 { 0.0 } else { s / t };
            [damp * c, -t * damp * s, -t * t * damp * c, damp * sinc]
        },
        0.0,
        upper,
        panels,
        Tolerance { abs: quad.abs_tol * pi, ..quad.tolerance() },
    )?;
    Ok(r.value.map(|v| v / pi))
}

fn check_finite(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("x must be finite, got {x}")))
    }
}

/// Density `φ_β(x)`.
pub fn stable_pdf(x: f64, beta: StableIndex, quad: &QuadratureConfig) -> Result<f64> {
    check_finite(x)?;
    let ax = x.abs();
    if ax > quad.tail_switch {
        return Ok(series::TailSeries::new(beta.0).density(ax)[0]);
    }
    Ok(inversion(ax, beta.0, quad)?[0])
}

/// Distribution function of the symmetric stable law.
pub fn stable_cdf(x: f64, beta: StableIndex, quad: &QuadratureConfig) -> Result<f64> {
    check_finite(x)?;
    let ax = x.abs();
    let upper_half = if ax > quad.tail_switch {
        0.5 - series::TailSeries::new(beta.0).survival(ax)
    } else {
        inversion(ax, beta.0, quad)?[3]
    };
    let p = if x >= 0.0 { 0.5 + upper_half } else { 0.5 - upper_half };
    Ok(p.clamp(0.0, 1.0))
}

/// Score `g_β(x) = d/dx log φ_β(x)`.
pub fn stable_score(x: f64, beta: StableIndex, quad: &QuadratureConfig) -> Result<f64> {
    check_finite(x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    let ax = x.abs();
    let d = if ax > quad.tail_switch {
        series::TailSeries::new(beta.0).density(ax)
    } else {
        let v = inversion(ax, beta.0, quad)?;
        [v[0], v[1], v[2]]
    };
    Ok(x.signum() * d[1] / d[0])
}

/// `(g_β(x), h_β(x))` with `h_β = (log φ_β)'' - g_β/x`. Undefined at 0.
pub fn stable_scores(x: f64, beta: StableIndex, quad: &QuadratureConfig) -> Result<(f64, f64)> {
    check_finite(x)?;
    if x == 0.0 {
        return Err(Error::Domain("h_beta"));
    }
    let ax = x.abs();
    let d = if ax > quad.tail_switch {
        series::TailSeries::new(beta.0).density(ax)
    } else {
        let v = inversion(ax, beta.0, quad)?;
        [v[0], v[1], v[2]]
    };
    let g = d[1] / d[0];
    let h = d[2] / d[0] - g * g - g / ax;
    Ok((x.signum() * g, h))
}
