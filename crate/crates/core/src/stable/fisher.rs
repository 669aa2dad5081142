use serde::{Deserialize, Serialize};

use super::{QuadratureConfig, StableIndex, StableLaw};
use crate::error::Result;
use crate::quad::{self, Tolerance};

/// Scalar constants of the quasi-Fisher information matrices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherConstants {
    /// `∫ g_β² φ_β`
    pub c_alpha: f64,
    /// `∫ (1 + y g_β)² φ_β`
    pub c_gamma: f64,
    /// `∫ v^{-1} F_β(dv)`
    pub c_alpha_dag: f64,
    /// Always 2.
    pub c_gamma_dag: f64,
    pub c_alpha_star: f64,
    pub c_gamma_star: f64,
}

/// `2 ∫_0^∞ f(y) dy` for even `f`: quadrature on `[0, L]` plus the tail
/// mapped to `(0, 1]` via `y = L/s`.
pub(crate) fn integrate_even<const K: usize, F>(f: F, law: &StableLaw, tol: Tolerance) -> Result<[f64; K]>
where
    F: Fn(f64) -> [f64; K],
{
    let l = law.quadrature().tail_switch;
    let body = quad::integrate(&f, 0.0, l, 16, tol)?;
    let tail = quad::integrate(
        |s| {
            if s <= 0.0 {
                return [0.0; K];
            }
            let y = l / s;
            f(y).map(|v| v * l / (s * s))
        },
        0.0,
        1.0,
        8,
        tol,
    )?;
    let mut out = [0.0; K];
    for k in 0..K {
        out[k] = 2.0 * (body.value[k] + tail.value[k]);
    }
    Ok(out)
}

pub(crate) const CONSTANT_TOL: Tolerance = Tolerance { abs: 1e-12, rel: 1e-11, max_evals: 200_000 };

impl FisherConstants {
    pub fn from_law(law: &StableLaw) -> Result<Self> {
        let [c_alpha, c_gamma] = integrate_even(
            |y| {
                let (lp, g) = law.log_pdf_and_score(y);
                let p = lp.exp();
                let w = 1.0 + y * g;
                [g * g * p, w * w * p]
            },
            law,
            CONSTANT_TOL,
        )?;
        // E[1/V] = ∫_0^∞ E[e^{-tV}] dt = ∫_0^∞ exp(-(2t)^{β/2}) dt
        let half_beta = 0.5 * law.beta().value();
        let laplace = |t: f64| (-(2.0 * t).powf(half_beta)).exp();
        let body = quad::integrate_scalar(laplace, 0.0, 1.0, 8, CONSTANT_TOL)?;
        let tail = quad::integrate_scalar(
            |s| if s <= 0.0 { 0.0 } else { laplace(1.0 / s) / (s * s) },
            0.0,
            1.0,
            8,
            CONSTANT_TOL,
        )?;
        let c_alpha_dag = body + tail;
        let c_gamma_dag = 2.0;
        Ok(FisherConstants {
            c_alpha,
            c_gamma,
            c_alpha_dag,
            c_gamma_dag,
            c_alpha_star: c_alpha_dag - c_alpha,
            c_gamma_star: c_gamma_dag - c_gamma,
        })
    }
}

/// Builds the tabulated law and integrates the constants.
pub fn fisher_constants(beta: StableIndex, quad: &QuadratureConfig) -> Result<FisherConstants> {
    FisherConstants::from_law(&StableLaw::new(beta, *quad)?)
}
