//! Large-|x| expansion of the symmetric stable density
//!
//! φ_β(x) = (1/π) Σ_{k≥1} (-1)^{k+1} Γ(kβ+1)/k! sin(kπβ/2) x^{-kβ-1},
//!
//! convergent for β = 1 and asymptotic otherwise; summation stops at the
//! smallest term.

use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

const MAX_TERMS: usize = 200;

#[derive(Debug, Clone)]
pub(crate) struct TailSeries {
    beta: f64,
    // signed coefficient of x^{-kβ-1}
    coef: Vec<f64>,
    // |Γ(kβ+1)/k!|/π, used to locate the smallest term
    magnitude: Vec<f64>,
}

impl TailSeries {
    pub fn new(beta: f64) -> Self {
        let mut coef = Vec::with_capacity(MAX_TERMS);
        let mut magnitude = Vec::with_capacity(MAX_TERMS);
        for k in 1..=MAX_TERMS {
            let kf = k as f64;
            let m = (ln_gamma(kf * beta + 1.0) - ln_gamma(kf + 1.0)).exp() / PI;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            coef.push(sign * m * (kf * PI * beta / 2.0).sin());
            magnitude.push(m);
        }
        TailSeries { beta, coef, magnitude }
    }

    fn for_each_term(&self, x: f64, mut f: impl FnMut(usize, f64)) {
        let lx = x.ln();
        let mut prev = f64::INFINITY;
        for k in 0..MAX_TERMS {
            let kb = (k + 1) as f64 * self.beta;
            let size = self.magnitude[k] * (-(kb + 1.0) * lx).exp();
            if size > prev || size < 1e-300 {
                break;
            }
            prev = size;
            f(k, self.coef[k] * (-(kb + 1.0) * lx).exp());
        }
    }

    /// `[φ(x), φ'(x), φ''(x)]` for `x > 0`.
    pub fn density(&self, x: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        self.for_each_term(x, |k, term| {
            let p = (k + 1) as f64 * self.beta + 1.0;
            out[0] += term;
            out[1] -= p * term / x;
            out[2] += p * (p + 1.0) * term / (x * x);
        });
        out
    }

    /// `P(X > x)` for `x > 0`.
    pub fn survival(&self, x: f64) -> f64 {
        let mut s = 0.0;
        self.for_each_term(x, |k, term| {
            let kb = (k + 1) as f64 * self.beta;
            s += term * x / kb;
        });
        s
    }
}
