use super::series::TailSeries;
use super::{inversion, QuadratureConfig, StableIndex};
use crate::error::{Error, Result};

const CELLS: usize = 2000;

/// Quintic Hermite polynomial on one cell, in the local variable t ∈ [0, 1].
#[derive(Debug, Clone, Copy)]
struct Quintic([f64; 6]);

impl Quintic {
    /// From values and first/second derivatives at both ends of a cell of width `h`.
    fn fit(f0: [f64; 3], f1: [f64; 3], h: f64) -> Self {
        let c0 = f0[0];
        let c1 = h * f0[1];
        let c2 = 0.5 * h * h * f0[2];
        let a = f1[0] - (c0 + c1 + c2);
        let b = h * f1[1] - (c1 + 2.0 * c2);
        let c = h * h * f1[2] - 2.0 * c2;
        Quintic([
            c0,
            c1,
            c2,
            10.0 * a - 4.0 * b + 0.5 * c,
            -15.0 * a + 7.0 * b - c,
            6.0 * a - 3.0 * b + 0.5 * c,
        ])
    }

    fn value(&self, t: f64) -> f64 {
        let c = &self.0;
        c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * (c[4] + t * c[5]))))
    }

    /// (p, p', p'') in t.
    fn eval2(&self, t: f64) -> [f64; 3] {
        let c = &self.0;
        let p = self.value(t);
        let d1 = c[1] + t * (2.0 * c[2] + t * (3.0 * c[3] + t * (4.0 * c[4] + t * 5.0 * c[5])));
        let d2 = 2.0 * c[2] + t * (6.0 * c[3] + t * (12.0 * c[4] + t * 20.0 * c[5]));
        [p, d1, d2]
    }
}

/// Tabulated symmetric stable law for one index.
///
/// `log φ_β` and the distribution function are stored as quintic Hermite
/// interpolants on `[0, tail_switch]` built from the inversion integrals
/// (value plus two exact derivatives at every node); beyond `tail_switch`
/// the tail series is evaluated directly. Interpolation error is far below
/// the quadrature tolerance.
#[derive(Debug, Clone)]
pub struct StableLaw {
    beta: StableIndex,
    quad: QuadratureConfig,
    step: f64,
    log_pdf: Vec<Quintic>,
    cdf: Vec<Quintic>,
    tail: TailSeries,
}

impl StableLaw {
    pub fn new(beta: StableIndex, quad: QuadratureConfig) -> Result<Self> {
        quad.validate()?;
        let step = quad.tail_switch / CELLS as f64;
        let mut nodes = Vec::with_capacity(CELLS + 1);
        for i in 0..=CELLS {
            let x = step * i as f64;
            let [p, d1, d2, half] = inversion(x, beta.value(), &quad)?;
            if p <= 0.0 {
                return Err(Error::Quadrature { estimate: p.abs(), nodes: i });
            }
            let g = d1 / p;
            let log = [p.ln(), g, d2 / p - g * g];
            let cdf = [half, p, d1];
            nodes.push((log, cdf));
        }
        let log_pdf = nodes.windows(2).map(|w| Quintic::fit(w[0].0, w[1].0, step)).collect();
        let cdf = nodes.windows(2).map(|w| Quintic::fit(w[0].1, w[1].1, step)).collect();
        Ok(StableLaw { beta, quad, step, log_pdf, cdf, tail: TailSeries::new(beta.value()) })
    }

    pub fn beta(&self) -> StableIndex {
        self.beta
    }

    pub fn quadrature(&self) -> &QuadratureConfig {
        &self.quad
    }

    fn locate(&self, ax: f64) -> (usize, f64) {
        let s = ax / self.step;
        let i = (s as usize).min(CELLS - 1);
        (i, s - i as f64)
    }

    /// `[log φ, (log φ)', (log φ)'']` at `|x|` (first derivative not sign-corrected).
    fn log_derivs(&self, ax: f64) -> [f64; 3] {
        if ax > self.quad.tail_switch {
            let d = self.tail.density(ax);
            let g = d[1] / d[0];
            [d[0].ln(), g, d[2] / d[0] - g * g]
        } else {
            let (i, t) = self.locate(ax);
            let [p, d1, d2] = self.log_pdf[i].eval2(t);
            [p, d1 / self.step, d2 / (self.step * self.step)]
        }
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        let ax = x.abs();
        if ax > self.quad.tail_switch {
            self.tail.density(ax)[0].ln()
        } else {
            let (i, t) = self.locate(ax);
            self.log_pdf[i].value(t)
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.log_pdf(x).exp()
    }

    /// `(log φ(x), g(x))`.
    pub fn log_pdf_and_score(&self, x: f64) -> (f64, f64) {
        let d = self.log_derivs(x.abs());
        (d[0], if x < 0.0 { -d[1] } else { d[1] })
    }

    /// `g_β(x) = (log φ_β)'(x)`.
    pub fn score(&self, x: f64) -> f64 {
        self.log_pdf_and_score(x).1
    }

    /// `(g_β(x), h_β(x))`; `h` is undefined at zero.
    pub fn scores(&self, x: f64) -> Result<(f64, f64)> {
        if x == 0.0 {
            return Err(Error::Domain("h_beta"));
        }
        let ax = x.abs();
        let d = self.log_derivs(ax);
        let h = d[2] - d[1] / ax;
        Ok((x.signum() * d[1], h))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let ax = x.abs();
        let upper_half = if ax > self.quad.tail_switch {
            0.5 - self.tail.survival(ax)
        } else {
            let (i, t) = self.locate(ax);
            self.cdf[i].value(t)
        };
        let p = if x >= 0.0 { 0.5 + upper_half } else { 0.5 - upper_half };
        p.clamp(0.0, 1.0)
    }

    /// Inverse distribution function by safeguarded bisection.
    pub fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return f64::NEG_INFINITY;
        }
        if p >= 1.0 {
            return f64::INFINITY;
        }
        if p < 0.5 {
            return -self.quantile(1.0 - p);
        }
        let mut lo = 0.0;
        let mut hi = 1.0;
        while self.cdf(hi) < p {
            lo = hi;
            hi *= 2.0;
            if hi > 1e300 {
                return hi;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stable::{stable_cdf, stable_pdf, stable_scores};
    use std::f64::consts::PI;

    fn law(beta: f64) -> StableLaw {
        StableLaw::new(StableIndex::new(beta).unwrap(), QuadratureConfig::default()).unwrap()
    }

    #[test]
    fn cauchy_table_matches_closed_forms() {
        let l = law(1.0);
        for x in [0.0, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0, 7.3, 15.0] {
            let pdf = 1.0 / (PI * (1.0 + x * x));
            assert!((l.pdf(x) - pdf).abs() < 1e-12, "pdf {x}");
            let cdf = 0.5 + x.atan() / PI;
            assert!((l.cdf(x) - cdf).abs() < 1e-12, "cdf {x}");
            let g = -2.0 * x / (1.0 + x * x);
            assert!((l.score(x) - g).abs() < 1e-10, "score {x}");
        }
    }

    #[test]
    fn table_agrees_with_direct_quadrature() {
        let q = QuadratureConfig::default();
        for beta in [1.2, 1.5, 1.8] {
            let l = law(beta);
            let bi = StableIndex::new(beta).unwrap();
            for x in [0.0013, 0.3, 1.0, 2.7182, 6.1, 9.999, 12.0] {
                let direct = stable_pdf(x, bi, &q).unwrap();
                assert!((l.pdf(x) / direct - 1.0).abs() < 1e-8, "beta {beta} x {x}");
                assert!((l.cdf(x) - stable_cdf(x, bi, &q).unwrap()).abs() < 1e-10);
                let (g, h) = stable_scores(x, bi, &q).unwrap();
                let (tg, th) = l.scores(x).unwrap();
                assert!((g - tg).abs() < 1e-7 * (1.0 + g.abs()), "g beta {beta} x {x}: {g} {tg}");
                assert!((h - th).abs() < 1e-6 * (1.0 + h.abs()), "h beta {beta} x {x}: {h} {th}");
            }
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        let l = law(1.5);
        for p in [0.01, 0.25, 0.5, 0.9, 0.999] {
            assert!((l.cdf(l.quantile(p)) - p).abs() < 1e-12);
        }
    }

    #[test]
    fn h_is_nonnegative() {
        for beta in [1.0, 1.3, 1.7, 1.95] {
            let l = law(beta);
            for i in 1..400 {
                let x = i as f64 * 0.05;
                let (_, h) = l.scores(x).unwrap();
                assert!(h >= -1e-9, "beta {beta} x {x} h {h}");
            }
        }
    }
}
