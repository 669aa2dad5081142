use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sampling::{draw_positive_stable, positive_stable_cdf, positive_stable_pdf};
use super::StableIndex;
use crate::error::{Error, Result};

/// Rejection envelope used by [`ConditionalVarianceSampler`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EnvelopeMode {
    /// `sup_v v^{-1/2} e^{-x²/2v} = |x|^{-1} e^{-1/2}`, exact.
    #[default]
    ExactBound,
    /// `|x|^{-1/2} e^{-|x|/2}` with the ratio clamped at one. Biased for |x| > 1.
    PaperBound,
}

/// Sampler for `F_β(dv | x) ∝ v^{-1/2} exp(-x²/2v) F_β(dv)`.
///
/// Rejection from `F_β` proposals for `|x| ≥ small_x_threshold`; below the
/// threshold the acceptance rate of the envelope vanishes, so draws come
/// from an inverse-CDF table of `F_β(dv | 0)` on a log-spaced grid followed
/// by an accept step with probability `exp(-x²/2v)`.
#[derive(Debug, Clone)]
pub struct ConditionalVarianceSampler {
    beta: StableIndex,
    small_x_threshold: f64,
    max_rejections: usize,
    mode: EnvelopeMode,
    log_grid: Vec<f64>,
    cumulative: Vec<f64>,
}

impl ConditionalVarianceSampler {
    pub const DEFAULT_THRESHOLD: f64 = 1e-3;
    pub const DEFAULT_GRID: usize = 2048;
    pub const DEFAULT_MAX_REJECTIONS: usize = 1_000_000;

    pub fn new(beta: StableIndex) -> Self {
        Self::with_options(
            beta,
            Self::DEFAULT_THRESHOLD,
            Self::DEFAULT_GRID,
            Self::DEFAULT_MAX_REJECTIONS,
            EnvelopeMode::ExactBound,
        )
        .expect("defaults are valid")
    }

    pub fn with_options(
        beta: StableIndex,
        small_x_threshold: f64,
        grid_size: usize,
        max_rejections: usize,
        mode: EnvelopeMode,
    ) -> Result<Self> {
        if !(small_x_threshold > 0.0) || grid_size < 256 || max_rejections < 1 {
            return Err(Error::InvalidArgument(format!(
                "conditional sampler needs threshold > 0, grid >= 256, max_rejections >= 1 \
                 (got {small_x_threshold}, {grid_size}, {max_rejections})"
            )));
        }
        let (lo, hi) = quantile_span(beta, 1e-8);
        let (llo, lhi) = (lo.ln(), hi.ln());
        let step = (lhi - llo) / (grid_size - 1) as f64;
        let log_grid: Vec<f64> = (0..grid_size).map(|i| llo + step * i as f64).collect();
        // density of F_β(dv|0) per unit of log v: v^{1/2} f_β(v)
        let weight: Vec<f64> =
            log_grid.iter().map(|&lv| (0.5 * lv).exp() * positive_stable_pdf(lv.exp(), beta)).collect();
        let mut cumulative = Vec::with_capacity(grid_size);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in weight.windows(2) {
            acc += 0.5 * (w[0] + w[1]) * step;
            cumulative.push(acc);
        }
        for c in cumulative.iter_mut() {
            *c /= acc;
        }
        Ok(ConditionalVarianceSampler { beta, small_x_threshold, max_rejections, mode, log_grid, cumulative })
    }

    pub fn beta(&self) -> StableIndex {
        self.beta
    }

    pub fn mode(&self) -> EnvelopeMode {
        self.mode
    }

    pub fn small_x_threshold(&self) -> f64 {
        self.small_x_threshold
    }

    /// Acceptance probability of proposal `v` at `x` under the configured envelope.
    pub fn acceptance_probability(&self, x: f64, v: f64) -> f64 {
        let ax = x.abs();
        let x2 = x * x;
        match self.mode {
            // |x| v^{-1/2} exp(1/2 - x²/2v)
            EnvelopeMode::ExactBound => (ax.ln() - 0.5 * v.ln() + 0.5 - 0.5 * x2 / v).exp(),
            EnvelopeMode::PaperBound => {
                (0.5 * ax.ln() - 0.5 * v.ln() + 0.5 * ax - 0.5 * x2 / v).exp().min(1.0)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::InvalidArgument(format!("conditional variance at non-finite x = {x}")));
        }
        if x.abs() < self.small_x_threshold {
            return self.sample_grid(x, rng);
        }
        for _ in 0..self.max_rejections {
            let v = draw_positive_stable(self.beta, rng);
            let u: f64 = rng.random();
            if u < self.acceptance_probability(x, v) {
                return Ok(v);
            }
        }
        Err(Error::SamplerStall { x, attempts: self.max_rejections })
    }

    fn sample_grid<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> Result<f64> {
        let x2 = x * x;
        for _ in 0..self.max_rejections {
            let v = self.grid_draw(rng.random());
            if x2 == 0.0 || rng.random::<f64>() < (-0.5 * x2 / v).exp() {
                return Ok(v);
            }
        }
        Err(Error::SamplerStall { x, attempts: self.max_rejections })
    }

    fn grid_draw(&self, u: f64) -> f64 {
        let c = &self.cumulative;
        let i = c.partition_point(|&p| p <= u).clamp(1, c.len() - 1);
        let (c0, c1) = (c[i - 1], c[i]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        (self.log_grid[i - 1] + t * (self.log_grid[i] - self.log_grid[i - 1])).exp()
    }
}

/// `(q(p), q(1-p))` of `F_β`, found by bisection on log v.
fn quantile_span(beta: StableIndex, p: f64) -> (f64, f64) {
    let solve = |target: f64| {
        let (mut lo, mut hi) = (-60.0f64, 80.0f64);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if positive_stable_cdf(mid.exp(), beta) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (0.5 * (lo + hi)).exp()
    };
    (solve(p), solve(1.0 - p))
}
