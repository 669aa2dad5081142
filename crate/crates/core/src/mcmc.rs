//! Metropolis-within-Gibbs over the latent-variance augmentation, and the
//! correlated pseudo-marginal variant.
//!
//! Given `θ`, the variances `V_n` are conditionally independent with law
//! `F_β(dv | ε_n(θ))`; given `V`, the complete quasi-likelihood is Gaussian
//! in the residuals. Each iteration refreshes `V` and then makes one
//! random-walk move on `θ`, scaled by the inverse rate matrix so that the
//! acceptance rate does not collapse as `N` grows.
//!
//! All randomness is derived from `MCMCConfig::seed`: the proposal at
//! iteration `m` uses stream `(seed, PROPOSAL, m)` and the variance draw for
//! observation `n` uses `(seed, VARIANCE, m, n)`, so a chain is reproducible
//! bit for bit.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{ModelSpec, ThetaVector};
use crate::quasi::{complete_ratio, pairwise_sum, rate_diagonal, Fitted, PathData, QuasiLikelihood};
use crate::rng::{self, purpose};
use crate::simulate::ObservationSet;
use crate::stable::{draw_positive_stable, ConditionalVarianceSampler, EnvelopeMode, StableIndex};

/// Prior for one coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PriorKind {
    Normal { mean: f64, sd: f64 },
    /// Uniform on the parameter's interval.
    Uniform,
}

/// Independent priors, one per coordinate of `[α, γ]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub components: Vec<PriorKind>,
}

impl PriorSpec {
    pub fn standard_normal(p: usize) -> Self {
        PriorSpec { components: vec![PriorKind::Normal { mean: 0.0, sd: 1.0 }; p] }
    }

    pub fn uniform(p: usize) -> Self {
        PriorSpec { components: vec![PriorKind::Uniform; p] }
    }

    pub fn validate(&self, model: &ModelSpec) -> Result<()> {
        if self.components.len() != model.dim() {
            return Err(Error::InvalidArgument(format!(
                "prior has {} components for {} parameters",
                self.components.len(),
                model.dim()
            )));
        }
        for (k, p) in self.components.iter().enumerate() {
            if let PriorKind::Normal { mean, sd } = p {
                if !(mean.is_finite() && *sd > 0.0 && sd.is_finite()) {
                    return Err(Error::InvalidArgument(format!("prior {k}: need finite mean and sd > 0")));
                }
            }
        }
        Ok(())
    }

    /// Log density up to an additive constant; `-inf` outside the box.
    pub fn log_density(&self, model: &ModelSpec, theta: &[f64]) -> f64 {
        if !model.contains(theta) {
            return f64::NEG_INFINITY;
        }
        self.components
            .iter()
            .zip(model.params())
            .zip(theta)
            .map(|((kind, spec), &x)| match *kind {
                PriorKind::Normal { mean, sd } => -0.5 * ((x - mean) / sd).powi(2) - sd.ln(),
                PriorKind::Uniform => -(spec.upper - spec.lower).ln(),
            })
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Metropolis-within-Gibbs.
    #[default]
    Mwg,
    /// Correlated pseudo-marginal.
    Cpm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCMCConfig {
    /// Chain length `M`, including the initial state.
    pub iterations: usize,
    pub proposal_cov: Matrix,
    pub seed: u64,
    pub variant: Variant,
    pub rho: Option<f64>,
    /// Keep every variance vector in the trace (memory `M × N`).
    pub record_variances: bool,
    /// Multiply proposal increments by `D_N^{-1}`. Turning this off gives
    /// the naive random walk, useful only as a contrast.
    pub scale_by_rate: bool,
    pub envelope: EnvelopeMode,
}

impl MCMCConfig {
    /// `Σ = (2.38² / p) I`.
    pub fn default_cov(p: usize) -> Matrix {
        Matrix::identity(p).scale(2.38 * 2.38 / p as f64)
    }

    pub fn new(iterations: usize, p: usize, seed: u64) -> Self {
        MCMCConfig {
            iterations,
            proposal_cov: Self::default_cov(p),
            seed,
            variant: Variant::Mwg,
            rho: None,
            record_variances: false,
            scale_by_rate: true,
            envelope: EnvelopeMode::ExactBound,
        }
    }

    pub fn cpm(iterations: usize, p: usize, seed: u64, rho: f64) -> Self {
        MCMCConfig { variant: Variant::Cpm, rho: Some(rho), ..Self::new(iterations, p, seed) }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        let mut problems = Vec::new();
        if self.iterations < 2 {
            problems.push(format!("iterations must be at least 2, got {}", self.iterations));
        }
        if self.proposal_cov.dim() != p {
            problems.push(format!("proposal covariance is {0}×{0}, expected {p}×{p}", self.proposal_cov.dim()));
        } else if !self.proposal_cov.is_symmetric(1e-12) || self.proposal_cov.cholesky().is_err() {
            problems.push("proposal covariance must be symmetric positive definite".into());
        }
        match (self.variant, self.rho) {
            (Variant::Cpm, None) => problems.push("variant cpm requires rho".into()),
            (Variant::Cpm, Some(r)) if !(0.0..=1.0).contains(&r) => {
                problems.push(format!("rho must lie in [0, 1], got {r}"))
            }
            _ => {}
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }
}

/// Current `(θ, V)` and the cached complete log-density
/// `Σ [−log c_n − ½ log V_n − ½ ε_n² / V_n]`.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub theta: Vec<f64>,
    pub v: Vec<f64>,
    pub log_complete: f64,
    fit: Fitted,
}

impl ChainState {
    pub fn theta_vector(&self, p_alpha: usize) -> ThetaVector {
        ThetaVector::from_flat(&self.theta, p_alpha)
    }

    pub fn residuals(&self) -> &[f64] {
        &self.fit.eps
    }
}

fn log_complete(fit: &Fitted, v: &[f64]) -> f64 {
    let terms: Vec<f64> = fit
        .eps
        .iter()
        .zip(&fit.scale)
        .zip(v)
        .map(|((e, c), v)| -c.ln() - 0.5 * v.ln() - 0.5 * e * e / v)
        .collect();
    pairwise_sum(&terms)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainTrace {
    pub param_names: Vec<String>,
    /// `M × p`, row 0 is the initial value.
    pub thetas: Vec<Vec<f64>>,
    pub accept_flags: Vec<bool>,
    pub acceptance_rate: f64,
    pub seed: u64,
    pub config: MCMCConfig,
    /// Per-draw `(1/N) Σ a(X_{(n−1)h}, α)`.
    pub drift_average: Vec<f64>,
    /// Per-draw `(1/N) Σ c(X_{(n−1)h}, γ)`.
    pub scale_average: Vec<f64>,
    /// Posterior mean of each `ε_n(θ)` over the chain.
    pub residual_means: Vec<f64>,
    pub variances: Option<Vec<Vec<f64>>>,
}

impl ChainTrace {
    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.thetas.iter().map(|r| r[k]).collect()
    }

    /// Posterior mean and standard deviation of each coordinate over the
    /// rows from `burn_in` on.
    pub fn moments(&self, burn_in: usize) -> (Vec<f64>, Vec<f64>) {
        let rows = &self.thetas[burn_in.min(self.thetas.len().saturating_sub(1))..];
        let p = self.param_names.len();
        let m = rows.len() as f64;
        let mean: Vec<f64> = (0..p).map(|k| rows.iter().map(|r| r[k]).sum::<f64>() / m).collect();
        let sd = (0..p)
            .map(|k| {
                let ss: f64 = rows.iter().map(|r| (r[k] - mean[k]).powi(2)).sum();
                (ss / (m - 1.0).max(1.0)).sqrt()
            })
            .collect();
        (mean, sd)
    }
}

/// Draw `V_n ~ F_β(dv | ε_n(θ))` for every observation from one stream.
pub fn gibbs_refresh_variances<R: Rng + ?Sized>(
    model: &ModelSpec,
    theta: &ThetaVector,
    obs: &ObservationSet,
    beta: StableIndex,
    sampler: &ConditionalVarianceSampler,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let fit = PathData::new(obs, beta).fit(model, &theta.flat())?;
    fit.eps.iter().map(|&e| sampler.sample(e, rng)).collect()
}

/// `V*_n = ρ^{2/β} V_n + (1−ρ)^{2/β} ξ_n` with fresh `ξ_n ~ F_β`.
pub fn cpm_variance_update<R: Rng + ?Sized>(v: &[f64], rho: f64, beta: StableIndex, rng: &mut R) -> Vec<f64> {
    let e = 2.0 / beta.value();
    let (keep, fresh) = (rho.powf(e), (1.0 - rho).powf(e));
    v.iter()
        .map(|&vn| {
            let xi = draw_positive_stable(beta, rng);
            keep * vn + fresh * xi
        })
        .collect()
}

/// A configured sampler on one data set.
pub struct Sampler<'a> {
    ql: &'a QuasiLikelihood<'a>,
    prior: &'a PriorSpec,
    config: &'a MCMCConfig,
    conditional: ConditionalVarianceSampler,
    chol: Matrix,
    step_scale: Vec<f64>,
}

impl<'a> Sampler<'a> {
    pub fn new(ql: &'a QuasiLikelihood<'a>, prior: &'a PriorSpec, config: &'a MCMCConfig) -> Result<Self> {
        let model = ql.model();
        config.validate(model.dim())?;
        prior.validate(model)?;
        let beta = ql.beta();
        let conditional = ConditionalVarianceSampler::with_options(
            beta,
            ConditionalVarianceSampler::DEFAULT_THRESHOLD,
            ConditionalVarianceSampler::DEFAULT_GRID,
            ConditionalVarianceSampler::DEFAULT_MAX_REJECTIONS,
            config.envelope,
        )?;
        let d = rate_diagonal(ql.data().n, ql.data().h, beta, model.p_alpha(), model.p_gamma());
        let step_scale = if config.scale_by_rate { d.iter().map(|d| 1.0 / d).collect() } else { vec![1.0; d.len()] };
        Ok(Sampler { ql, prior, config, conditional, chol: config.proposal_cov.cholesky()?, step_scale })
    }

    pub fn conditional(&self) -> &ConditionalVarianceSampler {
        &self.conditional
    }

    /// Variances for iteration `m`, one derived stream per observation.
    pub fn refresh_variances(&self, eps: &[f64], m: usize) -> Result<Vec<f64>> {
        eps.iter()
            .enumerate()
            .map(|(n, &e)| {
                let mut r = rng::stream(self.config.seed, &[purpose::VARIANCE, m as u64, n as u64]);
                self.conditional.sample(e, &mut r)
            })
            .collect()
    }

    /// State at `theta` with variances drawn from their full conditional.
    pub fn initial_state(&self, theta: &[f64]) -> Result<ChainState> {
        if !self.ql.model().contains(theta) {
            return Err(Error::OutOfBounds);
        }
        if self.prior.log_density(self.ql.model(), theta) == f64::NEG_INFINITY {
            return Err(Error::InvalidArgument("initial value has zero prior density".into()));
        }
        let fit = self.ql.fit(theta)?;
        let v = self.refresh_variances(&fit.eps, 0)?;
        let log_complete = log_complete(&fit, &v);
        Ok(ChainState { theta: theta.to_vec(), v, log_complete, fit })
    }

    /// `θ* = θ + D_N^{-1} W` with `W ~ N(0, Σ)`, and the uniform for the
    /// accept decision, both from the proposal stream of iteration `m`.
    fn propose(&self, theta: &[f64], m: usize) -> (Vec<f64>, f64) {
        let mut r = rng::stream(self.config.seed, &[purpose::PROPOSAL, m as u64]);
        let z: Vec<f64> = (0..theta.len()).map(|_| r.sample(StandardNormal)).collect();
        let w = lower_mul(&self.chol, &z);
        let prop = theta.iter().zip(&w).zip(&self.step_scale).map(|((t, w), s)| t + s * w).collect();
        (prop, r.random::<f64>())
    }

    /// One Metropolis-within-Gibbs iteration (`m ≥ 1`).
    pub fn mwg_step(&self, state: &mut ChainState, m: usize) -> Result<bool> {
        state.v = self.refresh_variances(&state.fit.eps, m)?;
        state.log_complete = log_complete(&state.fit, &state.v);
        let (prop, u) = self.propose(&state.theta, m);
        let model = self.ql.model();
        if !model.contains(&prop) {
            return Ok(false);
        }
        let fit = self.ql.fit(&prop)?;
        let log_ratio = complete_ratio(&state.fit, &fit, &state.v)?
            + self.prior.log_density(model, &prop)
            - self.prior.log_density(model, &state.theta);
        if accept(u, log_ratio) {
            state.log_complete = log_complete(&fit, &state.v);
            state.theta = prop;
            state.fit = fit;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    /// One joint `(θ, V)` move of the correlated pseudo-marginal chain.
    pub fn cpm_step(&self, state: &mut ChainState, m: usize) -> Result<bool> {
        let rho = self.config.rho.ok_or_else(|| Error::Config(vec!["variant cpm requires rho".into()]))?;
        let mut aux = rng::stream(self.config.seed, &[purpose::AUX, m as u64]);
        let v_star = cpm_variance_update(&state.v, rho, self.ql.beta(), &mut aux);
        let (prop, u) = self.propose(&state.theta, m);
        let model = self.ql.model();
        if !model.contains(&prop) {
            return Ok(false);
        }
        let fit = self.ql.fit(&prop)?;
        let terms: Vec<f64> = (0..v_star.len())
            .map(|n| {
                let (e0, e1) = (state.fit.eps[n], fit.eps[n]);
                (state.fit.scale[n] / fit.scale[n]).ln()
                    + 0.5 * (e0 * e0 / state.v[n] - e1 * e1 / v_star[n])
                    + 0.5 * (state.v[n] / v_star[n]).ln()
            })
            .collect();
        let log_ratio = pairwise_sum(&terms) + self.prior.log_density(model, &prop)
            - self.prior.log_density(model, &state.theta);
        if accept(u, log_ratio) {
            state.log_complete = log_complete(&fit, &v_star);
            state.theta = prop;
            state.v = v_star;
            state.fit = fit;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    /// Run the configured variant for `config.iterations` states from `init`.
    pub fn run(&self, init: &[f64]) -> Result<ChainTrace> {
        let model = self.ql.model();
        let big_m = self.config.iterations;
        let n = self.ql.data().n;
        let mut state = self.initial_state(init)?;
        let mut trace = ChainTrace {
            param_names: model.param_names(),
            thetas: Vec::with_capacity(big_m),
            accept_flags: Vec::with_capacity(big_m - 1),
            acceptance_rate: 0.0,
            seed: self.config.seed,
            config: self.config.clone(),
            drift_average: Vec::with_capacity(big_m),
            scale_average: Vec::with_capacity(big_m),
            residual_means: vec![0.0; n],
            variances: self.config.record_variances.then(Vec::new),
        };
        let record = |state: &ChainState, trace: &mut ChainTrace| {
            trace.thetas.push(state.theta.clone());
            trace.drift_average.push(pairwise_sum(&state.fit.drift) / n as f64);
            trace.scale_average.push(pairwise_sum(&state.fit.scale) / n as f64);
            for (acc, e) in trace.residual_means.iter_mut().zip(&state.fit.eps) {
                *acc += e;
            }
            if let Some(vs) = trace.variances.as_mut() {
                vs.push(state.v.clone());
            }
        };
        record(&state, &mut trace);
        for m in 1..big_m {
            let accepted = match self.config.variant {
                Variant::Mwg => self.mwg_step(&mut state, m),
                Variant::Cpm => self.cpm_step(&mut state, m),
            }
            .map_err(|e| Error::Chain { iteration: m, source: Box::new(e) })?;
            trace.accept_flags.push(accepted);
            record(&state, &mut trace);
        }
        for r in trace.residual_means.iter_mut() {
            *r /= big_m as f64;
        }
        let accepted = trace.accept_flags.iter().filter(|&&a| a).count();
        trace.acceptance_rate = accepted as f64 / trace.accept_flags.len() as f64;
        Ok(trace)
    }
}

fn accept(u: f64, log_ratio: f64) -> bool {
    log_ratio >= 0.0 || u < log_ratio.exp()
}

fn lower_mul(l: &Matrix, z: &[f64]) -> Vec<f64> {
    (0..z.len()).map(|i| (0..=i).map(|k| l[(i, k)] * z[k]).sum()).collect()
}

/// Algorithm 1 on `obs` from `init`.
pub fn run_mwg(
    model: &ModelSpec,
    obs: &ObservationSet,
    beta: StableIndex,
    prior: &PriorSpec,
    config: &MCMCConfig,
    init: &ThetaVector,
) -> Result<ChainTrace> {
    let config = MCMCConfig { variant: Variant::Mwg, ..config.clone() };
    let ql = QuasiLikelihood::new(model, obs, beta, Default::default())?;
    Sampler::new(&ql, prior, &config)?.run(&init.flat())
}

/// Correlated pseudo-marginal chain on `obs` from `init`.
pub fn run_cpm(
    model: &ModelSpec,
    obs: &ObservationSet,
    beta: StableIndex,
    prior: &PriorSpec,
    config: &MCMCConfig,
    init: &ThetaVector,
) -> Result<ChainTrace> {
    let config = MCMCConfig { variant: Variant::Cpm, ..config.clone() };
    let ql = QuasiLikelihood::new(model, obs, beta, Default::default())?;
    Sampler::new(&ql, prior, &config)?.run(&init.flat())
}

/// Proposal covariance `(2.38²/p) Cov(D_N θ)` estimated from a pilot chain,
/// for use with rate-scaled proposals.
pub fn tuned_proposal(trace: &ChainTrace, d_n: &[f64], burn_in: usize) -> Result<Matrix> {
    let rows: Vec<Vec<f64>> = trace.thetas[burn_in.min(trace.len())..]
        .iter()
        .map(|r| r.iter().zip(d_n).map(|(t, d)| t * d).collect())
        .collect();
    if rows.len() < 2 * d_n.len() + 2 {
        return Err(Error::InvalidArgument("pilot chain too short to estimate a covariance".into()));
    }
    let (_, cov) = crate::linalg::mean_and_covariance(&rows);
    let tuned = cov.scale(2.38 * 2.38 / d_n.len() as f64);
    tuned.cholesky()?;
    Ok(tuned)
}
