//! Stable quasi-likelihood: residuals, log-likelihoods, scores, the
//! quasi-Fisher information and the quasi-maximum likelihood estimator.
//!
//! The free functions take a [`StableIndex`] and tabulate the law on each
//! call. Code that evaluates many parameter values on the same data should
//! build a [`QuasiLikelihood`] once instead.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{ModelSpec, ThetaVector};
use crate::simulate::{increments, ObservationSet};
use crate::stable::{FisherConstants, QuadratureConfig, StableIndex, StableLaw};

/// Sum in a fixed pairwise order, so results do not depend on chunking.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Standardized residuals `ε_n(θ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub eps: Vec<f64>,
}

/// Residuals together with the scale coefficients they were divided by.
#[derive(Debug, Clone, PartialEq)]
pub struct Fitted {
    pub eps: Vec<f64>,
    pub drift: Vec<f64>,
    pub scale: Vec<f64>,
}

/// `diag(√N h^{1−1/β} I_{pα}, √N I_{pγ})` as its diagonal.
pub fn rate_diagonal(n: usize, h: f64, beta: StableIndex, p_alpha: usize, p_gamma: usize) -> Vec<f64> {
    let root = (n as f64).sqrt();
    let drift_rate = root * h.powf(1.0 - 1.0 / beta.value());
    let mut d = vec![drift_rate; p_alpha];
    d.extend(std::iter::repeat(root).take(p_gamma));
    d
}

/// The rate matrix `D_N`.
pub fn rate_matrix(n: usize, h: f64, beta: StableIndex, p_alpha: usize, p_gamma: usize) -> Matrix {
    Matrix::diagonal(&rate_diagonal(n, h, beta, p_alpha, p_gamma))
}

/// Data-side quantities shared by every evaluation on one observation set.
#[derive(Debug, Clone)]
pub struct PathData {
    pub left: Vec<f64>,
    pub dx: Vec<f64>,
    pub n: usize,
    pub t: f64,
    pub h: f64,
    /// `h^{1/β}`
    pub noise_scale: f64,
}

impl PathData {
    pub fn new(obs: &ObservationSet, beta: StableIndex) -> Self {
        PathData {
            left: obs.left().to_vec(),
            dx: increments(obs),
            n: obs.n,
            t: obs.t,
            h: obs.h,
            noise_scale: obs.h.powf(1.0 / beta.value()),
        }
    }

    /// `ε_n(θ)`, drift and scale along the path for a flat `θ`.
    pub fn fit(&self, model: &ModelSpec, theta: &[f64]) -> Result<Fitted> {
        if !model.contains(theta) {
            return Err(Error::OutOfBounds);
        }
        let (drift, scale) = model.coefficients(theta, &self.left)?;
        let eps = self
            .dx
            .iter()
            .zip(drift.iter().zip(&scale))
            .map(|(dx, (a, c))| (dx - a * self.h) / (c * self.noise_scale))
            .collect();
        Ok(Fitted { eps, drift, scale })
    }
}

/// Quasi-likelihood machinery for one model, one data set and one index.
#[derive(Debug, Clone)]
pub struct QuasiLikelihood<'a> {
    model: &'a ModelSpec,
    data: PathData,
    law: StableLaw,
    beta: StableIndex,
}

impl<'a> QuasiLikelihood<'a> {
    pub fn new(model: &'a ModelSpec, obs: &ObservationSet, beta: StableIndex, quad: QuadratureConfig) -> Result<Self> {
        let law = StableLaw::new(beta, quad)?;
        Ok(Self::with_law(model, obs, law))
    }

    pub fn with_law(model: &'a ModelSpec, obs: &ObservationSet, law: StableLaw) -> Self {
        let beta = law.beta();
        QuasiLikelihood { model, data: PathData::new(obs, beta), law, beta }
    }

    pub fn model(&self) -> &ModelSpec {
        self.model
    }

    pub fn data(&self) -> &PathData {
        &self.data
    }

    pub fn law(&self) -> &StableLaw {
        &self.law
    }

    pub fn beta(&self) -> StableIndex {
        self.beta
    }

    pub fn fit(&self, theta: &[f64]) -> Result<Fitted> {
        self.data.fit(self.model, theta)
    }

    /// `ℍ_N(θ) = Σ [−log c + log φ_β(ε_n)]`, optionally with the
    /// θ-free constant `−(N/β) log h` added.
    pub fn loglik(&self, theta: &[f64], include_constant: bool) -> Result<f64> {
        let f = self.fit(theta)?;
        let terms: Vec<f64> = f.eps.iter().zip(&f.scale).map(|(&e, &c)| self.law.log_pdf(e) - c.ln()).collect();
        let mut total = pairwise_sum(&terms);
        if include_constant {
            total -= self.data.n as f64 / self.beta.value() * self.data.h.ln();
        }
        Ok(total)
    }

    /// `(∂_θ ℍ_N, Δ_N = D_N^{-1} ∂_θ ℍ_N)`.
    pub fn score(&self, theta: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let f = self.fit(theta)?;
        let (pa, pg) = (self.model.p_alpha(), self.model.p_gamma());
        let drift_factor = self.data.h.powf(1.0 - 1.0 / self.beta.value());
        let mut terms = vec![Vec::with_capacity(self.data.n); pa + pg];
        let mut da = vec![0.0; pa];
        let mut dc = vec![0.0; pg];
        for (k, &x) in self.data.left.iter().enumerate() {
            self.model.drift_gradient(x, theta, &mut da).map_err(|e| at(k, e))?;
            self.model.scale_gradient(x, theta, &mut dc).map_err(|e| at(k, e))?;
            let (e, c) = (f.eps[k], f.scale[k]);
            let g = self.law.score(e);
            for i in 0..pa {
                terms[i].push(-drift_factor * g * da[i] / c);
            }
            for j in 0..pg {
                terms[pa + j].push(-(1.0 + e * g) * dc[j] / c);
            }
        }
        let score: Vec<f64> = terms.iter().map(|t| pairwise_sum(t)).collect();
        let d = rate_diagonal(self.data.n, self.data.h, self.beta, pa, pg);
        let delta = score.iter().zip(&d).map(|(s, d)| s / d).collect();
        Ok((score, delta))
    }

    /// Σ_{T,α}, Σ_{T,γ} as left Riemann sums on the observation grid.
    pub fn sigma_t(&self, theta: &[f64]) -> Result<(Matrix, Matrix)> {
        let f = self.fit(theta)?;
        let (pa, pg) = (self.model.p_alpha(), self.model.p_gamma());
        let mut sa = vec![vec![Vec::with_capacity(self.data.n); pa]; pa];
        let mut sg = vec![vec![Vec::with_capacity(self.data.n); pg]; pg];
        let mut da = vec![0.0; pa];
        let mut dc = vec![0.0; pg];
        let w = self.data.h / self.data.t;
        for (k, &x) in self.data.left.iter().enumerate() {
            self.model.drift_gradient(x, theta, &mut da).map_err(|e| at(k, e))?;
            self.model.scale_gradient(x, theta, &mut dc).map_err(|e| at(k, e))?;
            let c2 = f.scale[k] * f.scale[k];
            for i in 0..pa {
                for j in 0..pa {
                    sa[i][j].push(w * da[i] * da[j] / c2);
                }
            }
            for i in 0..pg {
                for j in 0..pg {
                    sg[i][j].push(w * dc[i] * dc[j] / c2);
                }
            }
        }
        let reduce = |s: Vec<Vec<Vec<f64>>>| {
            let rows: Vec<Vec<f64>> = s.iter().map(|r| r.iter().map(|t| pairwise_sum(t)).collect()).collect();
            Matrix::from_rows(&rows).expect("square by construction")
        };
        Ok((reduce(sa), reduce(sg)))
    }

    pub fn fisher_info(&self, theta: &[f64]) -> Result<QuasiInfo> {
        let constants = FisherConstants::from_law(&self.law)?;
        self.fisher_info_with(theta, &constants)
    }

    /// As [`fisher_info`](Self::fisher_info) with precomputed constants.
    pub fn fisher_info_with(&self, theta: &[f64], constants: &FisherConstants) -> Result<QuasiInfo> {
        let (sigma_alpha, sigma_gamma) = self.sigma_t(theta)?;
        let (_, delta_n) = self.score(theta)?;
        let block = |ca: f64, cg: f64| block_diag(&sigma_alpha.scale(ca), &sigma_gamma.scale(cg));
        let i = block(constants.c_alpha, constants.c_gamma);
        let i_dag = block(constants.c_alpha_dag, constants.c_gamma_dag);
        let i_star = i_dag.sub(&i);
        Ok(QuasiInfo {
            d_n: rate_diagonal(self.data.n, self.data.h, self.beta, self.model.p_alpha(), self.model.p_gamma()),
            delta_n,
            i,
            i_dag,
            i_star,
            sigma_alpha,
            sigma_gamma,
            constants: *constants,
        })
    }

    /// Quasi-MLE by Nelder–Mead over the parameter box.
    pub fn mle(&self, init: &[f64], opt: &OptimizerConfig) -> Result<MleResult> {
        if !self.model.contains(init) {
            return Err(Error::OutOfBounds);
        }
        let objective = |th: &[f64]| self.loglik(th, false).unwrap_or(f64::NEG_INFINITY);
        let r = maximize(objective, init, &self.model.lower(), &self.model.upper(), opt);
        if !r.value.is_finite() {
            return Err(Error::InvalidArgument("quasi-likelihood is not finite anywhere on the search path".into()));
        }
        Ok(MleResult {
            theta: ThetaVector::from_flat(&r.x, self.model.p_alpha()),
            loglik: r.value,
            converged: r.converged,
            iterations: r.iterations,
            evaluations: r.evaluations,
        })
    }

    /// Time averages `(1/N) Σ a(X_{(n−1)h}, α)` and `(1/N) Σ c(X_{(n−1)h}, γ)`.
    pub fn coefficient_averages(&self, theta: &[f64]) -> Result<(f64, f64)> {
        let f = self.fit(theta)?;
        let n = self.data.n as f64;
        Ok((pairwise_sum(&f.drift) / n, pairwise_sum(&f.scale) / n))
    }
}

fn at(index: usize, e: Error) -> Error {
    Error::ModelViolation { index, message: e.to_string() }
}

fn block_diag(a: &Matrix, b: &Matrix) -> Matrix {
    let (pa, pb) = (a.dim(), b.dim());
    let mut m = Matrix::zeros(pa + pb);
    for i in 0..pa {
        for j in 0..pa {
            m[(i, j)] = a[(i, j)];
        }
    }
    for i in 0..pb {
        for j in 0..pb {
            m[(pa + i, pa + j)] = b[(i, j)];
        }
    }
    m
}

/// Rate matrix, normalized score and the three information matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiInfo {
    /// Diagonal of `D_N`.
    pub d_n: Vec<f64>,
    pub delta_n: Vec<f64>,
    pub i: Matrix,
    pub i_dag: Matrix,
    pub i_star: Matrix,
    pub sigma_alpha: Matrix,
    pub sigma_gamma: Matrix,
    pub constants: FisherConstants,
}

impl QuasiInfo {
    pub fn rate_matrix(&self) -> Matrix {
        Matrix::diagonal(&self.d_n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleResult {
    pub theta: ThetaVector,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
}

pub fn residuals(model: &ModelSpec, theta: &ThetaVector, obs: &ObservationSet, beta: StableIndex) -> Result<Residuals> {
    let f = PathData::new(obs, beta).fit(model, &theta.flat())?;
    Ok(Residuals { eps: f.eps })
}

pub fn quasi_loglik(
    model: &ModelSpec,
    theta: &ThetaVector,
    obs: &ObservationSet,
    beta: StableIndex,
    quad: &QuadratureConfig,
) -> Result<f64> {
    QuasiLikelihood::new(model, obs, beta, *quad)?.loglik(&theta.flat(), false)
}

/// `ℍ†_N(θ*) − ℍ†_N(θ)` for the complete quasi-likelihood given variances `V`.
pub fn complete_loglik_ratio(
    model: &ModelSpec,
    theta: &ThetaVector,
    theta_star: &ThetaVector,
    obs: &ObservationSet,
    v: &[f64],
    beta: StableIndex,
) -> Result<f64> {
    let data = PathData::new(obs, beta);
    let cur = data.fit(model, &theta.flat())?;
    let prop = data.fit(model, &theta_star.flat())?;
    complete_ratio(&cur, &prop, v)
}

/// The same ratio from two precomputed fits.
pub fn complete_ratio(cur: &Fitted, prop: &Fitted, v: &[f64]) -> Result<f64> {
    if v.len() != cur.eps.len() {
        return Err(Error::InvalidArgument(format!("{} variances for {} residuals", v.len(), cur.eps.len())));
    }
    let mut terms = Vec::with_capacity(v.len());
    for k in 0..v.len() {
        if !(v[k] > 0.0) {
            return Err(Error::InvalidArgument(format!("variance {k} is not positive ({})", v[k])));
        }
        let (e0, e1) = (cur.eps[k], prop.eps[k]);
        terms.push((cur.scale[k] / prop.scale[k]).ln() + 0.5 * (e0 - e1) * (e0 + e1) / v[k]);
    }
    Ok(pairwise_sum(&terms))
}

pub fn quasi_score(
    model: &ModelSpec,
    theta: &ThetaVector,
    obs: &ObservationSet,
    beta: StableIndex,
    quad: &QuadratureConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    QuasiLikelihood::new(model, obs, beta, *quad)?.score(&theta.flat())
}

pub fn fisher_info(
    model: &ModelSpec,
    theta: &ThetaVector,
    obs: &ObservationSet,
    beta: StableIndex,
    quad: &QuadratureConfig,
) -> Result<QuasiInfo> {
    QuasiLikelihood::new(model, obs, beta, *quad)?.fisher_info(&theta.flat())
}

pub fn quasi_mle(
    model: &ModelSpec,
    obs: &ObservationSet,
    beta: StableIndex,
    init: &ThetaVector,
    opt: &OptimizerConfig,
) -> Result<MleResult> {
    QuasiLikelihood::new(model, obs, beta, QuadratureConfig::default())?.mle(&init.flat(), opt)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    /// Stop once every vertex is within this distance of the best one.
    pub diameter_tol: f64,
    /// Initial simplex edge as a fraction of each box width.
    pub initial_step: f64,
    /// Extra runs started from the best point so far.
    pub restarts: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig { max_iterations: 2000, diameter_tol: 1e-8, initial_step: 0.05, restarts: 2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimumResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
}

/// Map a point back into `[lo, hi]` by mirror reflection at the faces.
fn reflect(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for i in 0..x.len() {
        let w = hi[i] - lo[i];
        let mut v = x[i];
        if v < lo[i] || v > hi[i] {
            let r = (v - lo[i]).rem_euclid(2.0 * w);
            v = if r <= w { lo[i] + r } else { hi[i] - (r - w) };
        }
        x[i] = v.clamp(lo[i], hi[i]);
    }
}

fn on_boundary(x: &[f64], lo: &[f64], hi: &[f64]) -> bool {
    x.iter().zip(lo.iter().zip(hi)).any(|(&v, (&l, &h))| (v - l).min(h - v) <= 1e-6 * (h - l))
}

/// Maximize `f` over the box `[lo, hi]` with Nelder–Mead. Trial points that
/// leave the box are reflected back in. After convergence the search is
/// restarted from the best point with a fresh simplex; a best point on the
/// boundary triggers a restart from a perturbed copy of `init` instead.
pub fn maximize<F>(mut f: F, init: &[f64], lo: &[f64], hi: &[f64], cfg: &OptimizerConfig) -> OptimumResult
where
    F: FnMut(&[f64]) -> f64,
{
    let mut start = init.to_vec();
    reflect(&mut start, lo, hi);
    let mut best = nelder_mead(&mut f, &start, lo, hi, cfg);
    let mut iterations = best.iterations;
    let mut evaluations = best.evaluations;
    for r in 0..cfg.restarts {
        if on_boundary(&best.x, lo, hi) {
            // alternate the perturbation direction per coordinate and restart
            start = init.to_vec();
            for (i, s) in start.iter_mut().enumerate() {
                let sign = if (i + r) % 2 == 0 { 1.0 } else { -1.0 };
                *s += sign * 0.1 * (r + 1) as f64 * (hi[i] - lo[i]);
            }
            reflect(&mut start, lo, hi);
        } else {
            start = best.x.clone();
        }
        let next = nelder_mead(&mut f, &start, lo, hi, cfg);
        iterations += next.iterations;
        evaluations += next.evaluations;
        let converged = next.converged || best.converged;
        if next.value > best.value {
            best = next;
        }
        best.converged = converged;
    }
    best.iterations = iterations;
    best.evaluations = evaluations;
    best
}

fn nelder_mead<F>(f: &mut F, start: &[f64], lo: &[f64], hi: &[f64], cfg: &OptimizerConfig) -> OptimumResult
where
    F: FnMut(&[f64]) -> f64,
{
    let p = start.len();
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(p + 1);
    simplex.push((start.to_vec(), eval(start, &mut evals)));
    for i in 0..p {
        let mut x = start.to_vec();
        let step = cfg.initial_step * (hi[i] - lo[i]);
        x[i] = if x[i] + step <= hi[i] { x[i] + step } else { x[i] - step };
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iterations {
        simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if diameter < cfg.diameter_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; p];
        for (x, _) in &simplex[..p] {
            for i in 0..p {
                centroid[i] += x[i] / p as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            let mut x: Vec<f64> = (0..p).map(|i| centroid[i] + t * (simplex[p].0[i] - centroid[i])).collect();
            reflect(&mut x, lo, hi);
            x
        };
        let xr = along(-1.0);
        let fr = eval(&xr, &mut evals);
        if fr > simplex[0].1 {
            let xe = along(-2.0);
            let fe = eval(&xe, &mut evals);
            simplex[p] = if fe > fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr > simplex[p - 1].1 {
            simplex[p] = (xr, fr);
            continue;
        }
        if fr > simplex[p].1 {
            let xc = along(-0.5);
            let fc = eval(&xc, &mut evals);
            if fc >= fr {
                simplex[p] = (xc, fc);
                continue;
            }
        } else {
            let xc = along(0.5);
            let fc = eval(&xc, &mut evals);
            if fc > simplex[p].1 {
                simplex[p] = (xc, fc);
                continue;
            }
        }
        // shrink toward the best vertex
        let best = simplex[0].0.clone();
        for (x, v) in simplex.iter_mut().skip(1) {
            for i in 0..p {
                x[i] = best[i] + 0.5 * (x[i] - best[i]);
            }
            *v = eval(x, &mut evals);
        }
    }
    simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
    let (x, value) = simplex.swap_remove(0);
    OptimumResult { x, value, converged, iterations, evaluations: evals }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ParamSpec;
    use std::f64::consts::PI;

    fn b(v: f64) -> StableIndex {
        StableIndex::new(v).unwrap()
    }

    fn location_model() -> ModelSpec {
        ModelSpec::new("alpha", "g", vec![ParamSpec::new("alpha", -5.0, 5.0)], vec![ParamSpec::new("g", 0.1, 5.0)])
            .unwrap()
    }

    #[test]
    fn rate_matrix_formula() {
        let d = rate_diagonal(100, 0.01, b(1.5), 1, 1);
        assert!((d[0] - 10.0 * 0.01f64.powf(1.0 / 3.0)).abs() < 1e-12);
        assert!((d[0] - 2.154_43).abs() < 1e-5);
        assert_eq!(d[1], 10.0);
        assert_eq!(rate_diagonal(400, 0.3, b(1.0), 2, 1), vec![20.0; 3]);
        assert_eq!(rate_matrix(1, 1.0, b(1.7), 2, 1), Matrix::identity(3));
    }

    #[test]
    fn residual_examples() {
        let m = location_model();
        // Δx = a h exactly
        let obs = ObservationSet::new(vec![0.0, 0.5, 1.0], 2.0).unwrap();
        let r = residuals(&m, &ThetaVector::new(vec![0.5], vec![2.0]), &obs, b(1.5)).unwrap();
        assert_eq!(r.eps, vec![0.0, 0.0]);
        // a ≡ 0, c ≡ 1, h = 1
        let obs = ObservationSet::new(vec![0.0, 0.7, -0.2], 2.0).unwrap();
        let r = residuals(&m, &ThetaVector::new(vec![0.0], vec![1.0]), &obs, b(1.5)).unwrap();
        assert!((r.eps[0] - 0.7).abs() < 1e-15 && (r.eps[1] + 0.9).abs() < 1e-15);
    }

    #[test]
    fn nonpositive_scale_reports_index() {
        let m = ModelSpec::new("0", "x*g", vec![], vec![ParamSpec::new("g", 0.5, 2.0)]).unwrap();
        let obs = ObservationSet::new(vec![1.0, 2.0, -1.0, 0.0], 3.0).unwrap();
        let e = residuals(&m, &ThetaVector::new(vec![], vec![1.0]), &obs, b(1.5)).unwrap_err();
        assert!(matches!(e, Error::NonPositiveScale { index: 2, .. }));
    }

    #[test]
    fn cauchy_at_zero_loglik() {
        let m = location_model();
        let obs = ObservationSet::new(vec![0.0, 0.0], 1.0).unwrap();
        let q = QuadratureConfig::default();
        let l = quasi_loglik(&m, &ThetaVector::new(vec![0.0], vec![1.0]), &obs, b(1.0), &q).unwrap();
        assert!((l + PI.ln()).abs() < 1e-10);
    }

    #[test]
    fn constant_only_shifts_loglik() {
        let m = location_model();
        let obs = ObservationSet::new(vec![0.0, 0.1, 0.05, 0.3], 0.3).unwrap();
        let ql = QuasiLikelihood::new(&m, &obs, b(1.5), QuadratureConfig::default()).unwrap();
        let th = [0.2, 0.7];
        let diff = ql.loglik(&th, true).unwrap() - ql.loglik(&th, false).unwrap();
        assert!((diff + 3.0 / 1.5 * 0.1f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn complete_ratio_examples() {
        let m = ModelSpec::new("alpha", "1 + 0*g", vec![ParamSpec::new("alpha", -2.0, 2.0)], vec![ParamSpec::new("g", 0.0, 1.0)])
            .unwrap();
        let obs = ObservationSet::new(vec![0.0, 1.0], 1.0).unwrap();
        let th = ThetaVector::new(vec![0.0], vec![0.5]);
        let ts = ThetaVector::new(vec![-0.5], vec![0.5]);
        let r = complete_loglik_ratio(&m, &th, &ts, &obs, &[1.0], b(1.5)).unwrap();
        assert!((r + 0.625).abs() < 1e-14);
        assert_eq!(complete_loglik_ratio(&m, &th, &th, &obs, &[1.0], b(1.5)).unwrap(), 0.0);
        assert!(complete_loglik_ratio(&m, &th, &ts, &obs, &[0.0], b(1.5)).is_err());

        // doubled scale, zero residual
        let m = location_model();
        let obs = ObservationSet::new(vec![0.0, 0.0, 0.0, 0.0], 3.0).unwrap();
        let r = complete_loglik_ratio(
            &m,
            &ThetaVector::new(vec![0.0], vec![1.0]),
            &ThetaVector::new(vec![0.0], vec![2.0]),
            &obs,
            &[0.3, 1.0, 2.0],
            b(1.5),
        )
        .unwrap();
        assert!((r + 3.0 * 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn score_at_zero_residuals() {
        let m = location_model();
        let obs = ObservationSet::new(vec![0.0, 0.25, 0.5, 0.75, 1.0], 1.0).unwrap();
        let (s, delta) = quasi_score(&m, &ThetaVector::new(vec![1.0], vec![2.0]), &obs, b(1.5), &QuadratureConfig::default())
            .unwrap();
        assert_eq!(s[0], 0.0);
        assert!((s[1] + 4.0 / 2.0).abs() < 1e-14);
        assert!((delta[1] - s[1] / 2.0).abs() < 1e-15);
    }

    #[test]
    fn fisher_info_constant_coefficients() {
        let m = location_model();
        let obs = ObservationSet::new(vec![0.0, 0.3, -0.1, 0.4, 0.2], 2.0).unwrap();
        let q = QuadratureConfig::default();
        let cauchy = fisher_info(&m, &ThetaVector::new(vec![0.0], vec![1.0]), &obs, b(1.0), &q).unwrap();
        assert!((cauchy.i[(0, 0)] - 0.5).abs() < 1e-6);
        assert!((cauchy.i[(1, 1)] - 0.5).abs() < 1e-6);
        let info = fisher_info(&m, &ThetaVector::new(vec![0.0], vec![1.0]), &obs, b(1.6), &q).unwrap();
        assert!((info.i_dag[(1, 1)] - 2.0).abs() < 1e-12);
        assert_eq!(info.i[(0, 1)], 0.0);
        for i in 0..2 {
            for j in 0..2 {
                assert!((info.i[(i, j)] + info.i_star[(i, j)] - info.i_dag[(i, j)]).abs() < 1e-12);
            }
        }
        assert!(info.i_star.cholesky_psd().is_ok());
    }

    #[test]
    fn optimizer_recovers_quadratic_argmax() {
        let target = [0.3, -1.2, 2.5];
        let f = |x: &[f64]| -x.iter().zip(&target).enumerate().map(|(i, (a, b))| (i + 1) as f64 * (a - b).powi(2)).sum::<f64>();
        let r = maximize(f, &[0.0, 0.0, 0.0], &[-5.0; 3], &[5.0; 3], &OptimizerConfig::default());
        assert!(r.converged);
        for (x, t) in r.x.iter().zip(&target) {
            assert!((x - t).abs() < 1e-6, "{:?}", r.x);
        }
    }

    #[test]
    fn optimizer_respects_box() {
        let f = |x: &[f64]| x[0] + x[1];
        let r = maximize(f, &[0.0, 0.0], &[-1.0, -1.0], &[1.0, 2.0], &OptimizerConfig::default());
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 2.0).abs() < 1e-6);
        assert!(r.x[0] <= 1.0 && r.x[1] <= 2.0);
    }

    #[test]
    fn reflection_maps_into_box() {
        let mut x = [1.5, -3.5, 0.2];
        reflect(&mut x, &[0.0, -1.0, 0.0], &[1.0, 1.0, 1.0]);
        assert!((x[0] - 0.5).abs() < 1e-15);
        assert!((x[1] - 0.5).abs() < 1e-15);
        assert_eq!(x[2], 0.2);
    }

    #[test]
    fn location_mle_is_symmetry_point() {
        let m = location_model();
        // increments symmetric about m h with m = 0.8, h = 0.5
        let d = [0.4, 0.4 + 0.3, 0.4 - 0.3, 0.4 + 1.7, 0.4 - 1.7];
        let mut values = vec![0.0];
        for x in d {
            values.push(values.last().unwrap() + x);
        }
        let obs = ObservationSet::new(values, 2.5).unwrap();
        let r = quasi_mle(&m, &obs, b(1.5), &ThetaVector::new(vec![0.0], vec![1.0]), &OptimizerConfig::default()).unwrap();
        assert!((r.theta.alpha[0] - 0.8).abs() < 1e-5, "{:?}", r);
    }

    #[test]
    fn pairwise_sum_matches_naive_on_small_input() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-10);
    }
}
