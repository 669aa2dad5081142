//! Euler–Maruyama paths of the stable-driven SDE.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelSpec, ThetaVector};
use crate::stable::{draw_symmetric_stable, StableIndex};

/// Paths are aborted once `|X|` exceeds this.
pub const EXPLOSION_BOUND: f64 = 1e12;

/// Observations `X_0, X_h, ..., X_{Nh}` on `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSet {
    pub values: Vec<f64>,
    pub n: usize,
    pub t: f64,
    pub h: f64,
}

impl ObservationSet {
    /// Wrap `N + 1` values on `[0, T]`, so `h = T / N`.
    pub fn new(values: Vec<f64>, t: f64) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Data(format!("need at least 2 observations, got {}", values.len())));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!("terminal time must be positive, got {t}")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("observation {i} is not finite")));
        }
        let n = values.len() - 1;
        Ok(ObservationSet { values, n, t, h: t / n as f64 })
    }

    /// Left endpoints `X_{(n-1)h}`, `n = 1..N`.
    pub fn left(&self) -> &[f64] {
        &self.values[..self.n]
    }
}

/// `Δ_n X = X_{nh} - X_{(n-1)h}`.
pub fn increments(obs: &ObservationSet) -> Vec<f64> {
    obs.values.windows(2).map(|w| w[1] - w[0]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathConfig {
    pub seed: u64,
    /// Euler substeps per observation interval.
    pub refine: usize,
    pub x0: f64,
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig { seed: 0, refine: 1, x0: 0.0 }
    }
}

/// Simulate `N` steps of the Euler scheme on `[0, T]`. With `refine = k`
/// the scheme runs on step `h/k` and every `k`-th state is recorded.
///
/// `cfg.seed` is carried for bookkeeping; all draws come from `rng`.
pub fn simulate_path<R: Rng + ?Sized>(
    model: &ModelSpec,
    theta0: &ThetaVector,
    beta: StableIndex,
    n: usize,
    t: f64,
    cfg: &PathConfig,
    rng: &mut R,
) -> Result<ObservationSet> {
    let theta = theta0.flat();
    if !model.contains(&theta) {
        return Err(Error::OutOfBounds);
    }
    if n == 0 || !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("need N >= 1 and T > 0, got N = {n}, T = {t}")));
    }
    if cfg.refine == 0 {
        return Err(Error::InvalidArgument("refine must be at least 1".into()));
    }
    if !cfg.x0.is_finite() {
        return Err(Error::InvalidArgument("x0 must be finite".into()));
    }
    let h = t / n as f64;
    let dt = h / cfg.refine as f64;
    let noise_scale = dt.powf(1.0 / beta.value());

    let mut values = Vec::with_capacity(n + 1);
    let mut x = cfg.x0;
    values.push(x);
    for step in 1..=n * cfg.refine {
        let a = model.drift_at(x, &theta).map_err(|e| simulation_error(step, x, e))?;
        let c = model.scale_at(x, &theta).map_err(|e| simulation_error(step, x, e))?;
        x += a * dt + c * noise_scale * draw_symmetric_stable(beta, rng);
        if !x.is_finite() || x.abs() > EXPLOSION_BOUND {
            return Err(Error::Simulation { step, state: x });
        }
        if step % cfg.refine == 0 {
            values.push(x);
        }
    }
    Ok(ObservationSet { values, n, t, h })
}

fn simulation_error(step: usize, state: f64, e: Error) -> Error {
    match e {
        Error::Evaluation { .. } => Error::Simulation { step, state },
        e => e,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{mean_reverting_model, ParamSpec};
    use crate::rng;

    fn constant_model(a: &str) -> ModelSpec {
        ModelSpec::new(a, "1 + 0*g", vec![], vec![ParamSpec::new("g", -1.0, 1.0)]).unwrap()
    }

    #[test]
    fn increments_are_first_differences() {
        let obs = ObservationSet::new(vec![0.0, 1.0, 3.0], 2.0).unwrap();
        assert_eq!(increments(&obs), vec![1.0, 2.0]);
        let flat = ObservationSet::new(vec![2.5; 5], 1.0).unwrap();
        assert!(increments(&flat).iter().all(|&d| d == 0.0));
        assert_eq!(flat.h * flat.n as f64, flat.t);
    }

    #[test]
    fn same_seed_same_path() {
        let m = mean_reverting_model(5.0);
        let th = ThetaVector::new(vec![-1.0, 0.5], vec![0.3]);
        let beta = StableIndex::new(1.5).unwrap();
        let cfg = PathConfig::default();
        let a = simulate_path(&m, &th, beta, 200, 1.0, &cfg, &mut rng::stream(3, &[1])).unwrap();
        let b = simulate_path(&m, &th, beta, 200, 1.0, &cfg, &mut rng::stream(3, &[1])).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.values.len(), 201);
    }

    #[test]
    fn zero_drift_unit_scale_reproduces_scaled_noise() {
        // With a ≡ 0, c ≡ 1 the increments are exactly h^{1/β} z_n for the
        // same underlying draws.
        let m = constant_model("0");
        let beta = StableIndex::new(1.3).unwrap();
        let th = ThetaVector::new(vec![], vec![0.0]);
        let obs = simulate_path(&m, &th, beta, 50, 2.0, &PathConfig::default(), &mut rng::stream(9, &[])).unwrap();
        let mut r = rng::stream(9, &[]);
        let scale = (2.0f64 / 50.0).powf(1.0 / 1.3);
        for d in increments(&obs) {
            let z = draw_symmetric_stable(beta, &mut r);
            assert!((d - scale * z).abs() < 1e-12 * (1.0 + d.abs()));
        }
    }

    #[test]
    fn refinement_subsamples_the_fine_path() {
        let m = constant_model("1");
        let beta = StableIndex::new(1.5).unwrap();
        let th = ThetaVector::new(vec![], vec![0.0]);
        let cfg = PathConfig { refine: 4, ..Default::default() };
        let obs = simulate_path(&m, &th, beta, 10, 1.0, &cfg, &mut rng::stream(1, &[])).unwrap();
        assert_eq!(obs.values.len(), 11);
        assert_eq!(obs.h, 0.1);
    }

    #[test]
    fn explosion_is_reported_with_step() {
        let m = ModelSpec::new("x^3*a", "1 + 0*g", vec![ParamSpec::new("a", 0.0, 10.0)], vec![ParamSpec::new("g", -1.0, 1.0)])
            .unwrap();
        let th = ThetaVector::new(vec![10.0], vec![0.0]);
        let beta = StableIndex::new(1.5).unwrap();
        let cfg = PathConfig { x0: 5.0, ..Default::default() };
        let e = simulate_path(&m, &th, beta, 100, 100.0, &cfg, &mut rng::stream(1, &[])).unwrap_err();
        assert!(matches!(e, Error::Simulation { step, .. } if step < 100));
    }

    #[test]
    fn out_of_box_theta_is_rejected() {
        let m = mean_reverting_model(1.0);
        let th = ThetaVector::new(vec![2.0, 0.0], vec![0.0]);
        let beta = StableIndex::new(1.5).unwrap();
        let r = simulate_path(&m, &th, beta, 10, 1.0, &PathConfig::default(), &mut rng::stream(1, &[]));
        assert!(matches!(r, Err(Error::OutOfBounds)));
    }
}
