//! Limiting acceptance probability of a local move, against the
//! per-proposal acceptance of the sampler on finite data.

use stable_sde::diagnostics::{empirical_acceptance, limiting_acceptance_with, QuadraticTerm};
use stable_sde::model::{mean_reverting_model, ThetaVector};
use stable_sde::quasi::QuasiLikelihood;
use stable_sde::rng::{purpose, stream};
use stable_sde::simulate::{simulate_path, PathConfig};
use stable_sde::stable::{QuadratureConfig, StableIndex};

fn main() -> stable_sde::Result<()> {
    let model = mean_reverting_model(10.0);
    let truth = ThetaVector::new(vec![-4.0, 1.0], vec![-1.0]);
    let beta = StableIndex::new(1.5)?;
    let u = [0.3, -0.2, 0.25];
    let v = [-0.3, 0.2, -0.25];
    for n in [250, 1000] {
        let cfg = PathConfig { x0: -2.0, ..Default::default() };
        let obs = simulate_path(&model, &truth, beta, n, 1.0, &cfg, &mut stream(2, &[purpose::SIMULATE, n as u64]))?;
        let ql = QuasiLikelihood::new(&model, &obs, beta, QuadratureConfig::default())?;
        let t0 = truth.flat();
        let info = ql.fisher_info(&t0)?;
        let at = |w: &[f64]| -> Vec<f64> { t0.iter().zip(w).zip(&info.d_n).map(|((t, w), d)| t + w / d).collect() };
        let emp = empirical_acceptance(&ql, &at(&u), &at(&v), 2000, 7)?;
        let mut r = stream(2, &[purpose::DIAGNOSTIC]);
        let stated = limiting_acceptance_with(&u, &v, &info.delta_n, &info.i, &info.i_star, 100_000, QuadraticTerm::AsStated, &mut r)?;
        let halved = limiting_acceptance_with(&u, &v, &info.delta_n, &info.i, &info.i_star, 100_000, QuadraticTerm::Halved, &mut r)?;
        println!(
            "N = {n:>5}: empirical {:.3} ± {:.3}   limit {:.3}   limit (half quadratic) {:.3}",
            emp.value, emp.std_error, stated.value, halved.value
        );
    }
    Ok(())
}
