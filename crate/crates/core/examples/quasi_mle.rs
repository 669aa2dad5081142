//! Quasi-maximum likelihood estimate, the Fisher information at the
//! estimate and the resulting standard errors.

use stable_sde::model::{mean_reverting_model, ThetaVector};
use stable_sde::quasi::{OptimizerConfig, QuasiLikelihood};
use stable_sde::rng::{purpose, stream};
use stable_sde::simulate::{simulate_path, PathConfig};
use stable_sde::stable::{QuadratureConfig, StableIndex};

fn main() -> stable_sde::Result<()> {
    let model = mean_reverting_model(10.0);
    let truth = ThetaVector::new(vec![-4.0, 1.0], vec![-1.0]);
    let beta = StableIndex::new(1.5)?;
    let cfg = PathConfig { x0: -2.0, ..Default::default() };
    let obs = simulate_path(&model, &truth, beta, 2000, 1.0, &cfg, &mut stream(5, &[purpose::SIMULATE]))?;

    let ql = QuasiLikelihood::new(&model, &obs, beta, QuadratureConfig::default())?;
    let fit = ql.mle(&[0.0, 0.0, 0.0], &OptimizerConfig::default())?;
    let est = fit.theta.flat();
    let info = ql.fisher_info(&est)?;
    let cov = info.i.spd_inverse()?;
    println!("converged = {} after {} iterations, H = {:.4}", fit.converged, fit.iterations, fit.loglik);
    for (k, name) in model.param_names().iter().enumerate() {
        let se = cov[(k, k)].sqrt() / info.d_n[k];
        println!("{name:>7}: truth {:>7.3}  estimate {:>8.4}  se {:.4}", truth.flat()[k], est[k], se);
    }
    let (score, _) = ql.score(&est)?;
    println!("score at the estimate: {score:?}");
    Ok(())
}
