//! Bernstein–von Mises check: rescaled posterior draws against the
//! Gaussian limit built from the Fisher information.

use stable_sde::diagnostics::{bvm_report, CenterKind};
use stable_sde::mcmc::{MCMCConfig, PriorSpec, Sampler};
use stable_sde::model::{mean_reverting_model, ThetaVector};
use stable_sde::quasi::QuasiLikelihood;
use stable_sde::rng::{purpose, stream};
use stable_sde::simulate::{simulate_path, PathConfig};
use stable_sde::stable::{QuadratureConfig, StableIndex};

fn main() -> stable_sde::Result<()> {
    let model = mean_reverting_model(10.0);
    let truth = ThetaVector::new(vec![-4.0, 1.0], vec![-1.0]);
    let beta = StableIndex::new(1.5)?;
    let cfg = PathConfig { x0: -2.0, ..Default::default() };
    let obs = simulate_path(&model, &truth, beta, 1000, 1.0, &cfg, &mut stream(11, &[purpose::SIMULATE]))?;
    let ql = QuasiLikelihood::new(&model, &obs, beta, QuadratureConfig::default())?;
    let info = ql.fisher_info(&truth.flat())?;

    // proposals shaped like the limit
    let mut config = MCMCConfig::new(6000, 3, 11);
    config.proposal_cov = info.i.spd_inverse()?.scale(2.38 * 2.38 / 3.0);
    let prior = PriorSpec::uniform(3);
    let trace = Sampler::new(&ql, &prior, &config)?.run(&truth.flat())?;

    let report = bvm_report(&trace, &info, &truth, CenterKind::TrueValue, 1000, 1)?;
    println!("acceptance {:.3}", trace.acceptance_rate);
    println!("limit mean {:?}", report.limit_mean);
    println!("per-coordinate KS {:?}", report.per_coordinate_ks);
    println!("bounded-Lipschitz estimate {:.4}", report.bl_distance_estimate);
    Ok(())
}
