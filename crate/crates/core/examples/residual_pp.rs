//! Index estimation from increments, and a p-p table of posterior mean
//! residuals against the stable law with a simulated reference band.

use stable_sde::diagnostics::{estimate_beta, pp_band, pp_data_with};
use stable_sde::mcmc::{run_mwg, MCMCConfig, PriorSpec};
use stable_sde::model::{mean_reverting_model, ThetaVector};
use stable_sde::rng::{purpose, stream};
use stable_sde::simulate::{increments, simulate_path, PathConfig};
use stable_sde::stable::{QuadratureConfig, StableIndex, StableLaw};

fn main() -> stable_sde::Result<()> {
    let model = mean_reverting_model(10.0);
    let truth = ThetaVector::new(vec![-1.0, 0.5], vec![0.5]);
    let beta = StableIndex::new(1.4)?;
    let obs = simulate_path(&model, &truth, beta, 1000, 1.0, &PathConfig::default(), &mut stream(4, &[purpose::SIMULATE]))?;

    let est = estimate_beta(&increments(&obs))?;
    println!("beta: true 1.4, estimated {:.3} (quantile ratio {:.3})", est.beta, est.sample_ratio);

    let trace = run_mwg(&model, &obs, beta, &PriorSpec::standard_normal(3), &MCMCConfig::new(2000, 3, 4), &truth)?;
    let law = StableLaw::new(beta, QuadratureConfig::default())?;
    let pp = pp_data_with(&trace.residual_means, &law)?;
    let band = pp_band(&law, obs.n, 200, 0.95, 4)?;
    println!("p-p max deviation {:.4}, 95% null band {:.4}", pp.max_deviation(), band);
    for k in (0..pp.points.len()).step_by(pp.points.len() / 10) {
        let (a, b) = pp.points[k];
        println!("  {a:.3}  {b:.3}");
    }
    Ok(())
}
