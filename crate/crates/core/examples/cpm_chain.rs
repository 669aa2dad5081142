//! The correlated pseudo-marginal variant next to plain
//! Metropolis-within-Gibbs on the same data.

use stable_sde::mcmc::{run_cpm, run_mwg, MCMCConfig, PriorSpec};
use stable_sde::model::{mean_reverting_model, ThetaVector};
use stable_sde::rng::{purpose, stream};
use stable_sde::simulate::{simulate_path, PathConfig};
use stable_sde::stable::StableIndex;

fn main() -> stable_sde::Result<()> {
    let model = mean_reverting_model(10.0);
    let truth = ThetaVector::new(vec![-1.0, 0.5], vec![0.5]);
    let beta = StableIndex::new(1.5)?;
    let obs = simulate_path(&model, &truth, beta, 250, 1.0, &PathConfig::default(), &mut stream(3, &[purpose::SIMULATE]))?;
    let prior = PriorSpec::standard_normal(3);

    let mwg = run_mwg(&model, &obs, beta, &prior, &MCMCConfig::new(3000, 3, 3), &truth)?;
    println!("mwg          acceptance {:.3}  mean {:?}", mwg.acceptance_rate, mwg.moments(500).0);
    for rho in [0.0, 0.9, 0.99] {
        let cpm = run_cpm(&model, &obs, beta, &prior, &MCMCConfig::cpm(3000, 3, 3, rho), &truth)?;
        println!("cpm rho={rho:<4} acceptance {:.3}  mean {:?}", cpm.acceptance_rate, cpm.moments(500).0);
    }
    Ok(())
}
