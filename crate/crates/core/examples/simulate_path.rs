//! Euler–Maruyama path of the mean-reverting model with stable noise,
//! written as CSV.

use stable_sde::io::write_observations;
use stable_sde::model::{mean_reverting_model, ThetaVector};
use stable_sde::rng::{purpose, stream};
use stable_sde::simulate::{increments, simulate_path, PathConfig};
use stable_sde::stable::StableIndex;

fn main() -> stable_sde::Result<()> {
    let model = mean_reverting_model(10.0);
    let theta = ThetaVector::new(vec![-1.0, 0.5], vec![0.5]);
    let beta = StableIndex::new(1.5)?;
    let seed = 42;
    let cfg = PathConfig { seed, refine: 10, x0: 0.0 };
    let obs = simulate_path(&model, &theta, beta, 2000, 1.0, &cfg, &mut stream(seed, &[purpose::SIMULATE]))?;

    let dx = increments(&obs);
    let biggest = dx.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    println!("N = {}, h = {}, X_T = {:.4}, largest |dX| = {biggest:.4}", obs.n, obs.h, obs.values[obs.n]);

    let path = std::env::temp_dir().join("stable_sde_path.csv");
    write_observations(&obs, &path)?;
    println!("wrote {}", path.display());
    Ok(())
}
