//! Metropolis-within-Gibbs on simulated data: posterior summaries, the
//! time-averaged coefficients and the trace file.

use stable_sde::diagnostics::acceptance_summary;
use stable_sde::io::write_trace;
use stable_sde::mcmc::{run_mwg, MCMCConfig, PriorSpec};
use stable_sde::model::{mean_reverting_model, ThetaVector};
use stable_sde::rng::{purpose, stream};
use stable_sde::simulate::{simulate_path, PathConfig};
use stable_sde::stable::StableIndex;

fn main() -> stable_sde::Result<()> {
    let model = mean_reverting_model(10.0);
    let truth = ThetaVector::new(vec![-1.0, 0.5], vec![0.5]);
    let beta = StableIndex::new(1.5)?;
    let obs = simulate_path(&model, &truth, beta, 500, 1.0, &PathConfig::default(), &mut stream(3, &[purpose::SIMULATE]))?;

    let config = MCMCConfig::new(5000, model.dim(), 3);
    let trace = run_mwg(&model, &obs, beta, &PriorSpec::standard_normal(3), &config, &truth)?;
    let burn = 1000;
    let (mean, sd) = trace.moments(burn);
    let acc = acceptance_summary(&trace)?;
    println!("acceptance rate {:.3}", acc.rate);
    for (k, name) in trace.param_names.iter().enumerate() {
        println!("{name:>7}: mean {:>8.4}  sd {:.4}", mean[k], sd[k]);
    }
    let tail = |xs: &[f64]| xs[burn..].iter().sum::<f64>() / (xs.len() - burn) as f64;
    println!("(1/N) sum a = {:.4}, (1/N) sum c = {:.4}", tail(&trace.drift_average), tail(&trace.scale_average));

    let path = std::env::temp_dir().join("stable_sde_trace.csv");
    write_trace(&trace, &path)?;
    println!("wrote {}", path.display());
    Ok(())
}
