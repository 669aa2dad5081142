//! Acceptance rate against the number of observations, with and without
//! rate-scaled proposals. Pass `full` for the 10⁴-iteration, 20-replicate
//! grid (tens of minutes on one core).

use stable_sde::diagnostics::{sweep_acceptance, SweepOptions};
use stable_sde::io::DEFAULT_N_LIST;
use stable_sde::model::{mean_reverting_model, ThetaVector};
use stable_sde::stable::StableIndex;

fn main() -> stable_sde::Result<()> {
    let full = std::env::args().any(|a| a == "full");
    let (iters, reps) = if full { (10_000, 20) } else { (1000, 3) };
    let model = mean_reverting_model(10.0);
    let theta0 = ThetaVector::new(vec![-1.0, 0.5], vec![0.5]);
    let beta = StableIndex::new(1.5)?;
    for scaled in [true, false] {
        let mut opts = SweepOptions::new(3, iters, reps, 2024);
        opts.scale_by_rate = scaled;
        println!("{}", if scaled { "proposals through D_N" } else { "unscaled proposals" });
        println!("{:>6} {:>10} {:>10}", "N", "mean", "sd");
        for row in sweep_acceptance(&model, &theta0, beta, &DEFAULT_N_LIST, &opts)? {
            println!("{:>6} {:>10.4} {:>10.4}", row.n, row.mean_rate, row.sd_rate);
        }
    }
    Ok(())
}
