//! Synthetic stand-in for the one-minute IBM series: 1156 clean
//! observations over three trading sessions (T = 1170 minutes) with a few
//! missing prints, written to `examples/data/ibm_standin.csv`. The
//! `configs/ibm_standin.toml` experiment fits it with β fixed at 1.411.
//!
//! ```text
//! cargo run --example ibm_standin
//! cargo run --bin stable-sde -- fit -c crates/core/examples/configs/ibm_standin.toml
//! ```

use std::io::Write;

use stable_sde::model::{mean_reverting_model, ThetaVector};
use stable_sde::rng::{purpose, stream};
use stable_sde::simulate::{simulate_path, PathConfig};
use stable_sde::stable::StableIndex;

const MISSING: [usize; 9] = [17, 203, 204, 388, 391, 640, 777, 1002, 1100];

fn main() -> stable_sde::Result<()> {
    let model = mean_reverting_model(10.0);
    let theta = ThetaVector::new(vec![-0.05, 0.3], vec![-0.2]);
    let beta = StableIndex::new(1.411)?;
    let cfg = PathConfig { seed: 1170, refine: 4, x0: 0.1 };
    let obs = simulate_path(&model, &theta, beta, 1155, 1170.0, &cfg, &mut stream(1170, &[purpose::SIMULATE]))?;

    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data/ibm_standin.csv");
    let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
    writeln!(f, "minute,price")?;
    let mut row = 0;
    for x in &obs.values {
        row += 1;
        while MISSING.contains(&row) {
            writeln!(f, "{row},NA")?;
            row += 1;
        }
        writeln!(f, "{row},{x:?}")?;
    }
    f.flush()?;
    println!("wrote {} ({} clean rows, {} missing)", path.display(), obs.values.len(), MISSING.len());
    Ok(())
}
