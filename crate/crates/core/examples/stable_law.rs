//! Density, distribution function and scores of the symmetric stable law,
//! and the constants of the quasi-Fisher information.

use stable_sde::stable::{fisher_constants, stable_cdf, stable_pdf, QuadratureConfig, StableIndex, StableLaw};

fn main() -> stable_sde::Result<()> {
    let quad = QuadratureConfig::default();
    for beta in [1.0, 1.3, 1.5, 1.8] {
        let b = StableIndex::new(beta)?;
        let law = StableLaw::new(b, quad)?;
        println!("beta = {beta}");
        println!("  {:>6} {:>14} {:>14} {:>14}", "x", "pdf", "cdf", "score g");
        for x in [0.0, 0.5, 1.0, 2.0, 5.0, 20.0] {
            println!(
                "  {x:>6} {:>14.10} {:>14.10} {:>14.10}",
                stable_pdf(x, b, &quad)?,
                stable_cdf(x, b, &quad)?,
                law.score(x)
            );
        }
        let c = fisher_constants(b, &quad)?;
        println!(
            "  C_alpha = {:.6}  C_gamma = {:.6}  C*_alpha = {:.6}  C*_gamma = {:.6}",
            c.c_alpha, c.c_gamma, c.c_alpha_star, c.c_gamma_star
        );
    }
    Ok(())
}
