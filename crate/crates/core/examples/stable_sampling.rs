//! Samplers: the symmetric stable law, the positive mixing law `F_β`, the
//! normal variance mixture `√V·W`, and the conditional law of `V` given the
//! mixture value.

use rand::Rng;
use rand_distr::StandardNormal;
use stable_sde::diagnostics::{ks_pvalue, ks_statistic};
use stable_sde::rng::stream;
use stable_sde::stable::{
    draw_positive_stable, sample_symmetric_stable, ConditionalVarianceSampler, QuadratureConfig, StableIndex,
    StableLaw,
};

fn main() -> stable_sde::Result<()> {
    let beta = StableIndex::new(1.5)?;
    let law = StableLaw::new(beta, QuadratureConfig::default())?;
    let n = 20_000;

    let direct = sample_symmetric_stable(beta, n, &mut stream(1, &[1]));
    let d = ks_statistic(&direct, |x| law.cdf(x));
    println!("direct sampler:   KS = {d:.4}, p = {:.3}", ks_pvalue(d, n));

    let mut r = stream(1, &[2]);
    let mixture: Vec<f64> = (0..n)
        .map(|_| {
            let v = draw_positive_stable(beta, &mut r);
            v.sqrt() * r.sample::<f64, _>(StandardNormal)
        })
        .collect();
    let d = ks_statistic(&mixture, |x| law.cdf(x));
    println!("sqrt(V) W mixture: KS = {d:.4}, p = {:.3}", ks_pvalue(d, n));

    // E[e^{-tV}] = exp(-(2t)^{β/2})
    let mut r = stream(1, &[3]);
    let vs: Vec<f64> = (0..n).map(|_| draw_positive_stable(beta, &mut r)).collect();
    for t in [0.5, 1.0, 2.0] {
        let emp = vs.iter().map(|v| (-t * v).exp()).sum::<f64>() / n as f64;
        println!("Laplace t = {t}: empirical {emp:.4}, exact {:.4}", (-(2.0 * t).powf(0.75)).exp());
    }

    // E[x/V | x] = -g_β(x)
    let cond = ConditionalVarianceSampler::new(beta);
    let mut r = stream(1, &[4]);
    for x in [0.5, 1.0, 3.0] {
        let mut s = 0.0;
        for _ in 0..n {
            s += x / cond.sample(x, &mut r)?;
        }
        println!("x = {x}: mean x/V = {:.4}, -g(x) = {:.4}", s / n as f64, -law.score(x));
    }
    Ok(())
}
