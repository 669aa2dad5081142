use rand::Rng;
use rand_distr::StandardNormal;
use stable_sde::diagnostics::{ks_pvalue, ks_statistic};
use stable_sde::mcmc::{run_mwg, MCMCConfig, PriorSpec, Sampler};
use stable_sde::model::{mean_reverting_model, ModelSpec, ParamSpec, ThetaVector};
use stable_sde::quasi::{complete_ratio, QuasiLikelihood};
use stable_sde::rng::stream;
use stable_sde::simulate::{simulate_path, ObservationSet, PathConfig};
use stable_sde::stable::{
    draw_positive_stable, ConditionalVarianceSampler, QuadratureConfig, StableIndex, StableLaw,
};

fn scale_only(lo: f64, hi: f64) -> ModelSpec {
    ModelSpec::new("0", "gamma", vec![], vec![ParamSpec::new("gamma", lo, hi)]).unwrap()
}

fn normal_pdf(x: f64, v: f64) -> f64 {
    (-0.5 * x * x / v).exp() / (2.0 * std::f64::consts::PI * v).sqrt()
}

#[test]
fn variance_mixture_reproduces_the_stable_density() {
    let b = StableIndex::new(1.5).unwrap();
    let law = StableLaw::new(b, QuadratureConfig::default()).unwrap();
    let cond = ConditionalVarianceSampler::new(b);
    let n = 100_000;
    for (k, eps) in [0.3f64, 1.0, 2.5].into_iter().enumerate() {
        let phi = law.pdf(eps);
        // ∫ N(ε; 0, v) F_β(dv) = φ_β(ε)
        let mut r = stream(17, &[k as u64, 0]);
        let ys: Vec<f64> = (0..n).map(|_| normal_pdf(eps, draw_positive_stable(b, &mut r))).collect();
        let (m, se) = mean_se(&ys);
        assert!((m - phi).abs() < 3.0 * se, "eps {eps}: {m} ± {se} vs {phi}");
        // under F_β(dv | ε) the complete density has harmonic mean φ_β(ε)
        let mut r = stream(17, &[k as u64, 1]);
        let ys: Vec<f64> = (0..n).map(|_| 1.0 / normal_pdf(eps, cond.sample(eps, &mut r).unwrap())).collect();
        let (m, se) = mean_se(&ys);
        assert!((m - 1.0 / phi).abs() < 3.0 * se, "eps {eps}: {m} ± {se} vs {}", 1.0 / phi);
    }
}

fn mean_se(ys: &[f64]) -> (f64, f64) {
    let n = ys.len() as f64;
    let m = ys.iter().sum::<f64>() / n;
    let v = ys.iter().map(|y| (y - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// One-parameter, one-observation instance on a three-point grid. The
/// move refreshes `V | ε(θ)` exactly, proposes one of the other two points
/// and accepts on the complete-data ratio. Starting from the exact
/// quasi-posterior, transition frequencies must be symmetric.
#[test]
fn three_point_move_is_reversible() {
    let b = StableIndex::new(1.5).unwrap();
    let model = scale_only(0.1, 10.0);
    let obs = ObservationSet::new(vec![0.0, 1.3], 1.0).unwrap();
    let ql = QuasiLikelihood::new(&model, &obs, b, QuadratureConfig::default()).unwrap();
    let grid = [0.5, 1.0, 2.5];
    let fits: Vec<_> = grid.iter().map(|g| ql.fit(&[*g]).unwrap()).collect();
    let w: Vec<f64> = grid.iter().map(|g| ql.loglik(&[*g], false).unwrap().exp()).collect();
    let total: f64 = w.iter().sum();
    let pi: Vec<f64> = w.iter().map(|x| x / total).collect();
    let cond = ConditionalVarianceSampler::new(b);

    let steps = 1_000_000;
    let mut counts = [[0u64; 3]; 3];
    let mut r = stream(99, &[]);
    for _ in 0..steps {
        let u: f64 = r.random();
        let i = if u < pi[0] { 0 } else if u < pi[0] + pi[1] { 1 } else { 2 };
        let v = cond.sample(fits[i].eps[0], &mut r).unwrap();
        let j = (i + 1 + r.random_range(0..2)) % 3;
        let log_a = complete_ratio(&fits[i], &fits[j], &[v]).unwrap();
        let k = if r.random::<f64>() < log_a.exp() { j } else { i };
        counts[i][k] += 1;
    }
    let m = steps as f64;
    for i in 0..3 {
        for j in (i + 1)..3 {
            let (a, c) = (counts[i][j] as f64 / m, counts[j][i] as f64 / m);
            // multinomial s.e. of the difference of two cell frequencies
            let se = ((a + c - (a - c).powi(2)) / m).sqrt();
            assert!((a - c).abs() < 3.0 * se, "{i}->{j}: {a} vs {c} (se {se})");
        }
    }
    // the stationary mass is preserved as well
    for k in 0..3 {
        let after = (0..3).map(|i| counts[i][k]).sum::<u64>() as f64 / m;
        let se = (pi[k] * (1.0 - pi[k]) / m).sqrt();
        assert!((after - pi[k]).abs() < 4.0 * se, "state {k}: {after} vs {}", pi[k]);
    }
}

#[test]
fn chain_targets_the_quasi_posterior() {
    let b = StableIndex::new(1.5).unwrap();
    let model = scale_only(0.2, 5.0);
    let obs = ObservationSet::new(vec![0.0, 0.7, 0.1, 1.4, 1.2, 0.9], 1.0).unwrap();
    let ql = QuasiLikelihood::new(&model, &obs, b, QuadratureConfig::default()).unwrap();

    // exact posterior CDF under the uniform prior, by the trapezoid rule
    let k = 20_000;
    let xs: Vec<f64> = (0..=k).map(|i| 0.2 + 4.8 * i as f64 / k as f64).collect();
    let dens: Vec<f64> = xs.iter().map(|g| ql.loglik(&[*g], false).unwrap().exp()).collect();
    let mut cdf = vec![0.0; k + 1];
    for i in 1..=k {
        cdf[i] = cdf[i - 1] + 0.5 * (dens[i] + dens[i - 1]) * (xs[i] - xs[i - 1]);
    }
    let z = cdf[k];
    let post_cdf = |g: f64| {
        let t = ((g - 0.2) / 4.8 * k as f64).clamp(0.0, k as f64 - 1e-9);
        let i = t.floor() as usize;
        (cdf[i] + (t - i as f64) * (cdf[i + 1] - cdf[i])) / z
    };

    let prior = PriorSpec::uniform(1);
    let config = MCMCConfig::new(200_001, 1, 5);
    let trace = Sampler::new(&ql, &prior, &config).unwrap().run(&[1.0]).unwrap();
    let draws: Vec<f64> = trace.thetas.iter().skip(1).step_by(20).map(|t| t[0]).collect();
    let d = ks_statistic(&draws, post_cdf);
    let p = ks_pvalue(d, draws.len());
    assert!(p > 1e-3, "KS {d}, p {p}, acceptance {}", trace.acceptance_rate);
}

#[test]
fn chains_are_reproducible_and_stay_in_the_box() {
    let model = ModelSpec::new(
        "alpha1*(x-alpha2)",
        "exp(gamma*cos(x))",
        vec![ParamSpec::new("alpha1", -2.0, 0.0), ParamSpec::new("alpha2", 0.0, 1.0)],
        vec![ParamSpec::new("gamma", 0.3, 0.7)],
    )
    .unwrap();
    let b = StableIndex::new(1.5).unwrap();
    let truth = ThetaVector::new(vec![-1.0, 0.5], vec![0.5]);
    let obs = simulate_path(&model, &truth, b, 300, 1.0, &PathConfig::default(), &mut stream(1, &[])).unwrap();
    let prior = PriorSpec::uniform(3);
    let config = MCMCConfig::new(3000, 3, 12);
    let t1 = run_mwg(&model, &obs, b, &prior, &config, &truth).unwrap();
    let t2 = run_mwg(&model, &obs, b, &prior, &config, &truth).unwrap();
    assert_eq!(t1, t2);
    assert!(t1.thetas.iter().all(|t| model.contains(t)));
    assert!(t1.acceptance_rate > 0.0 && t1.acceptance_rate < 1.0);
    let other = run_mwg(&model, &obs, b, &prior, &MCMCConfig::new(3000, 3, 13), &truth).unwrap();
    assert_ne!(t1.thetas, other.thetas);
}

#[test]
fn location_posterior_is_centered_for_symmetric_data() {
    let model = ModelSpec::new(
        "alpha",
        "1 + 0*g",
        vec![ParamSpec::new("alpha", -5.0, 5.0)],
        vec![ParamSpec::new("g", -1.0, 1.0)],
    )
    .unwrap();
    let b = StableIndex::new(1.5).unwrap();
    let mut r = stream(8, &[]);
    let mut values = vec![0.0];
    for _ in 0..100 {
        let d: f64 = r.sample::<f64, _>(StandardNormal).abs() * 0.1;
        for s in [d, -d] {
            values.push(values.last().unwrap() + s);
        }
    }
    let obs = ObservationSet::new(values, 1.0).unwrap();
    let prior = PriorSpec::standard_normal(2);
    let trace = run_mwg(&model, &obs, b, &prior, &MCMCConfig::new(40_001, 2, 3), &ThetaVector::new(vec![0.5], vec![0.0]))
        .unwrap();
    let xs: Vec<f64> = trace.column(0)[1001..].to_vec();
    // batch means for the Monte Carlo error
    let batches: Vec<f64> = xs.chunks(1000).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
    let (m, se) = mean_se(&batches);
    assert!(m.abs() < 4.0 * se + 1e-3, "posterior mean {m} ± {se}");
}

#[test]
fn proposals_through_the_rate_keep_acceptance_away_from_zero() {
    let model = mean_reverting_model(10.0);
    let b = StableIndex::new(1.5).unwrap();
    let truth = ThetaVector::new(vec![-1.0, 0.5], vec![0.5]);
    let obs = simulate_path(&model, &truth, b, 1000, 1.0, &PathConfig::default(), &mut stream(2, &[])).unwrap();
    let prior = PriorSpec::standard_normal(3);
    let scaled = run_mwg(&model, &obs, b, &prior, &MCMCConfig::new(2000, 3, 2), &truth).unwrap();
    let mut raw = MCMCConfig::new(2000, 3, 2);
    raw.scale_by_rate = false;
    let raw = run_mwg(&model, &obs, b, &prior, &raw, &truth).unwrap();
    assert!(scaled.acceptance_rate > 2.0 * raw.acceptance_rate, "{} vs {}", scaled.acceptance_rate, raw.acceptance_rate);
}
