use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::config::{BetaSpec, ExperimentConfig, InitKeyword, InitSpec, SigmaKeyword, SigmaSpec};
use super::files::{self, FitSummary};
use crate::diagnostics::{self, CenterKind, SweepOptions};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::mcmc::{ChainTrace, PriorKind, Sampler};
use crate::model::{ModelSpec, ThetaVector};
use crate::quasi::{MleResult, QuasiInfo, QuasiLikelihood};
use crate::rng::{self, purpose};
use crate::simulate::{increments, simulate_path, ObservationSet, PathConfig};
use crate::stable::{QuadratureConfig, StableIndex, StableLaw};

#[derive(Debug, Parser)]
#[command(name = "stable-sde", version, about = "Inference for SDEs driven by symmetric stable noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Override the config's output directory.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the configured path and write it as CSV.
    Simulate(Common),
    /// Run the sampler; writes trace.csv and summary.json.
    Fit(Common),
    /// Quasi-maximum likelihood estimate with standard errors.
    Mle(Common),
    /// Acceptance rate against N on simulated data.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long)]
        iterations: Option<usize>,
        /// Propose on the raw parameter scale instead of through D_N.
        #[arg(long)]
        no_scale: bool,
    },
    /// Bernstein–von Mises report for a fitted chain.
    Bvm {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Center::Auto)]
        center: Center,
        #[arg(long, default_value_t = 1)]
        thin: usize,
    },
    /// p-p table of posterior mean residuals against the stable law.
    Pp(Common),
    /// Estimate the stable index from the increments of the data.
    EstimateBeta(Common),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Center {
    /// The simulation parameter when there is one, else the quasi-MLE.
    Auto,
    Truth,
    Mle,
}

/// Parse `argv` (including the program name), run, and return the exit
/// status: 0 on success, 1 for user errors, 2 for numerical failures.
/// Failures print one JSON line on stderr.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            report(&ErrorLine { kind: "usage", message: e.to_string().trim().to_string(), details: vec![] });
            return 1;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            report(&ErrorLine::from(&e));
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

#[derive(Debug, Serialize)]
struct ErrorLine {
    kind: &'static str,
    message: String,
    details: Vec<String>,
}

impl From<&Error> for ErrorLine {
    fn from(e: &Error) -> Self {
        let kind = match e {
            Error::Config(_) => "config",
            Error::Data(_) | Error::Csv(_) => "data",
            Error::Io(_) => "io",
            Error::Syntax { .. } | Error::UndeclaredIdentifier(_) => "model",
            _ if e.is_numerical() => "numerical",
            _ => "invalid",
        };
        let details = match e {
            Error::Config(v) => v.clone(),
            _ => vec![],
        };
        ErrorLine { kind, message: e.to_string(), details }
    }
}

fn report(line: &ErrorLine) {
    eprintln!("{}", serde_json::json!({ "error": line }));
}

fn warn(msg: &str) {
    eprintln!("{}", serde_json::json!({ "warning": msg }));
}

/// Everything a command needs after reading the config.
struct Setup {
    cfg: ExperimentConfig,
    model: ModelSpec,
    obs: ObservationSet,
    truth: Option<ThetaVector>,
    out: PathBuf,
}

impl Setup {
    fn new(common: &Common) -> Result<Self> {
        let mut cfg = ExperimentConfig::load(&common.config)?;
        if let Some(s) = common.seed {
            cfg.seed = s;
        }
        if let Some(o) = &common.output {
            cfg.output = o.clone();
        }
        let model = cfg.model_spec()?;
        let (obs, truth) = observations(&cfg, &model)?;
        let out = cfg.output.clone();
        std::fs::create_dir_all(&out)?;
        Ok(Setup { cfg, model, obs, truth, out })
    }

    fn beta(&self) -> Result<StableIndex> {
        match self.cfg.beta {
            BetaSpec::Value(b) => StableIndex::new(b),
            BetaSpec::Keyword(_) => {
                let est = diagnostics::estimate_beta(&increments(&self.obs))?;
                if est.clamped {
                    warn(&format!("estimated beta hit the search boundary at {}", est.beta));
                }
                StableIndex::new(est.beta)
            }
        }
    }
}

fn observations(cfg: &ExperimentConfig, model: &ModelSpec) -> Result<(ObservationSet, Option<ThetaVector>)> {
    if let Some(sim) = &cfg.data.simulate {
        let beta = match cfg.beta {
            BetaSpec::Value(b) => StableIndex::new(b)?,
            BetaSpec::Keyword(_) => {
                return Err(Error::Config(vec!["beta: simulated data needs a numeric beta".into()]));
            }
        };
        let theta0 = cfg.theta_from_map(&sim.theta0);
        let pc = PathConfig { seed: cfg.seed, refine: sim.refine, x0: sim.x0 };
        let mut r = rng::stream(cfg.seed, &[purpose::SIMULATE]);
        let obs = simulate_path(model, &theta0, beta, sim.n, sim.t, &pc, &mut r)?;
        return Ok((obs, Some(theta0)));
    }
    let path = cfg.data.path.as_deref().expect("validated config has a data source");
    let column = cfg.data.column.as_deref().unwrap_or("x");
    let loaded = files::load_csv(path, column, cfg.data.t.expect("validated config has data.t"))?;
    if let Some(w) = loaded.warning() {
        warn(&w);
    }
    Ok((loaded.obs, None))
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate(c) => simulate(&c),
        Command::Fit(c) => fit(&c),
        Command::Mle(c) => mle(&c),
        Command::Sweep { common, replicates, iterations, no_scale } => sweep(&common, replicates, iterations, no_scale),
        Command::Bvm { common, center, thin } => bvm(&common, center, thin),
        Command::Pp(c) => pp(&c),
        Command::EstimateBeta(c) => estimate_beta(&c),
    }
}

fn simulate(c: &Common) -> Result<()> {
    let s = Setup::new(c)?;
    if s.truth.is_none() {
        return Err(Error::Config(vec!["data.simulate: required by `simulate`".into()]));
    }
    let path = s.out.join("observations.csv");
    files::write_observations(&s.obs, &path)?;
    println!("{}", path.display());
    Ok(())
}

fn box_center(model: &ModelSpec) -> Vec<f64> {
    model.lower().iter().zip(model.upper()).map(|(l, u)| 0.5 * (l + u)).collect()
}

fn run_mle(ql: &QuasiLikelihood, cfg: &ExperimentConfig) -> Result<MleResult> {
    ql.mle(&box_center(ql.model()), &cfg.mcmc.optimizer)
}

/// Draw from the prior restricted to the box.
fn prior_draw(model: &ModelSpec, cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    let prior = cfg.prior_spec();
    let mut r = rng::stream(cfg.seed, &[purpose::INIT]);
    for _ in 0..10_000 {
        let theta: Vec<f64> = prior
            .components
            .iter()
            .zip(model.params())
            .map(|(k, spec)| match *k {
                PriorKind::Normal { mean, sd } => mean + sd * r.sample::<f64, _>(StandardNormal),
                PriorKind::Uniform => spec.lower + (spec.upper - spec.lower) * r.random::<f64>(),
            })
            .collect();
        if model.contains(&theta) {
            return Ok(theta);
        }
    }
    Err(Error::InvalidArgument("could not draw an initial value inside the box from the prior".into()))
}

struct Fitted {
    trace: ChainTrace,
    mle: Option<MleResult>,
    beta: StableIndex,
}

fn run_chain(s: &Setup) -> Result<Fitted> {
    let beta = s.beta()?;
    let ql = QuasiLikelihood::new(&s.model, &s.obs, beta, QuadratureConfig::default())?;
    let needs_mle = matches!(s.cfg.mcmc.init, InitSpec::Keyword(InitKeyword::Mle))
        || matches!(s.cfg.mcmc.sigma, SigmaSpec::Keyword(SigmaKeyword::Fisher));
    let mle = if needs_mle { Some(run_mle(&ql, &s.cfg)?) } else { None };
    let init = match &s.cfg.mcmc.init {
        InitSpec::Keyword(InitKeyword::Mle) => mle.as_ref().unwrap().theta.flat(),
        InitSpec::Keyword(InitKeyword::Prior) => prior_draw(&s.model, &s.cfg)?,
        InitSpec::Keyword(InitKeyword::Truth) => s.truth.as_ref().expect("validated").flat(),
        InitSpec::Values(v) => s.cfg.theta_from_map(v).flat(),
    };
    let fisher_inv = match (&s.cfg.mcmc.sigma, &mle) {
        (SigmaSpec::Keyword(SigmaKeyword::Fisher), Some(m)) => {
            let info = ql.fisher_info(&m.theta.flat())?;
            let inv = info.i.spd_inverse()?;
            Some(if s.cfg.mcmc.scale_by_rate { inv } else { unscale(&inv, &info.d_n) })
        }
        _ => None,
    };
    let config = s.cfg.mcmc_config(s.model.dim(), fisher_inv.as_ref())?;
    let prior = s.cfg.prior_spec();
    let trace = Sampler::new(&ql, &prior, &config)?.run(&init)?;
    Ok(Fitted { trace, mle, beta })
}

/// `D^{-1} A D^{-1}` for diagonal `D`.
fn unscale(a: &Matrix, d: &[f64]) -> Matrix {
    let rows = a.rows().iter().enumerate().map(|(i, r)| r.iter().enumerate().map(|(j, x)| x / (d[i] * d[j])).collect()).collect::<Vec<_>>();
    Matrix::from_rows(&rows).expect("square")
}

fn fit(c: &Common) -> Result<()> {
    let s = Setup::new(c)?;
    let f = run_chain(&s)?;
    let burn = s.cfg.mcmc.burn_in;
    let (mean, sd) = f.trace.moments(burn);
    let tail_mean = |xs: &[f64]| crate::quasi::pairwise_sum(&xs[burn..]) / (xs.len() - burn) as f64;
    let summary = FitSummary {
        acceptance_rate: f.trace.acceptance_rate,
        posterior_mean: mean,
        posterior_sd: sd,
        mle: f.mle.as_ref().map(|m| m.theta.flat()),
        beta: f.beta.value(),
        n: s.obs.n,
        t: s.obs.t,
        h: s.obs.h,
        seed: s.cfg.seed,
        param_names: s.model.param_names(),
        variant: s.cfg.mcmc.variant,
        iterations: s.cfg.mcmc.iterations,
        burn_in: burn,
        drift_average: tail_mean(&f.trace.drift_average),
        scale_average: tail_mean(&f.trace.scale_average),
    };
    files::write_trace(&f.trace, &s.out.join("trace.csv"))?;
    echo_config(&s.cfg, &s.out.join("config.toml"))?;
    files::write_json(&summary, &s.out.join("summary.json"))?;
    println!("{}", serde_json::to_string(&summary)?);
    Ok(())
}

#[derive(Serialize)]
struct MleReport {
    param_names: Vec<String>,
    mle: Vec<f64>,
    loglik: f64,
    converged: bool,
    iterations: usize,
    /// Diagonal of `D_N^{-1} I^{-1} D_N^{-1}`, square-rooted.
    std_errors: Vec<f64>,
    beta: f64,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "T")]
    t: f64,
    h: f64,
    seed: u64,
}

fn mle(c: &Common) -> Result<()> {
    let s = Setup::new(c)?;
    let beta = s.beta()?;
    let ql = QuasiLikelihood::new(&s.model, &s.obs, beta, QuadratureConfig::default())?;
    let m = run_mle(&ql, &s.cfg)?;
    if !m.converged {
        warn("optimizer stopped at the iteration limit");
    }
    let theta = m.theta.flat();
    let info = ql.fisher_info(&theta)?;
    let inv = info.i.spd_inverse()?;
    let std_errors = inv.diag().iter().zip(&info.d_n).map(|(v, d)| v.sqrt() / d).collect();
    let report = MleReport {
        param_names: s.model.param_names(),
        mle: theta,
        loglik: m.loglik,
        converged: m.converged,
        iterations: m.iterations,
        std_errors,
        beta: beta.value(),
        n: s.obs.n,
        t: s.obs.t,
        h: s.obs.h,
        seed: s.cfg.seed,
    };
    files::write_json(&report, &s.out.join("mle.json"))?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

/// Observation counts used when the config has no `[sweep]` block.
pub const DEFAULT_N_LIST: [usize; 7] = [10, 50, 100, 250, 500, 1000, 2000];

fn sweep(c: &Common, replicates: Option<usize>, iterations: Option<usize>, no_scale: bool) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&c.config)?;
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    let out = c.output.clone().unwrap_or_else(|| cfg.output.clone());
    let model = cfg.model_spec()?;
    let sim = cfg
        .data
        .simulate
        .as_ref()
        .ok_or_else(|| Error::Config(vec!["data.simulate: `sweep` needs theta0 from a simulate block".into()]))?;
    let beta = match cfg.beta {
        BetaSpec::Value(b) => StableIndex::new(b)?,
        BetaSpec::Keyword(_) => return Err(Error::Config(vec!["beta: `sweep` needs a numeric beta".into()])),
    };
    let theta0 = cfg.theta_from_map(&sim.theta0);
    let block = cfg.sweep.clone();
    let n_list = block.as_ref().map_or(DEFAULT_N_LIST.to_vec(), |b| b.n_list.clone());
    let reps = replicates.or(block.as_ref().map(|b| b.replicates)).unwrap_or(20);
    let iters = iterations.or(block.as_ref().map(|b| b.iterations)).unwrap_or(cfg.mcmc.iterations);
    if reps == 0 || iters < 2 {
        return Err(Error::InvalidArgument("sweep needs at least 1 replicate and 2 iterations".into()));
    }
    let mut opts = SweepOptions::new(model.dim(), iters, reps, cfg.seed);
    opts.t = sim.t;
    opts.prior = cfg.prior_spec();
    opts.scale_by_rate = cfg.mcmc.scale_by_rate && !no_scale;
    if let SigmaSpec::Matrix(rows) = &cfg.mcmc.sigma {
        opts.proposal_cov = Some(Matrix::from_rows(rows)?);
    }
    if let Some(t) = block.as_ref().and_then(|b| b.threads) {
        opts.threads = t.max(1);
    }
    let rows = diagnostics::sweep_acceptance(&model, &theta0, beta, &n_list, &opts)?;
    for r in &rows {
        for (rep, msg) in &r.failures {
            warn(&format!("N = {}, replicate {rep} failed: {msg}", r.n));
        }
    }
    std::fs::create_dir_all(&out)?;
    let path = out.join("sweep.csv");
    files::write_sweep(&rows, &path)?;
    println!("{}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct BvmSummary {
    param_names: Vec<String>,
    center: Vec<f64>,
    center_kind: CenterKind,
    retained_draws: usize,
    acceptance_rate: f64,
    limit_mean: Vec<f64>,
    limit_cov: Vec<Vec<f64>>,
    posterior_mean_rescaled: Vec<f64>,
    per_coordinate_ks: Vec<f64>,
    bl_distance_estimate: f64,
    info: QuasiInfo,
}

fn bvm(c: &Common, center: Center, thin: usize) -> Result<()> {
    let s = Setup::new(c)?;
    let f = run_chain(&s)?;
    let ql = QuasiLikelihood::new(&s.model, &s.obs, f.beta, QuadratureConfig::default())?;
    let (theta_c, kind) = match (center, &s.truth) {
        (Center::Auto | Center::Truth, Some(t)) => (t.clone(), CenterKind::TrueValue),
        (Center::Truth, None) => {
            return Err(Error::InvalidArgument("--center truth needs simulated data".into()));
        }
        _ => {
            let m = match &f.mle {
                Some(m) => m.clone(),
                None => run_mle(&ql, &s.cfg)?,
            };
            (m.theta, CenterKind::QuasiMle)
        }
    };
    let info = ql.fisher_info(&theta_c.flat())?;
    let report = diagnostics::bvm_report(&f.trace, &info, &theta_c, kind, s.cfg.mcmc.burn_in, thin)?;
    let k = report.rescaled_samples.len() as f64;
    let p = s.model.dim();
    let posterior_mean_rescaled =
        (0..p).map(|j| report.rescaled_samples.iter().map(|r| r[j]).sum::<f64>() / k).collect();
    let summary = BvmSummary {
        param_names: s.model.param_names(),
        center: report.center.flat(),
        center_kind: report.center_kind,
        retained_draws: report.rescaled_samples.len(),
        acceptance_rate: f.trace.acceptance_rate,
        limit_mean: report.limit_mean,
        limit_cov: report.limit_cov.rows(),
        posterior_mean_rescaled,
        per_coordinate_ks: report.per_coordinate_ks,
        bl_distance_estimate: report.bl_distance_estimate,
        info,
    };
    files::write_json(&summary, &s.out.join("bvm.json"))?;
    println!("{}", serde_json::to_string(&summary)?);
    Ok(())
}

fn pp(c: &Common) -> Result<()> {
    let s = Setup::new(c)?;
    let f = run_chain(&s)?;
    let law = StableLaw::new(f.beta, QuadratureConfig::default())?;
    let data = diagnostics::pp_data_with(&f.trace.residual_means, &law)?;
    let path = s.out.join("pp.csv");
    files::write_pp(&data, &path)?;
    println!("{}", serde_json::json!({ "path": path, "max_deviation": data.max_deviation() }));
    Ok(())
}

fn estimate_beta(c: &Common) -> Result<()> {
    let s = Setup::new(c)?;
    let est = diagnostics::estimate_beta(&increments(&s.obs))?;
    let v = serde_json::json!({
        "beta": est.beta,
        "clamped": est.clamped,
        "sample_ratio": est.sample_ratio,
        "N": s.obs.n,
    });
    files::write_json(&v, &s.out.join("beta.json"))?;
    println!("{v}");
    Ok(())
}

/// Write the config as it was understood, for the experiment record.
fn echo_config(cfg: &ExperimentConfig, path: &Path) -> Result<()> {
    std::fs::write(path, cfg.to_toml()?)?;
    Ok(())
}
