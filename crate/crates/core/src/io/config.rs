use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::mcmc::{MCMCConfig, PriorKind, PriorSpec, Variant};
use crate::model::{ModelSpec, ParamSpec, ThetaVector};
use crate::quasi::OptimizerConfig;
use crate::stable::{EnvelopeMode, StableIndex};

/// A complete experiment description, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub beta: BetaSpec,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    pub model: ModelBlock,
    pub data: DataBlock,
    #[serde(default)]
    pub prior: PriorBlock,
    #[serde(default)]
    pub mcmc: McmcBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepBlock>,
}

fn default_output() -> PathBuf {
    PathBuf::from("output")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaSpec {
    Value(f64),
    Keyword(BetaKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaKeyword {
    Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub drift: String,
    pub scale: String,
    pub alpha: Vec<ParamSpec>,
    pub gamma: Vec<ParamSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
    /// Terminal time for file data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateBlock {
    pub n: usize,
    #[serde(default = "one")]
    pub t: f64,
    pub theta0: BTreeMap<String, f64>,
    #[serde(default)]
    pub x0: f64,
    #[serde(default = "one_usize")]
    pub refine: usize,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

/// Prior for every parameter, with per-name overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorBlock {
    #[serde(default = "standard_normal")]
    pub default: PriorKind,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, PriorKind>,
}

fn standard_normal() -> PriorKind {
    PriorKind::Normal { mean: 0.0, sd: 1.0 }
}

impl Default for PriorBlock {
    fn default() -> Self {
        PriorBlock { default: standard_normal(), params: BTreeMap::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaSpec {
    Keyword(SigmaKeyword),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaKeyword {
    /// `(2.38²/p) I`
    Default,
    /// `(2.38²/p) I(θ̂)^{-1}`
    Fisher,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitSpec {
    Keyword(InitKeyword),
    Values(BTreeMap<String, f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKeyword {
    Mle,
    Prior,
    /// The simulation parameter (simulated data only).
    Truth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcBlock {
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub burn_in: usize,
    #[serde(default)]
    pub variant: Variant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default = "default_sigma")]
    pub sigma: SigmaSpec,
    #[serde(default = "default_init")]
    pub init: InitSpec,
    #[serde(default = "yes")]
    pub scale_by_rate: bool,
    #[serde(default)]
    pub record_variances: bool,
    #[serde(default)]
    pub envelope: EnvelopeMode,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
}

fn default_iterations() -> usize {
    10_000
}

fn default_sigma() -> SigmaSpec {
    SigmaSpec::Keyword(SigmaKeyword::Default)
}

fn default_init() -> InitSpec {
    InitSpec::Keyword(InitKeyword::Mle)
}

fn yes() -> bool {
    true
}

impl Default for McmcBlock {
    fn default() -> Self {
        McmcBlock {
            iterations: default_iterations(),
            burn_in: 0,
            variant: Variant::Mwg,
            rho: None,
            sigma: default_sigma(),
            init: default_init(),
            scale_by_rate: true,
            record_variances: false,
            envelope: EnvelopeMode::ExactBound,
            optimizer: OptimizerConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub n_list: Vec<usize>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub threads: Option<usize>,
}

fn default_replicates() -> usize {
    20
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(vec![e.to_string()]))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read a config; a relative `data.path` is resolved against the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(p) = cfg.data.path.as_mut() {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(vec![e.to_string()]))
    }

    /// Collect every problem rather than stopping at the first.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let names: Vec<&str> =
            self.model.alpha.iter().chain(&self.model.gamma).map(|p| p.name.as_str()).collect();
        if let Err(e) = self.model_spec() {
            match e {
                Error::Config(v) => problems.extend(v),
                e => problems.push(format!("model: {e}")),
            }
        }
        match self.beta {
            BetaSpec::Value(b) => {
                if StableIndex::new(b).is_err() {
                    problems.push(format!("beta: must lie in [1, 2), got {b}"));
                }
            }
            BetaSpec::Keyword(BetaKeyword::Estimate) => {}
        }
        match (&self.data.path, &self.data.simulate) {
            (Some(_), Some(_)) => problems.push("data: give exactly one of `path` and `simulate`, not both".into()),
            (None, None) => problems.push("data: one of `path` and `simulate` is required".into()),
            (Some(_), None) => match self.data.t {
                Some(t) if t > 0.0 && t.is_finite() => {}
                Some(t) => problems.push(format!("data.t: must be positive, got {t}")),
                None => problems.push("data.t: required with data.path".into()),
            },
            (None, Some(sim)) => {
                if sim.n == 0 {
                    problems.push("data.simulate.n: must be at least 1".into());
                }
                if !(sim.t > 0.0 && sim.t.is_finite()) {
                    problems.push(format!("data.simulate.t: must be positive, got {}", sim.t));
                }
                if sim.refine == 0 {
                    problems.push("data.simulate.refine: must be at least 1".into());
                }
                check_names("data.simulate.theta0", sim.theta0.keys(), &names, &mut problems);
                for n in &names {
                    if !sim.theta0.contains_key(*n) {
                        problems.push(format!("data.simulate.theta0: missing value for `{n}`"));
                    }
                }
            }
        }
        if self.data.simulate.is_some() && (self.data.column.is_some() || self.data.t.is_some()) {
            problems.push("data: `column` and `t` apply to data.path only".into());
        }
        check_names("prior.params", self.prior.params.keys(), &names, &mut problems);
        if let InitSpec::Values(v) = &self.mcmc.init {
            check_names("mcmc.init", v.keys(), &names, &mut problems);
            for n in &names {
                if !v.contains_key(*n) {
                    problems.push(format!("mcmc.init: missing value for `{n}`"));
                }
            }
        }
        if matches!(self.mcmc.init, InitSpec::Keyword(InitKeyword::Truth)) && self.data.simulate.is_none() {
            problems.push("mcmc.init: `truth` needs simulated data".into());
        }
        if self.mcmc.iterations < 2 {
            problems.push("mcmc.iterations: must be at least 2".into());
        }
        if self.mcmc.burn_in >= self.mcmc.iterations {
            problems.push("mcmc.burn_in: must be below mcmc.iterations".into());
        }
        match (self.mcmc.variant, self.mcmc.rho) {
            (Variant::Cpm, None) => problems.push("mcmc.rho: required for variant cpm".into()),
            (_, Some(r)) if !(0.0..=1.0).contains(&r) => problems.push(format!("mcmc.rho: must lie in [0, 1], got {r}")),
            _ => {}
        }
        if let SigmaSpec::Matrix(rows) = &self.mcmc.sigma {
            match Matrix::from_rows(rows) {
                Ok(m) if m.dim() == names.len() && m.is_symmetric(1e-12) && m.cholesky().is_ok() => {}
                _ => problems.push(format!(
                    "mcmc.sigma: must be a symmetric positive definite {0}×{0} matrix",
                    names.len()
                )),
            }
        }
        if let Some(s) = &self.sweep {
            if s.n_list.is_empty() || s.n_list.contains(&0) {
                problems.push("sweep.n_list: must be a nonempty list of positive counts".into());
            }
            if s.replicates == 0 {
                problems.push("sweep.replicates: must be positive".into());
            }
            if s.iterations < 2 {
                problems.push("sweep.iterations: must be at least 2".into());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        ModelSpec::new(&self.model.drift, &self.model.scale, self.model.alpha.clone(), self.model.gamma.clone())
    }

    /// Resolve a name → value table into `θ` in model order.
    pub fn theta_from_map(&self, map: &BTreeMap<String, f64>) -> ThetaVector {
        let get = |p: &ParamSpec| map[&p.name];
        ThetaVector::new(self.model.alpha.iter().map(get).collect(), self.model.gamma.iter().map(get).collect())
    }

    pub fn prior_spec(&self) -> PriorSpec {
        let components = self
            .model
            .alpha
            .iter()
            .chain(&self.model.gamma)
            .map(|p| *self.prior.params.get(&p.name).unwrap_or(&self.prior.default))
            .collect();
        PriorSpec { components }
    }

    /// MCMC settings for a chain of dimension `p`; `fisher_inverse` is
    /// needed only for `sigma = "fisher"`.
    pub fn mcmc_config(&self, p: usize, fisher_inverse: Option<&Matrix>) -> Result<MCMCConfig> {
        let mut cfg = MCMCConfig::new(self.mcmc.iterations, p, self.seed);
        cfg.variant = self.mcmc.variant;
        cfg.rho = self.mcmc.rho;
        cfg.record_variances = self.mcmc.record_variances;
        cfg.scale_by_rate = self.mcmc.scale_by_rate;
        cfg.envelope = self.mcmc.envelope;
        cfg.proposal_cov = match &self.mcmc.sigma {
            SigmaSpec::Keyword(SigmaKeyword::Default) => MCMCConfig::default_cov(p),
            SigmaSpec::Keyword(SigmaKeyword::Fisher) => fisher_inverse
                .ok_or_else(|| Error::InvalidArgument("sigma = \"fisher\" needs the information matrix".into()))?
                .scale(2.38 * 2.38 / p as f64),
            SigmaSpec::Matrix(rows) => Matrix::from_rows(rows)?,
        };
        Ok(cfg)
    }
}

fn check_names<'a>(field: &str, keys: impl Iterator<Item = &'a String>, names: &[&str], problems: &mut Vec<String>) {
    for k in keys {
        if !names.contains(&k.as_str()) {
            problems.push(format!("{field}: `{k}` is not a declared parameter"));
        }
    }
}
