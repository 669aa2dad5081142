//! Experiment configs, CSV/JSON persistence and the command line.
//!
//! Config files are TOML:
//!
//! ```toml
//! seed = 1
//! beta = 1.5            # or "estimate"
//! output = "out"
//!
//! [model]
//! drift = "alpha1*(x-alpha2)"
//! scale = "exp(gamma*cos(x))"
//! alpha = [{ name = "alpha1", lower = -10.0, upper = 10.0 },
//!          { name = "alpha2", lower = -10.0, upper = 10.0 }]
//! gamma = [{ name = "gamma", lower = -10.0, upper = 10.0 }]
//!
//! [data.simulate]       # or: [data] path = "...", column = "...", t = ...
//! n = 2000
//! theta0 = { alpha1 = -1.0, alpha2 = 0.5, gamma = 0.5 }
//!
//! [prior]
//! default = { kind = "normal", mean = 0.0, sd = 1.0 }
//!
//! [mcmc]
//! iterations = 10000
//! variant = "mwg"       # or "cpm" with rho
//! sigma = "default"     # "fisher" or an explicit matrix
//! init = "mle"          # "prior", "truth" or a name = value table
//! ```

mod cli;
mod config;
mod files;

pub use cli::{run_command, DEFAULT_N_LIST};
pub use config::{
    BetaKeyword, BetaSpec, DataBlock, ExperimentConfig, InitKeyword, InitSpec, McmcBlock, ModelBlock, PriorBlock,
    SigmaKeyword, SigmaSpec, SimulateBlock, SweepBlock,
};
pub use files::{
    load_csv, read_trace, write_json, write_observations, write_pp, write_sweep, write_trace, FitSummary,
    LoadedSeries, TraceTable,
};
