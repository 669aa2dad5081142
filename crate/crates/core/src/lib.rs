//! Simulation and Bayesian inference for one-dimensional SDEs
//!
//! ```text
//! dX_t = a(X_t, α) dt + c(X_{t-}, γ) dJ_t
//! ```
//!
//! driven by a symmetric β-stable Lévy process `J`, observed at high
//! frequency on a fixed interval `[0, T]`.
//!
//! The crate covers the whole pipeline:
//!
//! - [`stable`]: density, distribution function, scores and samplers for the
//!   stable law and its positive-stable mixing variance.
//! - [`model`]: a small expression language for drift and scale functions,
//!   with symbolic differentiation.
//! - [`simulate`]: Euler–Maruyama paths.
//! - [`quasi`]: stable quasi-likelihood, scores, Fisher information and the
//!   quasi-maximum likelihood estimator.
//! - [`mcmc`]: the Metropolis-within-Gibbs sampler over the latent-variance
//!   augmentation, and a correlated pseudo-marginal variant.
//! - [`diagnostics`]: acceptance summaries, Bernstein–von Mises checks,
//!   limiting acceptance probabilities, p-p plots, index estimation.
//! - [`io`]: experiment configs, CSV/JSON persistence and the command line.
//!
//! See the `examples/` directory of this crate for runnable walkthroughs.

pub mod diagnostics;
pub mod error;
pub mod io;
pub mod linalg;
pub mod mcmc;
pub mod model;
pub mod quad;
pub mod quasi;
pub mod rng;
pub mod simulate;
pub mod stable;

pub use error::{Error, Result};
