//! Drift/scale model specification: expressions, parameter box, evaluation.

mod compiled;
mod expr;

pub use compiled::CompiledExpr;
pub use expr::{parse_expr, BinaryOp, Expr, UnaryOp};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A named parameter with its closed interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

impl ParamSpec {
    pub fn new(name: &str, lower: f64, upper: f64) -> Self {
        ParamSpec { name: name.to_string(), lower, upper }
    }
}

/// `θ = (α, γ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaVector {
    pub alpha: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl ThetaVector {
    pub fn new(alpha: Vec<f64>, gamma: Vec<f64>) -> Self {
        ThetaVector { alpha, gamma }
    }

    /// Concatenation `[α..., γ...]`, the layout used everywhere internally.
    pub fn flat(&self) -> Vec<f64> {
        self.alpha.iter().chain(&self.gamma).copied().collect()
    }

    pub fn from_flat(flat: &[f64], p_alpha: usize) -> Self {
        ThetaVector { alpha: flat[..p_alpha].to_vec(), gamma: flat[p_alpha..].to_vec() }
    }
}

/// The model `dX = a(X, α) dt + c(X, γ) dJ` on an axis-aligned parameter box.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    drift_text: String,
    scale_text: String,
    alpha: Vec<ParamSpec>,
    gamma: Vec<ParamSpec>,
    drift: CompiledExpr,
    scale: CompiledExpr,
    drift_grad: Vec<CompiledExpr>,
    scale_grad: Vec<CompiledExpr>,
}

impl ModelSpec {
    pub fn new(drift: &str, scale: &str, alpha: Vec<ParamSpec>, gamma: Vec<ParamSpec>) -> Result<Self> {
        let mut problems = Vec::new();
        if gamma.is_empty() {
            problems.push("the scale needs at least one parameter".to_string());
        }
        let mut seen = std::collections::BTreeSet::new();
        for p in alpha.iter().chain(&gamma) {
            if p.name == "x" || UnaryOp::FUNCTIONS.iter().any(|f| f.name() == p.name) {
                problems.push(format!("`{}` is reserved", p.name));
            }
            if !seen.insert(p.name.clone()) {
                problems.push(format!("parameter `{}` declared twice", p.name));
            }
            if !(p.lower.is_finite() && p.upper.is_finite() && p.lower < p.upper) {
                problems.push(format!("parameter `{}` needs finite bounds lower < upper", p.name));
            }
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems));
        }

        let slots: Vec<String> =
            std::iter::once("x".to_string()).chain(alpha.iter().chain(&gamma).map(|p| p.name.clone())).collect();
        let drift_vars: Vec<&str> = std::iter::once("x").chain(alpha.iter().map(|p| p.name.as_str())).collect();
        let scale_vars: Vec<&str> = std::iter::once("x").chain(gamma.iter().map(|p| p.name.as_str())).collect();
        let drift_expr = parse_expr(drift, &drift_vars)?;
        let scale_expr = parse_expr(scale, &scale_vars)?;
        let drift_grad = alpha
            .iter()
            .map(|p| CompiledExpr::new(&drift_expr.diff(&p.name), &slots))
            .collect::<Result<Vec<_>>>()?;
        let scale_grad = gamma
            .iter()
            .map(|p| CompiledExpr::new(&scale_expr.diff(&p.name), &slots))
            .collect::<Result<Vec<_>>>()?;
        Ok(ModelSpec {
            drift_text: drift.to_string(),
            scale_text: scale.to_string(),
            drift: CompiledExpr::new(&drift_expr, &slots)?,
            scale: CompiledExpr::new(&scale_expr, &slots)?,
            alpha,
            gamma,
            drift_grad,
            scale_grad,
        })
    }

    pub fn drift_text(&self) -> &str {
        &self.drift_text
    }

    pub fn scale_text(&self) -> &str {
        &self.scale_text
    }

    pub fn drift_expr(&self) -> &Expr {
        self.drift.source()
    }

    pub fn scale_expr(&self) -> &Expr {
        self.scale.source()
    }

    pub fn p_alpha(&self) -> usize {
        self.alpha.len()
    }

    pub fn p_gamma(&self) -> usize {
        self.gamma.len()
    }

    pub fn dim(&self) -> usize {
        self.alpha.len() + self.gamma.len()
    }

    pub fn alpha_params(&self) -> &[ParamSpec] {
        &self.alpha
    }

    pub fn gamma_params(&self) -> &[ParamSpec] {
        &self.gamma
    }

    pub fn params(&self) -> impl Iterator<Item = &ParamSpec> {
        self.alpha.iter().chain(&self.gamma)
    }

    pub fn param_names(&self) -> Vec<String> {
        self.params().map(|p| p.name.clone()).collect()
    }

    /// Membership of a flat `[α, γ]` vector in the closed box.
    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim() && self.params().zip(theta).all(|(p, &v)| v >= p.lower && v <= p.upper)
    }

    pub fn lower(&self) -> Vec<f64> {
        self.params().map(|p| p.lower).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.params().map(|p| p.upper).collect()
    }

    fn env(&self, x: f64, theta: &[f64]) -> Vec<f64> {
        let mut env = Vec::with_capacity(1 + theta.len());
        env.push(x);
        env.extend_from_slice(theta);
        env
    }

    pub fn drift_at(&self, x: f64, theta: &[f64]) -> Result<f64> {
        self.drift.eval(&self.env(x, theta))
    }

    pub fn scale_at(&self, x: f64, theta: &[f64]) -> Result<f64> {
        self.scale.eval(&self.env(x, theta))
    }

    /// Drift and scale at every point of `xs`, with observation-indexed errors.
    /// Scale must be strictly positive.
    pub fn coefficients(&self, theta: &[f64], xs: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut env = self.env(0.0, theta);
        let mut drift = Vec::with_capacity(xs.len());
        let mut scale = Vec::with_capacity(xs.len());
        for (i, &x) in xs.iter().enumerate() {
            env[0] = x;
            let a = self.drift.eval(&env).map_err(|e| violation(i, e))?;
            let c = self.scale.eval(&env).map_err(|e| violation(i, e))?;
            if !(c > 0.0) {
                return Err(Error::NonPositiveScale { index: i, value: c });
            }
            drift.push(a);
            scale.push(c);
        }
        Ok((drift, scale))
    }

    /// `∂_α a(x, α)` into `out` (length `p_alpha`).
    pub fn drift_gradient(&self, x: f64, theta: &[f64], out: &mut [f64]) -> Result<()> {
        let env = self.env(x, theta);
        for (o, g) in out.iter_mut().zip(&self.drift_grad) {
            *o = g.eval(&env)?;
        }
        Ok(())
    }

    /// `∂_γ c(x, γ)` into `out` (length `p_gamma`).
    pub fn scale_gradient(&self, x: f64, theta: &[f64], out: &mut [f64]) -> Result<()> {
        let env = self.env(x, theta);
        for (o, g) in out.iter_mut().zip(&self.scale_grad) {
            *o = g.eval(&env)?;
        }
        Ok(())
    }
}

fn violation(index: usize, e: Error) -> Error {
    Error::ModelViolation { index, message: e.to_string() }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ViolationKind {
    NonPositiveScale(f64),
    DriftFailed(String),
    ScaleFailed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub x: f64,
    pub theta: ThetaVector,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checked: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Probe positivity of the scale and evaluability of both expressions
/// over `theta_probe × x_grid`.
pub fn validate_model(spec: &ModelSpec, theta_probe: &[ThetaVector], x_grid: &[f64]) -> ValidationReport {
    let mut report = ValidationReport::default();
    for theta in theta_probe {
        let flat = theta.flat();
        for &x in x_grid {
            report.checked += 1;
            if let Err(e) = spec.drift_at(x, &flat) {
                report.violations.push(Violation { x, theta: theta.clone(), kind: ViolationKind::DriftFailed(e.to_string()) });
            }
            match spec.scale_at(x, &flat) {
                Ok(c) if c > 0.0 => {}
                Ok(c) => report.violations.push(Violation {
                    x,
                    theta: theta.clone(),
                    kind: ViolationKind::NonPositiveScale(c),
                }),
                Err(e) => report.violations.push(Violation {
                    x,
                    theta: theta.clone(),
                    kind: ViolationKind::ScaleFailed(e.to_string()),
                }),
            }
        }
    }
    report
}

/// The mean-reverting model used in the simulation studies:
/// `a(x, α) = α₁(x − α₂)`, `c(x, γ) = exp(γ cos x)`, on `[-bound, bound]³`.
pub fn mean_reverting_model(bound: f64) -> ModelSpec {
    ModelSpec::new(
        "alpha1*(x-alpha2)",
        "exp(gamma*cos(x))",
        vec![ParamSpec::new("alpha1", -bound, bound), ParamSpec::new("alpha2", -bound, bound)],
        vec![ParamSpec::new("gamma", -bound, bound)],
    )
    .expect("built-in model is valid")
}
