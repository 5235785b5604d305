//! Residuals of the Hamilton-Jacobi-Bellman variational inequalities.
//!
//! For a candidate value function `V` the generator
//!
//! ```text
//! (L − δ)V(x) = (rx − p)V'(x) + ½[(σ_p + ρσ_R x)² + σ_R²(1 − ρ²)x²]V''(x)
//!             + λ(E[V(x + X)] − V(x)) − δV(x)
//! ```
//!
//! is evaluated on a grid together with the gradient constraints, boundary
//! conditions and smooth-fit conditions of the problem at hand. The jump
//! expectation is split at the barrier: below it `V(x + z)f(z)` is integrated
//! numerically; above it `V` is linear and the tail is available in closed form.

use serde::Serialize;
use thiserror::Error;

use crate::model::{CostParams, ModelParams};
use crate::numerics::{self, NumericsError, Tolerance};
use crate::solution::{Problem, ValueFunction};

#[derive(Debug, Error)]
pub enum HjbError {
    #[error("a tabulated Monte Carlo value function cannot be checked against the variational inequalities")]
    NotVerifiable,
    #[error("the residual grid is empty")]
    EmptyGrid,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Pass thresholds of the residual checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HjbTolerances {
    /// `|(L − δ)V|` on the continuation region and boundary equalities.
    pub equality: f64,
    /// One-sided inequalities such as `(L − δ)V ≤ 0` and `α − V' ≤ 0`.
    pub inequality: f64,
    /// `|V'(b−) − α|`.
    pub smooth_fit: f64,
    /// `|V''(b−)|` when the surplus has a diffusion part.
    pub second_order_fit: f64,
}

impl Default for HjbTolerances {
    fn default() -> Self {
        Self { equality: 1e-6, inequality: 1e-8, smooth_fit: 1e-6, second_order_fit: 1e-5 }
    }
}

/// One named pass/fail check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// The quantity compared against `tolerance`; checks pass when `value <= tolerance`.
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    pub fn new(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.to_string(), value, tolerance, passed: value <= tolerance }
    }
}

/// Generator residual and derivatives at one grid point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResidualPoint {
    pub x: f64,
    pub value: f64,
    pub derivative: f64,
    pub generator: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    pub problem: Problem,
    pub barrier: f64,
    pub points: Vec<ResidualPoint>,
    pub checks: Vec<Check>,
}

impl ResidualReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Appends further checks, e.g. the coupling conditions of the combined problem.
    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }
}

/// `n` equally spaced points on `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Residual grid used when none is supplied: interior points of `(0, 2b]`
/// (or `(0, 2]` for a zero barrier).
pub fn default_grid(barrier: f64, n: usize) -> Vec<f64> {
    let hi = if barrier > 0.0 { 2.0 * barrier } else { 2.0 };
    (1..=n).map(|i| hi * i as f64 / n as f64).collect()
}

fn quadrature_tolerance() -> Tolerance {
    Tolerance::new(1e-13, 1e-12, 2000)
}

/// `E[V(x + X)]` for a value function that is linear with slope `α` above its barrier.
pub fn jump_expectation(value: &ValueFunction, model: &ModelParams, x: f64) -> Result<f64, NumericsError> {
    let b = value.barrier();
    let alpha = value.alpha();
    let jump = &model.jump;
    if x >= b {
        return Ok(value.value(x) + alpha * jump.mean());
    }
    let gap = b - x;
    let below = numerics::integrate(|z| value.value(x + z) * jump.density(z), 0.0, gap, &quadrature_tolerance())?;
    let above = (value.value(b) + alpha * (x - b)) * jump.tail(gap) + alpha * jump.partial_mean_above(gap);
    Ok(below + above)
}

/// `(L − δ)V(x)`, using left derivatives at the barrier.
pub fn generator(value: &ValueFunction, model: &ModelParams, delta: f64, x: f64) -> Result<f64, NumericsError> {
    let [v, v1, v2] = value.eval(x);
    let (drift, diffusion) = model.generator_coefficients(x);
    let jumps = model.lambda * (jump_expectation(value, model, x)? - v);
    Ok(drift * v1 + diffusion * v2 + jumps - delta * v)
}

fn max_of(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(f64::NEG_INFINITY, f64::max)
}

/// Evaluates the residual suite of `problem` (dividends or injections) for `value` on `grid`.
///
/// The combined problem reuses the suite of the chosen branch; its coupling
/// conditions are added by the combined solver.
pub fn residual_report(
    problem: Problem,
    value: &ValueFunction,
    model: &ModelParams,
    costs: &CostParams,
    grid: &[f64],
    tol: &HjbTolerances,
) -> Result<ResidualReport, HjbError> {
    if matches!(value, ValueFunction::Tabulated { .. }) {
        return Err(HjbError::NotVerifiable);
    }
    let grid: Vec<f64> = grid.iter().copied().filter(|x| *x >= 0.0 && x.is_finite()).collect();
    if grid.is_empty() {
        return Err(HjbError::EmptyGrid);
    }
    let b = value.barrier();
    let alpha = costs.alpha;
    let points = grid
        .iter()
        .map(|&x| {
            let [v, v1, _] = value.eval(x);
            Ok(ResidualPoint { x, value: v, derivative: v1, generator: generator(value, model, costs.delta, x)? })
        })
        .collect::<Result<Vec<_>, NumericsError>>()?;

    let mut checks = Vec::new();
    let inside: Vec<&ResidualPoint> = points.iter().filter(|p| p.x > 0.0 && p.x < b).collect();
    let continuation = max_of(inside.iter().map(|p| p.generator.abs())).max(0.0);
    checks.push(Check::new("continuation_equality", continuation, tol.equality));
    let excess = max_of(points.iter().map(|p| p.generator)).max(0.0);
    checks.push(Check::new("generator_nonpositive", excess, tol.inequality));
    let above = max_of(points.iter().filter(|p| p.x > b * (1.0 + 1e-6) + 1e-6).map(|p| p.generator));
    if above.is_finite() {
        // Strict inequality in the payout region: the check passes only for a negative maximum.
        let mut strict = Check::new("payout_region_strict", above, 0.0);
        strict.passed = above < 0.0;
        checks.push(strict);
    }
    let gradient = max_of(points.iter().map(|p| alpha - p.derivative)).max(0.0);
    checks.push(Check::new("dividend_gradient", gradient, tol.inequality));

    match problem {
        Problem::Dividends => {
            checks.push(Check::new("value_at_zero", value.value(0.0).abs(), tol.equality));
        }
        Problem::Injections | Problem::Combined => {
            let over = max_of(points.iter().map(|p| p.derivative - costs.beta)).max(0.0);
            checks.push(Check::new("injection_gradient", over, tol.inequality));
            checks.push(Check::new("slope_at_zero", (value.derivative(0.0) - costs.beta).abs(), tol.smooth_fit));
        }
    }

    if b > 0.0 {
        let [_, v1, v2] = value.eval(b);
        checks.push(Check::new("smooth_fit", (v1 - alpha).abs(), tol.smooth_fit));
        if model.sigma_p > 0.0 || model.sigma_r > 0.0 {
            checks.push(Check::new("second_order_fit", v2.abs(), tol.second_order_fit));
        }
        let curvature = max_of(grid.iter().filter(|x| **x <= b).map(|&x| value.second_derivative(x)));
        checks.push(Check::new("concavity", curvature.max(0.0), tol.inequality));
    }

    Ok(ResidualReport { problem, barrier: b, points, checks })
}
