//! Solved control problems: barrier level, value-function evaluator and the
//! regime-specific coefficients that produced them.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::kummer_form::{KummerBasis, KummerFormError};
use crate::model::{self, CostParams, Diagnostic, ModelParams, Regime};
use crate::numerics::{NumericsError, Tolerance};
use crate::scale::{ScaleError, ScaleSet};
use crate::simulate::{SimConfig, SimError};

/// Failure of a solver, tagged with the regime that produced it.
#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid parameters: {}", join(.0))]
    InvalidParameters(Vec<Diagnostic>),
    #[error("scale-form solver: {0}")]
    Scale(#[from] ScaleError),
    #[error("Kummer-form solver: {0}")]
    Kummer(#[from] KummerFormError),
    #[error("Monte Carlo solver: {0}")]
    Simulation(#[from] SimError),
    #[error("numerics: {0}")]
    Numerics(#[from] NumericsError),
}

fn join(diagnostics: &[Diagnostic]) -> String {
    diagnostics.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Validates the parameters, returning the warnings or every error found.
pub fn checked(model: &ModelParams, costs: &CostParams) -> Result<Vec<Diagnostic>, SolveError> {
    let diagnostics = model::validate(model, costs);
    if diagnostics.iter().any(Diagnostic::is_error) {
        Err(SolveError::InvalidParameters(diagnostics.into_iter().filter(Diagnostic::is_error).collect()))
    } else {
        Ok(diagnostics)
    }
}

/// Knobs shared by the solvers.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    /// Root finding and inversion tolerance of the closed forms.
    pub tolerance: Tolerance,
    /// Simulation settings of the Monte Carlo fallback; `None` picks a coarse default.
    pub sim: Option<SimConfig>,
    /// Barrier search interval of the Monte Carlo fallback; defaults to `[0, 10 E[X]]`.
    pub search_bounds: Option<(f64, f64)>,
    /// Starting surplus at which the Monte Carlo search compares barriers.
    pub search_x0: Option<f64>,
    /// Number of nodes of a tabulated Monte Carlo value function.
    pub table_points: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: Tolerance::new(1e-13, 1e-13, 300),
            sim: None,
            search_bounds: None,
            search_x0: None,
            table_points: 9,
        }
    }
}

impl SolverOptions {
    /// Simulation settings actually used by the Monte Carlo fallback.
    pub fn sim_config(&self, model: &ModelParams, costs: &CostParams) -> SimConfig {
        self.sim.unwrap_or(SimConfig {
            dt: 1e-2,
            horizon: SimConfig::default_horizon(costs.delta, model.lambda),
            n_paths: 2000,
            ..SimConfig::default()
        })
    }
}

/// Which of the control problems a solution belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    /// Barrier dividends, no capital injections (ruin ends the game).
    Dividends,
    /// Barrier dividends with forced injections keeping the surplus at or above zero.
    Injections,
    /// Choose between the two.
    Combined,
}

impl Problem {
    pub fn name(self) -> &'static str {
        match self {
            Problem::Dividends => "dividends",
            Problem::Injections => "injections",
            Problem::Combined => "combined",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dividends" => Some(Problem::Dividends),
            "injections" => Some(Problem::Injections),
            "combined" => Some(Problem::Combined),
            _ => None,
        }
    }
}

impl std::fmt::Display for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A value function `x ↦ V(x)` on `[0, ∞)`, linear with slope `alpha` above
/// its barrier.
#[derive(Clone, Debug)]
pub enum ValueFunction {
    /// `V(x) = intercept + αx`: everything above zero is paid out at once.
    Linear { intercept: f64, alpha: f64 },
    /// `V(x) = −αZ̄(b − x) + α·level + k·Z(b − x)` on `[0, b]`.
    ///
    /// `level` is `E[X₁]/δ`. At the optimal barrier `k = 0`; other barriers
    /// fix `k` through the boundary condition at zero.
    Scale { set: Arc<ScaleSet>, barrier: f64, alpha: f64, level: f64, k: f64 },
    /// `V(x) = c_m M̃(x) + c_s S̃(x)` on `[0, b]` in the normalised Kummer basis.
    Kummer { basis: KummerBasis, c_m: f64, c_s: f64, barrier: f64, alpha: f64 },
    /// Monte Carlo estimates at increasing nodes, linearly interpolated.
    Tabulated { xs: Vec<f64>, values: Vec<f64>, barrier: f64, alpha: f64 },
}

impl ValueFunction {
    pub fn barrier(&self) -> f64 {
        match self {
            ValueFunction::Linear { .. } => 0.0,
            ValueFunction::Scale { barrier, .. }
            | ValueFunction::Kummer { barrier, .. }
            | ValueFunction::Tabulated { barrier, .. } => *barrier,
        }
    }

    pub fn alpha(&self) -> f64 {
        match self {
            ValueFunction::Linear { alpha, .. }
            | ValueFunction::Scale { alpha, .. }
            | ValueFunction::Kummer { alpha, .. }
            | ValueFunction::Tabulated { alpha, .. } => *alpha,
        }
    }

    /// Evaluation on the continuation region `[0, b]` (no linear extension).
    fn inner(&self, x: f64) -> [f64; 3] {
        match self {
            ValueFunction::Linear { intercept, alpha } => [intercept + alpha * x, *alpha, 0.0],
            ValueFunction::Scale { set, barrier, alpha, level, k } => {
                let y = barrier - x;
                let d = set.delta();
                let v = -alpha * set.zbar(y) + alpha * level + k * set.z(y);
                let v1 = alpha * set.z(y) - k * d * set.w(y);
                let v2 = -alpha * d * set.w(y) + k * d * set.w_prime(y);
                [v, v1, v2]
            }
            ValueFunction::Kummer { basis, c_m, c_s, .. } => {
                let m = basis.m(x);
                let s = basis.s(x);
                [c_m * m[0] + c_s * s[0], c_m * m[1] + c_s * s[1], c_m * m[2] + c_s * s[2]]
            }
            ValueFunction::Tabulated { xs, values, .. } => {
                let i = match xs.iter().position(|node| *node >= x) {
                    Some(0) => 1,
                    Some(i) => i,
                    None => xs.len() - 1,
                };
                let slope = (values[i] - values[i - 1]) / (xs[i] - xs[i - 1]);
                [values[i - 1] + slope * (x - xs[i - 1]), slope, 0.0]
            }
        }
    }

    /// `V(x)`; for `x > b` returns `V(b) + α(x − b)`.
    pub fn value(&self, x: f64) -> f64 {
        self.eval(x)[0]
    }

    /// `V'(x)`, taken from the left at the barrier.
    pub fn derivative(&self, x: f64) -> f64 {
        self.eval(x)[1]
    }

    /// `V''(x)`, taken from the left at the barrier.
    pub fn second_derivative(&self, x: f64) -> f64 {
        self.eval(x)[2]
    }

    /// `[V, V', V'']` at `x`, with left limits at the barrier.
    pub fn eval(&self, x: f64) -> [f64; 3] {
        let b = self.barrier();
        if let ValueFunction::Linear { .. } = self {
            return self.inner(x.max(0.0));
        }
        if x > b {
            let vb = self.inner(b)[0];
            [vb + self.alpha() * (x - b), self.alpha(), 0.0]
        } else {
            self.inner(x)
        }
    }
}

/// Regime-specific numbers behind a solution, kept for reporting.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Coefficients {
    None,
    Scale {
        phi: f64,
        expected_increment: f64,
        /// Coefficient of `Z(b − x)`; zero at the optimal barrier.
        k: f64,
    },
    Kummer {
        a: f64,
        b: f64,
        /// Coefficients of the normalised basis `M̃ = M(z)/M(z₀)`, `S̃ = S(z)/S(z₀)`.
        c_m: f64,
        c_s: f64,
        /// `[Δ₁, Δ₂, Δ₃, Δ₄]`: basis derivatives at 0 and at the barrier
        /// (injections only).
        delta_matrix: Option<[f64; 4]>,
        determinant: Option<f64>,
        condition_number: Option<f64>,
    },
    MonteCarlo {
        /// `(barrier, mean, std_err)` from the barrier search.
        profile: Vec<(f64, f64, f64)>,
    },
}

/// A solved control problem.
#[derive(Clone, Debug)]
pub struct Solution {
    pub problem: Problem,
    pub regime: Regime,
    /// `b*` for dividends, `B*` for injections.
    pub barrier: f64,
    pub value: ValueFunction,
    pub coefficients: Coefficients,
    pub diagnostics: Vec<Diagnostic>,
}

pub type DividendSolution = Solution;
pub type InjectionSolution = Solution;

impl Solution {
    pub fn value_at(&self, x: f64) -> f64 {
        self.value.value(x)
    }

    pub fn derivative_at(&self, x: f64) -> f64 {
        self.value.derivative(x)
    }
}

/// Monte Carlo fallback: empirical barrier search followed by a tabulated value.
pub(crate) fn monte_carlo(
    problem: Problem,
    model: &ModelParams,
    costs: &CostParams,
    options: &SolverOptions,
    mut diagnostics: Vec<Diagnostic>,
) -> Result<Solution, SolveError> {
    let inject = problem == Problem::Injections;
    let config = options.sim_config(model, costs);
    let mean = model.jump.mean();
    let bounds = options.search_bounds.unwrap_or((0.0, 10.0 * mean));
    let x0 = options.search_x0.unwrap_or(if inject { 0.0 } else { 0.5 * mean });
    let search = crate::simulate::search_barrier(model, costs, inject, x0, bounds, &config)?;
    let barrier = search.barrier;
    let n = options.table_points.max(2);
    let xs: Vec<f64> = (0..n).map(|i| barrier * i as f64 / (n - 1) as f64).collect();
    let strategy = crate::simulate::Strategy { barrier, inject };
    let values = xs
        .iter()
        .map(|&x| crate::simulate::estimate_value(model, costs, strategy, x, &config).mean)
        .collect();
    diagnostics.push(Diagnostic::warning(
        "regime",
        format!(
            "no closed form applies; barrier {barrier:.6} found by simulation ({} paths, standard error {:.3e})",
            config.n_paths, search.std_err
        ),
    ));
    let value = if barrier > 0.0 {
        ValueFunction::Tabulated { xs, values, barrier, alpha: costs.alpha }
    } else {
        ValueFunction::Linear { intercept: values[0], alpha: costs.alpha }
    };
    Ok(Solution {
        problem,
        regime: Regime::MonteCarlo,
        barrier,
        value,
        coefficients: Coefficients::MonteCarlo {
            profile: search.profile.iter().map(|p| (p.barrier, p.mean, p.std_err)).collect(),
        },
        diagnostics,
    })
}
