//! The unconstrained problem: pay dividends only, or also inject capital.
//!
//! The dividend-only barrier is kept when its value is not steeper than `β`
//! at zero (an injection would cost more than it is worth there); the
//! injection barrier is used when its value at zero is nonnegative (starting
//! from nothing is worth something). The two conditions can overlap or leave a
//! gap; both situations are reported rather than decided silently.

use serde::Serialize;

use crate::dividends;
use crate::hjb::{self, Check, HjbError, HjbTolerances, ResidualReport};
use crate::injections;
use crate::model::{CostParams, Diagnostic, ModelParams};
use crate::solution::{DividendSolution, InjectionSolution, Problem, SolveError, SolverOptions};

/// Slack on the two selection conditions.
pub const SELECTION_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Choice {
    DividendsOnly,
    WithInjections,
    /// Neither condition holds.
    Undetermined,
}

impl Choice {
    pub fn name(self) -> &'static str {
        match self {
            Choice::DividendsOnly => "dividends_only",
            Choice::WithInjections => "with_injections",
            Choice::Undetermined => "undetermined",
        }
    }
}

/// The two numbers the selection is based on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Criteria {
    /// `V'(0)` of the dividend-only solution.
    pub v_prime_at_zero: f64,
    /// `H(0)` of the injection solution.
    pub h_at_zero: f64,
}

#[derive(Clone, Debug)]
pub struct CombinedSolution {
    pub chosen: Choice,
    pub dividend: DividendSolution,
    pub injection: InjectionSolution,
    pub criteria: Criteria,
    pub diagnostics: Vec<Diagnostic>,
}

impl CombinedSolution {
    /// Value of the chosen branch; with no branch chosen, the larger of the two.
    pub fn value_at(&self, x: f64) -> f64 {
        match self.chosen {
            Choice::DividendsOnly => self.dividend.value_at(x),
            Choice::WithInjections => self.injection.value_at(x),
            Choice::Undetermined => self.dividend.value_at(x).max(self.injection.value_at(x)),
        }
    }

    pub fn derivative_at(&self, x: f64) -> f64 {
        match self.chosen {
            Choice::DividendsOnly => self.dividend.derivative_at(x),
            Choice::WithInjections => self.injection.derivative_at(x),
            Choice::Undetermined => {
                if self.dividend.value_at(x) >= self.injection.value_at(x) {
                    self.dividend.derivative_at(x)
                } else {
                    self.injection.derivative_at(x)
                }
            }
        }
    }

    /// Barrier of the chosen branch (`NaN` when undetermined).
    pub fn barrier(&self) -> f64 {
        match self.chosen {
            Choice::DividendsOnly => self.dividend.barrier,
            Choice::WithInjections => self.injection.barrier,
            Choice::Undetermined => f64::NAN,
        }
    }

    fn chosen_solution(&self) -> Option<&DividendSolution> {
        match self.chosen {
            Choice::DividendsOnly => Some(&self.dividend),
            Choice::WithInjections => Some(&self.injection),
            Choice::Undetermined => None,
        }
    }
}

pub fn solve_combined(model: &ModelParams, costs: &CostParams) -> Result<CombinedSolution, SolveError> {
    solve_combined_with(model, costs, &SolverOptions::default())
}

pub fn solve_combined_with(
    model: &ModelParams,
    costs: &CostParams,
    options: &SolverOptions,
) -> Result<CombinedSolution, SolveError> {
    let dividend = dividends::solve_dividends_with(model, costs, options)?;
    let injection = injections::solve_injections_with(model, costs, options)?;
    Ok(select(dividend, injection, costs))
}

/// Applies the selection rule to two solved branches.
pub fn select(dividend: DividendSolution, injection: InjectionSolution, costs: &CostParams) -> CombinedSolution {
    let criteria = Criteria { v_prime_at_zero: dividend.derivative_at(0.0), h_at_zero: injection.value_at(0.0) };
    let keep_dividends = criteria.v_prime_at_zero <= costs.beta + SELECTION_TOL;
    let inject = criteria.h_at_zero >= -SELECTION_TOL;
    let mut diagnostics = Vec::new();
    let chosen = match (keep_dividends, inject) {
        (true, false) => Choice::DividendsOnly,
        (false, true) => Choice::WithInjections,
        (false, false) => {
            diagnostics.push(Diagnostic::warning(
                "combined.selection",
                format!(
                    "neither condition holds: V'(0) = {} > beta = {} and H(0) = {} < 0",
                    criteria.v_prime_at_zero, costs.beta, criteria.h_at_zero
                ),
            ));
            Choice::Undetermined
        }
        (true, true) => {
            let hi = 2.0 * dividend.barrier.max(injection.barrier).max(1.0);
            let grid = hjb::linear_grid(0.0, hi, 201);
            let margin = grid.iter().map(|&x| injection.value_at(x) - dividend.value_at(x)).fold(f64::NEG_INFINITY, f64::max);
            let choice = if margin > SELECTION_TOL { Choice::WithInjections } else { Choice::DividendsOnly };
            diagnostics.push(Diagnostic::warning(
                "combined.condition_overlap",
                format!(
                    "both conditions hold (V'(0) = {}, H(0) = {}); the pointwise larger branch {} is used",
                    criteria.v_prime_at_zero,
                    criteria.h_at_zero,
                    choice.name()
                ),
            ));
            choice
        }
    };
    CombinedSolution { chosen, dividend, injection, criteria, diagnostics }
}

/// Residual suite of the chosen branch plus the coupling conditions
/// `V' ≤ β` everywhere and `max{−v(0), v'(0) − β} = 0`.
pub fn hjb_residual_combined(
    sol: &CombinedSolution,
    model: &ModelParams,
    costs: &CostParams,
    grid: &[f64],
) -> Result<ResidualReport, HjbError> {
    let branch = sol.chosen_solution().ok_or(HjbError::NotVerifiable)?;
    let tol = HjbTolerances::default();
    let default;
    let grid = if grid.is_empty() {
        default = hjb::default_grid(branch.barrier, 200);
        &default[..]
    } else {
        grid
    };
    let mut report = match sol.chosen {
        Choice::DividendsOnly => {
            let mut r = hjb::residual_report(Problem::Dividends, &branch.value, model, costs, grid, &tol)?;
            let over = r.points.iter().map(|p| p.derivative - costs.beta).fold(0.0, f64::max);
            let over = over.max(branch.derivative_at(0.0) - costs.beta);
            r.push(Check::new("injection_gradient", over, tol.inequality));
            r
        }
        _ => hjb::residual_report(Problem::Injections, &branch.value, model, costs, grid, &tol)?,
    };
    report.problem = Problem::Combined;
    let boundary = (-branch.value_at(0.0)).max(branch.derivative_at(0.0) - costs.beta);
    report.push(Check::new("combined_boundary", boundary.abs(), tol.smooth_fit));
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DominanceReport {
    pub passed: bool,
    /// `(x, chosen value, other value)` wherever the chosen branch is beaten.
    pub violations: Vec<(f64, f64, f64)>,
}

/// Checks that the chosen branch is at least as valuable as the other one on `grid`.
pub fn dominance_check(sol: &CombinedSolution, grid: &[f64]) -> DominanceReport {
    let violations: Vec<(f64, f64, f64)> = grid
        .iter()
        .filter_map(|&x| {
            let (chosen, other) = match sol.chosen {
                Choice::DividendsOnly => (sol.dividend.value_at(x), sol.injection.value_at(x)),
                Choice::WithInjections => (sol.injection.value_at(x), sol.dividend.value_at(x)),
                Choice::Undetermined => return None,
            };
            let tol = 1e-8 * chosen.abs().max(1.0);
            (chosen < other - tol).then_some((x, chosen, other))
        })
        .collect();
    DominanceReport { passed: violations.is_empty(), violations }
}
