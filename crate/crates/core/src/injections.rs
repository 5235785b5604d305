//! Barrier dividends with forced capital injections keeping the surplus at or
//! above zero, each unit injected costing `β ≥ α`.
//!
//! Without returns the barrier solves `Z(B*) = β/α` and
//! `H(x) = α(E[X₁]/δ − Z̄(B* − x))`, so `H'(x) = αZ(B* − x)` runs from `β` at
//! zero down to `α` at the barrier. With exponential gains and deterministic
//! returns the two boundary slopes fix the Kummer coefficients.

use std::sync::Arc;

use crate::hjb::{self, HjbError, HjbTolerances, ResidualReport};
use crate::kummer_form::{self, KummerBasis, KummerFormError};
use crate::model::{CostParams, Diagnostic, JumpLaw, ModelParams, Regime};
use crate::scale::{self, ScaleError};
use crate::solution::{self, Coefficients, InjectionSolution, Problem, SolveError, SolverOptions, ValueFunction};

pub fn solve_injections(model: &ModelParams, costs: &CostParams) -> Result<InjectionSolution, SolveError> {
    solve_injections_with(model, costs, &SolverOptions::default())
}

pub fn solve_injections_with(
    model: &ModelParams,
    costs: &CostParams,
    options: &SolverOptions,
) -> Result<InjectionSolution, SolveError> {
    let mut diagnostics = solution::checked(model, costs)?;
    if model.is_levy() {
        match scale_form(model, costs, options) {
            Ok(mut sol) => {
                sol.diagnostics.splice(0..0, diagnostics);
                return Ok(sol);
            }
            Err(SolveError::Scale(ScaleError::NotRational(kind))) => {
                diagnostics.push(Diagnostic::warning("regime", format!("{kind} gains have no rational transform")));
            }
            Err(e) => return Err(e),
        }
    } else if model.is_piecewise_deterministic() && matches!(model.jump, JumpLaw::Exponential { .. }) {
        if costs.beta == costs.alpha && model.r < costs.delta {
            // Injecting costs as much as paying: the barrier sits at zero.
            return Ok(InjectionSolution {
                problem: Problem::Injections,
                regime: Regime::KummerForm,
                barrier: 0.0,
                value: ValueFunction::Linear { intercept: zero_barrier_intercept(model, costs), alpha: costs.alpha },
                coefficients: Coefficients::None,
                diagnostics,
            });
        }
        match kummer_form::solve_injections(model, costs) {
            Ok(k) => {
                diagnostics.extend(k.diagnostics.iter().cloned());
                return Ok(InjectionSolution {
                    problem: Problem::Injections,
                    regime: Regime::KummerForm,
                    barrier: k.barrier,
                    value: ValueFunction::Kummer {
                        basis: k.basis,
                        c_m: k.c_m,
                        c_s: k.c_s,
                        barrier: k.barrier,
                        alpha: costs.alpha,
                    },
                    coefficients: Coefficients::Kummer {
                        a: k.basis.params.a,
                        b: k.basis.params.b,
                        c_m: k.c_m,
                        c_s: k.c_s,
                        delta_matrix: k.delta_matrix,
                        determinant: k.determinant,
                        condition_number: k.condition_number,
                    },
                    diagnostics,
                });
            }
            Err(e @ (KummerFormError::NotApplicable(_) | KummerFormError::NoBarrier(_))) => {
                diagnostics.push(Diagnostic::warning("regime", format!("falling back to simulation: {e}")));
            }
            Err(e) => return Err(e.into()),
        }
    }
    solution::monte_carlo(Problem::Injections, model, costs, options, diagnostics)
}

/// `H(0)` of the zero barrier: every gain is paid out and the expenses are
/// injected, so `δH(0) = α(λE[X] − p)` when `α = β`.
fn zero_barrier_intercept(model: &ModelParams, costs: &CostParams) -> f64 {
    costs.alpha * model.net_drift() / costs.delta
}

/// `B*` solves `Z(B*) = β/α`.
fn scale_form(model: &ModelParams, costs: &CostParams, options: &SolverOptions) -> Result<InjectionSolution, SolveError> {
    let set = Arc::new(scale::build_scale_set(model, costs.delta)?);
    let level = set.expected_increment() / costs.delta;
    let barrier = if costs.beta == costs.alpha { 0.0 } else { set.z_inverse(costs.beta / costs.alpha, &options.tolerance)? };
    Ok(InjectionSolution {
        problem: Problem::Injections,
        regime: Regime::ScaleForm,
        barrier,
        coefficients: Coefficients::Scale { phi: set.phi(), expected_increment: set.expected_increment(), k: 0.0 },
        value: ValueFunction::Scale { set, barrier, alpha: costs.alpha, level, k: 0.0 },
        diagnostics: Vec::new(),
    })
}

/// Value of the reflected barrier strategy at an arbitrary barrier `B > 0` in a
/// closed-form regime, fixed by `H'(0) = β` and `H'(B) = α`.
pub fn value_for_barrier(model: &ModelParams, costs: &CostParams, barrier: f64) -> Result<ValueFunction, SolveError> {
    solution::checked(model, costs)?;
    if model.is_levy() {
        let set = Arc::new(scale::build_scale_set(model, costs.delta)?);
        let level = set.expected_increment() / costs.delta;
        let k = (costs.alpha * set.try_z(barrier)? - costs.beta) / (costs.delta * set.try_w(barrier)?);
        return Ok(ValueFunction::Scale { set, barrier, alpha: costs.alpha, level, k });
    }
    let basis = KummerBasis::new(model, costs.delta)?;
    let (c_m, c_s, _, _) = kummer_form::injection_coefficients(&basis, costs, barrier).map_err(KummerFormError::from)?;
    Ok(ValueFunction::Kummer { basis, c_m, c_s, barrier, alpha: costs.alpha })
}

/// Residual suite of the injection problem; a dense default grid on `(0, 2B*]`
/// is used when `grid` is empty.
pub fn hjb_residual_injections(
    sol: &InjectionSolution,
    model: &ModelParams,
    costs: &CostParams,
    grid: &[f64],
) -> Result<ResidualReport, HjbError> {
    let default;
    let grid = if grid.is_empty() {
        default = hjb::default_grid(sol.barrier, 200);
        &default[..]
    } else {
        grid
    };
    hjb::residual_report(Problem::Injections, &sol.value, model, costs, grid, &HjbTolerances::default())
}

pub fn value_at(sol: &InjectionSolution, x: f64) -> f64 {
    sol.value.value(x)
}
