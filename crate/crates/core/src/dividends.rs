//! Barrier dividends without capital injections; ruin ends the game.
//!
//! The optimal barrier is `b* = 0` exactly when the gains do not outweigh
//! the expenses on average (`λE[X] ≤ p`): everything is then paid at once and
//! `V(x) = αx`. Otherwise the barrier comes from the scale functions (no
//! returns), from Kummer functions (exponential gains, deterministic returns)
//! or from a simulated barrier search.

use std::sync::Arc;

use crate::hjb::{self, HjbError, HjbTolerances, ResidualReport};
use crate::kummer_form::{self, KummerBasis, KummerFormError};
use crate::model::{CostParams, Diagnostic, JumpLaw, ModelParams, Regime};
use crate::scale::{self, ScaleError};
use crate::solution::{self, Coefficients, DividendSolution, Problem, SolveError, SolverOptions, ValueFunction};

/// Distance within which `λE[X]` and `p` count as equal (degenerate).
pub const KNIFE_EDGE: f64 = 1e-9;

pub fn solve_dividends(model: &ModelParams, costs: &CostParams) -> Result<DividendSolution, SolveError> {
    solve_dividends_with(model, costs, &SolverOptions::default())
}

pub fn solve_dividends_with(
    model: &ModelParams,
    costs: &CostParams,
    options: &SolverOptions,
) -> Result<DividendSolution, SolveError> {
    let mut diagnostics = solution::checked(model, costs)?;
    if model.lambda * model.jump.mean() <= model.p + KNIFE_EDGE {
        return Ok(degenerate(costs, diagnostics));
    }
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
        match kummer_form::solve_dividends(model, costs) {
            Ok(k) => {
                diagnostics.extend(k.diagnostics.iter().cloned());
                return Ok(DividendSolution {
                    problem: Problem::Dividends,
                    regime: Regime::KummerForm,
                    barrier: k.barrier,
                    value: ValueFunction::Kummer {
                        basis: k.basis,
                        c_m: k.c_m,
                        c_s: k.c_s,
                        barrier: k.barrier,
                        alpha: costs.alpha,
                    },
                    coefficients: kummer_coefficients(&k.basis, k.c_m, k.c_s),
                    diagnostics,
                });
            }
            Err(e @ (KummerFormError::NotApplicable(_) | KummerFormError::NoBarrier(_))) => {
                diagnostics.push(Diagnostic::warning("regime", format!("falling back to simulation: {e}")));
            }
            Err(e) => return Err(e.into()),
        }
    }
    solution::monte_carlo(Problem::Dividends, model, costs, options, diagnostics)
}

fn degenerate(costs: &CostParams, diagnostics: Vec<Diagnostic>) -> DividendSolution {
    DividendSolution {
        problem: Problem::Dividends,
        regime: Regime::Degenerate,
        barrier: 0.0,
        value: ValueFunction::Linear { intercept: 0.0, alpha: costs.alpha },
        coefficients: Coefficients::None,
        diagnostics,
    }
}

fn kummer_coefficients(basis: &KummerBasis, c_m: f64, c_s: f64) -> Coefficients {
    Coefficients::Kummer {
        a: basis.params.a,
        b: basis.params.b,
        c_m,
        c_s,
        delta_matrix: None,
        determinant: None,
        condition_number: None,
    }
}

/// `b*` solves `Z̄(b*) = E[X₁]/δ`; then `V(x) = α(E[X₁]/δ − Z̄(b* − x))`.
fn scale_form(model: &ModelParams, costs: &CostParams, options: &SolverOptions) -> Result<DividendSolution, SolveError> {
    let set = Arc::new(scale::build_scale_set(model, costs.delta)?);
    let level = set.expected_increment() / costs.delta;
    let barrier = set.zbar_inverse(level, &options.tolerance)?;
    Ok(DividendSolution {
        problem: Problem::Dividends,
        regime: Regime::ScaleForm,
        barrier,
        coefficients: Coefficients::Scale { phi: set.phi(), expected_increment: set.expected_increment(), k: 0.0 },
        value: ValueFunction::Scale { set, barrier, alpha: costs.alpha, level, k: 0.0 },
        diagnostics: Vec::new(),
    })
}

/// Value of the barrier strategy at an arbitrary barrier `b > 0` in a closed-form regime.
///
/// Scale form: `V_b(x) = −αZ̄(b − x) + αE[X₁]/δ + kZ(b − x)` with `k` fixed by
/// `V_b(0) = 0`. Kummer form: `V_b = αN/N'(b)` with `N = M̃ − S̃`.
pub fn value_for_barrier(model: &ModelParams, costs: &CostParams, barrier: f64) -> Result<ValueFunction, SolveError> {
    solution::checked(model, costs)?;
    if model.is_levy() {
        let set = Arc::new(scale::build_scale_set(model, costs.delta)?);
        let level = set.expected_increment() / costs.delta;
        let k = costs.alpha * (set.try_zbar(barrier)? - level) / set.try_z(barrier)?;
        return Ok(ValueFunction::Scale { set, barrier, alpha: costs.alpha, level, k });
    }
    let basis = KummerBasis::new(model, costs.delta)?;
    let m = basis.try_m(barrier).map_err(KummerFormError::from)?;
    let s = basis.try_s(barrier).map_err(KummerFormError::from)?;
    let c = costs.alpha / (m[1] - s[1]);
    Ok(ValueFunction::Kummer { basis, c_m: c, c_s: -c, barrier, alpha: costs.alpha })
}

/// Residual suite of the dividend problem; a dense default grid on `(0, 2b*]` is
/// used when `grid` is empty.
pub fn hjb_residual_dividends(
    sol: &DividendSolution,
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
    hjb::residual_report(Problem::Dividends, &sol.value, model, costs, grid, &HjbTolerances::default())
}

pub fn value_at(sol: &DividendSolution, x: f64) -> f64 {
    sol.value.value(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn levy() -> ModelParams {
        ModelParams::without_returns(0.5, 0.2, 1.0, JumpLaw::exponential(1.0))
    }

    fn kummer_model() -> ModelParams {
        ModelParams::without_returns(0.5, 0.0, 1.0, JumpLaw::exponential(1.0)).with_returns(0.04, 0.0, 0.0)
    }

    #[test]
    fn degenerate_pays_everything() {
        let model = ModelParams::without_returns(1.5, 0.0, 1.0, JumpLaw::exponential(1.0));
        let sol = solve_dividends(&model, &CostParams::new(0.05, 0.9, 1.2)).unwrap();
        assert_eq!(sol.regime, Regime::Degenerate);
        assert_eq!(sol.barrier, 0.0);
        assert!((value_at(&sol, 2.0) - 1.8).abs() < 1e-15);
    }

    #[test]
    fn scale_form_barrier_and_values() {
        let costs = CostParams::new(0.05, 1.0, 1.2);
        let sol = solve_dividends(&levy(), &costs).unwrap();
        assert_eq!(sol.regime, Regime::ScaleForm);
        assert!((sol.barrier - 3.677610211730).abs() < 1e-8, "{}", sol.barrier);
        assert!(value_at(&sol, 0.0).abs() < 1e-9);
        assert!((value_at(&sol, 0.5) - 3.461191).abs() < 1e-5);
        assert!((value_at(&sol, sol.barrier) - 0.5 / 0.05).abs() < 1e-9);
        assert!((value_at(&sol, sol.barrier + 1.0) - value_at(&sol, sol.barrier) - 1.0).abs() < 1e-12);
        let report = hjb_residual_dividends(&sol, &levy(), &costs, &[]).unwrap();
        assert!(report.passed(), "{:?}", report.failures().collect::<Vec<_>>());
    }

    #[test]
    fn kummer_form_barrier_and_values() {
        let costs = CostParams::new(0.05, 1.0, 1.2);
        let sol = solve_dividends(&kummer_model(), &costs).unwrap();
        assert_eq!(sol.regime, Regime::KummerForm);
        assert!((sol.barrier - 4.115351633744).abs() < 1e-8);
        assert!((value_at(&sol, sol.barrier) - 13.2922813070).abs() < 1e-8);
        assert!((sol.derivative_at(0.0) - 12.52002494910).abs() < 1e-7);
        let report = hjb_residual_dividends(&sol, &kummer_model(), &costs, &[]).unwrap();
        assert!(report.passed(), "{:?}", report.failures().collect::<Vec<_>>());
    }

    #[test]
    fn shifted_barrier_fails_the_residual_check() {
        let costs = CostParams::new(0.05, 1.0, 1.2);
        for model in [levy(), kummer_model()] {
            let sol = solve_dividends(&model, &costs).unwrap();
            let mut shifted = sol.clone();
            shifted.value = value_for_barrier(&model, &costs, sol.barrier + 0.1).unwrap();
            shifted.barrier = sol.barrier + 0.1;
            assert!(!hjb_residual_dividends(&shifted, &model, &costs, &[]).unwrap().passed());
        }
    }

    #[test]
    fn barrier_value_matches_optimum_at_optimum() {
        let costs = CostParams::new(0.05, 1.0, 1.2);
        for model in [levy(), kummer_model()] {
            let sol = solve_dividends(&model, &costs).unwrap();
            let v = value_for_barrier(&model, &costs, sol.barrier).unwrap();
            for x in [0.3, 1.0, 2.5, 5.0] {
                assert!((v.value(x) - sol.value_at(x)).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let model = ModelParams::without_returns(-1.0, 0.2, 1.0, JumpLaw::exponential(1.0));
        assert!(matches!(
            solve_dividends(&model, &CostParams::new(0.05, 1.0, 1.2)),
            Err(SolveError::InvalidParameters(_))
        ));
    }
}
