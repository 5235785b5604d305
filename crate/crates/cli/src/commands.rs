//! The four subcommands.

use divctl_core::combined::{self, Choice, CombinedSolution};
use divctl_core::config::RunConfig;
use divctl_core::hjb::{self, Check, ResidualReport};
use divctl_core::kummer_form::KummerBasis;
use divctl_core::numerics::{self, Tolerance};
use divctl_core::report::{format_number, Cell, Table};
use divctl_core::simulate::{self, Strategy};
use divctl_core::solution::{Coefficients, Problem, SolveError, Solution, ValueFunction};
use divctl_core::{dividends, injections, CostParams, ModelParams, Regime};

use crate::output::{emit, Summary};
use crate::Failure;

enum Solved {
    Single(Solution),
    Combined(CombinedSolution),
}

impl Solved {
    fn value(&self, x: f64) -> f64 {
        match self {
            Solved::Single(s) => s.value_at(x),
            Solved::Combined(c) => c.value_at(x),
        }
    }

    fn derivative(&self, x: f64) -> f64 {
        match self {
            Solved::Single(s) => s.derivative_at(x),
            Solved::Combined(c) => c.derivative_at(x),
        }
    }

    /// The branch whose barrier strategy is used, if any.
    fn branch(&self) -> Option<&Solution> {
        match self {
            Solved::Single(s) => Some(s),
            Solved::Combined(c) => match c.chosen {
                Choice::DividendsOnly => Some(&c.dividend),
                Choice::WithInjections => Some(&c.injection),
                Choice::Undetermined => None,
            },
        }
    }
}

fn solver_failure(problem: Problem, e: SolveError) -> Failure {
    match e {
        SolveError::InvalidParameters(_) => Failure::Config(e.to_string()),
        e => Failure::Solver(format!("{problem}: {e}")),
    }
}

fn solve_problem(problem: Problem, model: &ModelParams, costs: &CostParams) -> Result<Solved, Failure> {
    let solved = match problem {
        Problem::Dividends => dividends::solve_dividends(model, costs).map(Solved::Single),
        Problem::Injections => injections::solve_injections(model, costs).map(Solved::Single),
        Problem::Combined => combined::solve_combined(model, costs).map(Solved::Combined),
    };
    solved.map_err(|e| solver_failure(problem, e))
}

fn describe_single(summary: &mut Summary, prefix: &str, s: &Solution) {
    let barrier_key = if s.problem == Problem::Injections { "B_star" } else { "b_star" };
    summary.put(&format!("{prefix}regime"), s.regime);
    summary.put(&format!("{prefix}{barrier_key}"), format_number(s.barrier));
    match &s.coefficients {
        Coefficients::Scale { phi, expected_increment, .. } => {
            summary.put(&format!("{prefix}phi"), format_number(*phi));
            summary.put(&format!("{prefix}expected_increment"), format_number(*expected_increment));
        }
        Coefficients::Kummer { a, b, c_m, c_s, determinant, condition_number, .. } => {
            for (k, v) in [("kummer_a", a), ("kummer_b", b), ("c_m", c_m), ("c_s", c_s)] {
                summary.put(&format!("{prefix}{k}"), format_number(*v));
            }
            if let (Some(d), Some(c)) = (determinant, condition_number) {
                summary.put(&format!("{prefix}determinant"), format_number(*d));
                summary.put(&format!("{prefix}condition_number"), format_number(*c));
            }
        }
        Coefficients::MonteCarlo { profile } => {
            summary.put(&format!("{prefix}profile_points"), profile.len());
        }
        Coefficients::None => {}
    }
    for d in &s.diagnostics {
        summary.put(&format!("{prefix}diagnostic"), d);
    }
}

fn describe(summary: &mut Summary, problem: Problem, solved: &Solved) {
    summary.put("problem", problem);
    match solved {
        Solved::Single(s) => describe_single(summary, "", s),
        Solved::Combined(c) => {
            summary.put("chosen", c.chosen.name());
            summary.put("v_prime_at_zero", format_number(c.criteria.v_prime_at_zero));
            summary.put("h_at_zero", format_number(c.criteria.h_at_zero));
            describe_single(summary, "dividends.", &c.dividend);
            describe_single(summary, "injections.", &c.injection);
            for d in &c.diagnostics {
                summary.put("diagnostic", d);
            }
        }
    }
}

pub fn solve(config: &RunConfig) -> Result<(), Failure> {
    let solved = solve_problem(config.problem, &config.model, &config.costs)?;
    let mut summary = Summary::default();
    describe(&mut summary, config.problem, &solved);
    let barrier = solved.branch().map_or(0.0, |s| s.barrier);
    let grid = config.output.grid(barrier)?;
    let mut table = Table::new(["x", "value", "value_prime", "hjb_residual"]);
    for x in grid.values() {
        let residual = match solved.branch() {
            Some(s) if !matches!(s.value, ValueFunction::Tabulated { .. }) => Some(
                hjb::generator(&s.value, &config.model, config.costs.delta, x)
                    .map_err(|e| Failure::Solver(format!("residual at x = {x}: {e}")))?,
            ),
            _ => None,
        };
        table.push(vec![x.into(), solved.value(x).into(), solved.derivative(x).into(), residual.into()]);
    }
    emit(config, &summary, &[("value", &table)])
}

/// Closed-form value of `strategy`, when one exists.
fn closed_form(config: &RunConfig, solved: Option<&Solution>, strategy: Strategy) -> Option<ValueFunction> {
    let (model, costs) = (&config.model, &config.costs);
    if let Some(s) = solved {
        let same_kind = (s.problem == Problem::Injections) == strategy.inject;
        if same_kind && s.barrier == strategy.barrier && s.regime != Regime::MonteCarlo {
            return Some(s.value.clone());
        }
    }
    if strategy.barrier == 0.0 && !strategy.inject {
        return Some(ValueFunction::Linear { intercept: 0.0, alpha: costs.alpha });
    }
    let closed = model.is_levy() || (model.is_piecewise_deterministic() && KummerBasis::new(model, costs.delta).is_ok());
    if !closed || strategy.barrier <= 0.0 {
        return None;
    }
    let value = if strategy.inject {
        injections::value_for_barrier(model, costs, strategy.barrier)
    } else {
        dividends::value_for_barrier(model, costs, strategy.barrier)
    };
    value.ok()
}

pub fn simulate(config: &RunConfig) -> Result<(), Failure> {
    let solved = match config.barrier {
        Some(_) => None,
        None => Some(solve_problem(config.problem, &config.model, &config.costs)?),
    };
    let branch = solved.as_ref().and_then(Solved::branch);
    let barrier = match (config.barrier, branch) {
        (Some(b), _) => b,
        (None, Some(s)) => s.barrier,
        (None, None) => return Err(Failure::Solver("the combined selection is undetermined; set strategy.barrier".into())),
    };
    let inject = match (config.inject, branch) {
        (Some(i), _) => i,
        (None, Some(s)) if config.barrier.is_none() => s.problem == Problem::Injections,
        _ => config.injects(),
    };
    let strategy = Strategy { barrier, inject };
    let exact = closed_form(config, branch, strategy);
    let grid = config.output.grid(barrier)?;
    let mut summary = Summary::default();
    summary.put("barrier", format_number(barrier));
    summary.put("inject", inject);
    summary.put("n_paths", config.sim.n_paths);
    summary.put("seed", config.sim.seed);
    let mut table = Table::new(["x0", "mean", "std_err", "n_paths", "truncation_bound", "closed_form", "within_3se"]);
    let mut paths = Table::new(["x0", "path_id", "ruin_time", "disc_dividends", "disc_injections", "payoff"]);
    let bound = simulate::truncation_bound(&config.model, &config.costs, strategy, &config.sim);
    for x0 in grid.values() {
        let outcomes = simulate::simulate_paths(&config.model, &config.costs, strategy, x0, &config.sim);
        let payoffs: Vec<f64> = outcomes.iter().map(|o| o.payoff).collect();
        let e = simulate::Estimate::from_payoffs(&payoffs, config.sim.antithetic, bound);
        let cf = exact.as_ref().map(|v| v.value(x0));
        let flag = cf.map(|v| if (e.mean - v).abs() <= 3.0 * e.std_err + 1e-12 { "PASS" } else { "FAIL" });
        table.push(vec![
            x0.into(),
            e.mean.into(),
            e.std_err.into(),
            e.n.into(),
            e.truncation_bound.into(),
            cf.into(),
            flag.into(),
        ]);
        if config.output.paths {
            for (i, o) in outcomes.iter().enumerate() {
                paths.push(vec![
                    x0.into(),
                    i.into(),
                    o.ruin_time.into(),
                    o.discounted_dividends.into(),
                    o.discounted_injections.into(),
                    o.payoff.into(),
                ]);
            }
        }
    }
    let mut tables = vec![("simulation", &table)];
    if config.output.paths {
        tables.push(("paths", &paths));
    }
    emit(config, &summary, &tables)
}

fn scale_checks(checks: &mut Vec<Check>, s: &Solution, costs: &CostParams, offset: f64) {
    let ValueFunction::Scale { set, .. } = &s.value else { return };
    let b = s.barrier;
    if offset == 0.0 {
        let (name, lhs, rhs) = if s.problem == Problem::Injections {
            ("scale.barrier_identity", set.z(b), costs.beta / costs.alpha)
        } else {
            ("scale.barrier_identity", set.zbar(b), set.expected_increment() / costs.delta)
        };
        checks.push(Check::new(name, (lhs - rhs).abs() / rhs.abs().max(1.0), 1e-8));
    }
    // Laplace transform of W against 1/(psi(theta) - delta).
    let phi = set.phi();
    let theta = phi + 1.0;
    let envelope = [0.5, 1.0, 5.0, 20.0].iter().map(|x| set.w(*x) * (-phi * x).exp()).fold(1.0, f64::max);
    let tol = Tolerance::new(1e-14, 1e-12, 4000);
    let lhs = numerics::integrate_exp_tail(|x| (-theta * x).exp() * set.w(x), 0.0, envelope, theta - phi, &[], &tol);
    let rhs = 1.0 / (set.laplace_exponent(theta) - set.delta());
    let err = lhs.map_or(f64::INFINITY, |l| ((l - rhs) / rhs).abs());
    checks.push(Check::new("scale.laplace_identity", err, 1e-6));
    let x = if b > 0.0 { 0.5 * b } else { 1.0 };
    let (w, z, zbar) = set.talbot_check(x);
    let err = [(w, set.w(x)), (z, set.z(x)), (zbar, set.zbar(x))]
        .iter()
        .map(|(a, e)| ((a - e) / e.abs().max(1.0)).abs())
        .fold(0.0, f64::max);
    checks.push(Check::new("scale.talbot_inversion", err, 1e-6));
}

fn kummer_checks(checks: &mut Vec<Check>, s: &Solution, costs: &CostParams) {
    let ValueFunction::Kummer { basis, .. } = &s.value else { return };
    let (a, b, mu) = (basis.params.a, basis.params.b, basis.mu);
    let mut worst: f64 = 0.0;
    for i in 0..=20 {
        let x = s.barrier * i as f64 / 20.0;
        let z = mu * (x - basis.drift_root);
        for f in [basis.m(x), basis.s(x)] {
            let residual = z * f[2] / (mu * mu) + (b - z) * f[1] / mu - a * f[0];
            worst = worst.max(residual.abs() / f[0].abs().max(1.0));
        }
    }
    checks.push(Check::new("kummer.ode_residual", worst, 1e-6));
    if let Coefficients::Kummer { delta_matrix: Some(_), .. } = &s.coefficients {
        checks.push(Check::new("kummer.slope_at_zero", (s.value.derivative(0.0) - costs.beta).abs(), 1e-8));
        checks.push(Check::new("kummer.slope_at_barrier", (s.value.derivative(s.barrier) - costs.alpha).abs(), 1e-8));
    }
    let multiple = s.diagnostics.iter().any(|d| d.field == "kummer.barrier");
    checks.push(Check::new("kummer.single_root", if multiple { 1.0 } else { 0.0 }, 0.0));
}

fn offset_solution(s: &Solution, config: &RunConfig, offset: f64) -> Result<Solution, Failure> {
    let barrier = s.barrier + offset;
    if barrier <= 0.0 {
        return Err(Failure::Config(format!("barrier offset {offset} leaves a nonpositive barrier")));
    }
    let value = match s.problem {
        Problem::Injections => injections::value_for_barrier(&config.model, &config.costs, barrier),
        _ => dividends::value_for_barrier(&config.model, &config.costs, barrier),
    }
    .map_err(|e| solver_failure(s.problem, e))?;
    Ok(Solution { barrier, value, ..s.clone() })
}

pub fn verify(config: &RunConfig, offset: f64) -> Result<(), Failure> {
    let (model, costs) = (&config.model, &config.costs);
    let solved = solve_problem(config.problem, model, costs)?;
    let branch = solved
        .branch()
        .ok_or_else(|| Failure::Solver("the combined selection is undetermined; nothing to verify".into()))?;
    if branch.regime == Regime::MonteCarlo {
        return Err(Failure::Solver("Monte Carlo solutions cannot be verified against the closed-form checks".into()));
    }
    let target = if offset != 0.0 { offset_solution(branch, config, offset)? } else { branch.clone() };
    let grid = hjb::default_grid(target.barrier, 500);
    let report: ResidualReport = match (&solved, target.problem) {
        (Solved::Combined(c), _) if offset == 0.0 => combined::hjb_residual_combined(c, model, costs, &grid),
        (_, Problem::Injections) => injections::hjb_residual_injections(&target, model, costs, &grid),
        _ => dividends::hjb_residual_dividends(&target, model, costs, &grid),
    }
    .map_err(|e| Failure::Solver(e.to_string()))?;
    let mut checks = report.checks.clone();
    scale_checks(&mut checks, &target, costs, offset);
    kummer_checks(&mut checks, &target, costs);
    if let Solved::Combined(c) = &solved {
        let g = hjb::linear_grid(0.0, 2.0 * c.dividend.barrier.max(c.injection.barrier).max(1.0), 200);
        let dominance = combined::dominance_check(c, &g);
        checks.push(Check::new("combined.dominance", dominance.violations.len() as f64, 0.0));
    }

    let mut summary = Summary::default();
    describe(&mut summary, config.problem, &solved);
    if offset != 0.0 {
        summary.put("barrier_offset", offset);
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    summary.put("verdict", if failed.is_empty() { "PASS" } else { "FAIL" });
    let mut table = Table::new(["check", "value", "tolerance", "status"]);
    for c in &checks {
        table.push(vec![
            c.name.clone().into(),
            c.value.into(),
            c.tolerance.into(),
            Cell::from(if c.passed { "PASS" } else { "FAIL" }),
        ]);
    }
    emit(config, &summary, &[("verify", &table)])?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification(failed.join(", ")))
    }
}

pub fn sweep(config: &RunConfig) -> Result<(), Failure> {
    let spec = config
        .sweep
        .as_ref()
        .ok_or_else(|| Failure::Config("`sweep.param` is required (or pass --param and --values)".into()))?;
    let mut table = Table::new([spec.param.name(), "regime", "b_star", "B_star", "chosen", "v_prime_at_zero", "h_at_zero", "value_x0"]);
    for &v in &spec.values {
        let (mut model, mut costs) = (config.model.clone(), config.costs);
        spec.param.apply(&mut model, &mut costs, v);
        let solved = solve_problem(config.problem, &model, &costs)?;
        let row: Vec<Cell> = match &solved {
            Solved::Single(s) => {
                let (b, bb) = if s.problem == Problem::Injections { (None, Some(s.barrier)) } else { (Some(s.barrier), None) };
                vec![v.into(), s.regime.to_string().into(), b.into(), bb.into(), Cell::Empty, Cell::Empty, Cell::Empty, s.value_at(spec.x0).into()]
            }
            Solved::Combined(c) => vec![
                v.into(),
                branch_regime(c).into(),
                c.dividend.barrier.into(),
                c.injection.barrier.into(),
                c.chosen.name().into(),
                c.criteria.v_prime_at_zero.into(),
                c.criteria.h_at_zero.into(),
                c.value_at(spec.x0).into(),
            ],
        };
        table.push(row);
    }
    let mut summary = Summary::default();
    summary.put("problem", config.problem);
    summary.put("sweep.param", spec.param.name());
    summary.put("sweep.points", spec.values.len());
    summary.put("sweep.x0", format_number(spec.x0));
    emit(config, &summary, &[("sweep", &table)])
}

fn branch_regime(c: &CombinedSolution) -> String {
    match c.chosen {
        Choice::DividendsOnly => c.dividend.regime.to_string(),
        Choice::WithInjections => c.injection.regime.to_string(),
        Choice::Undetermined => format!("{}/{}", c.dividend.regime, c.injection.regime),
    }
}
