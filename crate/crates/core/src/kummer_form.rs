//! Closed forms for exponential gains with deterministic returns
//! (`σ_p = σ_R = 0`, `r > 0`).
//!
//! Differentiating the integro-differential equation
//! `(rx − p)V' + λ∫(V(x+y) − V(x))μe^{−μy}dy − δV = 0` once and eliminating
//! the integral gives Kummer's equation in `z = μ(x − p/r)` with
//! `a = −δ/r`, `b = 1 − (λ + δ)/r`. On `x < p/r` the argument is negative and
//! the solution space is spanned by `M(a, b, z)` and
//! `S(a, b, z) = (−z)^{1−b} M(a − b + 1, 2 − b, z)`.
//!
//! Differentiation loses one condition. It is restored by requiring the
//! original equation at the barrier, where `V(b + y) = V(b) + αy`:
//! `δV(b) = α(rb − p + λ/μ)`. That equation is what pins down the barrier.

use thiserror::Error;

use crate::kummer::{self, KummerError, KummerParams};
use crate::model::{CostParams, Diagnostic, JumpLaw, ModelParams};
use crate::numerics::{self, NumericsError, Tolerance};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KummerFormError {
    #[error("Kummer closed form not applicable: {0}")]
    NotApplicable(String),
    #[error("no admissible barrier: {0}")]
    NoBarrier(String),
    #[error(transparent)]
    Kummer(#[from] KummerError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Number of cells used to scan the barrier equation on `(0, p/r)`.
const SCAN_CELLS: usize = 400;

/// Distance from a non-positive integer below which `b` (or `b + 1`, `b + 2`)
/// is treated as a pole.
const POLE_GUARD: f64 = 1e-8;

/// `M` and `S` as functions of the surplus level, normalised to equal one at `x = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KummerBasis {
    pub params: KummerParams,
    pub mu: f64,
    /// `p/r`, where the drift changes sign.
    pub drift_root: f64,
    m_scale: f64,
    s_scale: f64,
}

impl KummerBasis {
    pub fn new(model: &ModelParams, delta: f64) -> Result<Self, KummerFormError> {
        let mu = match model.jump {
            JumpLaw::Exponential { rate } => rate,
            _ => return Err(KummerFormError::NotApplicable("gains are not exponential".into())),
        };
        if model.sigma_p != 0.0 || model.sigma_r != 0.0 || !(model.r > 0.0) {
            return Err(KummerFormError::NotApplicable("needs sigma_p = sigma_r = 0 and r > 0".into()));
        }
        let params = KummerParams::from_model(model.r, model.lambda, delta)?;
        for shift in [0.0, 1.0, 2.0] {
            let b = params.b + shift;
            if b <= 0.0 && (b - b.round()).abs() < POLE_GUARD {
                return Err(KummerError::ParameterPole { b }.into());
            }
        }
        let drift_root = model.p / model.r;
        let z0 = -mu * drift_root;
        let m0 = kummer::kummer_m(params.a, params.b, z0)?;
        let s0 = kummer::kummer_s(params.a, params.b, z0)?;
        let norm = |v: f64| if v != 0.0 && v.is_finite() { v } else { 1.0 };
        Ok(Self { params, mu, drift_root, m_scale: norm(m0), s_scale: norm(s0) })
    }

    fn z(&self, x: f64) -> f64 {
        self.mu * (x - self.drift_root)
    }

    /// `[M̃, M̃', M̃'']` at surplus `x < p/r` (derivatives in `x`).
    pub fn try_m(&self, x: f64) -> Result<[f64; 3], KummerError> {
        let (a, b, z, mu) = (self.params.a, self.params.b, self.z(x), self.mu);
        Ok([
            kummer::kummer_m(a, b, z)? / self.m_scale,
            mu * kummer::kummer_m_prime(a, b, z)? / self.m_scale,
            mu * mu * kummer::kummer_m_second(a, b, z)? / self.m_scale,
        ])
    }

    /// `[S̃, S̃', S̃'']` at surplus `x < p/r`.
    pub fn try_s(&self, x: f64) -> Result<[f64; 3], KummerError> {
        let (a, b, z, mu) = (self.params.a, self.params.b, self.z(x), self.mu);
        Ok([
            kummer::kummer_s(a, b, z)? / self.s_scale,
            mu * kummer::kummer_s_prime(a, b, z)? / self.s_scale,
            mu * mu * kummer::kummer_s_second(a, b, z)? / self.s_scale,
        ])
    }

    /// Infallible variants for points already validated by the solver.
    pub fn m(&self, x: f64) -> [f64; 3] {
        self.try_m(x).expect("Kummer basis evaluation inside the solved range")
    }

    pub fn s(&self, x: f64) -> [f64; 3] {
        self.try_s(x).expect("Kummer basis evaluation inside the solved range")
    }
}

/// A solved Kummer-regime barrier problem.
#[derive(Clone, Debug)]
pub struct KummerSolution {
    pub basis: KummerBasis,
    pub barrier: f64,
    pub c_m: f64,
    pub c_s: f64,
    /// Every root of the barrier equation found on the scan.
    pub roots: Vec<f64>,
    pub delta_matrix: Option<[f64; 4]>,
    pub determinant: Option<f64>,
    pub condition_number: Option<f64>,
    pub diagnostics: Vec<Diagnostic>,
}

fn check_preconditions(model: &ModelParams, costs: &CostParams) -> Result<(), KummerFormError> {
    if !(model.r < costs.delta) {
        return Err(KummerFormError::NotApplicable(format!(
            "r = {} is not below delta = {}; the linear part above a barrier cannot satisfy the variational inequality",
            model.r, costs.delta
        )));
    }
    Ok(())
}

/// Right-hand side of the barrier equation: `α(rb − p + λ/μ)`.
fn barrier_target(model: &ModelParams, mu: f64, alpha: f64, b: f64) -> f64 {
    alpha * (model.r * b - model.p + model.lambda / mu)
}

/// Scan endpoints: the barrier must lie strictly inside `(0, p/r)`.
fn scan_range(basis: &KummerBasis) -> (f64, f64) {
    (basis.drift_root * 1e-6, basis.drift_root * (1.0 - 1e-6))
}

/// Brackets sign changes of `f` on a uniform grid and keeps only genuine roots
/// (not poles of `f`).
fn roots_of<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, scale: f64) -> Result<Vec<f64>, KummerFormError> {
    let tol = Tolerance::new(1e-13, 1e-13, 300);
    let mut roots = Vec::new();
    for (a, b) in numerics::sign_changes(&f, lo, hi, SCAN_CELLS) {
        let root = numerics::find_root(&f, a, b, &tol)?;
        if f(root).abs() <= 1e-6 * scale {
            roots.push(root);
        }
    }
    Ok(roots)
}

/// Problem 1: `V_b = α N/N'(b)` with `N = M̃ − S̃` (so `N(0) = 0`); `b*` is the
/// largest root of `δV_b(b) = α(rb − p + λ/μ)` on `(0, p/r)`.
pub fn solve_dividends(model: &ModelParams, costs: &CostParams) -> Result<KummerSolution, KummerFormError> {
    check_preconditions(model, costs)?;
    let basis = KummerBasis::new(model, costs.delta)?;
    let alpha = costs.alpha;
    let n = |x: f64| -> Result<[f64; 3], KummerError> {
        let m = basis.try_m(x)?;
        let s = basis.try_s(x)?;
        Ok([m[0] - s[0], m[1] - s[1], m[2] - s[2]])
    };
    let f1 = |b: f64| match n(b) {
        Ok(nb) => costs.delta * alpha * nb[0] / nb[1] - barrier_target(model, basis.mu, alpha, b),
        Err(_) => f64::NAN,
    };
    let (lo, hi) = scan_range(&basis);
    let scale = alpha * (model.lambda / basis.mu + model.p).max(1.0);
    let roots = roots_of(f1, lo, hi, scale)?;
    let Some(&barrier) = roots.last() else {
        return Err(KummerFormError::NoBarrier(format!(
            "the barrier equation has no root on (0, p/r) = (0, {})",
            basis.drift_root
        )));
    };
    let nb = n(barrier)?;
    if !(nb[1] > 0.0) {
        return Err(KummerFormError::NoBarrier(format!("N'(b) = {} is not positive at b = {barrier}", nb[1])));
    }
    let c = alpha / nb[1];
    let mut diagnostics = vec![Diagnostic::warning(
        "kummer.basis",
        "second solution on z < 0 taken as S(a,b,z) = (-z)^(1-b) M(a-b+1, 2-b, z)",
    )];
    if roots.len() > 1 {
        diagnostics.push(Diagnostic::warning(
            "kummer.barrier",
            format!("barrier equation has {} roots {:?}; the largest is used", roots.len(), roots),
        ));
    }
    // The maximiser of 1/Δ(b), with Δ ∝ N'(b), for comparison with b*.
    let tol = Tolerance::default();
    let (argmin, _) = numerics::golden_section_max(|b| n(b).map(|v| -v[1]).unwrap_or(f64::NEG_INFINITY), lo, hi, &tol);
    if (argmin - barrier).abs() > 1e-6 * barrier.max(1.0) {
        diagnostics.push(Diagnostic::warning(
            "kummer.delta_argmax",
            format!("the maximiser of 1/Delta(b) is {argmin:.10}, which differs from b* = {barrier:.10}"),
        ));
    }
    Ok(KummerSolution {
        basis,
        barrier,
        c_m: c,
        c_s: -c,
        roots,
        delta_matrix: None,
        determinant: None,
        condition_number: None,
        diagnostics,
    })
}

/// Coefficients of `H = c_m M̃ + c_s S̃` from `H'(0) = β`, `H'(B) = α`, together
/// with the system matrix `[Δ₁, Δ₂, Δ₃, Δ₄]` and its determinant.
pub fn injection_coefficients(
    basis: &KummerBasis,
    costs: &CostParams,
    barrier: f64,
) -> Result<(f64, f64, [f64; 4], f64), KummerError> {
    let d1 = basis.try_m(0.0)?[1];
    let d2 = basis.try_s(0.0)?[1];
    let d3 = basis.try_m(barrier)?[1];
    let d4 = basis.try_s(barrier)?[1];
    let det = d1 * d4 - d2 * d3;
    let c_m = (costs.beta * d4 - costs.alpha * d2) / det;
    let c_s = (costs.alpha * d1 - costs.beta * d3) / det;
    Ok((c_m, c_s, [d1, d2, d3, d4], det))
}

/// 2-norm condition number of `[[d1, d2], [d3, d4]]`.
fn condition_number(d: [f64; 4]) -> f64 {
    let (a, b, c, e) = (d[0], d[1], d[2], d[3]);
    let frob2 = a * a + b * b + c * c + e * e;
    let det = (a * e - b * c).abs();
    let disc = (frob2 * frob2 - 4.0 * det * det).max(0.0).sqrt();
    let smax = ((frob2 + disc) / 2.0).sqrt();
    let smin = ((frob2 - disc) / 2.0).max(0.0).sqrt();
    if smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Problem 2: `B*` is the root of `δH_B(B) = α(rB − p + λ/μ)` on `(0, p/r)`;
/// uniqueness on the scan is checked.
pub fn solve_injections(model: &ModelParams, costs: &CostParams) -> Result<KummerSolution, KummerFormError> {
    check_preconditions(model, costs)?;
    let basis = KummerBasis::new(model, costs.delta)?;
    let h_at_barrier = |b: f64| -> Result<f64, KummerError> {
        let (c_m, c_s, _, _) = injection_coefficients(&basis, costs, b)?;
        Ok(c_m * basis.try_m(b)?[0] + c_s * basis.try_s(b)?[0])
    };
    let f2 = |b: f64| match h_at_barrier(b) {
        Ok(h) => costs.delta * h - barrier_target(model, basis.mu, costs.alpha, b),
        Err(_) => f64::NAN,
    };
    let (lo, hi) = scan_range(&basis);
    let scale = costs.beta * (model.lambda / basis.mu + model.p).max(1.0);
    let roots = roots_of(f2, lo, hi, scale)?;
    let Some(&barrier) = roots.last() else {
        return Err(KummerFormError::NoBarrier(format!(
            "the barrier equation has no root on (0, p/r) = (0, {})",
            basis.drift_root
        )));
    };
    let (c_m, c_s, matrix, det) = injection_coefficients(&basis, costs, barrier)?;
    let mut diagnostics = vec![
        Diagnostic::warning(
            "kummer.basis",
            "second solution on z < 0 taken as S(a,b,z) = (-z)^(1-b) M(a-b+1, 2-b, z)",
        ),
        Diagnostic::warning(
            "kummer.delta_system",
            "the boundary system uses [Delta1, Delta2; Delta3, Delta4] with Delta4 the second-solution term at B*",
        ),
    ];
    if roots.len() > 1 {
        diagnostics.push(Diagnostic::warning(
            "kummer.barrier",
            format!("barrier equation has {} roots {:?}; the largest is used", roots.len(), roots),
        ));
    }
    Ok(KummerSolution {
        basis,
        barrier,
        c_m,
        c_s,
        roots,
        delta_matrix: Some(matrix),
        determinant: Some(det),
        condition_number: Some(condition_number(matrix)),
        diagnostics,
    })
}
