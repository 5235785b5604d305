//! Model parameters for the dual surplus process with random investment return,
//! the gain (jump) laws, and transaction-cost parameters.
//!
//! The uncontrolled surplus moves as
//!
//! ```text
//! dU = -p dt + sigma_p dW_p + dJ + U (r dt + sigma_R dW_R),   W_R = rho W_p + sqrt(1 - rho^2) W_0
//! ```
//!
//! where `J` is a compound Poisson process of positive gains.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, RngCore};
use serde::Serialize;

use crate::numerics::poly::Poly;

/// Tolerance on the weights of a hyperexponential law summing to one.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// A positive jump law supplied by the caller. Only the Monte Carlo solver accepts it.
pub trait GeneralJump: fmt::Debug + Send + Sync {
    fn mean(&self) -> f64;
    fn laplace_transform(&self, theta: f64) -> f64;
    fn density(&self, x: f64) -> f64;
    /// `P(X > x)`.
    fn tail(&self, x: f64) -> f64;
    /// `E[X; X > y]`.
    fn partial_mean_above(&self, y: f64) -> f64;
    fn sample(&self, rng: &mut dyn RngCore) -> f64;
}

/// Distribution of the gain sizes `X_i`. All variants put no mass at zero.
#[derive(Clone, Debug)]
pub enum JumpLaw {
    Exponential { rate: f64 },
    HyperExponential { weights: Vec<f64>, rates: Vec<f64> },
    Erlang { shape: u32, rate: f64 },
    General(Arc<dyn GeneralJump>),
}

impl JumpLaw {
    pub fn exponential(rate: f64) -> Self {
        JumpLaw::Exponential { rate }
    }

    pub fn hyper_exponential(weights: Vec<f64>, rates: Vec<f64>) -> Self {
        JumpLaw::HyperExponential { weights, rates }
    }

    pub fn erlang(shape: u32, rate: f64) -> Self {
        JumpLaw::Erlang { shape, rate }
    }

    /// Short name used in configs and reports.
    pub fn kind(&self) -> &'static str {
        match self {
            JumpLaw::Exponential { .. } => "exponential",
            JumpLaw::HyperExponential { .. } => "hyperexponential",
            JumpLaw::Erlang { .. } => "erlang",
            JumpLaw::General(_) => "general",
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            JumpLaw::Exponential { rate } => 1.0 / rate,
            JumpLaw::HyperExponential { weights, rates } => {
                weights.iter().zip(rates).map(|(w, m)| w / m).sum()
            }
            JumpLaw::Erlang { shape, rate } => f64::from(*shape) / rate,
            JumpLaw::General(g) => g.mean(),
        }
    }

    /// `E[exp(-theta X)]` for `theta >= 0`.
    pub fn laplace_transform(&self, theta: f64) -> f64 {
        match self {
            JumpLaw::Exponential { rate } => rate / (rate + theta),
            JumpLaw::HyperExponential { weights, rates } => weights
                .iter()
                .zip(rates)
                .map(|(w, m)| w * m / (m + theta))
                .sum(),
            JumpLaw::Erlang { shape, rate } => (rate / (rate + theta)).powi(*shape as i32),
            JumpLaw::General(g) => g.laplace_transform(theta),
        }
    }

    /// Analytic continuation of the Laplace transform; `None` for general laws.
    pub fn laplace_transform_complex(&self, s: Complex64) -> Option<Complex64> {
        match self {
            JumpLaw::Exponential { rate } => Some(*rate / (*rate + s)),
            JumpLaw::HyperExponential { weights, rates } => Some(
                weights
                    .iter()
                    .zip(rates)
                    .map(|(w, m)| *w * *m / (*m + s))
                    .sum(),
            ),
            JumpLaw::Erlang { shape, rate } => Some((*rate / (*rate + s)).powi(*shape as i32)),
            JumpLaw::General(_) => None,
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match self {
            JumpLaw::Exponential { rate } => rate * (-rate * x).exp(),
            JumpLaw::HyperExponential { weights, rates } => weights
                .iter()
                .zip(rates)
                .map(|(w, m)| w * m * (-m * x).exp())
                .sum(),
            JumpLaw::Erlang { shape, rate } => erlang_density(*shape, *rate, x),
            JumpLaw::General(g) => g.density(x),
        }
    }

    /// Tail probability `P(X > x)`.
    pub fn tail(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        match self {
            JumpLaw::Exponential { rate } => (-rate * x).exp(),
            JumpLaw::HyperExponential { weights, rates } => weights
                .iter()
                .zip(rates)
                .map(|(w, m)| w * (-m * x).exp())
                .sum(),
            JumpLaw::Erlang { shape, rate } => erlang_tail(*shape, *rate, x),
            JumpLaw::General(g) => g.tail(x),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        1.0 - self.tail(x)
    }

    /// `E[X; X > y] = int_y^inf z F(dz)`.
    pub fn partial_mean_above(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return self.mean();
        }
        match self {
            JumpLaw::Exponential { rate } => (y + 1.0 / rate) * (-rate * y).exp(),
            JumpLaw::HyperExponential { weights, rates } => weights
                .iter()
                .zip(rates)
                .map(|(w, m)| w * (y + 1.0 / m) * (-m * y).exp())
                .sum(),
            JumpLaw::Erlang { shape, rate } => {
                f64::from(*shape) / rate * erlang_tail(shape + 1, *rate, y)
            }
            JumpLaw::General(g) => g.partial_mean_above(y),
        }
    }

    /// Slowest exponential decay rate of the density, used to truncate tail integrals.
    pub fn tail_decay_rate(&self) -> Option<f64> {
        match self {
            JumpLaw::Exponential { rate } | JumpLaw::Erlang { rate, .. } => Some(*rate),
            JumpLaw::HyperExponential { rates, .. } => {
                rates.iter().copied().reduce(f64::min)
            }
            JumpLaw::General(_) => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            JumpLaw::Exponential { rate } => standard_exponential(rng) / rate,
            JumpLaw::HyperExponential { weights, rates } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = rates.len() - 1;
                for (k, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        pick = k;
                        break;
                    }
                }
                standard_exponential(rng) / rates[pick]
            }
            JumpLaw::Erlang { shape, rate } => {
                (0..*shape).map(|_| standard_exponential(rng)).sum::<f64>() / rate
            }
            JumpLaw::General(g) => {
                let mut adapter = DynRng(rng);
                g.sample(&mut adapter)
            }
        }
    }

    /// `L(theta) = A(theta) / B(theta)` as polynomials, for the laws with rational transforms.
    pub fn rational_transform(&self) -> Option<(Poly, Poly)> {
        match self {
            JumpLaw::Exponential { rate } => {
                Some((Poly::constant(*rate), Poly::new(vec![*rate, 1.0])))
            }
            JumpLaw::HyperExponential { weights, rates } => {
                let mut denominator = Poly::constant(1.0);
                for m in rates {
                    denominator = denominator.mul(&Poly::new(vec![*m, 1.0]));
                }
                let mut numerator = Poly::constant(0.0);
                for (k, (w, m)) in weights.iter().zip(rates).enumerate() {
                    let mut term = Poly::constant(w * m);
                    for (j, other) in rates.iter().enumerate() {
                        if j != k {
                            term = term.mul(&Poly::new(vec![*other, 1.0]));
                        }
                    }
                    numerator = numerator.add(&term);
                }
                Some((numerator, denominator))
            }
            JumpLaw::Erlang { shape, rate } => {
                let factor = Poly::new(vec![*rate, 1.0]);
                let mut denominator = Poly::constant(1.0);
                for _ in 0..*shape {
                    denominator = denominator.mul(&factor);
                }
                Some((Poly::constant(rate.powi(*shape as i32)), denominator))
            }
            JumpLaw::General(_) => None,
        }
    }

    fn diagnostics(&self, out: &mut Vec<Diagnostic>) {
        let mut bad = |field: &str, message: String| out.push(Diagnostic::error(field, message));
        match self {
            JumpLaw::Exponential { rate } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    bad("model.jump.rate", format!("rate must be positive, got {rate}"));
                }
            }
            JumpLaw::HyperExponential { weights, rates } => {
                if weights.is_empty() || weights.len() != rates.len() {
                    bad(
                        "model.jump.weights",
                        format!(
                            "need matching non-empty weights and rates, got {} and {}",
                            weights.len(),
                            rates.len()
                        ),
                    );
                    return;
                }
                if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
                    bad("model.jump.weights", format!("weights must be nonnegative, got {w}"));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > WEIGHT_SUM_TOL {
                    bad("model.jump.weights", format!("weights must sum to 1, sum is {total}"));
                }
                if let Some(m) = rates.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
                    bad("model.jump.rates", format!("rates must be positive, got {m}"));
                }
            }
            JumpLaw::Erlang { shape, rate } => {
                if *shape == 0 {
                    bad("model.jump.shape", "shape must be a positive integer".to_string());
                }
                if !(rate.is_finite() && *rate > 0.0) {
                    bad("model.jump.rate", format!("rate must be positive, got {rate}"));
                }
            }
            JumpLaw::General(g) => {
                let m = g.mean();
                if !(m.is_finite() && m > 0.0) {
                    bad("model.jump", format!("general law must have a finite positive mean, got {m}"));
                }
            }
        }
    }
}

impl PartialEq for JumpLaw {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (JumpLaw::Exponential { rate: a }, JumpLaw::Exponential { rate: b }) => a == b,
            (
                JumpLaw::HyperExponential { weights: wa, rates: ra },
                JumpLaw::HyperExponential { weights: wb, rates: rb },
            ) => wa == wb && ra == rb,
            (
                JumpLaw::Erlang { shape: sa, rate: a },
                JumpLaw::Erlang { shape: sb, rate: b },
            ) => sa == sb && a == b,
            (JumpLaw::General(a), JumpLaw::General(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

struct DynRng<'a, R: ?Sized>(&'a mut R);

impl<R: Rng + ?Sized> RngCore for DynRng<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

#[inline]
fn standard_exponential<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // 1 - U lies in (0, 1].
    let u: f64 = rng.random();
    -(1.0 - u).ln()
}

fn erlang_density(shape: u32, rate: f64, x: f64) -> f64 {
    if shape == 1 {
        return rate * (-rate * x).exp();
    }
    if x == 0.0 {
        return 0.0;
    }
    let n = f64::from(shape);
    (n * rate.ln() + (n - 1.0) * x.ln() - rate * x - libm::lgamma(n)).exp()
}

fn erlang_tail(shape: u32, rate: f64, x: f64) -> f64 {
    let y = rate * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..shape {
        term *= y / f64::from(k);
        sum += term;
    }
    sum * (-y).exp()
}

/// Structural coefficients of the surplus and return processes.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    /// Expense rate.
    pub p: f64,
    pub sigma_p: f64,
    /// Intensity of the gain arrivals.
    pub lambda: f64,
    pub jump: JumpLaw,
    /// Drift of the return on investment.
    pub r: f64,
    pub sigma_r: f64,
    /// Correlation between the surplus and return Brownian motions.
    pub rho: f64,
}

impl ModelParams {
    /// Model without investment returns (`r = sigma_R = 0`).
    pub fn without_returns(p: f64, sigma_p: f64, lambda: f64, jump: JumpLaw) -> Self {
        Self { p, sigma_p, lambda, jump, r: 0.0, sigma_r: 0.0, rho: 0.0 }
    }

    pub fn with_returns(mut self, r: f64, sigma_r: f64, rho: f64) -> Self {
        self.r = r;
        self.sigma_r = sigma_r;
        self.rho = rho;
        self
    }

    /// Mean drift of the uncontrolled surplus without returns: `lambda E[X] - p`.
    pub fn net_drift(&self) -> f64 {
        self.lambda * self.jump.mean() - self.p
    }

    /// `r = sigma_R = 0`: the surplus is a spectrally positive Levy process.
    pub fn is_levy(&self) -> bool {
        self.r == 0.0 && self.sigma_r == 0.0
    }

    /// `sigma_p = sigma_R = 0` with `r > 0`: piecewise-deterministic between gains.
    pub fn is_piecewise_deterministic(&self) -> bool {
        self.sigma_p == 0.0 && self.sigma_r == 0.0 && self.r > 0.0
    }

    /// Drift and diffusion coefficients of the generator at surplus level `y`.
    pub fn generator_coefficients(&self, y: f64) -> (f64, f64) {
        generator_coefficients(self, y)
    }
}

/// Discounting and proportional transaction costs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CostParams {
    pub delta: f64,
    /// Fraction of each dividend that reaches the shareholders.
    pub alpha: f64,
    /// Cost per unit of injected capital.
    pub beta: f64,
}

impl CostParams {
    pub fn new(delta: f64, alpha: f64, beta: f64) -> Self {
        Self { delta, alpha, beta }
    }
}

/// Which closed form (if any) a solution came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Paying everything out immediately is optimal.
    Degenerate,
    /// `r = sigma_R = 0`, solved through the delta-scale functions.
    ScaleForm,
    /// `sigma_p = sigma_R = 0` with exponential gains, solved through Kummer functions.
    KummerForm,
    /// No closed form; barrier found by simulation.
    MonteCarlo,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Degenerate => "Degenerate",
            Regime::ScaleForm => "ScaleForm",
            Regime::KummerForm => "KummerForm",
            Regime::MonteCarlo => "MonteCarlo",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Severity {
    Warning,
    Error,
}

/// One parameter-validation finding.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    /// Dotted config key of the offending field.
    pub field: String,
    pub message: String,
}

impl Diagnostic {
    pub fn error(field: &str, message: impl Into<String>) -> Self {
        Self { severity: Severity::Error, field: field.to_string(), message: message.into() }
    }

    pub fn warning(field: &str, message: impl Into<String>) -> Self {
        Self { severity: Severity::Warning, field: field.to_string(), message: message.into() }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{tag}: {}: {}", self.field, self.message)
    }
}

/// Checks every hard invariant of the parameters and the net-profit condition.
///
/// Hard invariant breaches come back as errors; a failing net-profit condition
/// `lambda E[X] > p` is only a warning since the degenerate barrier handles it.
pub fn validate(model: &ModelParams, costs: &CostParams) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let positive = |v: f64| v.is_finite() && v > 0.0;
    let nonneg = |v: f64| v.is_finite() && v >= 0.0;

    if !positive(model.p) {
        out.push(Diagnostic::error("model.p", format!("expense rate must be positive, got {}", model.p)));
    }
    if !nonneg(model.sigma_p) {
        out.push(Diagnostic::error("model.sigma_p", format!("must be nonnegative, got {}", model.sigma_p)));
    }
    if !positive(model.lambda) {
        out.push(Diagnostic::error("model.lambda", format!("jump intensity must be positive, got {}", model.lambda)));
    }
    if !nonneg(model.r) {
        out.push(Diagnostic::error("model.r", format!("must be nonnegative, got {}", model.r)));
    }
    if !nonneg(model.sigma_r) {
        out.push(Diagnostic::error("model.sigma_r", format!("must be nonnegative, got {}", model.sigma_r)));
    }
    if !(model.rho.is_finite() && (-1.0..=1.0).contains(&model.rho)) {
        out.push(Diagnostic::error("model.rho", format!("correlation must lie in [-1, 1], got {}", model.rho)));
    }
    model.jump.diagnostics(&mut out);

    if !positive(costs.delta) {
        out.push(Diagnostic::error("costs.delta", format!("discount rate must be positive, got {}", costs.delta)));
    }
    if !(costs.alpha.is_finite() && costs.alpha > 0.0 && costs.alpha <= 1.0) {
        out.push(Diagnostic::error("costs.alpha", format!("alpha out of range (0, 1]: {}", costs.alpha)));
    }
    if !(costs.beta.is_finite() && costs.beta >= 1.0) {
        out.push(Diagnostic::error("costs.beta", format!("beta out of range [1, inf): {}", costs.beta)));
    }

    if !out.iter().any(Diagnostic::is_error) {
        let gains = model.lambda * model.jump.mean();
        if gains <= model.p {
            out.push(Diagnostic::warning(
                "model.p",
                format!("net-profit condition fails: lambda E[X] = {gains} <= p = {}", model.p),
            ));
        }
        if model.r > costs.delta {
            out.push(Diagnostic::warning(
                "model.r",
                format!("return drift r = {} exceeds the discount rate {}", model.r, costs.delta),
            ));
        }
    }
    out
}

/// `(r y - p, 1/2 [(sigma_p + rho sigma_R y)^2 + sigma_R^2 (1 - rho^2) y^2])`.
///
/// The jump part of the generator needs a test function and is assembled by the
/// residual checks in the solver modules.
pub fn generator_coefficients(model: &ModelParams, y: f64) -> (f64, f64) {
    let drift = model.r * y - model.p;
    let correlated = model.sigma_p + model.rho * model.sigma_r * y;
    let independent_sq = model.sigma_r * model.sigma_r * (1.0 - model.rho * model.rho).max(0.0) * y * y;
    (drift, 0.5 * (correlated * correlated + independent_sq))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{integrate_with_kinks, Tolerance};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn base() -> (ModelParams, CostParams) {
        (
            ModelParams::without_returns(0.5, 0.0, 1.0, JumpLaw::exponential(1.0)),
            CostParams::new(0.05, 0.9, 1.2),
        )
    }

    fn laws() -> Vec<JumpLaw> {
        vec![
            JumpLaw::exponential(1.3),
            JumpLaw::hyper_exponential(vec![0.3, 0.7], vec![0.5, 4.0]),
            JumpLaw::erlang(3, 2.0),
        ]
    }

    #[test]
    fn validate_accepts_profitable_model() {
        let (m, c) = base();
        assert!(validate(&m, &c).is_empty());
    }

    #[test]
    fn validate_warns_on_net_profit_failure() {
        let (mut m, c) = base();
        m.p = 1.5;
        let d = validate(&m, &c);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].severity, Severity::Warning);
        assert!(d[0].message.contains("net-profit"));
    }

    #[test]
    fn validate_rejects_alpha_zero() {
        let (m, mut c) = base();
        c.alpha = 0.0;
        let d = validate(&m, &c);
        assert!(d.iter().any(|d| d.is_error() && d.field == "costs.alpha"));
    }

    #[test]
    fn validate_rejects_bad_weights_and_rho() {
        let (mut m, c) = base();
        m.jump = JumpLaw::hyper_exponential(vec![0.5, 0.6], vec![1.0, 2.0]);
        m.rho = 1.5;
        let d = validate(&m, &c);
        assert!(d.iter().any(|d| d.field == "model.jump.weights"));
        assert!(d.iter().any(|d| d.field == "model.rho"));
    }

    #[test]
    fn generator_examples() {
        let m = ModelParams::without_returns(0.5, 0.2, 1.0, JumpLaw::exponential(1.0));
        let (drift, diff) = generator_coefficients(&m, 3.0);
        assert_eq!(drift, -0.5);
        assert!((diff - 0.02).abs() < 1e-15);

        let m = m.clone().with_returns(0.04, 0.0, 0.0);
        assert!(generator_coefficients(&m, 12.5).0.abs() < 1e-15);

        let m = ModelParams::without_returns(0.5, 0.2, 1.0, JumpLaw::exponential(1.0))
            .with_returns(0.0, 0.1, -1.0);
        assert!(generator_coefficients(&m, 2.0).1.abs() < 1e-15);
    }

    #[test]
    fn transforms_at_zero_and_rational_form() {
        for law in laws() {
            assert!((law.laplace_transform(0.0) - 1.0).abs() < 1e-15);
            let (a, b) = law.rational_transform().unwrap();
            for theta in [0.0, 0.3, 2.0, 7.5] {
                let ratio = a.eval(theta) / b.eval(theta);
                assert!((ratio - law.laplace_transform(theta)).abs() < 1e-13, "{law:?} {theta}");
            }
        }
    }

    #[test]
    fn transform_is_decreasing_and_convex_on_grid() {
        for law in laws() {
            let grid: Vec<f64> = (0..200).map(|i| i as f64 * 0.05).collect();
            let v: Vec<f64> = grid.iter().map(|&t| law.laplace_transform(t)).collect();
            for w in v.windows(3) {
                assert!(w[1] <= w[0]);
                assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-14);
            }
        }
    }

    fn integrate_law(law: &JumpLaw, f: impl Fn(f64) -> f64) -> f64 {
        let rate = law.tail_decay_rate().unwrap();
        // Truncate where the exponential envelope is far below 1e-12.
        let upper = 60.0 / rate;
        integrate_with_kinks(|x| f(x) * law.density(x), 0.0, upper, &[], &Tolerance::new(1e-13, 1e-13, 400))
            .unwrap()
    }

    #[test]
    fn moments_and_transforms_match_quadrature() {
        for law in laws() {
            let mean = integrate_law(&law, |x| x);
            assert!((mean - law.mean()).abs() < 1e-8, "{law:?}");
            for theta in [0.1, 1.0, 10.0] {
                let lt = integrate_law(&law, |x| (-theta * x).exp());
                assert!((lt - law.laplace_transform(theta)).abs() < 1e-8, "{law:?} {theta}");
            }
            for y in [0.2, 1.0, 3.0] {
                let rate = law.tail_decay_rate().unwrap();
                let tol = Tolerance::new(1e-13, 1e-13, 400);
                let tail = integrate_with_kinks(|x| law.density(x), y, y + 60.0 / rate, &[], &tol).unwrap();
                let pm = integrate_with_kinks(|x| x * law.density(x), y, y + 60.0 / rate, &[], &tol).unwrap();
                assert!((tail - law.tail(y)).abs() < 1e-10);
                assert!((pm - law.partial_mean_above(y)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn sample_means_within_five_standard_errors() {
        for (i, law) in laws().into_iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(17 + i as u64);
            let n = 1_000_000;
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                let x = law.sample(&mut rng);
                assert!(x > 0.0);
                s += x;
                s2 += x * x;
            }
            let mean = s / n as f64;
            let var = s2 / n as f64 - mean * mean;
            let se = (var / n as f64).sqrt();
            assert!((mean - law.mean()).abs() < 5.0 * se, "{law:?}: {mean} vs {}", law.mean());
        }
    }

    proptest! {
        #[test]
        fn diffusion_coefficient_is_nonnegative(
            sp in 0.0..2.0f64, sr in 0.0..2.0f64, rho in -1.0..=1.0f64, y in 0.0..100.0f64
        ) {
            let m = ModelParams::without_returns(1.0, sp, 1.0, JumpLaw::exponential(1.0))
                .with_returns(0.03, sr, rho);
            prop_assert!(generator_coefficients(&m, y).1 >= 0.0);
        }
    }
}
