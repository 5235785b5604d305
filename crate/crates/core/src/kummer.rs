//! Confluent hypergeometric functions.
//!
//! `M(a, b, z)` is Kummer's function (the regular solution of
//! `z f'' + (b − z) f' − a f = 0`) and `U(a, b, z)` the Tricomi solution on
//! `z > 0`. For `z < 0`, where the exponential-gain solver lives, the second
//! real solution is taken to be `S(a, b, z) = (−z)^{1−b} M(a − b + 1, 2 − b, z)`.

use thiserror::Error;

use crate::numerics::{self, CompensatedSum, Tolerance};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KummerError {
    #[error("b = {b} is a non-positive integer")]
    ParameterPole { b: f64 },
    #[error("{what} did not converge for (a, b, z) = ({a}, {b}, {z})")]
    NonConvergence { what: &'static str, a: f64, b: f64, z: f64 },
    #[error("z = {z} is outside the real branch of {what}")]
    BranchDomain { what: &'static str, z: f64 },
}

const MAX_TERMS: usize = 20_000;

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

/// Parameters of the Kummer equation attached to the exponential-gain model
/// with deterministic returns.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KummerParams {
    pub a: f64,
    pub b: f64,
}

impl KummerParams {
    pub fn new(a: f64, b: f64) -> Result<Self, KummerError> {
        if is_nonpositive_integer(b) {
            return Err(KummerError::ParameterPole { b });
        }
        Ok(Self { a, b })
    }

    /// `a = −δ/r`, `b = 1 − (λ + δ)/r`.
    pub fn from_model(r: f64, lambda: f64, delta: f64) -> Result<Self, KummerError> {
        Self::new(-delta / r, 1.0 - (lambda + delta) / r)
    }
}

/// Sum of the defining series together with the sum of absolute terms.
fn series(a: f64, b: f64, z: f64) -> Result<(f64, f64), KummerError> {
    let mut term = 1.0_f64;
    let mut acc = CompensatedSum::new();
    acc.add(1.0);
    let mut abs_sum = 1.0;
    // Terms may grow until n passes -b and |z|; only stop after that.
    let settle = (-b).max(-a).max(0.0) + 1.0;
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        let an = a + nf;
        if an == 0.0 {
            return Ok((acc.value(), abs_sum));
        }
        term *= an / (b + nf) * z / (nf + 1.0);
        if !term.is_finite() {
            return Err(KummerError::NonConvergence { what: "M series", a, b, z });
        }
        acc.add(term);
        abs_sum += term.abs();
        let next_ratio = ((a + nf + 1.0) * z / ((b + nf + 1.0) * (nf + 2.0))).abs();
        let sum = acc.value().abs();
        if nf > settle && next_ratio < 1.0 && (term.abs() <= 1e-17 * sum || term.abs() <= 1e-30 * abs_sum) {
            return Ok((acc.value(), abs_sum));
        }
    }
    Err(KummerError::NonConvergence { what: "M series", a, b, z })
}

/// Kummer's function `M(a, b, z)`.
pub fn kummer_m(a: f64, b: f64, z: f64) -> Result<f64, KummerError> {
    if is_nonpositive_integer(b) {
        return Err(KummerError::ParameterPole { b });
    }
    if z == 0.0 || a == 0.0 {
        return Ok(1.0);
    }
    let (direct, direct_abs) = series(a, b, z)?;
    if z > -1.0 {
        return Ok(direct);
    }
    // For negative z the direct series alternates; the transformed series
    // e^z M(b − a, b, −z) does not. Use whichever loses fewer digits.
    let direct_cond = direct_abs / direct.abs();
    match series(b - a, b, -z) {
        Ok((transformed, transformed_abs)) => {
            let transformed_cond = transformed_abs / transformed.abs();
            if transformed_cond < direct_cond {
                Ok(z.exp() * transformed)
            } else {
                Ok(direct)
            }
        }
        Err(_) => Ok(direct),
    }
}

/// `∂M/∂z = (a/b) M(a + 1, b + 1, z)`.
pub fn kummer_m_prime(a: f64, b: f64, z: f64) -> Result<f64, KummerError> {
    if is_nonpositive_integer(b) {
        return Err(KummerError::ParameterPole { b });
    }
    if a == 0.0 {
        return Ok(0.0);
    }
    Ok(a / b * kummer_m(a + 1.0, b + 1.0, z)?)
}

/// `∂²M/∂z² = a(a + 1)/(b(b + 1)) M(a + 2, b + 2, z)`.
pub fn kummer_m_second(a: f64, b: f64, z: f64) -> Result<f64, KummerError> {
    if is_nonpositive_integer(b) {
        return Err(KummerError::ParameterPole { b });
    }
    Ok(a / b * kummer_m_prime(a + 1.0, b + 1.0, z)?)
}

/// Second real solution on `z < 0`: `S(a, b, z) = (−z)^{1−b} M(a − b + 1, 2 − b, z)`.
pub fn kummer_s(a: f64, b: f64, z: f64) -> Result<f64, KummerError> {
    if !(z < 0.0) {
        return Err(KummerError::BranchDomain { what: "S", z });
    }
    Ok((-z).powf(1.0 - b) * kummer_m(a - b + 1.0, 2.0 - b, z)?)
}

/// `∂S/∂z = −(1 − b) S(a + 1, b + 1, z)`.
pub fn kummer_s_prime(a: f64, b: f64, z: f64) -> Result<f64, KummerError> {
    if b == 1.0 {
        return Ok(0.0);
    }
    Ok(-(1.0 - b) * kummer_s(a + 1.0, b + 1.0, z)?)
}

/// `∂²S/∂z² = −(1 − b) b S(a + 2, b + 2, z)`.
pub fn kummer_s_second(a: f64, b: f64, z: f64) -> Result<f64, KummerError> {
    if b == 1.0 {
        return Ok(0.0);
    }
    Ok(-(1.0 - b) * kummer_s_prime(a + 1.0, b + 1.0, z)?)
}

fn rgamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) || x > 171.0 {
        0.0
    } else {
        1.0 / libm::tgamma(x)
    }
}

/// Pochhammer symbol `(x)_n`.
fn pochhammer(x: f64, n: u32) -> f64 {
    (0..n).fold(1.0, |acc, k| acc * (x + f64::from(k)))
}

/// Tricomi's function `U(a, b, z)` for `z > 0`.
///
/// Terminating cases are summed exactly; large `z` uses the asymptotic
/// expansion; `a > 0` uses the integral representation, and `a < 0` either the
/// two-`M` connection formula (small `z`, `b` away from integers) or downward
/// recurrence in `a` from the integral representation. None of the
/// routes divides by `Γ` near a pole, so integer and near-integer `b` need no
/// special treatment.
pub fn kummer_u(a: f64, b: f64, z: f64) -> Result<f64, KummerError> {
    if !(z > 0.0) {
        return Err(KummerError::BranchDomain { what: "U", z });
    }
    if a == 0.0 {
        return Ok(1.0);
    }
    if is_nonpositive_integer(a) {
        return Ok(u_polynomial(a, b, z));
    }
    if let Some(v) = u_asymptotic(a, b, z) {
        return Ok(v);
    }
    if a > 0.0 {
        return u_integral(a, b, z);
    }
    let near_integer_b = (b - b.round()).abs() < 1e-3;
    if z <= 5.0 && !near_integer_b && b.abs() < 30.0 {
        return u_connection(a, b, z);
    }
    u_recurrence(a, b, z)
}

/// `∂U/∂z = −a U(a + 1, b + 1, z)`.
pub fn kummer_u_prime(a: f64, b: f64, z: f64) -> Result<f64, KummerError> {
    if !(z > 0.0) {
        return Err(KummerError::BranchDomain { what: "U", z });
    }
    if a == 0.0 {
        return Ok(0.0);
    }
    Ok(-a * kummer_u(a + 1.0, b + 1.0, z)?)
}

/// `∂²U/∂z² = a(a + 1) U(a + 2, b + 2, z)`.
pub fn kummer_u_second(a: f64, b: f64, z: f64) -> Result<f64, KummerError> {
    if a == 0.0 {
        return Ok(0.0);
    }
    Ok(-a * kummer_u_prime(a + 1.0, b + 1.0, z)?)
}

/// `U(−n, b, z) = (−1)^n Σ_k C(n, k) (b + k)_{n−k} (−z)^k`.
fn u_polynomial(a: f64, b: f64, z: f64) -> f64 {
    let n = (-a).round() as u32;
    let mut acc = CompensatedSum::new();
    let mut binom = 1.0;
    for k in 0..=n {
        if k > 0 {
            binom *= f64::from(n - k + 1) / f64::from(k);
        }
        acc.add(binom * pochhammer(b + f64::from(k), n - k) * (-z).powi(k as i32));
    }
    if n % 2 == 0 {
        acc.value()
    } else {
        -acc.value()
    }
}

fn u_asymptotic(a: f64, b: f64, z: f64) -> Option<f64> {
    if z < 30.0 {
        return None;
    }
    let c = a - b + 1.0;
    let mut term = 1.0_f64;
    let mut acc = CompensatedSum::new();
    acc.add(1.0);
    for n in 0..200 {
        let nf = n as f64;
        let next = term * (a + nf) * (c + nf) / ((nf + 1.0) * -z);
        if next.abs() > term.abs() && nf > (a.abs() + c.abs()) {
            return None;
        }
        term = next;
        acc.add(term);
        if term.abs() <= 1e-17 * acc.value().abs() || term == 0.0 {
            return Some(z.powf(-a) * acc.value());
        }
    }
    None
}

fn u_connection(a: f64, b: f64, z: f64) -> Result<f64, KummerError> {
    let first = libm::tgamma(1.0 - b) * rgamma(a - b + 1.0) * kummer_m(a, b, z)?;
    let second = libm::tgamma(b - 1.0) * rgamma(a) * z.powf(1.0 - b) * kummer_m(a - b + 1.0, 2.0 - b, z)?;
    Ok(first + second)
}

/// `Γ(a) U(a, b, z) = ∫₀^∞ e^{−zt} t^{a−1} (1 + t)^{b−a−1} dt` for `a > 0`.
fn u_integral(a: f64, b: f64, z: f64) -> Result<f64, KummerError> {
    let fail = || KummerError::NonConvergence { what: "U integral", a, b, z };
    let tol = Tolerance::new(1e-300, 1e-14, 4000);
    let power = b - a - 1.0;
    // On [0, 1] substitute s = t^a, which removes the t^{a−1} singularity;
    // the prefactor becomes 1/Γ(a + 1).
    let head = numerics::integrate(
        |s: f64| {
            let t = s.powf(1.0 / a);
            (-z * t).exp() * (1.0 + t).powf(power)
        },
        0.0,
        1.0,
        &tol,
    )
    .map_err(|_| fail())?;
    let head = head * rgamma(a + 1.0);
    let integrand = |t: f64| (-z * t + (a - 1.0) * t.ln() + power * (1.0 + t).ln()).exp();
    let peak = ((a - 1.0 + power.max(0.0)) / z).max(1.0);
    let mut acc = CompensatedSum::new();
    let (mut lo, mut hi) = (1.0, 2.0);
    loop {
        let piece = numerics::integrate(integrand, lo, hi, &tol).map_err(|_| fail())?;
        acc.add(piece);
        if lo > peak && piece.abs() <= 1e-17 * acc.value().abs() {
            break;
        }
        if hi > 1e6 {
            return Err(fail());
        }
        lo = hi;
        hi *= 2.0;
    }
    Ok(head + acc.value() * rgamma(a))
}

/// Downward recurrence `U(a − 1) = −(b − 2a − z) U(a) − a(a − b + 1) U(a + 1)`
/// from starting values with `a ∈ (0, 2]`.
fn u_recurrence(a: f64, b: f64, z: f64) -> Result<f64, KummerError> {
    let steps = (1.0 - a).floor() as i64;
    let top = a + steps as f64;
    let mut upper = u_integral(top + 1.0, b, z)?;
    let mut current = u_integral(top, b, z)?;
    let mut ak = top;
    for _ in 0..steps {
        let lower = -(b - 2.0 * ak - z) * current - ak * (ak - b + 1.0) * upper;
        upper = current;
        current = lower;
        ak -= 1.0;
    }
    Ok(current)
}
