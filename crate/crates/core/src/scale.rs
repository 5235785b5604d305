//! Laplace exponent and δ-scale functions of the spectrally positive Lévy
//! surplus obtained when investment returns are switched off (`r = σ_R = 0`).
//!
//! For jump laws with rational Laplace transforms `L = A/B`, the transform of
//! the scale function is `1/(Ψ(θ) − δ) = B(θ)/P(θ)` with
//! `P = (pθ + ½σ²θ² − λ − δ)·B + λ·A`. Its partial-fraction expansion gives
//! `W(x) = Σ cᵢ e^{θᵢx}` with `cᵢ = B(θᵢ)/P'(θᵢ)`, and `Z`, `Z̄` follow by
//! termwise integration.

use num_complex::Complex64;
use thiserror::Error;

use crate::model::ModelParams;
use crate::numerics::poly::{Poly, PolyError};
use crate::numerics::{self, talbot, NumericsError, Tolerance};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScaleError {
    #[error("scale functions need r = 0 and sigma_r = 0 (got r = {r}, sigma_r = {sigma_r})")]
    RegimeMismatch { r: f64, sigma_r: f64 },
    #[error("the {0} jump law has no rational Laplace transform")]
    NotRational(&'static str),
    #[error("root isolation failed: {0}")]
    RootIsolationFailure(String),
    #[error("imaginary residue {imag:e} at x = {x} exceeds the cancellation tolerance (real part {real:e})")]
    NumericalCancellation { x: f64, real: f64, imag: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

impl From<PolyError> for ScaleError {
    fn from(e: PolyError) -> Self {
        ScaleError::RootIsolationFailure(e.to_string())
    }
}

/// Roots closer than this (relative to their size) are treated as repeated.
pub const ROOT_SEPARATION: f64 = 1e-7;
const CANCELLATION_TOL: f64 = 1e-8;

fn check_regime(model: &ModelParams) -> Result<(), ScaleError> {
    if model.r != 0.0 || model.sigma_r != 0.0 {
        return Err(ScaleError::RegimeMismatch { r: model.r, sigma_r: model.sigma_r });
    }
    Ok(())
}

/// `Ψ(θ) = pθ + ½σ_p²θ² + λ(E[e^{−θX}] − 1)` for `θ ≥ 0`.
pub fn laplace_exponent(model: &ModelParams, theta: f64) -> Result<f64, ScaleError> {
    check_regime(model)?;
    Ok(psi(model, theta))
}

fn psi(model: &ModelParams, theta: f64) -> f64 {
    model.p * theta
        + 0.5 * model.sigma_p * model.sigma_p * theta * theta
        + model.lambda * (model.jump.laplace_transform(theta) - 1.0)
}

/// Partial-fraction representation of the δ-scale function.
#[derive(Clone, Debug)]
pub struct ScaleSet {
    model: ModelParams,
    delta: f64,
    roots: Vec<Complex64>,
    coefficients: Vec<Complex64>,
    phi: f64,
}

/// Builds the scale set for `model` (which must have `r = σ_R = 0`) and discount `delta`.
pub fn build_scale_set(model: &ModelParams, delta: f64) -> Result<ScaleSet, ScaleError> {
    check_regime(model)?;
    let (num, den) = model
        .jump
        .rational_transform()
        .ok_or(ScaleError::NotRational(model.jump.kind()))?;
    let s2 = 0.5 * model.sigma_p * model.sigma_p;
    let outer = Poly::new(vec![-model.lambda - delta, model.p, s2]);
    let p_poly = outer.mul(&den).add(&num.scale(model.lambda));
    let roots = p_poly.roots()?;
    let expected_degree = den.degree() + if s2 > 0.0 { 2 } else { 1 };
    if roots.len() != expected_degree {
        return Err(ScaleError::RootIsolationFailure(format!(
            "expected {expected_degree} roots, found {}",
            roots.len()
        )));
    }
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            let scale = roots[i].norm().max(roots[j].norm()).max(1.0);
            if (roots[i] - roots[j]).norm() < ROOT_SEPARATION * scale {
                return Err(ScaleError::RootIsolationFailure(format!(
                    "roots {} and {} are (nearly) repeated; perturb delta by about 1e-9",
                    roots[i], roots[j]
                )));
            }
        }
    }
    let positive: Vec<&Complex64> = roots.iter().filter(|r| r.re > 0.0).collect();
    if positive.len() != 1 || positive[0].im != 0.0 {
        return Err(ScaleError::RootIsolationFailure(format!(
            "expected exactly one root in the right half-plane and on the real axis, found {positive:?}"
        )));
    }
    let phi = positive[0].re;

    let dp = p_poly.derivative();
    let coefficients = roots.iter().map(|t| den.eval_complex(*t) / dp.eval_complex(*t)).collect();

    Ok(ScaleSet { model: model.clone(), delta, roots, coefficients, phi })
}

/// `(e^u − 1)/u`, accurate near zero.
fn phi1(u: Complex64) -> Complex64 {
    if u.norm() < 0.5 {
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for k in 2..30 {
            term *= u / k as f64;
            sum += term;
        }
        sum
    } else {
        (u.exp() - 1.0) / u
    }
}

/// `(e^u − 1 − u)/u²`, accurate near zero.
fn phi2(u: Complex64) -> Complex64 {
    if u.norm() < 0.5 {
        let mut term = Complex64::new(0.5, 0.0);
        let mut sum = term;
        for k in 3..30 {
            term *= u / k as f64;
            sum += term;
        }
        sum
    } else {
        (u.exp() - 1.0 - u) / (u * u)
    }
}

impl ScaleSet {
    pub fn model(&self) -> &ModelParams {
        &self.model
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Roots of `Ψ(θ) = δ` (all of them, complex), ordered by real part.
    pub fn roots(&self) -> &[Complex64] {
        &self.roots
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// The unique positive root `Φ(δ)` of `Ψ(θ) = δ`.
    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn laplace_exponent(&self, theta: f64) -> f64 {
        psi(&self.model, theta)
    }

    /// `Ψ` continued to complex arguments through the rational transform.
    pub fn laplace_exponent_complex(&self, theta: Complex64) -> Complex64 {
        let m = &self.model;
        let lt = m
            .jump
            .laplace_transform_complex(theta)
            .expect("scale sets are only built for rational transforms");
        theta * m.p + theta * theta * (0.5 * m.sigma_p * m.sigma_p) + (lt - 1.0) * m.lambda
    }

    /// Expected unit-time increment of the uncontrolled surplus, `λE[X] − p`.
    pub fn expected_increment(&self) -> f64 {
        self.model.net_drift()
    }

    fn realize(&self, x: f64, z: Complex64) -> Result<f64, ScaleError> {
        if z.im.abs() > CANCELLATION_TOL * z.re.abs().max(f64::MIN_POSITIVE) && z.im.abs() > 1e-300 {
            return Err(ScaleError::NumericalCancellation { x, real: z.re, imag: z.im });
        }
        Ok(z.re)
    }

    fn sum<F: Fn(Complex64, Complex64) -> Complex64>(&self, f: F) -> Complex64 {
        let mut re = numerics::CompensatedSum::new();
        let mut im = numerics::CompensatedSum::new();
        for (c, t) in self.coefficients.iter().zip(&self.roots) {
            let v = f(*c, *t);
            re.add(v.re);
            im.add(v.im);
        }
        Complex64::new(re.value(), im.value())
    }

    /// `W^(δ)(x)`; zero for negative `x`.
    pub fn try_w(&self, x: f64) -> Result<f64, ScaleError> {
        if x < 0.0 {
            return Ok(0.0);
        }
        let z = self.sum(|c, t| c * (t * x).exp());
        self.realize(x, z).map(|w| w.max(0.0))
    }

    /// `W^(δ)'(x)` for `x > 0`; zero for negative `x`.
    pub fn try_w_prime(&self, x: f64) -> Result<f64, ScaleError> {
        if x < 0.0 {
            return Ok(0.0);
        }
        let z = self.sum(|c, t| c * t * (t * x).exp());
        self.realize(x, z)
    }

    /// `Z^(δ)(x) = 1 + δ∫₀ˣ W`; equal to 1 for `x ≤ 0`.
    pub fn try_z(&self, x: f64) -> Result<f64, ScaleError> {
        if x <= 0.0 {
            return Ok(1.0);
        }
        let z = self.sum(|c, t| c * phi1(t * x));
        let integral = self.realize(x, z * x)?;
        Ok(1.0 + self.delta * integral)
    }

    /// `Z̄^(δ)(x) = ∫₀ˣ Z`; equal to `x` for `x ≤ 0`.
    pub fn try_zbar(&self, x: f64) -> Result<f64, ScaleError> {
        if x <= 0.0 {
            return Ok(x);
        }
        let z = self.sum(|c, t| c * phi2(t * x));
        let integral = self.realize(x, z * (x * x))?;
        Ok(x + self.delta * integral)
    }

    /// Infallible evaluators. Conjugate roots are paired exactly when the set
    /// is built, so the cancellation check cannot trip on finite arguments;
    /// a failure here indicates a broken invariant.
    pub fn w(&self, x: f64) -> f64 {
        self.try_w(x).expect("scale function evaluation")
    }

    pub fn w_prime(&self, x: f64) -> f64 {
        self.try_w_prime(x).expect("scale function evaluation")
    }

    pub fn z(&self, x: f64) -> f64 {
        self.try_z(x).expect("scale function evaluation")
    }

    pub fn zbar(&self, x: f64) -> f64 {
        self.try_zbar(x).expect("scale function evaluation")
    }

    /// Solves `Z(x) = target` for `x ≥ 0`; requires `target ≥ 1`.
    pub fn z_inverse(&self, target: f64, tol: &Tolerance) -> Result<f64, ScaleError> {
        Ok(numerics::invert_monotone(|x| self.z(x), target, 0.0, 1.0 / self.phi, tol)?)
    }

    /// Solves `Z̄(x) = target` for `x ≥ 0`; requires `target ≥ 0`.
    pub fn zbar_inverse(&self, target: f64, tol: &Tolerance) -> Result<f64, ScaleError> {
        Ok(numerics::invert_monotone(|x| self.zbar(x), target, 0.0, 1.0 / self.phi, tol)?)
    }

    /// Independent evaluation of `(W, Z, Z̄)` at `x > 0` by fixed-Talbot
    /// inversion of their Laplace transforms. Intended as a cross-check only.
    pub fn talbot_check(&self, x: f64) -> (f64, f64, f64) {
        let one = Complex64::new(1.0, 0.0);
        let d = self.delta;
        let shift = self.phi + 1.0;
        let base = |s: Complex64| one / (self.laplace_exponent_complex(s) - d);
        let w = talbot::invert(base, x, shift, 32);
        let z = talbot::invert(|s| one / s + base(s) * d / s, x, shift, 32);
        let zbar = talbot::invert(|s| one / (s * s) + base(s) * d / (s * s), x, shift, 32);
        (w, z, zbar)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::JumpLaw;
    use proptest::prelude::*;

    fn proto() -> ModelParams {
        ModelParams {
            p: 0.5,
            sigma_p: 0.2,
            lambda: 1.0,
            jump: JumpLaw::exponential(1.0),
            r: 0.0,
            sigma_r: 0.0,
            rho: 0.0,
        }
    }

    #[test]
    fn exponent_examples() {
        let m = proto();
        assert_eq!(laplace_exponent(&m, 0.0).unwrap(), 0.0);
        assert!((laplace_exponent(&m, 1.0).unwrap() - 0.02).abs() < 1e-15);
        let mut with_returns = m.clone();
        with_returns.r = 0.04;
        assert!(matches!(laplace_exponent(&with_returns, 1.0), Err(ScaleError::RegimeMismatch { .. })));
    }

    #[test]
    fn pure_diffusion_matches_quadratic_formula() {
        let mut m = proto();
        m.lambda = 1e-300;
        let delta = 0.05;
        let s = build_scale_set(&m, delta).unwrap();
        let s2 = 0.5 * m.sigma_p * m.sigma_p;
        let disc = (m.p * m.p + 4.0 * s2 * delta).sqrt();
        let (t1, t2) = ((-m.p + disc) / (2.0 * s2), (-m.p - disc) / (2.0 * s2));
        for x in [0.0, 0.5, 1.0] {
            let want = ((t1 * x).exp() - (t2 * x).exp()) / (s2 * (t1 - t2));
            assert!((s.w(x) - want).abs() < 1e-9 * want.max(1.0), "x={x}");
        }
    }

    #[test]
    fn boundary_values() {
        let s = build_scale_set(&proto(), 0.05).unwrap();
        assert!(s.w(0.0).abs() < 1e-12);
        assert_eq!(s.z(0.0), 1.0);
        assert_eq!(s.zbar(0.0), 0.0);
        assert_eq!(s.w(-1.0), 0.0);
        assert_eq!(s.z(-1.0), 1.0);
        assert_eq!(s.zbar(-2.5), -2.5);
        // Without a diffusion part W jumps to 1/p at the origin.
        let mut m = proto();
        m.sigma_p = 0.0;
        let s = build_scale_set(&m, 0.05).unwrap();
        assert!((s.w(0.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn roots_and_phi() {
        let s = build_scale_set(&proto(), 0.05).unwrap();
        assert_eq!(s.roots().len(), 3);
        let phi = s.phi();
        // Oracle: dense scan of Ψ − δ followed by bisection.
        let f = |t: f64| laplace_exponent(&proto(), t).unwrap() - 0.05;
        let cells = numerics::sign_changes(f, 0.01, 50.0, 5000);
        assert_eq!(cells.len(), 1);
        let (mut lo, mut hi) = cells[0];
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!((phi - 0.5 * (lo + hi)).abs() < 1e-10);
    }

    #[test]
    fn derivative_relations() {
        let s = build_scale_set(&proto(), 0.05).unwrap();
        let h = 1e-5;
        for i in 1..40 {
            let x = 0.2 * i as f64;
            let fd_zbar = (s.zbar(x + h) - s.zbar(x - h)) / (2.0 * h);
            assert!((fd_zbar - s.z(x)).abs() < 1e-6 * s.z(x), "x={x}");
            let fd_z = (s.z(x + h) - s.z(x - h)) / (2.0 * h);
            assert!((fd_z - 0.05 * s.w(x)).abs() < 1e-6 * s.z(x), "x={x}");
            let fd_w = (s.w(x + h) - s.w(x - h)) / (2.0 * h);
            assert!((fd_w - s.w_prime(x)).abs() < 1e-5 * s.w_prime(x).abs().max(1.0), "x={x}");
        }
    }

    #[test]
    fn talbot_agrees_with_partial_fractions() {
        let mut hyper = proto();
        hyper.jump = JumpLaw::hyper_exponential(vec![0.3, 0.7], vec![0.5, 3.0]);
        for m in [proto(), hyper] {
            let s = build_scale_set(&m, 0.05).unwrap();
            for x in [0.3, 1.0, 4.0] {
                let (w, z, zbar) = s.talbot_check(x);
                assert!((w / s.w(x) - 1.0).abs() < 1e-7, "W at {x}");
                assert!((z / s.z(x) - 1.0).abs() < 1e-7, "Z at {x}");
                assert!((zbar / s.zbar(x) - 1.0).abs() < 1e-7, "Zbar at {x}");
            }
        }
    }

    #[test]
    fn zbar_integrates_z() {
        let s = build_scale_set(&proto(), 0.05).unwrap();
        let b = s.zbar_inverse(s.expected_increment() / 0.05, &Tolerance::default()).unwrap();
        let tol = Tolerance::new(1e-12, 1e-12, 200);
        let integral = numerics::integrate(|y| s.z(y), 0.0, b, &tol).unwrap();
        assert!((integral - s.zbar(b)).abs() < 1e-8);
    }

    #[test]
    fn inverse_examples() {
        let s = build_scale_set(&proto(), 0.05).unwrap();
        let tol = Tolerance::default();
        assert_eq!(s.z_inverse(1.0, &tol).unwrap(), 0.0);
        let target = s.expected_increment() / 0.05;
        let b = s.zbar_inverse(target, &tol).unwrap();
        // Oracle: tabulate Z̄ on a grid and bisect the bracketing cell.
        let cell = (0..10_000).map(|i| i as f64 * 1e-3).find(|x| s.zbar(*x) >= target).unwrap();
        let (mut lo, mut hi) = (cell - 1e-3, cell);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if s.zbar(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((b - lo).abs() < 1e-9);
        assert!((s.zbar(b) - target).abs() < 1e-8);
    }

    #[test]
    fn shape_properties() {
        let s = build_scale_set(&proto(), 0.05).unwrap();
        let xs: Vec<f64> = (0..1000).map(|i| i as f64 * 0.02).collect();
        for w in xs.windows(3) {
            assert!(s.w(w[1]) >= s.w(w[0]));
            assert!(s.z(w[1]) >= s.z(w[0]));
            let second = s.zbar(w[2]) - 2.0 * s.zbar(w[1]) + s.zbar(w[0]);
            assert!(second >= -1e-8);
        }
    }

    #[test]
    fn non_rational_law_is_rejected() {
        #[derive(Debug)]
        struct Uniform;
        impl crate::model::GeneralJump for Uniform {
            fn mean(&self) -> f64 {
                0.5
            }
            fn laplace_transform(&self, t: f64) -> f64 {
                if t == 0.0 {
                    1.0
                } else {
                    (1.0 - (-t).exp()) / t
                }
            }
            fn density(&self, x: f64) -> f64 {
                if (0.0..=1.0).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
            fn tail(&self, x: f64) -> f64 {
                (1.0 - x).clamp(0.0, 1.0)
            }
            fn partial_mean_above(&self, x: f64) -> f64 {
                let x = x.clamp(0.0, 1.0);
                0.5 * (1.0 - x * x)
            }
            fn sample(&self, rng: &mut dyn rand::RngCore) -> f64 {
                rand::Rng::random::<f64>(rng)
            }
        }
        let mut m = proto();
        m.jump = JumpLaw::General(std::sync::Arc::new(Uniform));
        assert!(matches!(build_scale_set(&m, 0.05), Err(ScaleError::NotRational(_))));
        assert!(laplace_exponent(&m, 1.0).is_ok());
    }

    proptest! {
        #[test]
        fn exponent_is_convex(t1 in 0.0..20.0f64, t2 in 0.0..20.0f64, sigma in 0.0..1.0f64) {
            let mut m = proto();
            m.sigma_p = sigma;
            let mid = laplace_exponent(&m, 0.5 * (t1 + t2)).unwrap();
            let avg = 0.5 * (laplace_exponent(&m, t1).unwrap() + laplace_exponent(&m, t2).unwrap());
            prop_assert!(mid <= avg + 1e-12);
        }
    }
}
