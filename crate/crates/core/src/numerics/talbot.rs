//! Fixed-Talbot numerical Laplace inversion.
//!
//! Used as an independent cross-check for closed-form inverses. The contour
//! is shifted by `shift` so that it stays to the right of every singularity
//! of the transform.

use num_complex::Complex64;

/// Inverts `transform` at `t > 0` with `m` contour nodes. Around 32 nodes is
/// the sweet spot in double precision; larger `m` loses accuracy to cancellation.
pub fn invert<F>(transform: F, t: f64, shift: f64, m: usize) -> f64
where
    F: Fn(Complex64) -> Complex64,
{
    assert!(t > 0.0, "Talbot inversion needs t > 0");
    assert!(m >= 2);
    let r = 2.0 * m as f64 / (5.0 * t);
    let shifted = |s: Complex64| transform(s + shift);
    let mut acc = 0.5 * (shifted(Complex64::new(r, 0.0)) * (r * t).exp()).re;
    for k in 1..m {
        let theta = k as f64 * std::f64::consts::PI / m as f64;
        let cot = theta.cos() / theta.sin();
        let s = Complex64::new(r * theta * cot, r * theta);
        let sigma = theta + (theta * cot - 1.0) * cot;
        let term = (s * t).exp() * shifted(s) * Complex64::new(1.0, sigma);
        acc += term.re;
    }
    (shift * t).exp() * acc * r / m as f64
}
