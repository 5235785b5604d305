//! Dense real polynomials and simultaneous complex root finding.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("polynomial is identically zero")]
    Zero,
    #[error("root iteration did not converge within {0} sweeps")]
    NoConvergence(usize),
}

/// Real polynomial stored with ascending coefficients: `c[0] + c[1] x + ...`.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    /// Trailing zero coefficients are dropped so that `degree` is meaningful.
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![c] }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::constant(0.0);
        }
        Self::new(self.coeffs.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let get = |v: &Vec<f64>, k: usize| v.get(k).copied().unwrap_or(0.0);
        Self::new((0..n).map(|k| get(&self.coeffs, k) + get(&other.coeffs, k)).collect())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// All complex roots, sorted by real part then imaginary part.
    ///
    /// Uses Aberth-Ehrlich simultaneous iteration followed by Newton polishing
    /// on the original coefficients. Roots whose imaginary part is at rounding
    /// level are snapped onto the real axis and complex roots are returned as
    /// exact conjugate pairs.
    pub fn roots(&self) -> Result<Vec<Complex64>, PolyError> {
        if self.is_zero() {
            return Err(PolyError::Zero);
        }
        let n = self.degree();
        if n == 0 {
            return Ok(Vec::new());
        }
        let lead = self.coeffs[n];
        let monic: Vec<f64> = self.coeffs.iter().map(|c| c / lead).collect();
        let p = Poly { coeffs: monic };
        let dp = p.derivative();

        // Cauchy bound for the root moduli, and a lower bound from the reciprocal.
        let upper = 1.0 + p.coeffs[..n].iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        let radius = {
            let c0 = p.coeffs[0].abs();
            let lower = if c0 > 0.0 {
                let tail = p.coeffs[1..].iter().fold(0.0_f64, |m, c| m.max(c.abs()));
                c0 / (c0 + tail)
            } else {
                0.0
            };
            (upper * lower.max(1e-3)).sqrt()
        };
        let mut z: Vec<Complex64> = (0..n)
            .map(|k| {
                let angle = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
                Complex64::from_polar(radius, angle)
            })
            .collect();

        const SWEEPS: usize = 500;
        let mut converged = false;
        for _ in 0..SWEEPS {
            let mut max_step = 0.0_f64;
            for k in 0..n {
                let pz = p.eval_complex(z[k]);
                if pz == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let ratio = pz / dp.eval_complex(z[k]);
                let repulsion: Complex64 = (0..n).filter(|&j| j != k).map(|j| (z[k] - z[j]).inv()).sum();
                let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
                if step.is_finite() {
                    z[k] -= step;
                    max_step = max_step.max(step.norm() / z[k].norm().max(1e-300));
                }
            }
            if max_step < 1e-15 {
                converged = true;
                break;
            }
        }
        for root in z.iter_mut() {
            for _ in 0..3 {
                let d = dp.eval_complex(*root);
                if d.norm() == 0.0 {
                    break;
                }
                let step = p.eval_complex(*root) / d;
                if !step.is_finite() {
                    break;
                }
                *root -= step;
            }
        }
        if !converged {
            let residual = z.iter().map(|r| p.eval_complex(*r).norm()).fold(0.0_f64, f64::max);
            let scale = p.coeffs.iter().map(|c| c.abs()).sum::<f64>() * upper.powi(n as i32);
            if !(residual <= 1e-10 * scale) {
                return Err(PolyError::NoConvergence(SWEEPS));
            }
        }
        Ok(pair_conjugates(z))
    }
}

fn pair_conjugates(mut z: Vec<Complex64>) -> Vec<Complex64> {
    const SNAP: f64 = 1e-10;
    for r in z.iter_mut() {
        if r.im.abs() <= SNAP * r.norm().max(1e-300) {
            r.im = 0.0;
        }
    }
    let mut used = vec![false; z.len()];
    for i in 0..z.len() {
        if used[i] || z[i].im <= 0.0 {
            continue;
        }
        let target = z[i].conj();
        let partner = (0..z.len())
            .filter(|&j| !used[j] && j != i && z[j].im < 0.0)
            .min_by(|&a, &b| (z[a] - target).norm().total_cmp(&(z[b] - target).norm()));
        if let Some(j) = partner {
            let re = 0.5 * (z[i].re + z[j].re);
            let im = 0.5 * (z[i].im - z[j].im);
            z[i] = Complex64::new(re, im);
            z[j] = Complex64::new(re, -im);
            used[i] = true;
            used[j] = true;
        }
    }
    z.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn arithmetic() {
        let a = Poly::new(vec![1.0, 2.0]);
        let b = Poly::new(vec![-1.0, 0.0, 3.0]);
        assert_eq!(a.mul(&b).coeffs(), &[-1.0, -2.0, 3.0, 6.0]);
        assert_eq!(a.add(&b).coeffs(), &[0.0, 2.0, 3.0]);
        assert_eq!(b.derivative().coeffs(), &[0.0, 6.0]);
        assert_eq!(Poly::new(vec![1.0, 0.0, 0.0]).degree(), 0);
        assert_eq!(b.eval(2.0), 11.0);
    }

    #[test]
    fn roots_of_known_cubic() {
        // (x + 27)(x + 0.5)(x - 1.25)
        let p = Poly::new(vec![27.0, 1.0])
            .mul(&Poly::new(vec![0.5, 1.0]))
            .mul(&Poly::new(vec![-1.25, 1.0]));
        let r = p.roots().unwrap();
        let expected = [-27.0, -0.5, 1.25];
        for (got, want) in r.iter().zip(expected) {
            assert!((got.re - want).abs() < 1e-12 * want.abs().max(1.0), "{got} vs {want}");
            assert_eq!(got.im, 0.0);
        }
    }

    #[test]
    fn complex_pairs_are_exact_conjugates() {
        // (x^2 + 2x + 5)(x - 3)
        let p = Poly::new(vec![5.0, 2.0, 1.0]).mul(&Poly::new(vec![-3.0, 1.0]));
        let r = p.roots().unwrap();
        assert_eq!(r.len(), 3);
        assert_eq!(r[0], r[1].conj());
        assert!((r[0] - Complex64::new(-1.0, -2.0)).norm() < 1e-13);
        assert!((r[2].re - 3.0).abs() < 1e-13);
    }

    #[test]
    fn zero_polynomial_is_rejected() {
        assert_eq!(Poly::constant(0.0).roots(), Err(PolyError::Zero));
    }

    proptest! {
        #[test]
        fn roots_reconstruct_polynomial(rs in proptest::collection::vec(-30.0..30.0f64, 1..6)) {
            let mut p = Poly::constant(1.0);
            for r in &rs {
                p = p.mul(&Poly::new(vec![-r, 1.0]));
            }
            let mut sorted = rs.clone();
            sorted.sort_by(f64::total_cmp);
            let close = sorted.windows(2).any(|w| (w[1] - w[0]).abs() < 1e-2);
            prop_assume!(!close);
            let got = p.roots().unwrap();
            for (g, w) in got.iter().zip(&sorted) {
                prop_assert!((g.re - w).abs() < 1e-7 * w.abs().max(1.0), "{:?} vs {:?}", got, sorted);
            }
        }
    }
}
