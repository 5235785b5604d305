//! Shared numerical kernels: bracketing root finding, adaptive quadrature,
//! monotone inversion, golden-section search and compensated summation.

pub mod poly;
pub mod talbot;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("{what} did not converge within {max_iter} iterations")]
    MaxIterExceeded { what: &'static str, max_iter: usize },
    #[error("target {target} not reached before the search ceiling {ceiling}")]
    TargetUnreachable { target: f64, ceiling: f64 },
    #[error("non-finite function value at x = {x}")]
    NonFinite { x: f64 },
    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
}

/// Stopping rule shared by the iterative kernels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Tolerance {
    /// # Panics
    /// If either tolerance is outside `(0, 1)` or `max_iter` is zero.
    pub fn new(abs_tol: f64, rel_tol: f64, max_iter: usize) -> Self {
        assert!(abs_tol > 0.0 && abs_tol < 1.0, "abs_tol must lie in (0, 1)");
        assert!(rel_tol > 0.0 && rel_tol < 1.0, "rel_tol must lie in (0, 1)");
        assert!(max_iter >= 1, "max_iter must be positive");
        Self { abs_tol, rel_tol, max_iter }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs_tol: 1e-10, rel_tol: 1e-10, max_iter: 200 }
    }
}

/// Brent's method: bisection safeguarded by secant and inverse quadratic steps.
pub fn find_root<F>(mut f: F, lo: f64, hi: f64, tol: &Tolerance) -> Result<f64, NumericsError>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a);
    let mut fb = f(b);
    if !fa.is_finite() {
        return Err(NumericsError::NonFinite { x: a });
    }
    if !fb.is_finite() {
        return Err(NumericsError::NonFinite { x: b });
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(NumericsError::NoBracket { lo, hi, f_lo: fa, f_hi: fb });
    }

    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..tol.max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol.abs_tol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(m) };
        fb = f(b);
        if !fb.is_finite() {
            return Err(NumericsError::NonFinite { x: b });
        }
    }
    Err(NumericsError::MaxIterExceeded { what: "find_root", max_iter: tol.max_iter })
}

/// Scans `n` equal cells of `[lo, hi]` and returns every cell whose endpoints
/// bracket a sign change of `f`.
pub fn sign_changes<F>(mut f: F, lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    let h = (hi - lo) / n as f64;
    let mut out = Vec::new();
    let mut x0 = lo;
    let mut f0 = f(x0);
    for i in 1..=n {
        let x1 = if i == n { hi } else { lo + h * i as f64 };
        let f1 = f(x1);
        if f0.is_finite() && f1.is_finite() && (f0 == 0.0 || f0.signum() != f1.signum()) {
            out.push((x0, x1));
        }
        x0 = x1;
        f0 = f1;
    }
    out
}

// Gauss-Kronrod 7/15 nodes on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64), NumericsError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    if !fc.is_finite() {
        return Err(NumericsError::NonFinite { x: center });
    }
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let (x1, x2) = (center - dx, center + dx);
        let (f1, f2) = (f(x1), f(x2));
        if !f1.is_finite() {
            return Err(NumericsError::NonFinite { x: x1 });
        }
        if !f2.is_finite() {
            return Err(NumericsError::NonFinite { x: x2 });
        }
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    Ok((kronrod * half, ((kronrod - gauss) * half).abs()))
}

/// Globally adaptive Gauss-Kronrod quadrature on `[a, b]`.
pub fn integrate<F>(f: F, a: f64, b: f64, tol: &Tolerance) -> Result<f64, NumericsError>
where
    F: FnMut(f64) -> f64,
{
    integrate_with_kinks(f, a, b, &[], tol)
}

/// As [`integrate`], splitting the interval at the declared kink points first.
pub fn integrate_with_kinks<F>(
    mut f: F,
    a: f64,
    b: f64,
    kinks: &[f64],
    tol: &Tolerance,
) -> Result<f64, NumericsError>
where
    F: FnMut(f64) -> f64,
{
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(NumericsError::InvalidInterval { a, b });
    }
    if a == b {
        return Ok(0.0);
    }
    let mut cuts = vec![a];
    let mut inner: Vec<f64> = kinks.iter().copied().filter(|k| *k > a && *k < b).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    cuts.extend(inner);
    cuts.push(b);

    // (a, b, estimate, error)
    let mut pieces: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(cuts.len() + tol.max_iter);
    for w in cuts.windows(2) {
        let (est, err) = gk15(&mut f, w[0], w[1])?;
        pieces.push((w[0], w[1], est, err));
    }
    for _ in 0..tol.max_iter {
        let total: f64 = sum_compensated(pieces.iter().map(|p| p.2));
        let error: f64 = pieces.iter().map(|p| p.3).sum();
        if error <= tol.abs_tol.max(tol.rel_tol * total.abs()) {
            return Ok(total);
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("at least one piece");
        let (lo, hi, _, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Interval cannot be split further in floating point.
            return Ok(sum_compensated(pieces.iter().map(|p| p.2)) + gk15(&mut f, lo, hi)?.0);
        }
        let (e1, r1) = gk15(&mut f, lo, mid)?;
        let (e2, r2) = gk15(&mut f, mid, hi)?;
        pieces.push((lo, mid, e1, r1));
        pieces.push((mid, hi, e2, r2));
    }
    let total: f64 = sum_compensated(pieces.iter().map(|p| p.2));
    let error: f64 = pieces.iter().map(|p| p.3).sum();
    if error <= tol.abs_tol.max(tol.rel_tol * total.abs()) {
        Ok(total)
    } else {
        Err(NumericsError::MaxIterExceeded { what: "integrate", max_iter: tol.max_iter })
    }
}

/// Integral over `[a, inf)` of a function whose magnitude is bounded by
/// `scale * exp(-rate (x - a))`.
///
/// The range is truncated where the envelope's remaining mass drops below `abs_tol`.
pub fn integrate_exp_tail<F>(
    f: F,
    a: f64,
    scale: f64,
    rate: f64,
    kinks: &[f64],
    tol: &Tolerance,
) -> Result<f64, NumericsError>
where
    F: FnMut(f64) -> f64,
{
    if !(rate > 0.0) || !scale.is_finite() {
        return Err(NumericsError::InvalidInterval { a, b: f64::INFINITY });
    }
    let mass = scale.abs() / rate;
    let cut = if mass > tol.abs_tol { (mass / tol.abs_tol).ln() / rate } else { 0.0 };
    integrate_with_kinks(f, a, a + cut.max(1.0 / rate), kinks, tol)
}

/// Default expansion ceiling for [`invert_monotone`].
pub const INVERT_CEILING: f64 = 1e8;

/// Solves `g(x) = target` for increasing `g` with `g(lo) <= target`, expanding
/// the upper bracket geometrically from `hi_hint`.
pub fn invert_monotone<G>(
    g: G,
    target: f64,
    lo: f64,
    hi_hint: f64,
    tol: &Tolerance,
) -> Result<f64, NumericsError>
where
    G: FnMut(f64) -> f64,
{
    invert_monotone_with_ceiling(g, target, lo, hi_hint, INVERT_CEILING, tol)
}

pub fn invert_monotone_with_ceiling<G>(
    mut g: G,
    target: f64,
    lo: f64,
    hi_hint: f64,
    ceiling: f64,
    tol: &Tolerance,
) -> Result<f64, NumericsError>
where
    G: FnMut(f64) -> f64,
{
    let g_lo = g(lo);
    if !g_lo.is_finite() {
        return Err(NumericsError::NonFinite { x: lo });
    }
    if g_lo == target {
        return Ok(lo);
    }
    if g_lo > target {
        return Err(NumericsError::NoBracket { lo, hi: lo, f_lo: g_lo - target, f_hi: g_lo - target });
    }
    let mut below = lo;
    let mut width = if hi_hint > lo { hi_hint - lo } else { 1.0 };
    let mut hi = lo + width;
    loop {
        let v = g(hi);
        if !v.is_finite() {
            return Err(NumericsError::NonFinite { x: hi });
        }
        if v >= target {
            break;
        }
        below = hi;
        width *= 2.0;
        hi = lo + width;
        if hi - lo > ceiling {
            return Err(NumericsError::TargetUnreachable { target, ceiling });
        }
    }
    find_root(|x| g(x) - target, below, hi, tol)
}

/// Golden-section search for a maximum of a unimodal `f` on `[lo, hi]`.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, tol: &Tolerance) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..tol.max_iter {
        if (b - a).abs() <= tol.abs_tol + tol.rel_tol * (a.abs() + b.abs()) {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

pub fn sum_compensated<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}
