use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use super::{is_finite, Complex, NumericError};

/// Terms kept past the lowest order when no window is given.
pub const DEFAULT_WINDOW: usize = 12;

/// Leading coefficients below this fraction of the largest one are dropped
/// by [`LaurentSeries::trimmed`].
pub const TRIM_RELATIVE: f64 = 1e-13;

/// Relative cancellation level under which a coefficient produced by an
/// addition is treated as an exact zero when it would become the leading term.
const CANCELLATION: f64 = 1e-13;

/// Truncated Laurent expansion `sum_k c_k z^(lowest + k)` known up to and
/// including `truncation_order`.
///
/// The coefficient list is never empty. A series whose every known
/// coefficient vanishes is the zero series `O(z^(truncation_order + 1))`
/// and is stored as a single zero at the truncation order.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentSeries {
    lowest: i32,
    coeffs: Vec<Complex>,
}

impl LaurentSeries {
    /// Builds a series and normalises it with [`Self::trimmed`].
    pub fn new(lowest: i32, coeffs: Vec<Complex>) -> Result<Self, NumericError> {
        if coeffs.is_empty() {
            return Err(NumericError::EmptyWindow);
        }
        if !coeffs.iter().all(|z| is_finite(*z)) {
            return Err(NumericError::NonFinite);
        }
        Ok(Self::raw(lowest, coeffs).trimmed())
    }

    /// Builds a series without trimming; only exact leading zeros are removed.
    pub(crate) fn raw(lowest: i32, coeffs: Vec<Complex>) -> Self {
        debug_assert!(!coeffs.is_empty());
        let mut s = Self { lowest, coeffs };
        s.drop_leading(|z, _| z == Complex::new(0.0, 0.0));
        s
    }

    /// `value` as a series with `window` known terms starting at order 0.
    pub fn constant(value: Complex, window: usize) -> Self {
        let mut coeffs = vec![Complex::new(0.0, 0.0); window.max(1)];
        coeffs[0] = value;
        Self::raw(0, coeffs)
    }

    /// `value * z^order` known through `order + window - 1`.
    pub fn monomial(order: i32, value: Complex, window: usize) -> Self {
        let mut coeffs = vec![Complex::new(0.0, 0.0); window.max(1)];
        coeffs[0] = value;
        Self::raw(order, coeffs)
    }

    /// The local parameter `z` itself.
    pub fn variable(window: usize) -> Self {
        Self::monomial(1, Complex::new(1.0, 0.0), window)
    }

    pub fn lowest_order(&self) -> i32 {
        self.lowest
    }

    pub fn truncation_order(&self) -> i32 {
        self.lowest + self.coeffs.len() as i32 - 1
    }

    pub fn coefficients(&self) -> &[Complex] {
        &self.coeffs
    }

    /// Number of known terms.
    pub fn window(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|z| z.norm() == 0.0)
    }

    pub fn leading(&self) -> Complex {
        self.coeffs[0]
    }

    /// Coefficient of `z^order`; `None` past the truncation order.
    pub fn coeff(&self, order: i32) -> Option<Complex> {
        if order > self.truncation_order() {
            None
        } else if order < self.lowest {
            Some(Complex::new(0.0, 0.0))
        } else {
            Some(self.coeffs[(order - self.lowest) as usize])
        }
    }

    /// Coefficient of `z^-1`, zero for a series holomorphic through order -1.
    pub fn residue(&self) -> Complex {
        self.coeff(-1).unwrap_or_default()
    }

    /// Removes leading coefficients whose modulus is below
    /// `TRIM_RELATIVE * max |c_k|`.
    pub fn trimmed(&self) -> Self {
        let max = self.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut s = self.clone();
        s.drop_leading(|z, _| z.norm() <= TRIM_RELATIVE * max);
        s
    }

    fn drop_leading(&mut self, mut is_zero: impl FnMut(Complex, usize) -> bool) {
        let mut k = 0;
        while k < self.coeffs.len() && is_zero(self.coeffs[k], k) {
            k += 1;
        }
        if k == self.coeffs.len() {
            let trunc = self.truncation_order();
            self.lowest = trunc;
            self.coeffs = vec![Complex::new(0.0, 0.0)];
        } else if k > 0 {
            self.coeffs.drain(..k);
            self.lowest += k as i32;
        }
    }

    /// Keeps terms of order `<= order`.
    pub fn truncate_to(&self, order: i32) -> Result<Self, NumericError> {
        if order < self.lowest {
            return Err(NumericError::EmptyWindow);
        }
        let n = ((order - self.lowest + 1) as usize).min(self.coeffs.len());
        Ok(Self::raw(self.lowest, self.coeffs[..n].to_vec()))
    }

    /// Keeps `window` terms past the lowest order.
    pub fn with_window(&self, window: usize) -> Self {
        let n = window.max(1).min(self.coeffs.len());
        Self::raw(self.lowest, self.coeffs[..n].to_vec())
    }

    pub fn scale(&self, factor: Complex) -> Self {
        Self::raw(self.lowest, self.coeffs.iter().map(|z| z * factor).collect())
    }

    /// Multiplies by `z^shift`.
    pub fn shift(&self, shift: i32) -> Self {
        Self { lowest: self.lowest + shift, coeffs: self.coeffs.clone() }
    }

    pub fn add_scalar(&self, value: Complex) -> Self {
        self + &Self::constant(value, self.coeffs.len().max(1) + self.lowest.max(0) as usize)
    }

    fn combine(&self, other: &Self, sign: f64) -> Self {
        let lowest = self.lowest.min(other.lowest);
        let trunc = self.truncation_order().min(other.truncation_order());
        let n = (trunc - lowest + 1) as usize;
        let mut coeffs = Vec::with_capacity(n);
        let mut scales = Vec::with_capacity(n);
        for k in 0..n {
            let order = lowest + k as i32;
            let a = self.coeff(order).unwrap_or_default();
            let b = other.coeff(order).unwrap_or_default() * sign;
            coeffs.push(a + b);
            scales.push(a.norm().max(b.norm()));
        }
        let mut s = Self { lowest, coeffs };
        s.drop_leading(|z, k| z.norm() <= CANCELLATION * scales[k]);
        s
    }

    /// Multiplicative inverse; the lowest order flips sign and the window
    /// length is preserved.
    pub fn inverse(&self) -> Result<Self, NumericError> {
        let c0 = self.leading();
        if c0.norm() == 0.0 {
            return Err(NumericError::ZeroLeading);
        }
        let n = self.coeffs.len();
        let mut d = Vec::with_capacity(n);
        d.push(c0.inv());
        for k in 1..n {
            let mut acc = Complex::new(0.0, 0.0);
            for i in 1..=k {
                acc += self.coeffs[i] * d[k - i];
            }
            d.push(-acc / c0);
        }
        Ok(Self::raw(-self.lowest, d))
    }

    /// Square root whose leading coefficient is the square root of the
    /// leading coefficient closest to `branch`.
    pub fn sqrt(&self, branch: Complex) -> Result<Self, NumericError> {
        if self.lowest % 2 != 0 {
            return Err(NumericError::OddOrder(self.lowest));
        }
        let c0 = self.leading();
        if c0.norm() == 0.0 {
            return Err(NumericError::ZeroLeading);
        }
        let scale = c0.norm().max(branch.norm_sqr()).max(f64::MIN_POSITIVE);
        if (branch * branch - c0).norm() > 1e-8 * scale {
            return Err(NumericError::BranchMismatch { branch, leading: c0 });
        }
        let root = c0.sqrt();
        let s0 = if (root - branch).norm() <= (root + branch).norm() { root } else { -root };
        let n = self.coeffs.len();
        let mut s = Vec::with_capacity(n);
        s.push(s0);
        for k in 1..n {
            let mut acc = self.coeffs[k];
            for i in 1..k {
                acc -= s[i] * s[k - i];
            }
            s.push(acc / (s0 * 2.0));
        }
        Ok(Self::raw(self.lowest / 2, s))
    }

    /// Term-by-term derivative in the local parameter.
    pub fn derivative(&self) -> Self {
        let coeffs: Vec<Complex> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, z)| z * (self.lowest + k as i32) as f64)
            .collect();
        Self::raw(self.lowest - 1, coeffs)
    }

    /// Sums the known terms at `z`.
    pub fn eval(&self, z: Complex) -> Complex {
        let mut acc = Complex::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc * z.powi(self.lowest)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let lo = self.lowest.min(other.lowest);
        let hi = self.truncation_order().min(other.truncation_order());
        (lo..=hi)
            .map(|k| (self.coeff(k).unwrap_or_default() - other.coeff(k).unwrap_or_default()).norm())
            .fold(0.0, f64::max)
    }
}

impl Add for &LaurentSeries {
    type Output = LaurentSeries;
    fn add(self, rhs: &LaurentSeries) -> LaurentSeries {
        self.combine(rhs, 1.0)
    }
}

impl Sub for &LaurentSeries {
    type Output = LaurentSeries;
    fn sub(self, rhs: &LaurentSeries) -> LaurentSeries {
        self.combine(rhs, -1.0)
    }
}

impl Neg for &LaurentSeries {
    type Output = LaurentSeries;
    fn neg(self) -> LaurentSeries {
        self.scale(Complex::new(-1.0, 0.0))
    }
}

impl Mul for &LaurentSeries {
    type Output = LaurentSeries;
    fn mul(self, rhs: &LaurentSeries) -> LaurentSeries {
        let lowest = self.lowest + rhs.lowest;
        let n = self.coeffs.len().min(rhs.coeffs.len());
        let mut coeffs = vec![Complex::new(0.0, 0.0); n];
        for (i, a) in self.coeffs.iter().take(n).enumerate() {
            for (j, b) in rhs.coeffs.iter().take(n - i).enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        LaurentSeries::raw(lowest, coeffs)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for LaurentSeries {
            type Output = LaurentSeries;
            fn $m(self, rhs: LaurentSeries) -> LaurentSeries {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl fmt::Display for LaurentSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, z) in self.coeffs.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:.6e}{:+.6e}i) z^{}", z.re, z.im, self.lowest + k as i32)?;
        }
        write!(f, " + O(z^{})", self.truncation_order() + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{c, cr};
    use proptest::prelude::*;

    fn series(lowest: i32, re: &[f64]) -> LaurentSeries {
        LaurentSeries::new(lowest, re.iter().map(|&x| cr(x)).collect()).unwrap()
    }

    /// Plain convolution, written independently of the `Mul` impl.
    fn convolve(a: &[Complex], b: &[Complex], n: usize) -> Vec<Complex> {
        (0..n)
            .map(|k| (0..=k).filter(|i| *i < a.len() && k - i < b.len()).map(|i| a[i] * b[k - i]).sum())
            .collect()
    }

    #[test]
    fn inverse_pair_multiplies_to_one() {
        let a = LaurentSeries::monomial(-1, cr(1.0), 6);
        let b = LaurentSeries::monomial(1, cr(1.0), 6);
        let p = &a * &b;
        assert_eq!(p.lowest_order(), 0);
        assert_eq!(p.leading(), cr(1.0));
        assert!(p.coefficients()[1..].iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn difference_of_squares() {
        let a = series(0, &[1.0, 1.0, 0.0, 0.0]);
        let b = series(0, &[1.0, -1.0, 0.0, 0.0]);
        let p = &a * &b;
        assert_eq!(p.coefficients(), &[cr(1.0), cr(0.0), cr(-1.0), cr(0.0)]);
    }

    #[test]
    fn random_product_matches_convolution() {
        let a: Vec<Complex> = (0..5).map(|k| c(0.3 * k as f64 - 0.7, 0.11 * (k * k) as f64)).collect();
        let b: Vec<Complex> = (0..5).map(|k| c(1.0 / (k as f64 + 1.5), -0.4 + 0.2 * k as f64)).collect();
        let p = &LaurentSeries::raw(-2, a.clone()) * &LaurentSeries::raw(1, b.clone());
        let oracle = convolve(&a, &b, 5);
        assert_eq!(p.lowest_order(), -1);
        for (x, y) in p.coefficients().iter().zip(&oracle) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn inverses() {
        let one = LaurentSeries::constant(cr(1.0), 5);
        assert_eq!(one.inverse().unwrap(), one);
        let z = LaurentSeries::variable(5);
        let zi = z.inverse().unwrap();
        assert_eq!(zi.lowest_order(), -1);
        assert_eq!(zi.leading(), cr(1.0));
        let geo = series(0, &[1.0, 1.0, 0.0, 0.0, 0.0]).inverse().unwrap();
        let expected = [1.0, -1.0, 1.0, -1.0, 1.0];
        for (x, e) in geo.coefficients().iter().zip(expected) {
            assert!((x - cr(e)).norm() < 1e-15);
        }
        let zero = LaurentSeries::raw(0, vec![cr(0.0); 3]);
        assert_eq!(zero.inverse(), Err(NumericError::ZeroLeading));
    }

    #[test]
    fn square_roots() {
        let one = LaurentSeries::constant(cr(1.0), 4);
        assert_eq!(one.sqrt(cr(1.0)).unwrap(), one);

        let s = series(0, &[1.0, 2.0, 0.0, 0.0, 0.0]).sqrt(cr(1.0)).unwrap();
        // binomial series of (1 + 2z)^(1/2)
        let expected = [1.0, 1.0, -0.5, 0.5, -0.625];
        for (x, e) in s.coefficients().iter().zip(expected) {
            assert!((x - cr(e)).norm() < 1e-14, "{s}");
        }
    }

    /// Newton iteration `s <- (s + a/s)/2` on truncated series, started from
    /// the requested branch; independent of the coefficient recurrence.
    fn newton_sqrt(a: &LaurentSeries, branch: Complex) -> LaurentSeries {
        let mut s = LaurentSeries::constant(branch, a.window());
        for _ in 0..8 {
            let q = a * &s.inverse().unwrap();
            s = (&s + &q).scale(cr(0.5));
        }
        s
    }

    #[test]
    fn negative_branch_sqrt_matches_newton() {
        let a = series(0, &[4.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let s = a.sqrt(cr(-2.0)).unwrap();
        let oracle = newton_sqrt(&a, cr(-2.0));
        assert!(s.max_abs_diff(&oracle) < 1e-14);
        assert!((s.leading() - cr(-2.0)).norm() < 1e-15);
        assert!((s.coeff(1).unwrap() - cr(-0.25)).norm() < 1e-15);
        assert!((&s * &s).max_abs_diff(&a) < 1e-14);
    }

    #[test]
    fn sqrt_errors() {
        let odd = LaurentSeries::monomial(-1, cr(1.0), 3);
        assert_eq!(odd.sqrt(cr(1.0)), Err(NumericError::OddOrder(-1)));
        let a = LaurentSeries::constant(cr(4.0), 3);
        assert!(matches!(a.sqrt(cr(3.0)), Err(NumericError::BranchMismatch { .. })));
    }

    #[test]
    fn residues() {
        assert_eq!(LaurentSeries::monomial(-1, cr(1.0), 3).residue(), cr(1.0));
        assert_eq!(series(0, &[1.0, 1.0]).residue(), cr(0.0));
        assert_eq!(series(-2, &[3.0, 5.0, 0.0]).residue(), cr(5.0));
    }

    #[test]
    fn log_derivative_at_simple_zero_has_unit_residue() {
        let f = series(1, &[1.0, 0.3, -0.2, 0.7, 0.1, 0.05]);
        let dlog = &f.derivative() * &f.inverse().unwrap();
        assert!((dlog.residue() - cr(1.0)).norm() < 1e-14);
    }

    #[test]
    fn trimming_and_cancellation() {
        let s = LaurentSeries::new(-2, vec![cr(1e-16), cr(0.0), cr(2.0)]).unwrap();
        assert_eq!(s.lowest_order(), 0);
        let a = series(-1, &[1.0, 2.0, 3.0]);
        let d = &a - &a;
        assert!(d.is_zero());
        assert_eq!(d.truncation_order(), 1);
        let b = series(-1, &[1.0, 0.5, 0.0]);
        let e = &a - &b;
        assert_eq!(e.lowest_order(), 0);
    }

    fn arb_series() -> impl Strategy<Value = LaurentSeries> {
        (-3i32..3, prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 8)).prop_map(|(lo, v)| {
            let mut coeffs: Vec<Complex> = v.into_iter().map(|(a, b)| c(a, b)).collect();
            if coeffs[0].norm() < 0.5 {
                coeffs[0] += cr(1.5);
            }
            LaurentSeries::raw(lo, coeffs)
        })
    }

    proptest! {
        #[test]
        fn mul_commutes_and_associates(a in arb_series(), b in arb_series(), d in arb_series()) {
            let ab = &a * &b;
            let ba = &b * &a;
            prop_assert!(ab.max_abs_diff(&ba) < 1e-13);
            let l = &(&a * &b) * &d;
            let r = &a * &(&b * &d);
            let scale = l.coefficients().iter().map(|z| z.norm()).fold(1.0, f64::max);
            prop_assert!(l.max_abs_diff(&r) < 1e-13 * scale);
        }

        #[test]
        fn double_inverse_is_identity(a in arb_series()) {
            let back = a.inverse().unwrap().inverse().unwrap();
            let scale = a.coefficients().iter().map(|z| z.norm()).fold(1.0, f64::max);
            prop_assert!(back.max_abs_diff(&a) < 1e-12 * scale.powi(4));
        }
    }
}
