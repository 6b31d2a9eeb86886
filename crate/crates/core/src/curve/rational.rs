use std::ops::{Add, Mul, Neg, Sub};

use crate::numeric::{Complex, LaurentSeries};

/// Two poles closer than this (relative to `1 + |r|`) are the same pole.
const POLE_MERGE: f64 = 1e-14;

fn zero() -> Complex {
    Complex::new(0.0, 0.0)
}

/// Polynomial in `x` with ascending coefficients; the empty list is zero.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Poly(Vec<Complex>);

impl Poly {
    pub fn new(mut coeffs: Vec<Complex>) -> Self {
        while coeffs.last().is_some_and(|z| z.norm() == 0.0) {
            coeffs.pop();
        }
        Self(coeffs)
    }

    pub fn zero() -> Self {
        Self(Vec::new())
    }

    pub fn constant(c: Complex) -> Self {
        Self::new(vec![c])
    }

    /// `x - r`
    pub fn linear_factor(r: Complex) -> Self {
        Self::new(vec![-r, Complex::new(1.0, 0.0)])
    }

    pub fn coeffs(&self) -> &[Complex] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Degree, with `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn eval(&self, x: Complex) -> Complex {
        self.0.iter().rev().fold(zero(), |acc, c| acc * x + c)
    }

    /// Horner evaluation on a series argument; the window of `x` is kept.
    pub fn eval_series(&self, x: &LaurentSeries) -> LaurentSeries {
        let window = x.window() + x.lowest_order().max(0) as usize;
        let Some((top, rest)) = self.0.split_last() else {
            return LaurentSeries::constant(zero(), window);
        };
        let mut acc = LaurentSeries::constant(*top, window);
        for c in rest.iter().rev() {
            acc = (&acc * x).add_scalar(*c);
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        Self::new(self.0.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect())
    }

    pub fn scale(&self, s: Complex) -> Self {
        Self::new(self.0.iter().map(|c| c * s).collect())
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::constant(Complex::new(1.0, 0.0)), |acc, _| &acc * self)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.0.len().max(rhs.0.len());
        Poly::new(
            (0..n)
                .map(|k| self.0.get(k).copied().unwrap_or_default() + rhs.0.get(k).copied().unwrap_or_default())
                .collect(),
        )
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &rhs.scale(Complex::new(-1.0, 0.0))
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![zero(); self.0.len() + rhs.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in rhs.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

/// Rational function `num(x) / prod_r (x - r)^m` with the denominator kept
/// in factored form, so poles are known exactly.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct RatFn {
    num: Poly,
    poles: Vec<(Complex, u32)>,
}

fn same_pole(a: Complex, b: Complex) -> bool {
    (a - b).norm() <= POLE_MERGE * (1.0 + a.norm().max(b.norm()))
}

impl RatFn {
    pub fn new(num: Poly, poles: Vec<(Complex, u32)>) -> Self {
        let mut merged: Vec<(Complex, u32)> = Vec::new();
        for (r, m) in poles {
            if m == 0 {
                continue;
            }
            match merged.iter_mut().find(|(q, _)| same_pole(*q, r)) {
                Some(entry) => entry.1 += m,
                None => merged.push((r, m)),
            }
        }
        if num.is_zero() {
            merged.clear();
        }
        Self { num, poles: merged }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Complex) -> Self {
        Self::new(Poly::constant(c), Vec::new())
    }

    pub fn poly(p: Poly) -> Self {
        Self::new(p, Vec::new())
    }

    /// The coordinate function `x`.
    pub fn x() -> Self {
        Self::poly(Poly::new(vec![zero(), Complex::new(1.0, 0.0)]))
    }

    /// `c / (x - r)^m`
    pub fn pole(c: Complex, r: Complex, m: u32) -> Self {
        Self::new(Poly::constant(c), vec![(r, m)])
    }

    pub fn numerator(&self) -> &Poly {
        &self.num
    }

    pub fn poles(&self) -> &[(Complex, u32)] {
        &self.poles
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    fn denominator_poly(poles: &[(Complex, u32)]) -> Poly {
        poles
            .iter()
            .fold(Poly::constant(Complex::new(1.0, 0.0)), |acc, (r, m)| &acc * &Poly::linear_factor(*r).pow(*m))
    }

    pub fn eval(&self, x: Complex) -> Complex {
        let den: Complex = self.poles.iter().map(|(r, m)| (x - r).powu(*m)).product();
        self.num.eval(x) / den
    }

    pub fn eval_series(&self, x: &LaurentSeries) -> Result<LaurentSeries, crate::numeric::NumericError> {
        let mut out = self.num.eval_series(x);
        for (r, m) in &self.poles {
            let inv = x.add_scalar(-r).inverse()?;
            for _ in 0..*m {
                out = &out * &inv;
            }
        }
        Ok(out)
    }

    /// Rewrites `self` over the denominator `poles` (which must dominate its own).
    fn numerator_over(&self, poles: &[(Complex, u32)]) -> Poly {
        let extra: Vec<(Complex, u32)> = poles
            .iter()
            .map(|(r, m)| {
                let own = self.poles.iter().find(|(q, _)| same_pole(*q, *r)).map_or(0, |e| e.1);
                (*r, m - own)
            })
            .collect();
        &self.num * &Self::denominator_poly(&extra)
    }

    fn common_poles(&self, other: &Self) -> Vec<(Complex, u32)> {
        let mut out = self.poles.clone();
        for (r, m) in &other.poles {
            match out.iter_mut().find(|(q, _)| same_pole(*q, *r)) {
                Some(entry) => entry.1 = entry.1.max(*m),
                None => out.push((*r, *m)),
            }
        }
        out
    }

    pub fn scale(&self, s: Complex) -> Self {
        Self::new(self.num.scale(s), self.poles.clone())
    }

    pub fn derivative(&self) -> Self {
        if self.poles.is_empty() {
            return Self::poly(self.num.derivative());
        }
        // (N/D)' = (N' L - N sum_r m_r L/(x - r)) / (D L), L = prod_r (x - r)
        let simple: Vec<(Complex, u32)> = self.poles.iter().map(|(r, _)| (*r, 1)).collect();
        let l = Self::denominator_poly(&simple);
        let mut num = &self.num.derivative() * &l;
        for (i, (_, m)) in self.poles.iter().enumerate() {
            let others: Vec<(Complex, u32)> =
                simple.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, p)| *p).collect();
            let term = &self.num * &Self::denominator_poly(&others).scale(Complex::new(*m as f64, 0.0));
            num = &num - &term;
        }
        let poles = self.poles.iter().map(|(r, m)| (*r, m + 1)).collect();
        Self::new(num, poles)
    }
}

impl Add for &RatFn {
    type Output = RatFn;
    fn add(self, rhs: &RatFn) -> RatFn {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let poles = self.common_poles(rhs);
        let num = &self.numerator_over(&poles) + &rhs.numerator_over(&poles);
        RatFn::new(num, poles)
    }
}

impl Sub for &RatFn {
    type Output = RatFn;
    fn sub(self, rhs: &RatFn) -> RatFn {
        self + &-rhs
    }
}

impl Neg for &RatFn {
    type Output = RatFn;
    fn neg(self) -> RatFn {
        self.scale(Complex::new(-1.0, 0.0))
    }
}

impl Mul for &RatFn {
    type Output = RatFn;
    fn mul(self, rhs: &RatFn) -> RatFn {
        let mut poles = self.poles.clone();
        poles.extend_from_slice(&rhs.poles);
        RatFn::new(&self.num * &rhs.num, poles)
    }
}
