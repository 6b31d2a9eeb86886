//! The Legendre curve `y^2 = x(x-1)(x-lambda)` as two affine charts glued by
//! `x1 = 1/x2`, `y1 = y2/x2^2`, together with meromorphic functions and
//! 1-forms in the shape `(r1(x) + r2(x) y) dx/y` and their Laurent
//! expansions in a local parameter at any point.

mod rational;

pub use rational::{Poly, RatFn};

use std::ops::{Add, Neg, Sub};

use thiserror::Error;

use crate::numeric::{cr, Complex, LaurentSeries, NumericError, DEFAULT_WINDOW};

/// `x` values this close to `0`, `1` or `lambda` are branch points.
pub const BRANCH_TOLERANCE: f64 = 1e-10;

/// Relative tolerance on `v^2 = K(u)` when lifting a point.
pub const LIFT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurveError {
    #[error("degenerate curve: lambda = {0} coincides with 0 or 1")]
    DegenerateCurve(Complex),
    #[error("point ({x}, {y}) is off the curve (relative residual {residual:e})")]
    OffCurve { x: Complex, y: Complex, residual: f64 },
    #[error("expansion window {0} too small (need at least 4)")]
    WindowTooSmall(usize),
    #[error("expansion window exhausted: series known only through order {0}")]
    WindowExhausted(i32),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LegendreCurve {
    lambda: Complex,
}

impl LegendreCurve {
    pub fn new(lambda: Complex) -> Result<Self, CurveError> {
        if !crate::numeric::is_finite(lambda) || lambda.norm() <= 1e-12 || (lambda - 1.0).norm() <= 1e-12 {
            return Err(CurveError::DegenerateCurve(lambda));
        }
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> Complex {
        self.lambda
    }

    /// `K(x) = x(x-1)(x-lambda)`
    pub fn k(&self, x: Complex) -> Complex {
        x * (x - 1.0) * (x - self.lambda)
    }

    pub fn k_prime(&self, x: Complex) -> Complex {
        3.0 * x * x - 2.0 * (1.0 + self.lambda) * x + self.lambda
    }

    pub fn k_poly(&self) -> Poly {
        Poly::new(vec![cr(0.0), self.lambda, -(1.0 + self.lambda), cr(1.0)])
    }

    /// Right-hand side of the chart at infinity, `x2(1-x2)(1-lambda x2)`.
    pub fn k_infinity(&self, x2: Complex) -> Complex {
        x2 * (1.0 - x2) * (1.0 - self.lambda * x2)
    }

    pub fn branch_roots(&self) -> [Complex; 3] {
        [cr(0.0), cr(1.0), self.lambda]
    }

    /// The root of `K` within [`BRANCH_TOLERANCE`] of `x`, if any.
    pub fn branch_root_near(&self, x: Complex) -> Option<Complex> {
        self.branch_roots().into_iter().find(|e| (x - e).norm() <= BRANCH_TOLERANCE)
    }

    /// Lifts `u` to the affine chart, snapping `y` to the square root of
    /// `K(u)` nearest `v_hint`.
    pub fn lift_point(&self, u: Complex, v_hint: Complex) -> Result<CurvePoint, CurveError> {
        if let Some(e) = self.branch_root_near(u) {
            if v_hint.norm_sqr() <= LIFT_TOLERANCE * (1.0 + u.norm().powi(3)) {
                return Ok(CurvePoint { chart: Chart::U0, x: e, y: cr(0.0) });
            }
        }
        let k = self.k(u);
        let y = snap_root(k, v_hint, u, LIFT_TOLERANCE)?;
        Ok(CurvePoint { chart: Chart::U0, x: u, y })
    }

    /// Lifts `x2` to the chart at infinity, snapping `y2` like [`Self::lift_point`].
    pub fn lift_point_infinity(&self, x2: Complex, y2_hint: Complex) -> Result<CurvePoint, CurveError> {
        if x2.norm() <= BRANCH_TOLERANCE && y2_hint.norm_sqr() <= LIFT_TOLERANCE {
            return Ok(CurvePoint::infinity());
        }
        let y2 = snap_root(self.k_infinity(x2), y2_hint, x2, LIFT_TOLERANCE)?;
        Ok(CurvePoint { chart: Chart::UInfty, x: x2, y: y2 })
    }

    pub fn local_parameter(&self, point: &CurvePoint) -> LocalParameter {
        let kind = match point.chart {
            Chart::UInfty if point.x.norm() <= BRANCH_TOLERANCE => ParamKind::Infinity,
            Chart::UInfty => match point.to_affine() {
                Some(p) if self.branch_root_near(p.x).is_some() => ParamKind::Branch,
                _ => ParamKind::Generic,
            },
            Chart::U0 if self.branch_root_near(point.x).is_some() => ParamKind::Branch,
            Chart::U0 => ParamKind::Generic,
        };
        LocalParameter { point: *point, kind }
    }

    /// Series `(x, y, dx/dz)` in affine coordinates along the local parameter `z`.
    fn uniformize(
        &self,
        point: &CurvePoint,
        window: usize,
    ) -> Result<(LaurentSeries, LaurentSeries, LaurentSeries), CurveError> {
        let param = self.local_parameter(point);
        let one = cr(1.0);
        match (param.kind, point.chart) {
            (ParamKind::Generic, Chart::U0) => {
                let x = LaurentSeries::variable(window).add_scalar(point.x);
                let y = self.k_poly().eval_series(&x).sqrt(point.y)?;
                Ok((x, y, LaurentSeries::constant(one, window)))
            }
            (ParamKind::Generic, Chart::UInfty) => {
                let x2 = LaurentSeries::variable(window).add_scalar(point.x);
                let k_inf = Poly::new(vec![cr(0.0), one, -(1.0 + self.lambda), self.lambda]);
                let y2 = k_inf.eval_series(&x2).sqrt(point.y)?;
                let inv = x2.inverse()?;
                let inv2 = &inv * &inv;
                Ok((inv.clone(), &y2 * &inv2, -&inv2))
            }
            (ParamKind::Branch, _) => {
                let e = match point.to_affine() {
                    Some(p) => self.branch_root_near(p.x).unwrap_or(p.x),
                    None => unreachable!("branch points are finite"),
                };
                // y^2 = a1 d + a2 d^2 + d^3 with d = x - e, inverted for d(y).
                let a1 = self.k_prime(e);
                let a2 = 3.0 * e - (1.0 + self.lambda);
                let w2 = LaurentSeries::monomial(2, one, window);
                let mut d = w2.scale(1.0 / a1);
                for _ in 0..window {
                    let d2 = &d * &d;
                    let d3 = &d2 * &d;
                    d = (&(&w2 - &d2.scale(a2)) - &d3).scale(1.0 / a1);
                }
                let x = d.add_scalar(e);
                let dx = x.derivative();
                Ok((x, LaurentSeries::monomial(1, one, window + 1), dx))
            }
            (ParamKind::Infinity, _) => {
                // y2^2 = x2 - (1 + lambda) x2^2 + lambda x2^3, inverted for x2(y2).
                let w2 = LaurentSeries::monomial(2, one, window);
                let mut x2 = w2.clone();
                for _ in 0..window {
                    let sq = &x2 * &x2;
                    let cube = &sq * &x2;
                    x2 = &(&w2 + &sq.scale(1.0 + self.lambda)) - &cube.scale(self.lambda);
                }
                let inv = x2.inverse()?;
                let inv2 = &inv * &inv;
                let y = &LaurentSeries::monomial(1, one, window + 1) * &inv2;
                let dx = -&(&x2.derivative() * &inv2);
                Ok((inv, y, dx))
            }
        }
    }

    /// Laurent expansion of `form` in the local parameter at `at`.
    pub fn expand_form(&self, form: &CurveForm, at: &CurvePoint, window: usize) -> Result<LaurentSeries, CurveError> {
        if window < 4 {
            return Err(CurveError::WindowTooSmall(window));
        }
        let (x, y, dx) = self.uniformize(at, window)?;
        let r1 = form.r1.eval_series(&x)?;
        let r2 = form.r2.eval_series(&x)?;
        let series = &(&(&r1 * &y.inverse()?) + &r2) * &dx;
        if series.truncation_order() < -1 {
            return Err(CurveError::WindowExhausted(series.truncation_order()));
        }
        Ok(series)
    }

    /// Laurent expansion of a function in the local parameter at `at`.
    pub fn expand_function(
        &self,
        f: &CurveFunction,
        at: &CurvePoint,
        window: usize,
    ) -> Result<LaurentSeries, CurveError> {
        if window < 4 {
            return Err(CurveError::WindowTooSmall(window));
        }
        let (x, y, _) = self.uniformize(at, window)?;
        Ok(&f.a.eval_series(&x)? + &(&f.b.eval_series(&x)? * &y))
    }

    /// Residue of `form` at `at`, independent of the chart used.
    pub fn form_residue(&self, form: &CurveForm, at: &CurvePoint) -> Result<Complex, CurveError> {
        Ok(self.expand_form(form, at, DEFAULT_WINDOW)?.residue())
    }

    /// Every point where `form` can have a pole: over its `x`-poles, the
    /// branch points and infinity.
    pub fn pole_candidates(&self, form: &CurveForm) -> Vec<CurvePoint> {
        let mut out: Vec<CurvePoint> = self
            .branch_roots()
            .into_iter()
            .map(|e| CurvePoint { chart: Chart::U0, x: e, y: cr(0.0) })
            .collect();
        out.push(CurvePoint::infinity());
        for (r, _) in form.r1.poles().iter().chain(form.r2.poles()) {
            if self.branch_root_near(*r).is_some() {
                continue;
            }
            let y = self.k(*r).sqrt();
            for y in [y, -y] {
                if !out.iter().any(|p| p.chart == Chart::U0 && p.x == *r && p.y == y) {
                    out.push(CurvePoint { chart: Chart::U0, x: *r, y });
                }
            }
        }
        out
    }
}

fn snap_root(k: Complex, hint: Complex, at: Complex, tol: f64) -> Result<Complex, CurveError> {
    let scale = k.norm().max(hint.norm_sqr());
    let residual = (hint * hint - k).norm() / scale.max(f64::MIN_POSITIVE);
    if !(residual <= tol) {
        return Err(CurveError::OffCurve { x: at, y: hint, residual });
    }
    let root = k.sqrt();
    Ok(if (root - hint).norm() <= (root + hint).norm() { root } else { -root })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Chart {
    U0,
    UInfty,
}

/// A point in one of the two affine charts. Infinity is `(0, 0)` in
/// [`Chart::UInfty`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub chart: Chart,
    pub x: Complex,
    pub y: Complex,
}

impl CurvePoint {
    pub fn infinity() -> Self {
        Self { chart: Chart::UInfty, x: cr(0.0), y: cr(0.0) }
    }

    pub fn is_infinity(&self) -> bool {
        self.chart == Chart::UInfty && self.x.norm() <= BRANCH_TOLERANCE
    }

    /// The same point in the affine chart, `None` at infinity.
    pub fn to_affine(&self) -> Option<CurvePoint> {
        match self.chart {
            Chart::U0 => Some(*self),
            Chart::UInfty if self.is_infinity() => None,
            Chart::UInfty => Some(CurvePoint { chart: Chart::U0, x: 1.0 / self.x, y: self.y / (self.x * self.x) }),
        }
    }

    /// Relative residual of the chart equation.
    pub fn curve_residual(&self, curve: &LegendreCurve) -> f64 {
        let rhs = match self.chart {
            Chart::U0 => curve.k(self.x),
            Chart::UInfty => curve.k_infinity(self.x),
        };
        (self.y * self.y - rhs).norm() / rhs.norm().max(self.y.norm_sqr()).max(1e-300)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamKind {
    /// `x - u` at a finite point with `y != 0`.
    Generic,
    /// `y` at a finite ramification point.
    Branch,
    /// `y2` at infinity.
    Infinity,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalParameter {
    pub point: CurvePoint,
    pub kind: ParamKind,
}

/// Meromorphic function `a(x) + b(x) y`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct CurveFunction {
    pub a: RatFn,
    pub b: RatFn,
}

impl CurveFunction {
    pub fn new(a: RatFn, b: RatFn) -> Self {
        Self { a, b }
    }

    pub fn from_x(a: RatFn) -> Self {
        Self { a, b: RatFn::zero() }
    }

    pub fn constant(c: Complex) -> Self {
        Self::from_x(RatFn::constant(c))
    }

    pub fn y() -> Self {
        Self { a: RatFn::zero(), b: RatFn::constant(cr(1.0)) }
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn eval(&self, x: Complex, y: Complex) -> Complex {
        self.a.eval(x) + self.b.eval(x) * y
    }

    pub fn scale(&self, s: Complex) -> Self {
        Self { a: self.a.scale(s), b: self.b.scale(s) }
    }

    /// Product, reduced with `y^2 = K(x)`.
    pub fn mul(&self, other: &Self, curve: &LegendreCurve) -> Self {
        let k = RatFn::poly(curve.k_poly());
        let a = &(&self.a * &other.a) + &(&(&self.b * &other.b) * &k);
        let b = &(&self.a * &other.b) + &(&self.b * &other.a);
        Self { a, b }
    }

    /// Exterior derivative `d(a + b y) = (b'K + bK'/2 + a' y) dx/y`.
    pub fn differential(&self, curve: &LegendreCurve) -> CurveForm {
        let k = curve.k_poly();
        let r1 = &(&self.b.derivative() * &RatFn::poly(k.clone())) + &(&self.b * &RatFn::poly(k.derivative().scale(cr(0.5))));
        CurveForm { r1, r2: self.a.derivative() }
    }
}

impl Add for &CurveFunction {
    type Output = CurveFunction;
    fn add(self, rhs: &CurveFunction) -> CurveFunction {
        CurveFunction { a: &self.a + &rhs.a, b: &self.b + &rhs.b }
    }
}

impl Sub for &CurveFunction {
    type Output = CurveFunction;
    fn sub(self, rhs: &CurveFunction) -> CurveFunction {
        CurveFunction { a: &self.a - &rhs.a, b: &self.b - &rhs.b }
    }
}

impl Neg for &CurveFunction {
    type Output = CurveFunction;
    fn neg(self) -> CurveFunction {
        self.scale(cr(-1.0))
    }
}

/// Meromorphic 1-form `(r1(x) + r2(x) y) dx/y`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct CurveForm {
    pub r1: RatFn,
    pub r2: RatFn,
}

impl CurveForm {
    pub fn new(r1: RatFn, r2: RatFn) -> Self {
        Self { r1, r2 }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// `r(x) dx/y`
    pub fn over_y(r: RatFn) -> Self {
        Self { r1: r, r2: RatFn::zero() }
    }

    /// `r(x) dx`
    pub fn plain(r: RatFn) -> Self {
        Self { r1: RatFn::zero(), r2: r }
    }

    pub fn is_zero(&self) -> bool {
        self.r1.is_zero() && self.r2.is_zero()
    }

    /// Coefficient of `dx` at an affine point.
    pub fn coefficient_at(&self, x: Complex, y: Complex) -> Complex {
        (self.r1.eval(x) + self.r2.eval(x) * y) / y
    }

    pub fn scale(&self, s: Complex) -> Self {
        Self { r1: self.r1.scale(s), r2: self.r2.scale(s) }
    }

    /// `f * self`, reduced with `y^2 = K(x)`.
    pub fn mul_function(&self, f: &CurveFunction, curve: &LegendreCurve) -> Self {
        let k = RatFn::poly(curve.k_poly());
        let r1 = &(&f.a * &self.r1) + &(&(&f.b * &self.r2) * &k);
        let r2 = &(&f.a * &self.r2) + &(&f.b * &self.r1);
        Self { r1, r2 }
    }

    /// `g(x) * self` for a function of `x` alone.
    pub fn mul_x(&self, g: &RatFn) -> Self {
        Self { r1: &self.r1 * g, r2: &self.r2 * g }
    }
}

impl Add for &CurveForm {
    type Output = CurveForm;
    fn add(self, rhs: &CurveForm) -> CurveForm {
        CurveForm { r1: &self.r1 + &rhs.r1, r2: &self.r2 + &rhs.r2 }
    }
}

impl Sub for &CurveForm {
    type Output = CurveForm;
    fn sub(self, rhs: &CurveForm) -> CurveForm {
        CurveForm { r1: &self.r1 - &rhs.r1, r2: &self.r2 - &rhs.r2 }
    }
}

impl Neg for &CurveForm {
    type Output = CurveForm;
    fn neg(self) -> CurveForm {
        self.scale(cr(-1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::c;

    fn curve2() -> LegendreCurve {
        LegendreCurve::new(cr(2.0)).unwrap()
    }

    #[test]
    fn make_curve_examples() {
        assert_eq!(curve2().k(cr(3.0)), cr(6.0));
        assert!(matches!(LegendreCurve::new(cr(1.0)), Err(CurveError::DegenerateCurve(_))));
        assert!(matches!(LegendreCurve::new(cr(0.0)), Err(CurveError::DegenerateCurve(_))));
        let m3 = LegendreCurve::new(cr(-3.0)).unwrap();
        assert_eq!(m3.k(cr(-1.0)), cr(4.0));
        assert!(m3.lift_point(cr(-1.0), cr(2.0)).is_ok());
    }

    #[test]
    fn lift_point_examples() {
        let e = curve2();
        let p = e.lift_point(cr(3.0), cr(2.449)).unwrap_err();
        assert!(matches!(p, CurveError::OffCurve { .. }));
        let p = e.lift_point(cr(3.0), cr(6f64.sqrt())).unwrap();
        assert_eq!(p.y, cr(6f64.sqrt()));
        let b = e.lift_point(cr(0.0), cr(0.0)).unwrap();
        assert_eq!(e.local_parameter(&b).kind, ParamKind::Branch);
        assert!(matches!(e.lift_point(cr(3.0), cr(1.0)), Err(CurveError::OffCurve { .. })));
        let n = e.lift_point(cr(3.0), cr(-6f64.sqrt() * (1.0 + 1e-10))).unwrap();
        assert_eq!(n.y, -cr(6f64.sqrt()));
    }

    #[test]
    fn holomorphic_differential_has_order_zero() {
        let e = curve2();
        let p = e.lift_point(cr(3.0), cr(6f64.sqrt())).unwrap();
        let s = e.expand_form(&CurveForm::over_y(RatFn::constant(cr(1.0))), &p, 12).unwrap();
        assert_eq!(s.lowest_order(), 0);
        assert_eq!(s.residue(), cr(0.0));
        for at in [CurvePoint::infinity(), e.lift_point(cr(1.0), cr(0.0)).unwrap()] {
            let s = e.expand_form(&CurveForm::over_y(RatFn::constant(cr(1.0))), &at, 12).unwrap();
            assert_eq!(s.lowest_order(), 0);
        }
    }

    #[test]
    fn simple_pole_at_t() {
        let e = curve2();
        let t = c(0.3, 0.4);
        let s = e.k(t).sqrt();
        let p = e.lift_point(t, s).unwrap();
        let form = CurveForm::over_y(RatFn::pole(cr(1.0), t, 1));
        let ser = e.expand_form(&form, &p, 12).unwrap();
        assert_eq!(ser.lowest_order(), -1);
        // leading term (1/s) z^-1 forced by the pole
        assert!((ser.residue() - 1.0 / s).norm() < 1e-14);
    }

    #[test]
    fn double_pole_at_branch_point() {
        let e = curve2();
        let b = e.lift_point(cr(0.0), cr(0.0)).unwrap();
        let form = CurveForm::over_y(RatFn::pole(cr(1.0), cr(0.0), 1));
        let ser = e.expand_form(&form, &b, 12).unwrap();
        assert_eq!(ser.lowest_order(), -2);
        assert!((ser.leading() - 2.0).norm() < 1e-14);
    }

    #[test]
    fn branch_expansion_of_x_forms_is_even() {
        let e = LegendreCurve::new(c(-0.7, 1.3)).unwrap();
        let b = e.lift_point(e.lambda(), cr(0.0)).unwrap();
        // x-only form pulled back: r(x) dx has odd powers only, so compare
        // the function part expansion of r(x) itself.
        let f = CurveFunction::from_x(&RatFn::x() + &RatFn::pole(cr(2.0), cr(5.0), 2));
        let ser = e.expand_function(&f, &b, 12).unwrap();
        for k in ser.lowest_order()..=ser.truncation_order() {
            if k % 2 != 0 {
                assert!(ser.coeff(k).unwrap().norm() < 1e-14);
            }
        }
    }

    #[test]
    fn too_small_window() {
        let e = curve2();
        let p = e.lift_point(cr(3.0), cr(6f64.sqrt())).unwrap();
        assert_eq!(
            e.expand_form(&CurveForm::over_y(RatFn::constant(cr(1.0))), &p, 3),
            Err(CurveError::WindowTooSmall(3))
        );
    }

    #[test]
    fn differential_of_y() {
        let e = curve2();
        let dy = CurveFunction::y().differential(&e);
        let p = e.lift_point(c(0.4, 0.2), e.k(c(0.4, 0.2)).sqrt()).unwrap();
        // dy/dx = K'(x)/(2y)
        let expected = e.k_prime(p.x) / (2.0 * p.y);
        assert!((dy.coefficient_at(p.x, p.y) - expected).norm() < 1e-14);
    }
}
