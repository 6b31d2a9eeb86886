//! Fixed exponents at the polar divisor and the pole-local parameters
//! `A1, A2, B1, B2` of the companion form that realise them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::{CurveError, CurvePoint, LegendreCurve};
use crate::numeric::{cr, integer_distance, solve_linear, Complex, LinearSystem, NumericError};

/// Tolerance on the Fuchs relation `sum theta = -1`.
pub const FUCHS_TOLERANCE: f64 = 1e-12;
/// Minimum distance to the integers for the resonance conditions.
pub const RESONANCE_DISTANCE: f64 = 1e-8;
/// Tolerance on `s^2 = K(t)`.
pub const POLE_ON_CURVE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("spectral data not generic: {0}")]
    NotGeneric(String),
    #[error("pole point ({t}, {s}) invalid: {reason}")]
    InvalidPole { t: Complex, s: Complex, reason: String },
    #[error("irregular pole at infinity is not supported")]
    UnsupportedInfinity,
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

/// Location of an irregular pole: one of the ramification points of `x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TRoot {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1")]
    One,
    #[serde(rename = "lambda")]
    Lambda,
    #[serde(rename = "infty")]
    Infinity,
}

impl TRoot {
    pub fn value(self, curve: &LegendreCurve) -> Option<Complex> {
        match self {
            TRoot::Zero => Some(cr(0.0)),
            TRoot::One => Some(cr(1.0)),
            TRoot::Lambda => Some(curve.lambda()),
            TRoot::Infinity => None,
        }
    }
}

/// Two simple poles `t1 = (t, s)`, `t2 = (t, -s)` with exponents `theta1`, `theta2`.
#[derive(Clone, Debug, PartialEq)]
pub struct LogarithmicData {
    pub t: Complex,
    pub s: Complex,
    pub theta1: [Complex; 2],
    pub theta2: [Complex; 2],
}

/// One unramified double pole at a ramification point, local coordinate `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct IrregularData {
    pub t_root: TRoot,
    pub t: Complex,
    pub theta_m2: [Complex; 2],
    /// `[theta_m1_plus, -1 - theta_m1_plus]`
    pub theta_m1: [Complex; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub enum SpectralData {
    Logarithmic(LogarithmicData),
    Irregular(IrregularData),
}

impl SpectralData {
    /// Logarithmic data with `s` snapped to the root of `K(t)` nearest `s_hint`.
    pub fn logarithmic(
        curve: &LegendreCurve,
        t: Complex,
        s_hint: Complex,
        theta1: [Complex; 2],
        theta2: [Complex; 2],
    ) -> Result<Self, SpectralError> {
        if curve.branch_root_near(t).is_some() {
            return Err(SpectralError::InvalidPole { t, s: s_hint, reason: "t is a branch point, s = 0".into() });
        }
        let p = curve.lift_point(t, s_hint)?;
        let data = SpectralData::Logarithmic(LogarithmicData { t, s: p.y, theta1, theta2 });
        data.validate(curve)?;
        Ok(data)
    }

    pub fn irregular(
        curve: &LegendreCurve,
        t_root: TRoot,
        theta_m2: [Complex; 2],
        theta_m1_plus: Complex,
    ) -> Result<Self, SpectralError> {
        let t = t_root.value(curve).ok_or(SpectralError::UnsupportedInfinity)?;
        let data = SpectralData::Irregular(IrregularData {
            t_root,
            t,
            theta_m2,
            theta_m1: [theta_m1_plus, -1.0 - theta_m1_plus],
        });
        data.validate(curve)?;
        Ok(data)
    }

    /// Checks the pole location and every genericity condition.
    pub fn validate(&self, curve: &LegendreCurve) -> Result<(), SpectralError> {
        match self {
            SpectralData::Logarithmic(d) => {
                let residual = (d.s * d.s - curve.k(d.t)).norm() / curve.k(d.t).norm().max(1e-300);
                if d.s.norm() == 0.0 || !(residual <= POLE_ON_CURVE) {
                    return Err(SpectralError::InvalidPole {
                        t: d.t,
                        s: d.s,
                        reason: format!("s^2 = K(t) violated (relative residual {residual:e})"),
                    });
                }
            }
            SpectralData::Irregular(d) => {
                if d.t_root == TRoot::Infinity {
                    return Err(SpectralError::UnsupportedInfinity);
                }
            }
        }
        let report = check_genericity(self);
        if !report.pass {
            let failed: Vec<String> = report.checks.iter().filter(|c| !c.pass).map(|c| c.to_string()).collect();
            return Err(SpectralError::NotGeneric(failed.join("; ")));
        }
        Ok(())
    }

    pub fn t(&self) -> Complex {
        match self {
            SpectralData::Logarithmic(d) => d.t,
            SpectralData::Irregular(d) => d.t,
        }
    }

    /// `s` with `s^2 = K(t)`; zero in the irregular case.
    pub fn s(&self) -> Complex {
        match self {
            SpectralData::Logarithmic(d) => d.s,
            SpectralData::Irregular(_) => cr(0.0),
        }
    }

    pub fn is_irregular(&self) -> bool {
        matches!(self, SpectralData::Irregular(_))
    }

    /// The support of the polar divisor: `[t1, t2]` or the single ramified point.
    pub fn pole_points(&self) -> Vec<CurvePoint> {
        use crate::curve::Chart;
        match self {
            SpectralData::Logarithmic(d) => vec![
                CurvePoint { chart: Chart::U0, x: d.t, y: d.s },
                CurvePoint { chart: Chart::U0, x: d.t, y: -d.s },
            ],
            SpectralData::Irregular(d) => vec![CurvePoint { chart: Chart::U0, x: d.t, y: cr(0.0) }],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenericityCheck {
    pub name: String,
    /// Measured quantity: a residual for equalities, a distance for exclusions.
    pub measured: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl std::fmt::Display for GenericityCheck {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: measured {:e} vs threshold {:e}", self.name, self.measured, self.threshold)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenericityReport {
    pub checks: Vec<GenericityCheck>,
    pub pass: bool,
}

fn equality(name: &str, residual: f64, threshold: f64) -> GenericityCheck {
    GenericityCheck { name: name.into(), measured: residual, threshold, pass: residual <= threshold }
}

fn exclusion(name: &str, distance: f64, threshold: f64) -> GenericityCheck {
    GenericityCheck { name: name.into(), measured: distance, threshold, pass: distance > threshold }
}

/// Evaluates every genericity condition without failing.
pub fn check_genericity(data: &SpectralData) -> GenericityReport {
    let mut checks = Vec::new();
    match data {
        SpectralData::Logarithmic(d) => {
            let [a, b] = d.theta1;
            let [c, e] = d.theta2;
            checks.push(equality("fuchs", (a + b + c + e + 1.0).norm(), FUCHS_TOLERANCE));
            checks.push(exclusion("theta1_difference", integer_distance(a - b), RESONANCE_DISTANCE));
            checks.push(exclusion("theta2_difference", integer_distance(c - e), RESONANCE_DISTANCE));
            for (i, x) in [a, b].into_iter().enumerate() {
                for (k, y) in [c, e].into_iter().enumerate() {
                    let name = format!("sum_theta1{}_theta2{}", sign(i), sign(k));
                    checks.push(exclusion(&name, integer_distance(x + y), RESONANCE_DISTANCE));
                }
            }
        }
        SpectralData::Irregular(d) => {
            checks.push(exclusion("theta_m2_distinct", (d.theta_m2[0] - d.theta_m2[1]).norm(), RESONANCE_DISTANCE));
            let [p, m] = d.theta_m1;
            checks.push(equality("theta_m1_sum", (p + m + 1.0).norm(), FUCHS_TOLERANCE));
        }
    }
    let pass = checks.iter().all(|c| c.pass);
    GenericityReport { checks, pass }
}

fn sign(i: usize) -> &'static str {
    if i == 0 {
        "+"
    } else {
        "-"
    }
}

/// Coefficients of the polar parts of the companion entries at the poles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidueParams {
    pub a1: Complex,
    pub a2: Complex,
    pub b1: Complex,
    pub b2: Complex,
}

/// Solves for `A1, A2, B1, B2` so that the residue (or polar part) of the
/// companion matrix at each pole has the prescribed eigenvalues.
///
/// The companion matrix is `[[0, w12], [w21, w22]]`, so its eigenvalue
/// product is `-res(w12) res(w21)` and its trace is `res(w22)`.
pub fn solve_residue_params(curve: &LegendreCurve, data: &SpectralData) -> Result<ResidueParams, SpectralError> {
    data.validate(curve)?;
    match data {
        SpectralData::Logarithmic(d) => {
            let s = d.s;
            let p1 = d.theta1[0] * d.theta1[1];
            let p2 = d.theta2[0] * d.theta2[1];
            let s1 = d.theta1[0] + d.theta1[1];
            let s2 = d.theta2[0] + d.theta2[1];
            // At (t, +-s): res w21 = 1/(+-s), res w12 = (A1 +- A2 s)/(+-s),
            // res w22 = (B1 +- B2 s)/(+-s).
            let m = vec![vec![cr(1.0), s], vec![cr(1.0), -s]];
            let a = solve_linear(&LinearSystem::new(m.clone(), vec![-s * s * p1, -s * s * p2])?)?;
            let b = solve_linear(&LinearSystem::new(m, vec![s * s1, -s * s2])?)?;
            Ok(ResidueParams { a1: a[0], a2: a[1], b1: b[0], b2: b[1] })
        }
        SpectralData::Irregular(d) => {
            let [p2, m2] = d.theta_m2;
            let [p1, m1] = d.theta_m1;
            Ok(ResidueParams {
                a1: -0.25 * p2 * m2,
                a2: -0.25 * (p2 * m1 + m2 * p1),
                b1: 0.5 * (p2 + m2),
                b2: cr(-0.5),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_data(theta1: [f64; 2], theta2: [f64; 2]) -> SpectralData {
        SpectralData::Logarithmic(LogarithmicData {
            t: cr(3.0),
            s: cr(6f64.sqrt()),
            theta1: [cr(theta1[0]), cr(theta1[1])],
            theta2: [cr(theta2[0]), cr(theta2[1])],
        })
    }

    #[test]
    fn genericity_examples() {
        assert!(check_genericity(&log_data([0.25, -0.25], [-1.0 / 3.0, -2.0 / 3.0])).pass);
        let r = check_genericity(&log_data([0.5, -0.5], [0.0, -1.0]));
        assert!(!r.pass);
        assert!(r.checks.iter().any(|c| c.name == "theta2_difference" && !c.pass));
        let r = check_genericity(&log_data([0.25, -0.25], [2.0 / 3.0, 1.0 / 3.0]));
        assert!(r.checks.iter().any(|c| c.name == "fuchs" && !c.pass));
    }

    #[test]
    fn infinity_rejected() {
        let e = LegendreCurve::new(cr(2.0)).unwrap();
        let r = SpectralData::irregular(&e, TRoot::Infinity, [cr(1.0), cr(2.0)], cr(0.1));
        assert_eq!(r, Err(SpectralError::UnsupportedInfinity));
    }

    #[test]
    fn irregular_b2_is_minus_half() {
        let e = LegendreCurve::new(cr(2.0)).unwrap();
        let d = SpectralData::irregular(&e, TRoot::Zero, [cr(1.5), cr(-0.5)], cr(0.2)).unwrap();
        assert_eq!(solve_residue_params(&e, &d).unwrap().b2, cr(-0.5));
    }
}
