//! The companion normal form `d + [[0, w12], [w21, w22]]` on
//! `O + (Omega^1(D))^-1`, built from apparent data and spectral data.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::{CurveError, CurveForm, CurvePoint, LegendreCurve, RatFn, BRANCH_TOLERANCE};
use crate::numeric::{
    cr, determinant, solve_linear, Complex, LaurentSeries, LinearSystem, NumericError, DEFAULT_WINDOW,
    SINGULARITY_THRESHOLD,
};
use crate::spectral::{solve_residue_params, ResidueParams, SpectralData, SpectralError};

/// Number of apparent singularities, `4g - 3 + n` with `g = 1`, `n = 2`.
pub const N_APPARENT: usize = 3;

/// Tolerance for the residue invariants asserted at construction.
pub const RESIDUE_TOLERANCE: f64 = 1e-10;

/// Tolerance on the apparency residuals, relative to [`CompanionForm::scale`].
pub const APPARENCY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompanionError {
    #[error("invalid apparent configuration: {0}")]
    InvalidConfig(String),
    #[error("near-singular stability determinant: |det| = {det_abs:e}, threshold {threshold:e}")]
    NearSingular { det_abs: f64, threshold: f64 },
    #[error("companion invariant `{check}` violated: residual {residual:e}")]
    InvariantViolated { check: String, residual: f64 },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Numeric(NumericError),
}

impl From<NumericError> for CompanionError {
    fn from(e: NumericError) -> Self {
        match e {
            NumericError::NearSingular { det_abs, threshold } => CompanionError::NearSingular { det_abs, threshold },
            other => CompanionError::Numeric(other),
        }
    }
}

/// An apparent singularity `q = (u, v)` with its `zeta` parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApparentPoint {
    pub u: Complex,
    pub v: Complex,
    pub zeta: Complex,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApparentConfig {
    pub points: [ApparentPoint; N_APPARENT],
}

impl ApparentConfig {
    /// Validates the configuration against the curve and the pole, snapping
    /// each `v` to the root of `K(u)` nearest the given value.
    pub fn new(
        curve: &LegendreCurve,
        spectral: &SpectralData,
        points: [ApparentPoint; N_APPARENT],
    ) -> Result<Self, CompanionError> {
        let t = spectral.t();
        let mut out = points;
        for (j, p) in points.iter().enumerate() {
            if curve.branch_root_near(p.u).is_some() {
                return Err(CompanionError::InvalidConfig(format!("u{} = {} is a branch point", j + 1, p.u)));
            }
            if (p.u - t).norm() <= BRANCH_TOLERANCE {
                return Err(CompanionError::InvalidConfig(format!("u{} = {} coincides with t", j + 1, p.u)));
            }
            for (k, q) in points.iter().enumerate().skip(j + 1) {
                if (p.u - q.u).norm() <= BRANCH_TOLERANCE {
                    return Err(CompanionError::InvalidConfig(format!("u{} and u{} coincide", j + 1, k + 1)));
                }
            }
            if !crate::numeric::is_finite(p.zeta) {
                return Err(CompanionError::InvalidConfig(format!("zeta{} is not finite", j + 1)));
            }
            out[j].v = curve.lift_point(p.u, p.v)?.y;
        }
        Ok(Self { points: out })
    }

    pub fn point(&self, j: usize) -> CurvePoint {
        CurvePoint { chart: crate::curve::Chart::U0, x: self.points[j].u, y: self.points[j].v }
    }

    fn stability_rows(&self) -> Vec<Vec<Complex>> {
        self.points.iter().map(|p| vec![cr(1.0), p.u, p.zeta]).collect()
    }
}

/// `det` of the rows `(1, u_j, zeta_j)`; it vanishes exactly when `zeta` is
/// an affine function of `u`.
pub fn stability_det(config: &ApparentConfig) -> Complex {
    determinant(&config.stability_rows()).expect("3x3")
}

/// The NearSingular threshold for [`stability_det`] on this configuration.
pub fn stability_threshold(config: &ApparentConfig) -> f64 {
    let rows = config.stability_rows();
    SINGULARITY_THRESHOLD * rows.iter().map(|r| r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).product::<f64>()
}

/// The constant terms `C_j` of the apparency conditions
/// `C_j + A3 + A4 u_j - zeta_j B3 = 0`.
pub fn compute_cj(config: &ApparentConfig, params: &ResidueParams, t: Complex) -> [Complex; N_APPARENT] {
    let mut out = [cr(0.0); N_APPARENT];
    for (j, p) in config.points.iter().enumerate() {
        let mut c = cr(0.0);
        for (k, q) in config.points.iter().enumerate() {
            if k != j {
                c += (q.zeta - p.zeta) / 2.0 * (p.v + q.v) / (p.u - q.u);
            }
        }
        let num = params.a1 + params.a2 * p.v - p.zeta * (params.b1 + params.b2 * p.v) - p.zeta * p.zeta;
        out[j] = c + num / (p.u - t);
    }
    out
}

/// Solves the apparency conditions for `(A3, A4, B3)` by Cramer's rule.
pub fn solve_accessory(
    curve: &LegendreCurve,
    spectral: &SpectralData,
    config: &ApparentConfig,
) -> Result<[Complex; 3], CompanionError> {
    let params = solve_residue_params(curve, spectral)?;
    solve_accessory_with(config, &params, spectral.t())
}

fn solve_accessory_with(
    config: &ApparentConfig,
    params: &ResidueParams,
    t: Complex,
) -> Result<[Complex; 3], CompanionError> {
    solve_apparency_system(config, &compute_cj(config, params, t))
}

/// Solves `A3 + A4 u_j - zeta_j B3 = -C_j` for given constants `C_j`.
pub fn solve_apparency_system(config: &ApparentConfig, cj: &[Complex; N_APPARENT]) -> Result<[Complex; 3], CompanionError> {
    let matrix = config.points.iter().map(|p| vec![cr(1.0), p.u, -p.zeta]).collect();
    let sys = LinearSystem::new(matrix, cj.iter().map(|c| -c).collect())?;
    let x = solve_linear(&sys)?;
    Ok([x[0], x[1], x[2]])
}

/// `(y + v)/(2(x - u)) dx/y`, the form with residue 1 at `(u, v)` and none at `(u, -v)`.
pub fn half_pole(u: Complex, v: Complex) -> CurveForm {
    CurveForm::new(RatFn::pole(v / 2.0, u, 1), RatFn::pole(cr(0.5), u, 1))
}

/// `(c1 + c2 y)/(x - t) dx/y`
pub(crate) fn polar_at_t(c1: Complex, c2: Complex, t: Complex) -> CurveForm {
    CurveForm::new(RatFn::pole(c1, t, 1), RatFn::pole(c2, t, 1))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompanionForm {
    pub curve: LegendreCurve,
    pub spectral: SpectralData,
    pub config: ApparentConfig,
    pub params: ResidueParams,
    pub a3: Complex,
    pub a4: Complex,
    pub b3: Complex,
    pub omega12: CurveForm,
    pub omega21: CurveForm,
    pub omega22: CurveForm,
}

impl CompanionForm {
    /// Assembles the three forms from explicit parameters without solving
    /// or checking anything.
    pub fn assemble(
        curve: &LegendreCurve,
        spectral: &SpectralData,
        config: &ApparentConfig,
        params: ResidueParams,
        accessory: [Complex; 3],
    ) -> Self {
        let t = spectral.t();
        let [a3, a4, b3] = accessory;
        let mut omega12 = &polar_at_t(params.a1, params.a2, t) + &CurveForm::over_y(RatFn::poly(
            crate::curve::Poly::new(vec![a3, a4]),
        ));
        let mut omega22 = &polar_at_t(params.b1, params.b2, t) + &CurveForm::over_y(RatFn::constant(b3));
        for p in &config.points {
            let h = half_pole(p.u, p.v);
            omega12 = &omega12 + &h.scale(p.zeta);
            omega22 = &omega22 + &h;
        }
        Self {
            curve: *curve,
            spectral: spectral.clone(),
            config: config.clone(),
            params,
            a3,
            a4,
            b3,
            omega12,
            omega21: CurveForm::over_y(RatFn::pole(cr(1.0), t, 1)),
            omega22,
        }
    }

    pub fn cj(&self) -> [Complex; N_APPARENT] {
        compute_cj(&self.config, &self.params, self.spectral.t())
    }

    /// `max(1, |A3|, |A4|, |B3|, max |C_j|)`
    pub fn scale(&self) -> f64 {
        self.cj().iter().map(|c| c.norm()).chain([1.0, self.a3.norm(), self.a4.norm(), self.b3.norm()]).fold(0.0, f64::max)
    }

    /// `w12 - zeta_j w22 - zeta_j^2 w21`, which must vanish at `q_j`.
    pub fn omega12_shifted(&self, j: usize) -> CurveForm {
        let z = self.config.points[j].zeta;
        &(&self.omega12 - &self.omega22.scale(z)) - &self.omega21.scale(z * z)
    }

    /// Residues of the three entries at a point, as `[[0, r12], [r21, r22]]`.
    pub fn residue_matrix(&self, at: &CurvePoint) -> Result<[[Complex; 2]; 2], CurveError> {
        Ok([
            [cr(0.0), self.curve.form_residue(&self.omega12, at)?],
            [self.curve.form_residue(&self.omega21, at)?, self.curve.form_residue(&self.omega22, at)?],
        ])
    }

    /// Eigenvalue data at each pole: the residue eigenvalues for simple poles
    /// or the `(y^-2, y^-1)` coefficients of the eigenvalue expansions at an
    /// irregular pole. Each entry pairs with the expected `[plus, minus]`.
    pub fn pole_eigen_data(&self, window: usize) -> Result<Vec<PoleEigenData>, CurveError> {
        let mut out = Vec::new();
        match &self.spectral {
            SpectralData::Logarithmic(d) => {
                for (at, expected) in self.spectral.pole_points().iter().zip([d.theta1, d.theta2]) {
                    let m = self.residue_matrix(at)?;
                    let (tr, prod) = (m[1][1], -m[0][1] * m[1][0]);
                    let disc = (tr * tr - 4.0 * prod).sqrt();
                    let found = [(tr + disc) / 2.0, (tr - disc) / 2.0];
                    out.push(PoleEigenData::Simple { found: order_like(found, expected), expected });
                }
            }
            SpectralData::Irregular(d) => {
                let at = self.spectral.pole_points()[0];
                let a = self.curve.expand_form(&self.omega12, &at, window)?;
                let b = self.curve.expand_form(&self.omega21, &at, window)?;
                let c = self.curve.expand_form(&self.omega22, &at, window)?;
                let disc = &(&c * &c) + &(&a * &b).scale(cr(4.0));
                let root = disc.sqrt(d.theta_m2[0] - d.theta_m2[1])?;
                let plus = (&c + &root).scale(cr(0.5));
                let minus = (&c - &root).scale(cr(0.5));
                let coeffs = |s: &LaurentSeries| [s.coeff(-2).unwrap_or_default(), s.coeff(-1).unwrap_or_default()];
                out.push(PoleEigenData::Irregular {
                    plus: coeffs(&plus),
                    minus: coeffs(&minus),
                    expected_plus: [d.theta_m2[0], d.theta_m1[0]],
                    expected_minus: [d.theta_m2[1], d.theta_m1[1]],
                });
            }
        }
        Ok(out)
    }
}

fn order_like(found: [Complex; 2], expected: [Complex; 2]) -> [Complex; 2] {
    let direct = (found[0] - expected[0]).norm() + (found[1] - expected[1]).norm();
    let swapped = (found[1] - expected[0]).norm() + (found[0] - expected[1]).norm();
    if swapped < direct {
        [found[1], found[0]]
    } else {
        found
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum PoleEigenData {
    Simple { found: [Complex; 2], expected: [Complex; 2] },
    Irregular { plus: [Complex; 2], minus: [Complex; 2], expected_plus: [Complex; 2], expected_minus: [Complex; 2] },
}

impl PoleEigenData {
    pub fn max_error(&self) -> f64 {
        match self {
            PoleEigenData::Simple { found, expected } => {
                (found[0] - expected[0]).norm().max((found[1] - expected[1]).norm())
            }
            PoleEigenData::Irregular { plus, minus, expected_plus, expected_minus } => plus
                .iter()
                .zip(expected_plus)
                .chain(minus.iter().zip(expected_minus))
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max),
        }
    }
}

/// Solves and assembles the companion form, asserting its residue and
/// apparency invariants.
pub fn build_companion(
    curve: &LegendreCurve,
    spectral: &SpectralData,
    config: &ApparentConfig,
) -> Result<CompanionForm, CompanionError> {
    build_companion_with(curve, spectral, config, DEFAULT_WINDOW)
}

pub fn build_companion_with(
    curve: &LegendreCurve,
    spectral: &SpectralData,
    config: &ApparentConfig,
    window: usize,
) -> Result<CompanionForm, CompanionError> {
    let params = solve_residue_params(curve, spectral)?;
    let accessory = solve_accessory_with(config, &params, spectral.t())?;
    let form = CompanionForm::assemble(curve, spectral, config, params, accessory);

    let invariant = |check: &str, residual: f64, tol: f64| {
        if residual <= tol {
            Ok(())
        } else {
            Err(CompanionError::InvariantViolated { check: check.into(), residual })
        }
    };
    for j in 0..N_APPARENT {
        let r = curve.expand_form(&form.omega22, &config.point(j), window)?.residue();
        invariant(&format!("res_q{} omega22 = 1", j + 1), (r - 1.0).norm(), RESIDUE_TOLERANCE)?;
        let m = form.residue_matrix(&config.point(j))?;
        let z = config.points[j].zeta;
        let err = m[0][1] - z;
        invariant(&format!("res_q{} omega12 = zeta", j + 1), err.norm(), RESIDUE_TOLERANCE * (1.0 + z.norm()))?;
        invariant(&format!("res_q{} omega21 = 0", j + 1), m[1][0].norm(), RESIDUE_TOLERANCE)?;
    }
    let r_inf = curve.expand_form(&form.omega22, &CurvePoint::infinity(), window)?.residue();
    invariant("res_infinity omega22 = -2", (r_inf + 2.0).norm(), RESIDUE_TOLERANCE)?;
    let report = verify_apparency_with(&form, window)?;
    invariant("apparency", report.max_residual(), APPARENCY_TOLERANCE)?;
    Ok(form)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ApparencyReport {
    /// Per point: `max_{k <= 0} |c_k| |v_j| / scale` for the expansion of the
    /// shifted `w12` at `q_j`.
    pub residuals: [f64; N_APPARENT],
    pub scale: f64,
    pub pass: bool,
}

impl ApparencyReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Re-derives the apparency conditions by expanding
/// `w12 - zeta_j w22 - zeta_j^2 w21` at each `q_j`, independently of `C_j`.
pub fn verify_apparency(form: &CompanionForm) -> Result<ApparencyReport, CurveError> {
    verify_apparency_with(form, DEFAULT_WINDOW)
}

pub fn verify_apparency_with(form: &CompanionForm, window: usize) -> Result<ApparencyReport, CurveError> {
    let scale = form.scale();
    let mut residuals = [0.0; N_APPARENT];
    for (j, r) in residuals.iter_mut().enumerate() {
        let series = form.curve.expand_form(&form.omega12_shifted(j), &form.config.point(j), window)?;
        let v = form.config.points[j].v.norm();
        *r = (series.lowest_order()..=0)
            .map(|k| series.coeff(k).unwrap_or_default().norm() * v)
            .fold(0.0, f64::max)
            / scale;
    }
    let pass = residuals.iter().all(|r| *r < APPARENCY_TOLERANCE);
    Ok(ApparencyReport { residuals, scale, pass })
}
