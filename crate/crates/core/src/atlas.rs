//! Gluing the rank-2 bundle and its connection from the companion form:
//! charts `U0`, `U_inf` and one small disc `U_qj` per apparent point, the
//! transition matrices between them and the local connection matrices.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::companion::{half_pole, polar_at_t, CompanionForm, PoleEigenData, N_APPARENT};
use crate::curve::{CurveError, CurveForm, CurveFunction, CurvePoint, LegendreCurve, Poly, RatFn};
use crate::numeric::{cr, Complex, DEFAULT_WINDOW};
use crate::sample::{rng, DEFAULT_SEED};

/// Tolerance on sampled gluing residuals.
pub const GLUING_TOLERANCE: f64 = 1e-9;
/// Tolerance on the trace identity residuals.
pub const TRACE_TOLERANCE: f64 = 1e-10;
/// Tolerance on the holomorphy residuals at chart centres.
pub const HOLOMORPHY_TOLERANCE: f64 = 1e-10;
/// Tolerance on eigenvalue data at the poles.
pub const EIGEN_TOLERANCE: f64 = 1e-9;
/// Sample points are kept this far from every singular `x`.
pub const POLE_CLEARANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AtlasError {
    #[error("gluing failure on {overlap}: residual {residual:e} at x = {x}")]
    GluingFailure { overlap: String, residual: f64, x: Complex },
    #[error("connection matrix on {chart} not holomorphic at its centre: residual {residual:e}")]
    NotHolomorphic { chart: String, residual: f64 },
    #[error("atlas check `{check}` failed: residual {residual:e}")]
    CheckFailed { check: String, residual: f64 },
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// 2x2 matrix of functions (transition matrices).
pub type FunctionMatrix = [[CurveFunction; 2]; 2];
/// 2x2 matrix of 1-forms (connection matrices).
pub type FormMatrix = [[CurveForm; 2]; 2];

fn x_fn(r: RatFn) -> CurveFunction {
    CurveFunction::from_x(r)
}

/// `B^-1 A B + sign * B^-1 dB`
fn gauge_signed(curve: &LegendreCurve, a: &FormMatrix, b: &FunctionMatrix, b_inv: &FunctionMatrix, sign: f64) -> FormMatrix {
    let entry = |i: usize, k: usize| {
        let mut out = CurveForm::zero();
        for j in 0..2 {
            for l in 0..2 {
                out = &out + &a[j][l].mul_function(&b_inv[i][j], curve).mul_function(&b[l][k], curve);
            }
            let db = b[j][k].differential(curve).mul_function(&b_inv[i][j], curve);
            out = &out + &db.scale(cr(sign));
        }
        out
    };
    [[entry(0, 0), entry(0, 1)], [entry(1, 0), entry(1, 1)]]
}

/// Gauge transform `B^-1 A B + B^-1 dB`.
pub fn gauge(curve: &LegendreCurve, a: &FormMatrix, b: &FunctionMatrix, b_inv: &FunctionMatrix) -> FormMatrix {
    gauge_signed(curve, a, b, b_inv, 1.0)
}

fn function_product(curve: &LegendreCurve, a: &FunctionMatrix, b: &FunctionMatrix) -> FunctionMatrix {
    let entry = |i: usize, k: usize| &a[i][0].mul(&b[0][k], curve) + &a[i][1].mul(&b[1][k], curve);
    [[entry(0, 0), entry(0, 1)], [entry(1, 0), entry(1, 1)]]
}

/// A transition `B` from `U0` to another chart with its explicit inverse.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub b: FunctionMatrix,
    pub b_inv: FunctionMatrix,
    /// `d log det B`
    pub dlog_det: CurveForm,
}

impl Transition {
    /// `[[1, zeta/(x - u)], [0, 1/(x - u)]]`
    pub fn to_q(u: Complex, zeta: Complex) -> Self {
        let one = x_fn(RatFn::constant(cr(1.0)));
        let zero = CurveFunction::default();
        let z = x_fn(RatFn::poly(Poly::linear_factor(u)));
        Self {
            b: [[one.clone(), x_fn(RatFn::pole(zeta, u, 1))], [zero.clone(), x_fn(RatFn::pole(cr(1.0), u, 1))]],
            b_inv: [[one, x_fn(RatFn::constant(-zeta))], [zero, z]],
            dlog_det: CurveForm::plain(RatFn::pole(cr(-1.0), u, 1)),
        }
    }

    /// `diag(1, -x2)` with `x2 = 1/x`.
    pub fn to_infinity() -> Self {
        let one = x_fn(RatFn::constant(cr(1.0)));
        let zero = CurveFunction::default();
        Self {
            b: [[one.clone(), zero.clone()], [zero.clone(), x_fn(RatFn::pole(cr(-1.0), cr(0.0), 1))]],
            b_inv: [[one, zero.clone()], [zero, x_fn(RatFn::x().scale(cr(-1.0)))]],
            dlog_det: CurveForm::plain(RatFn::pole(cr(-1.0), cr(0.0), 1)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OverlapResidual {
    pub overlap: String,
    pub samples: usize,
    pub max_residual: f64,
    /// `x` where the worst residual occurred.
    pub worst_x: Option<Complex>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GluingReport {
    pub seed: u64,
    pub overlaps: Vec<OverlapResidual>,
    pub warnings: Vec<String>,
}

impl GluingReport {
    pub fn max_residual(&self) -> f64 {
        self.overlaps.iter().map(|o| o.max_residual).fold(0.0, f64::max)
    }

    pub fn pass(&self) -> bool {
        self.max_residual() < GLUING_TOLERANCE
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AtlasReport {
    pub gluing: GluingReport,
    /// Trace identity residual per chart (`q1..q3`, then `infinity`).
    pub trace_residuals: Vec<f64>,
    /// Holomorphy residual per chart centre (`q1..q3`, then `infinity`).
    pub holomorphy: Vec<f64>,
    /// Degree of the determinant line bundle before rounding.
    pub det_degree: f64,
    pub pole_eigen: Vec<PoleEigenData>,
}

#[derive(Clone, Debug)]
pub struct AtlasOptions {
    pub gluing_samples: usize,
    pub seed: u64,
    pub window: usize,
}

impl Default for AtlasOptions {
    fn default() -> Self {
        Self { gluing_samples: 20, seed: DEFAULT_SEED, window: DEFAULT_WINDOW }
    }
}

#[derive(Clone, Debug)]
pub struct ConnectionAtlas {
    pub companion: CompanionForm,
    pub a0: FormMatrix,
    pub a_q: [FormMatrix; N_APPARENT],
    pub a_inf: FormMatrix,
    pub to_q: [Transition; N_APPARENT],
    pub to_inf: Transition,
}

impl ConnectionAtlas {
    /// Writes down all charts, transitions and connection matrices without
    /// verifying them.
    pub fn assemble(form: &CompanionForm) -> Self {
        let c = form;
        let t = c.spectral.t();
        let a0 = [[CurveForm::zero(), c.omega12.clone()], [c.omega21.clone(), c.omega22.clone()]];
        let a_q = std::array::from_fn(|j| {
            let p = c.config.points[j];
            let omega11 = c.omega21.scale(-p.zeta);
            let a12 = c.omega12_shifted(j).mul_x(&RatFn::pole(cr(1.0), p.u, 1));
            let a21 = c.omega21.mul_x(&RatFn::poly(Poly::linear_factor(p.u)));
            // (v_j - y)/(2(x - u_j)) replaces the j-th half pole; zeta_j dx/((x-t)y) joins the t-part
            let mut omega22 = CurveForm::new(RatFn::pole(p.v / 2.0, p.u, 1), RatFn::pole(cr(-0.5), p.u, 1));
            for (k, q) in c.config.points.iter().enumerate() {
                if k != j {
                    omega22 = &omega22 + &half_pole(q.u, q.v);
                }
            }
            omega22 = &omega22 + &polar_at_t(c.params.b1 + p.zeta, c.params.b2, t);
            omega22 = &omega22 + &CurveForm::over_y(RatFn::constant(c.b3));
            [[omega11, a12], [a21, omega22]]
        });
        let x2 = RatFn::pole(cr(1.0), cr(0.0), 1);
        let a_inf = [
            [CurveForm::zero(), c.omega12.mul_x(&x2).scale(cr(-1.0))],
            [c.omega21.mul_x(&RatFn::x()).scale(cr(-1.0)), &c.omega22 + &CurveForm::plain(RatFn::pole(cr(-1.0), cr(0.0), 1))],
        ];
        Self {
            companion: c.clone(),
            a0,
            a_q,
            a_inf,
            to_q: std::array::from_fn(|j| Transition::to_q(c.config.points[j].u, c.config.points[j].zeta)),
            to_inf: Transition::to_infinity(),
        }
    }

    pub fn curve(&self) -> &LegendreCurve {
        &self.companion.curve
    }

    /// Every finite `x` where some entry may be singular.
    fn singular_x(&self) -> Vec<Complex> {
        let mut xs = self.curve().branch_roots().to_vec();
        xs.push(self.companion.spectral.t());
        xs.extend(self.companion.config.points.iter().map(|p| p.u));
        xs
    }

    /// Radius of the disc chart around `q_j`.
    pub fn q_radius(&self, j: usize) -> f64 {
        let u = self.companion.config.points[j].u;
        let d_min = self.singular_x().iter().filter(|x| **x != u).map(|x| (x - u).norm()).fold(f64::INFINITY, f64::min);
        (0.45 * d_min).min(0.25)
    }

    /// `y` over `x` on the sheet continued from `q_j` inside its disc.
    pub(crate) fn y_near_q(&self, j: usize, x: Complex) -> Complex {
        let p = self.companion.config.points[j];
        let curve = self.curve();
        let guess = p.v + curve.k_prime(p.u) / (2.0 * p.v) * (x - p.u);
        let y = curve.k(x).sqrt();
        if (y - guess).norm() <= (y + guess).norm() {
            y
        } else {
            -y
        }
    }
}

fn matrix_residual(lhs: &FormMatrix, rhs: &FormMatrix, x: Complex, y: Complex) -> f64 {
    let mut diff: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for i in 0..2 {
        for k in 0..2 {
            let a = lhs[i][k].coefficient_at(x, y);
            let b = rhs[i][k].coefficient_at(x, y);
            diff = diff.max((a - b).norm());
            scale = scale.max(b.norm());
        }
    }
    diff / scale
}

/// Samples the gluing identity `B^-1 A0 B + B^-1 dB = A_target` on every
/// overlap at `n_samples` seeded points.
pub fn check_gluing(atlas: &ConnectionAtlas, n_samples: usize, seed: u64) -> GluingReport {
    check_gluing_signed(atlas, n_samples, seed, 1.0)
}

fn check_gluing_signed(atlas: &ConnectionAtlas, n_samples: usize, seed: u64, sign: f64) -> GluingReport {
    let curve = atlas.curve();
    let mut r = rng(seed);
    let mut overlaps = Vec::new();
    let mut warnings = Vec::new();
    if n_samples == 0 {
        warnings.push("no sample points: gluing passes vacuously".to_string());
        return GluingReport { seed, overlaps, warnings };
    }
    let singular = atlas.singular_x();
    let clear = |x: Complex| singular.iter().all(|s| (x - s).norm() > POLE_CLEARANCE);

    for j in 0..N_APPARENT {
        let tr = &atlas.to_q[j];
        let glued = gauge_signed(curve, &atlas.a0, &tr.b, &tr.b_inv, sign);
        let rho = atlas.q_radius(j);
        let u = atlas.companion.config.points[j].u;
        let mut worst = (0.0, None);
        let mut count = 0;
        let mut attempts = 0;
        while count < n_samples && attempts < 100 * n_samples {
            attempts += 1;
            let radius = r.gen_range(0.5 * rho..rho);
            let angle = r.gen_range(0.0..std::f64::consts::TAU);
            let x = u + Complex::from_polar(radius, angle);
            if !clear(x) {
                continue;
            }
            count += 1;
            let res = matrix_residual(&glued, &atlas.a_q[j], x, atlas.y_near_q(j, x));
            if !(res <= worst.0) {
                worst = (res, Some(x));
            }
        }
        if count < n_samples {
            warnings.push(format!("only {count} admissible samples on U0 ^ Uq{}", j + 1));
        }
        overlaps.push(OverlapResidual { overlap: format!("U0 ^ Uq{}", j + 1), samples: count, max_residual: worst.0, worst_x: worst.1 });
    }

    let tr = &atlas.to_inf;
    let glued = gauge_signed(curve, &atlas.a0, &tr.b, &tr.b_inv, sign);
    let big = 2.0 * singular.iter().map(|x| x.norm()).fold(1.0, f64::max) + 2.0;
    let mut worst = (0.0, None);
    for _ in 0..n_samples {
        let x = Complex::from_polar(r.gen_range(big..2.0 * big), r.gen_range(0.0..std::f64::consts::TAU));
        let y = curve.k(x).sqrt() * if r.gen_bool(0.5) { 1.0 } else { -1.0 };
        let res = matrix_residual(&glued, &atlas.a_inf, x, y);
        if !(res <= worst.0) {
            worst = (res, Some(x));
        }
    }
    overlaps.push(OverlapResidual { overlap: "U0 ^ Uinf".into(), samples: n_samples, max_residual: worst.0, worst_x: worst.1 });
    GluingReport { seed, overlaps, warnings }
}

/// `tr` of the connection matrix in each chart.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceSection {
    pub u0: CurveForm,
    pub uq: [CurveForm; N_APPARENT],
    pub uinf: CurveForm,
}

/// The trace of the connection chart by chart, a section of the twisted
/// cotangent bundle: its differences across overlaps are `d log det B`.
pub fn extract_trace_section(atlas: &ConnectionAtlas) -> TraceSection {
    let tr = |m: &FormMatrix| &m[0][0] + &m[1][1];
    TraceSection {
        u0: tr(&atlas.a0),
        uq: std::array::from_fn(|j| tr(&atlas.a_q[j])),
        uinf: tr(&atlas.a_inf),
    }
}

/// Sampled residuals of `tr A_target - tr A0 - d log det B` per chart.
pub fn trace_residuals(atlas: &ConnectionAtlas, n_samples: usize, seed: u64) -> Vec<f64> {
    let section = extract_trace_section(atlas);
    let mut r = rng(seed ^ 0x7472_6163_65);
    let mut out = Vec::new();
    for j in 0..N_APPARENT {
        let diff = &(&section.uq[j] - &section.u0) - &atlas.to_q[j].dlog_det;
        let u = atlas.companion.config.points[j].u;
        let rho = atlas.q_radius(j);
        let worst = (0..n_samples.max(1))
            .map(|_| {
                let x = u + Complex::from_polar(r.gen_range(0.5 * rho..rho), r.gen_range(0.0..std::f64::consts::TAU));
                let y = atlas.y_near_q(j, x);
                diff.coefficient_at(x, y).norm() / section.u0.coefficient_at(x, y).norm().max(1.0)
            })
            .fold(0.0, f64::max);
        out.push(worst);
    }
    let diff = &(&section.uinf - &section.u0) - &atlas.to_inf.dlog_det;
    let curve = atlas.curve();
    let worst = (0..n_samples.max(1))
        .map(|_| {
            let x = Complex::from_polar(r.gen_range(5.0..10.0), r.gen_range(0.0..std::f64::consts::TAU));
            let y = curve.k(x).sqrt();
            diff.coefficient_at(x, y).norm() / section.u0.coefficient_at(x, y).norm().max(1.0)
        })
        .fold(0.0, f64::max);
    out.push(worst);
    out
}

/// Largest polar coefficient of any entry of `m` expanded at `at`, times `weight`.
fn polar_size(curve: &LegendreCurve, m: &FormMatrix, at: &CurvePoint, window: usize, weight: f64) -> Result<f64, CurveError> {
    let mut worst: f64 = 0.0;
    for row in m {
        for entry in row {
            if entry.is_zero() {
                continue;
            }
            let s = curve.expand_form(entry, at, window)?;
            for k in s.lowest_order()..0 {
                worst = worst.max(s.coeff(k).unwrap_or_default().norm() * weight);
            }
        }
    }
    Ok(worst)
}

/// Holomorphy residuals of `A_qj` at `q_j` (scaled like the apparency
/// residual) and of `A_inf` at infinity.
pub fn holomorphy_residuals(atlas: &ConnectionAtlas, window: usize) -> Result<Vec<f64>, CurveError> {
    let c = &atlas.companion;
    let scale = c.scale();
    let mut out = Vec::new();
    for j in 0..N_APPARENT {
        let v = c.config.points[j].v.norm();
        out.push(polar_size(&c.curve, &atlas.a_q[j], &c.config.point(j), window, v / scale)?);
    }
    out.push(polar_size(&c.curve, &atlas.a_inf, &CurvePoint::infinity(), window, 1.0 / scale)?);
    Ok(out)
}

/// Degree of the determinant bundle: minus the sum of the residues of
/// `d log det B` at the chart centres.
pub fn det_degree(atlas: &ConnectionAtlas) -> Result<f64, CurveError> {
    let c = &atlas.companion;
    let mut total = cr(0.0);
    for j in 0..N_APPARENT {
        total += c.curve.form_residue(&atlas.to_q[j].dlog_det, &c.config.point(j))?;
    }
    total += c.curve.form_residue(&atlas.to_inf.dlog_det, &CurvePoint::infinity())?;
    Ok(-total.re)
}

/// Builds the atlas and verifies gluing, trace identity, holomorphy at the
/// chart centres, the determinant degree and the eigenvalue data at the poles.
pub fn build_atlas(form: &CompanionForm) -> Result<(ConnectionAtlas, AtlasReport), AtlasError> {
    build_atlas_with(form, &AtlasOptions::default())
}

pub fn build_atlas_with(form: &CompanionForm, opts: &AtlasOptions) -> Result<(ConnectionAtlas, AtlasReport), AtlasError> {
    let atlas = ConnectionAtlas::assemble(form);
    let report = verify_atlas(&atlas, opts)?;
    for o in &report.gluing.overlaps {
        if !(o.max_residual < GLUING_TOLERANCE) {
            return Err(AtlasError::GluingFailure {
                overlap: o.overlap.clone(),
                residual: o.max_residual,
                x: o.worst_x.unwrap_or_default(),
            });
        }
    }
    for (k, h) in report.holomorphy.iter().enumerate() {
        if !(*h < HOLOMORPHY_TOLERANCE) {
            let chart = if k < N_APPARENT { format!("Uq{}", k + 1) } else { "Uinf".into() };
            return Err(AtlasError::NotHolomorphic { chart, residual: *h });
        }
    }
    let worst_trace = report.trace_residuals.iter().copied().fold(0.0, f64::max);
    if !(worst_trace < TRACE_TOLERANCE) {
        return Err(AtlasError::CheckFailed { check: "trace identity".into(), residual: worst_trace });
    }
    let degree_err = (report.det_degree - 1.0).abs();
    if !(degree_err < 1e-8) {
        return Err(AtlasError::CheckFailed { check: "determinant degree".into(), residual: degree_err });
    }
    let eigen_tol = if form.spectral.is_irregular() { 1e-8 } else { EIGEN_TOLERANCE };
    let eigen_err = report.pole_eigen.iter().map(|e| e.max_error()).fold(0.0, f64::max);
    if !(eigen_err < eigen_tol) {
        return Err(AtlasError::CheckFailed { check: "pole eigenvalues".into(), residual: eigen_err });
    }
    Ok((atlas, report))
}

/// Runs every atlas check and reports residuals without failing.
pub fn verify_atlas(atlas: &ConnectionAtlas, opts: &AtlasOptions) -> Result<AtlasReport, AtlasError> {
    Ok(AtlasReport {
        gluing: check_gluing(atlas, opts.gluing_samples, opts.seed),
        trace_residuals: trace_residuals(atlas, opts.gluing_samples, opts.seed),
        holomorphy: holomorphy_residuals(atlas, opts.window)?,
        det_degree: det_degree(atlas)?,
        pole_eigen: atlas.companion.pole_eigen_data(opts.window)?,
    })
}

/// `B B^-1` for a transition, for sanity checks.
pub fn transition_identity_residual(curve: &LegendreCurve, tr: &Transition, x: Complex, y: Complex) -> f64 {
    let p = function_product(curve, &tr.b, &tr.b_inv);
    let mut worst: f64 = 0.0;
    for (i, row) in p.iter().enumerate() {
        for (k, e) in row.iter().enumerate() {
            let target = if i == k { 1.0 } else { 0.0 };
            worst = worst.max((e.eval(x, y) - target).norm());
        }
    }
    worst
}
