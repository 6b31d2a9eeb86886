//! Canonical coordinates `(q_j, p_j)` of a glued connection and the inverse
//! reconstruction of `(zeta_j, A3, A4, B3)` from them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atlas::{build_atlas_with, extract_trace_section, AtlasError, AtlasOptions, ConnectionAtlas};
use crate::companion::{
    build_companion_with, ApparentConfig, ApparentPoint, CompanionError, CompanionForm, N_APPARENT,
};
use crate::curve::{CurveError, LegendreCurve, RatFn};
use crate::numeric::{cr, solve_linear, Complex, LinearSystem, NumericError};
use crate::spectral::{solve_residue_params, ResidueParams, SpectralData, SpectralError};

/// Agreement required between the closed formula and the residue path.
pub const DUAL_PATH_TOLERANCE: f64 = 1e-10;

/// Number of coordinates of the parameter chart, `2N`.
pub const CHART_DIMENSION: usize = 2 * N_APPARENT;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoordsError {
    #[error("p{index}: closed formula {closed} and residue path {residue} disagree by {gap:e}")]
    Disagreement { index: usize, closed: Complex, residue: Complex, gap: f64 },
    #[error("near-singular reconstruction system: |det| = {det_abs:e}, threshold {threshold:e}")]
    NearSingular { det_abs: f64, threshold: f64 },
    #[error("invalid coordinates: {0}")]
    InvalidCoords(String),
    #[error(transparent)]
    Companion(#[from] CompanionError),
    #[error(transparent)]
    Atlas(#[from] AtlasError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Numeric(NumericError),
}

impl From<NumericError> for CoordsError {
    fn from(e: NumericError) -> Self {
        match e {
            NumericError::NearSingular { det_abs, threshold } => CoordsError::NearSingular { det_abs, threshold },
            other => CoordsError::Numeric(other),
        }
    }
}

/// One canonical pair; `v` records the sheet of `q = (u, v)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonicalPoint {
    pub u: Complex,
    pub v: Complex,
    pub p: Complex,
}

/// Canonical coordinates, always with respect to the local coordinate
/// `z_j = x - u_j` at each `q_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CanonicalCoords {
    pub points: [CanonicalPoint; N_APPARENT],
}

impl CanonicalCoords {
    /// The same coordinates expressed in `z_j' = c z_j`: `p` is the value of
    /// a 1-form at `q_j`, so it scales by `1/c`.
    pub fn in_rescaled_coordinate(&self, c: Complex) -> [Complex; N_APPARENT] {
        self.points.map(|pt| pt.p / c)
    }
}

/// Direction in the `(u, zeta)` chart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    pub du: [Complex; N_APPARENT],
    pub dzeta: [Complex; N_APPARENT],
}

impl TangentVector {
    pub fn zero() -> Self {
        Self { du: [cr(0.0); N_APPARENT], dzeta: [cr(0.0); N_APPARENT] }
    }

    /// Components in chart order `(u1, u2, u3, zeta1, zeta2, zeta3)`.
    pub fn components(&self) -> [Complex; CHART_DIMENSION] {
        let mut out = [cr(0.0); CHART_DIMENSION];
        out[..N_APPARENT].copy_from_slice(&self.du);
        out[N_APPARENT..].copy_from_slice(&self.dzeta);
        out
    }

    pub fn from_components(c: [Complex; CHART_DIMENSION]) -> Self {
        Self { du: [c[0], c[1], c[2]], dzeta: [c[3], c[4], c[5]] }
    }

    /// Unit vector along chart coordinate `i`.
    pub fn basis(i: usize) -> Self {
        let mut c = [cr(0.0); CHART_DIMENSION];
        c[i] = cr(1.0);
        Self::from_components(c)
    }

    pub fn scale(&self, s: Complex) -> Self {
        Self::from_components(self.components().map(|z| z * s))
    }

    pub fn add(&self, other: &Self) -> Self {
        let (a, b) = (self.components(), other.components());
        Self::from_components(std::array::from_fn(|i| a[i] + b[i]))
    }
}

/// Terms of `p_j` that involve neither `zeta` nor `B3`.
fn p_base(curve: &LegendreCurve, params: &ResidueParams, t: Complex, pts: &[(Complex, Complex); N_APPARENT], j: usize) -> Complex {
    let (u, v) = pts[j];
    let mut p = -curve.k_prime(u) / (4.0 * v * v);
    for (k, (uk, vk)) in pts.iter().enumerate() {
        if k != j {
            p += 0.5 * (v + vk) / ((u - uk) * v);
        }
    }
    p + (params.b1 + params.b2 * v) / ((u - t) * v)
}

/// Closed formula for `p_j` from the companion parameters.
pub fn p_closed_form(form: &CompanionForm) -> [Complex; N_APPARENT] {
    let t = form.spectral.t();
    let pts = form.config.points.map(|p| (p.u, p.v));
    std::array::from_fn(|j| {
        let ApparentPoint { u, v, zeta } = form.config.points[j];
        p_base(&form.curve, &form.params, t, &pts, j) + zeta / ((u - t) * v) + form.b3 / v
    })
}

/// `p_j` as the residue at `q_j` of `(zeta_j dx/((x-t)y) + tr A_qj)/(x - u_j)`.
pub fn p_residue_path(atlas: &ConnectionAtlas) -> Result<[Complex; N_APPARENT], CurveError> {
    let c = &atlas.companion;
    let section = extract_trace_section(atlas);
    let mut out = [cr(0.0); N_APPARENT];
    for (j, p) in out.iter_mut().enumerate() {
        let pt = c.config.points[j];
        let shifted = &section.uq[j] + &c.omega21.scale(pt.zeta);
        let form = shifted.mul_x(&RatFn::pole(cr(1.0), pt.u, 1));
        *p = c.curve.form_residue(&form, &c.config.point(j))?;
    }
    Ok(out)
}

/// Canonical coordinates of a glued connection, computed by the closed
/// formula and cross-checked against the residue path.
pub fn canonical_coordinates(atlas: &ConnectionAtlas) -> Result<CanonicalCoords, CoordsError> {
    let closed = p_closed_form(&atlas.companion);
    let residue = p_residue_path(atlas)?;
    for j in 0..N_APPARENT {
        let gap = (closed[j] - residue[j]).norm();
        if !(gap <= DUAL_PATH_TOLERANCE * closed[j].norm().max(1.0)) {
            return Err(CoordsError::Disagreement { index: j + 1, closed: closed[j], residue: residue[j], gap });
        }
    }
    let pts = &atlas.companion.config.points;
    Ok(CanonicalCoords { points: std::array::from_fn(|j| CanonicalPoint { u: pts[j].u, v: pts[j].v, p: closed[j] }) })
}

/// `build_companion -> build_atlas -> canonical_coordinates`.
pub fn forward_map(
    curve: &LegendreCurve,
    spectral: &SpectralData,
    config: &ApparentConfig,
) -> Result<CanonicalCoords, CoordsError> {
    forward_map_with(curve, spectral, config, &AtlasOptions::default())
}

pub fn forward_map_with(
    curve: &LegendreCurve,
    spectral: &SpectralData,
    config: &ApparentConfig,
    opts: &AtlasOptions,
) -> Result<CanonicalCoords, CoordsError> {
    let form = build_companion_with(curve, spectral, config, opts.window)?;
    let (atlas, _) = build_atlas_with(&form, opts)?;
    canonical_coordinates(&atlas)
}

/// Result of [`inverse_map`]: the reconstructed configuration and the
/// accessory parameters `(A3, A4, B3)` solved along the way.
#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    pub config: ApparentConfig,
    pub accessory: [Complex; 3],
    /// Determinant of the reconstruction system.
    pub det: Complex,
}

/// Reconstructs `zeta_j` and `(A3, A4, B3)` from canonical coordinates.
///
/// Writing `a_j = (u_j - t) v_j (p_j - P_j)` with `P_j` the part of `p_j`
/// free of `zeta` and `B3`, one has `zeta_j = a_j - (u_j - t) B3`; substituted
/// into the apparency conditions the `B3^2` terms cancel, leaving the linear
/// system `A3 + A4 u_j + c_j B3 = -d_j`.
pub fn inverse_map(
    curve: &LegendreCurve,
    spectral: &SpectralData,
    coords: &CanonicalCoords,
    branch_hints: [Complex; N_APPARENT],
) -> Result<Reconstruction, CoordsError> {
    let params = solve_residue_params(curve, spectral)?;
    let t = spectral.t();
    let mut pts = [(cr(0.0), cr(0.0)); N_APPARENT];
    for (j, pt) in coords.points.iter().enumerate() {
        if !crate::numeric::is_finite(pt.p) {
            return Err(CoordsError::InvalidCoords(format!("p{} is not finite", j + 1)));
        }
        pts[j] = (pt.u, curve.lift_point(pt.u, branch_hints[j])?.y);
    }
    let a: [Complex; N_APPARENT] = std::array::from_fn(|j| {
        let (u, v) = pts[j];
        (u - t) * v * (coords.points[j].p - p_base(curve, &params, t, &pts, j))
    });
    let mut matrix = Vec::with_capacity(N_APPARENT);
    let mut rhs = Vec::with_capacity(N_APPARENT);
    for j in 0..N_APPARENT {
        let (u, v) = pts[j];
        let mut c = params.b1 + params.b2 * v + a[j];
        let mut d = (params.a1 + params.a2 * v - a[j] * (params.b1 + params.b2 * v) - a[j] * a[j]) / (u - t);
        for k in 0..N_APPARENT {
            if k != j {
                let (uk, vk) = pts[k];
                c += (v + vk) / 2.0;
                d += (a[k] - a[j]) / 2.0 * (v + vk) / (u - uk);
            }
        }
        matrix.push(vec![cr(1.0), u, c]);
        rhs.push(-d);
    }
    let sys = LinearSystem::new(matrix, rhs)?;
    let det = crate::numeric::determinant(&sys.matrix)?;
    let x = solve_linear(&sys)?;
    let b3 = x[2];
    let points = std::array::from_fn(|j| ApparentPoint { u: pts[j].0, v: pts[j].1, zeta: a[j] - (pts[j].0 - t) * b3 });
    let config = ApparentConfig::new(curve, spectral, points)?;
    Ok(Reconstruction { config, accessory: [x[0], x[1], b3], det })
}

/// `p` from the closed formula only, for finite-difference Jacobians.
pub fn p_only(curve: &LegendreCurve, spectral: &SpectralData, config: &ApparentConfig) -> Result<[Complex; N_APPARENT], CoordsError> {
    let form = build_companion_with(curve, spectral, config, crate::numeric::DEFAULT_WINDOW)?;
    Ok(p_closed_form(&form))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::build_atlas;
    use crate::companion::build_companion;
    use crate::sample;

    #[test]
    fn dual_paths_agree_and_roundtrip() {
        for inst in sample::logarithmic_batch(5, 5) {
            let form = build_companion(&inst.curve, &inst.spectral, &inst.config).unwrap();
            let (atlas, _) = build_atlas(&form).unwrap();
            let coords = canonical_coordinates(&atlas).unwrap();
            let hints = inst.config.points.map(|p| p.v);
            let back = inverse_map(&inst.curve, &inst.spectral, &coords, hints).unwrap();
            for (p, q) in back.config.points.iter().zip(&inst.config.points) {
                assert!((p.zeta - q.zeta).norm() < 1e-9 * q.zeta.norm().max(1.0));
            }
            let acc = [form.a3, form.a4, form.b3];
            for (x, y) in back.accessory.iter().zip(acc) {
                assert!((x - y).norm() < 1e-9 * y.norm().max(1.0));
            }
        }
    }

    #[test]
    fn tangent_vector_components_roundtrip() {
        let v = TangentVector::basis(4);
        assert_eq!(v.dzeta[1], cr(1.0));
        assert_eq!(TangentVector::from_components(v.components()), v);
        assert_eq!(CHART_DIMENSION, 6);
    }
}
