//! JSON file formats: problem input, coordinate files and command reports.
//! Complex numbers are `[re, im]` pairs throughout.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::companion::{ApparentConfig, ApparentPoint, CompanionError, N_APPARENT};
use crate::coords::{CanonicalCoords, CanonicalPoint};
use crate::curve::{CurveError, LegendreCurve};
use crate::numeric::Complex;
use crate::spectral::{SpectralData, SpectralError, TRoot};

/// Version of every file format in this module.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum InputError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema_version {found}, expected {expected}")]
    SchemaVersion { found: u32, expected: u32 },
    #[error("expected {expected} apparent points, found {found}")]
    PointCount { expected: usize, found: usize },
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Companion(#[from] CompanionError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectralSpec {
    Logarithmic { t: Complex, s_branch: Complex, theta1: [Complex; 2], theta2: [Complex; 2] },
    Irregular { t_root: TRoot, theta_m2: [Complex; 2], theta_m1_plus: Complex },
}

impl SpectralSpec {
    pub fn build(&self, curve: &LegendreCurve) -> Result<SpectralData, SpectralError> {
        match self {
            SpectralSpec::Logarithmic { t, s_branch, theta1, theta2 } => {
                SpectralData::logarithmic(curve, *t, *s_branch, *theta1, *theta2)
            }
            SpectralSpec::Irregular { t_root, theta_m2, theta_m1_plus } => {
                SpectralData::irregular(curve, *t_root, *theta_m2, *theta_m1_plus)
            }
        }
    }

    pub fn from_data(data: &SpectralData) -> Self {
        match data {
            SpectralData::Logarithmic(d) => {
                SpectralSpec::Logarithmic { t: d.t, s_branch: d.s, theta1: d.theta1, theta2: d.theta2 }
            }
            SpectralData::Irregular(d) => {
                SpectralSpec::Irregular { t_root: d.t_root, theta_m2: d.theta_m2, theta_m1_plus: d.theta_m1[0] }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApparentSpec {
    pub u: Complex,
    pub v_branch: Complex,
    pub zeta: Complex,
}

/// Pass tolerances; every field may be overridden per file.
///
/// | field        | default | checked by                                   |
/// |--------------|---------|----------------------------------------------|
/// | `apparency`  | 1e-10   | `solve`: apparency and residue conditions    |
/// | `gluing`     | 1e-9    | `verify`: overlap gluing residuals           |
/// | `holomorphy` | 1e-10   | `verify`: holomorphy at chart centres        |
/// | `eigen`      | 1e-9    | `solve`/`verify`: pole eigenvalue data       |
/// | `dual_path`  | 1e-10   | `coords`: closed formula vs residue path     |
/// | `roundtrip`  | 1e-8    | `invert`: forward map of the reconstruction  |
/// | `pairing`    | 1e-6    | `symp-check`: extrapolated pairing residual  |
/// | `min_order`  | 1.8     | `symp-check`: measured convergence order     |
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub apparency: f64,
    pub gluing: f64,
    pub holomorphy: f64,
    pub eigen: f64,
    pub dual_path: f64,
    pub roundtrip: f64,
    pub pairing: f64,
    pub min_order: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            apparency: 1e-10,
            gluing: 1e-9,
            holomorphy: 1e-10,
            eigen: 1e-9,
            dual_path: 1e-10,
            roundtrip: 1e-8,
            pairing: 1e-6,
            min_order: 1.8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub schema_version: u32,
    pub lambda: Complex,
    pub spectral: SpectralSpec,
    pub apparent: Vec<ApparentSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// A parsed and validated problem.
#[derive(Clone, Debug)]
pub struct Problem {
    pub curve: LegendreCurve,
    pub spectral: SpectralData,
    pub config: ApparentConfig,
    pub tolerances: Tolerances,
}

fn check_version(found: u32) -> Result<(), InputError> {
    if found != SCHEMA_VERSION {
        return Err(InputError::SchemaVersion { found, expected: SCHEMA_VERSION });
    }
    Ok(())
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self, InputError> {
        let file: Self = serde_json::from_str(text)?;
        check_version(file.schema_version)?;
        Ok(file)
    }

    pub fn problem(&self) -> Result<Problem, InputError> {
        check_version(self.schema_version)?;
        let curve = LegendreCurve::new(self.lambda)?;
        let spectral = self.spectral.build(&curve)?;
        if self.apparent.len() != N_APPARENT {
            return Err(InputError::PointCount { expected: N_APPARENT, found: self.apparent.len() });
        }
        let points: [ApparentPoint; N_APPARENT] =
            std::array::from_fn(|j| ApparentPoint { u: self.apparent[j].u, v: self.apparent[j].v_branch, zeta: self.apparent[j].zeta });
        let config = ApparentConfig::new(&curve, &spectral, points)?;
        Ok(Problem { curve, spectral, config, tolerances: self.tolerances })
    }

    pub fn from_problem(p: &Problem) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            lambda: p.curve.lambda(),
            spectral: SpectralSpec::from_data(&p.spectral),
            apparent: p.config.points.iter().map(|q| ApparentSpec { u: q.u, v_branch: q.v, zeta: q.zeta }).collect(),
            tolerances: p.tolerances,
        }
    }
}

/// Canonical coordinates together with the background data they refer to;
/// `v` of each point is the branch hint used when inverting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoordsFile {
    pub schema_version: u32,
    pub lambda: Complex,
    pub spectral: SpectralSpec,
    pub points: Vec<CanonicalPoint>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl CoordsFile {
    pub fn from_json(text: &str) -> Result<Self, InputError> {
        let file: Self = serde_json::from_str(text)?;
        check_version(file.schema_version)?;
        Ok(file)
    }

    pub fn new(curve: &LegendreCurve, spectral: &SpectralData, coords: &CanonicalCoords, tolerances: Tolerances) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            lambda: curve.lambda(),
            spectral: SpectralSpec::from_data(spectral),
            points: coords.points.to_vec(),
            tolerances,
        }
    }

    pub fn parts(&self) -> Result<(LegendreCurve, SpectralData, CanonicalCoords), InputError> {
        check_version(self.schema_version)?;
        let curve = LegendreCurve::new(self.lambda)?;
        let spectral = self.spectral.build(&curve)?;
        if self.points.len() != N_APPARENT {
            return Err(InputError::PointCount { expected: N_APPARENT, found: self.points.len() });
        }
        let coords = CanonicalCoords { points: std::array::from_fn(|j| self.points[j]) };
        Ok((curve, spectral, coords))
    }
}

/// Envelope shared by every command report.
#[derive(Clone, Debug, Serialize)]
pub struct Report<I: Serialize, R: Serialize> {
    pub schema_version: u32,
    pub command: &'static str,
    pub input: I,
    pub seed: Option<u64>,
    pub tolerances: Tolerances,
    pub results: R,
    pub pass: bool,
}
