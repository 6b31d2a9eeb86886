//! Scalar arithmetic, truncated Laurent series and the small dense solver
//! every other module leans on.

mod linear;
mod series;

pub use linear::{determinant, solve_linear, LinearSystem, SINGULARITY_THRESHOLD};
pub use series::{LaurentSeries, DEFAULT_WINDOW, TRIM_RELATIVE};

/// Double-precision complex scalar.
pub type Complex = num_complex::Complex64;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericError {
    #[error("empty truncation window")]
    EmptyWindow,
    #[error("leading coefficient is zero")]
    ZeroLeading,
    #[error("square root of a series with odd lowest order {0}")]
    OddOrder(i32),
    #[error("branch value {branch} does not square to the leading coefficient {leading}")]
    BranchMismatch { branch: Complex, leading: Complex },
    #[error("near-singular system: |det| = {det_abs:e} below threshold {threshold:e}")]
    NearSingular { det_abs: f64, threshold: f64 },
    #[error("non-finite value encountered")]
    NonFinite,
    #[error("unsupported system size {0}")]
    UnsupportedSize(usize),
}

/// Shorthand for `Complex::new(re, im)`.
#[inline]
pub fn c(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

/// Real scalar lifted to `Complex`.
#[inline]
pub fn cr(re: f64) -> Complex {
    Complex::new(re, 0.0)
}

pub fn is_finite(z: Complex) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// Distance from `z` to the nearest integer (on the real axis).
pub fn integer_distance(z: Complex) -> f64 {
    let nearest = z.re.round();
    c(z.re - nearest, z.im).norm()
}
