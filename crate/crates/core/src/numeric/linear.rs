use super::{is_finite, Complex, NumericError};

/// Relative determinant threshold: a system is rejected when
/// `|det| <= SINGULARITY_THRESHOLD * prod_i |row_i|`.
pub const SINGULARITY_THRESHOLD: f64 = 1e-10;

/// Square system `matrix * x = rhs` of size 2 or 3.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSystem {
    pub matrix: Vec<Vec<Complex>>,
    pub rhs: Vec<Complex>,
}

impl LinearSystem {
    pub fn new(matrix: Vec<Vec<Complex>>, rhs: Vec<Complex>) -> Result<Self, NumericError> {
        let n = rhs.len();
        if !(2..=3).contains(&n) || matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
            return Err(NumericError::UnsupportedSize(matrix.len()));
        }
        Ok(Self { matrix, rhs })
    }

    pub fn size(&self) -> usize {
        self.rhs.len()
    }

    /// Product of Euclidean row norms, the scale the determinant is judged against.
    pub fn row_norm_product(&self) -> f64 {
        self.matrix
            .iter()
            .map(|r| r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            .product()
    }

    /// Largest entry of `matrix * x - rhs`, relative to `|matrix| |x| + |rhs|`.
    pub fn relative_residual(&self, x: &[Complex]) -> f64 {
        let mut worst: f64 = 0.0;
        for (row, b) in self.matrix.iter().zip(&self.rhs) {
            let ax: Complex = row.iter().zip(x).map(|(a, xi)| a * xi).sum();
            let scale: f64 = row.iter().zip(x).map(|(a, xi)| (a * xi).norm()).sum::<f64>() + b.norm();
            worst = worst.max((ax - b).norm() / scale.max(f64::MIN_POSITIVE));
        }
        worst
    }
}

/// Determinant of a 2x2 or 3x3 matrix by cofactor expansion.
pub fn determinant(m: &[Vec<Complex>]) -> Result<Complex, NumericError> {
    match m.len() {
        2 => Ok(m[0][0] * m[1][1] - m[0][1] * m[1][0]),
        3 => Ok(m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])),
        n => Err(NumericError::UnsupportedSize(n)),
    }
}

/// Solves the system by Cramer's rule.
///
/// Fails with [`NumericError::NearSingular`] when `|det|` does not exceed
/// the relative threshold; a determinant sitting exactly on it is rejected.
pub fn solve_linear(sys: &LinearSystem) -> Result<Vec<Complex>, NumericError> {
    if sys.matrix.iter().flatten().chain(&sys.rhs).any(|z| !is_finite(*z)) {
        return Err(NumericError::NonFinite);
    }
    let det = determinant(&sys.matrix)?;
    let threshold = SINGULARITY_THRESHOLD * sys.row_norm_product();
    if !(det.norm() > threshold) {
        return Err(NumericError::NearSingular { det_abs: det.norm(), threshold });
    }
    let n = sys.size();
    let mut x = Vec::with_capacity(n);
    for col in 0..n {
        let replaced: Vec<Vec<Complex>> = sys
            .matrix
            .iter()
            .zip(&sys.rhs)
            .map(|(row, b)| {
                let mut r = row.clone();
                r[col] = *b;
                r
            })
            .collect();
        x.push(determinant(&replaced)? / det);
    }
    // Cramer is not backward stable; the bound grows with the condition estimate.
    debug_assert!(
        sys.relative_residual(&x) < 1e-12 * (1.0 + sys.row_norm_product() / det.norm()),
        "Cramer residual {:e}",
        sys.relative_residual(&x)
    );
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{c, cr};

    #[test]
    fn identity_and_diagonal() {
        let id = LinearSystem::new(
            vec![
                vec![cr(1.0), cr(0.0), cr(0.0)],
                vec![cr(0.0), cr(1.0), cr(0.0)],
                vec![cr(0.0), cr(0.0), cr(1.0)],
            ],
            vec![cr(1.0), cr(2.0), cr(3.0)],
        )
        .unwrap();
        assert_eq!(solve_linear(&id).unwrap(), vec![cr(1.0), cr(2.0), cr(3.0)]);
        let diag = LinearSystem::new(vec![vec![cr(2.0), cr(0.0)], vec![cr(0.0), cr(4.0)]], vec![cr(2.0), cr(4.0)])
            .unwrap();
        assert_eq!(solve_linear(&diag).unwrap(), vec![cr(1.0), cr(1.0)]);
    }

    #[test]
    fn singular_rejected() {
        let sys = LinearSystem::new(
            vec![
                vec![cr(1.0), cr(1.0), cr(5.0)],
                vec![cr(1.0), cr(2.0), cr(5.0)],
                vec![cr(1.0), cr(3.0), cr(5.0)],
            ],
            vec![cr(1.0), cr(0.0), cr(0.0)],
        )
        .unwrap();
        assert!(matches!(solve_linear(&sys), Err(NumericError::NearSingular { .. })));
    }

    #[test]
    fn complex_system() {
        let sys = LinearSystem::new(
            vec![vec![c(1.0, 1.0), c(0.0, 2.0)], vec![c(3.0, 0.0), c(-1.0, 0.5)]],
            vec![c(1.0, 0.0), c(0.0, 1.0)],
        )
        .unwrap();
        let x = solve_linear(&sys).unwrap();
        assert!(sys.relative_residual(&x) < 1e-15);
    }

    #[test]
    fn bad_sizes() {
        assert!(LinearSystem::new(vec![vec![cr(1.0)]], vec![cr(1.0)]).is_err());
        assert!(determinant(&[vec![cr(1.0)]]).is_err());
    }
}
