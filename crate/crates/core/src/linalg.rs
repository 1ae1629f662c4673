//! Small dense linear-algebra helpers for correlation matrices.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Smallest eigenvalue accepted for a correlation matrix to count as PSD.
pub const PSD_TOLERANCE: f64 = -1e-10;

/// Symmetry, diagonal and spectrum checks for a candidate correlation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationDiagnostics {
    pub dimension: usize,
    pub symmetric: bool,
    pub unit_diagonal: bool,
    /// Eigenvalues in ascending order.
    pub eigenvalues: Vec<f64>,
    pub min_eigenvalue: f64,
    pub accepted: bool,
}

pub fn validate_correlation_matrix(m: &DMatrix<f64>) -> Result<CorrelationDiagnostics> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape(format!(
            "correlation matrix is {}x{}, expected square",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    let mut symmetric = true;
    let mut unit_diagonal = true;
    for i in 0..n {
        if (m[(i, i)] - 1.0).abs() > 1e-12 {
            unit_diagonal = false;
        }
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 {
                symmetric = false;
            }
        }
    }
    let eigenvalues = if n == 0 {
        Vec::new()
    } else {
        symmetric_eigenvalues(&symmetrize(m))
    };
    let min_eigenvalue = eigenvalues.first().copied().unwrap_or(f64::INFINITY);
    let accepted = symmetric && unit_diagonal && min_eigenvalue >= PSD_TOLERANCE;
    Ok(CorrelationDiagnostics {
        dimension: n,
        symmetric,
        unit_diagonal,
        eigenvalues,
        min_eigenvalue,
        accepted,
    })
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Eigenpairs sorted by descending eigenvalue.
pub(crate) fn sorted_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    (values, vectors)
}

/// A factor `B` with `B Bᵀ = m` for a symmetric PSD matrix.
///
/// Uses Cholesky when the matrix is positive definite and falls back to the
/// clipped spectral square root otherwise.
pub fn psd_factor(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(chol) = nalgebra::Cholesky::new(m.clone()) {
        return Ok(chol.l());
    }
    let (values, vectors) = sorted_eigen(&symmetrize(m));
    let scale = values.first().copied().unwrap_or(0.0).abs().max(1.0);
    if values.iter().any(|&v| v < PSD_TOLERANCE * scale) {
        return Err(Error::Domain(format!(
            "matrix is not positive semi-definite (min eigenvalue {:e})",
            values.last().copied().unwrap_or(0.0)
        )));
    }
    let mut b = vectors;
    for (k, v) in values.iter().enumerate() {
        let s = v.max(0.0).sqrt();
        b.column_mut(k).scale_mut(s);
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_accepted() {
        let d = validate_correlation_matrix(&DMatrix::identity(4, 4)).unwrap();
        assert!(d.accepted);
        assert!((d.min_eigenvalue - 1.0).abs() < 1e-14);
    }

    #[test]
    fn two_by_two_spectrum() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]);
        let d = validate_correlation_matrix(&m).unwrap();
        assert!(d.accepted);
        assert!((d.eigenvalues[0] - 0.7).abs() < 1e-14);
        assert!((d.eigenvalues[1] - 1.3).abs() < 1e-14);
    }

    #[test]
    fn indefinite_three_by_three_is_rejected() {
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 0.9, -0.9, 0.9, 1.0, 0.9, -0.9, 0.9, 1.0],
        );
        let d = validate_correlation_matrix(&m).unwrap();
        assert!(d.symmetric && d.unit_diagonal);
        // characteristic polynomial root: 1 - 0.9 - 0.9 < 0
        assert!(d.min_eigenvalue < -0.5);
        assert!(!d.accepted);
    }

    #[test]
    fn non_square_is_shape_error() {
        let m = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(validate_correlation_matrix(&m), Err(Error::Shape(_))));
    }

    #[test]
    fn psd_factor_handles_singular_matrix() {
        let m = DMatrix::from_element(3, 3, 1.0);
        let b = psd_factor(&m).unwrap();
        let r = &b * b.transpose();
        assert!((r - m).abs().max() < 1e-12);
    }
}
