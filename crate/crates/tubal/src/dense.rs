//! Dense matrix SVD shared by the tensor factorizations.

use faer::MatRef;
use nalgebra::DMatrix;

use crate::error::{Error, Result};

fn as_faer(m: &DMatrix<f64>) -> MatRef<'_, f64> {
    MatRef::from_column_major_slice(m.as_slice(), m.nrows(), m.ncols())
}

fn to_nalgebra(m: MatRef<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Thin SVD `m = U diag(σ) Vᵀ` with `σ` in nonincreasing order.
pub(crate) fn thin_svd(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    let svd = as_faer(m)
        .thin_svd()
        .map_err(|e| Error::NoConvergence(format!("{e:?}")))?;
    let sigma = svd.S().column_vector().iter().copied().collect();
    Ok((to_nalgebra(svd.U()), sigma, to_nalgebra(svd.V())))
}

/// Singular values in nonincreasing order.
pub(crate) fn singular_values(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    as_faer(m)
        .singular_values()
        .map_err(|e| Error::NoConvergence(format!("{e:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_deficient_matrix_is_reconstructed() {
        // Centered columns: one exact zero singular value.
        let mut m = DMatrix::from_fn(12, 5, |i, j| ((i * 7 + j * 3) % 11) as f64 - 0.5 * j as f64);
        let mean = m.column_mean();
        for mut c in m.column_iter_mut() {
            c -= &mean;
        }
        let (u, s, v) = thin_svd(&m).unwrap();
        let rec = &u * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(s.clone())) * v.transpose();
        assert!((rec - &m).norm() < 1e-12 * m.norm());
        assert!(s.windows(2).all(|w| w[0] >= w[1]));
        assert!(s[4] < 1e-12 * s[0]);
        let sv = singular_values(&m).unwrap();
        for (a, b) in sv.iter().zip(&s) {
            assert!((a - b).abs() < 1e-12 * s[0]);
        }
    }
}
