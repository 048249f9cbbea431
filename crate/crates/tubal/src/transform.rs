//! The orthonormal DCT along the third mode, plus the structured matrices
//! it diagonalizes.
//!
//! The canonical transform of the library is the orthonormal type-II DCT
//! `C_n` with entries `sqrt((2 - δ_{i1}) / n) cos((i - 1)(2j - 1)π / 2n)`.
//! The Toeplitz-plus-Hankel matrices `th(v)` are diagonalized by it, with
//! eigenvalues `M v` where `M = W⁻¹ C_n (I + Z)`. That relation is what ties
//! the block matrix [`crate::algebra::mat`] to the transform-domain product.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::{DMatrix, DMatrixView, DVector};

use crate::error::{Error, Result};
use crate::tensor::{Tensor3, Tube};

/// Orthonormal DCT-II matrix of order `n`.
pub fn build_dct_matrix(n: usize) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::InvalidDimension(
            "DCT length must be at least 1".into(),
        ));
    }
    let nf = n as f64;
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let scale = if i == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
        scale * ((i as f64) * (2.0 * j as f64 + 1.0) * PI / (2.0 * nf)).cos()
    }))
}

/// A DCT of fixed length, stored as its explicit matrix.
///
/// Immutable once built; shared between threads through [`plan`].
#[derive(Debug, Clone)]
pub struct DctPlan {
    n: usize,
    matrix: DMatrix<f64>,
}

impl DctPlan {
    pub fn new(n: usize) -> Result<Self> {
        Ok(DctPlan {
            n,
            matrix: build_dct_matrix(n)?,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn forward(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n, "vector length must match the plan");
        (&self.matrix * DVector::from_column_slice(v))
            .as_slice()
            .to_vec()
    }

    pub fn inverse(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n, "vector length must match the plan");
        self.matrix
            .tr_mul(&DVector::from_column_slice(v))
            .as_slice()
            .to_vec()
    }
}

/// Shared plan for length `n` (`n ≥ 1`).
pub fn plan(n: usize) -> Arc<DctPlan> {
    static CACHE: OnceLock<RwLock<HashMap<usize, Arc<DctPlan>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(p) = cache.read().expect("plan cache poisoned").get(&n) {
        return Arc::clone(p);
    }
    let p = Arc::new(DctPlan::new(n).expect("transform length must be positive"));
    cache
        .write()
        .expect("plan cache poisoned")
        .entry(n)
        .or_insert(p)
        .clone()
}

/// `T ×₃ M`: replaces every tube `t` by `M t`.
pub fn mode3_product(t: &Tensor3, m: &DMatrix<f64>) -> Result<Tensor3> {
    let (n1, n2, n3) = t.shape();
    if m.ncols() != n3 {
        return Err(Error::InvalidDimension(format!(
            "mode-3 product: {}x{} matrix against tubes of length {n3}",
            m.nrows(),
            m.ncols()
        )));
    }
    // Slice-major storage is exactly the column-major (n1 n2) x n3 unfolding
    // whose rows are the tubes.
    let unfolded = DMatrixView::from_slice(t.data(), n1 * n2, n3);
    let out = unfolded * m.transpose();
    Tensor3::from_vec(n1, n2, m.nrows(), out.data.into())
}

fn mode3_with_plan(t: &Tensor3, inverse: bool) -> Tensor3 {
    let (n1, n2, n3) = t.shape();
    if n3 == 1 {
        return t.clone();
    }
    let p = plan(n3);
    let unfolded = DMatrixView::from_slice(t.data(), n1 * n2, n3);
    // forward: rows become C t, i.e. X Cᵀ; inverse: X C
    let out = if inverse {
        unfolded * p.matrix()
    } else {
        unfolded * p.matrix().transpose()
    };
    let data: Vec<f64> = out.data.into();
    Tensor3::from_vec(n1, n2, n3, data).expect("transform preserves shape")
}

/// Forward transform of every tube: `T(i,j,:) ← C_{n3} T(i,j,:)`.
pub fn dct_mode3(t: &Tensor3) -> Tensor3 {
    mode3_with_plan(t, false)
}

/// Inverse transform of every tube: `T(i,j,:) ← C_{n3}ᵀ T(i,j,:)`.
pub fn idct_mode3(t: &Tensor3) -> Tensor3 {
    mode3_with_plan(t, true)
}

pub fn dct_tube(t: &Tube) -> Tube {
    if t.len() == 1 {
        return t.clone();
    }
    Tube(plan(t.len()).forward(t.entries()))
}

pub fn idct_tube(t: &Tube) -> Tube {
    if t.len() == 1 {
        return t.clone();
    }
    Tube(plan(t.len()).inverse(t.entries()))
}

/// The symmetric Toeplitz matrix with first column `v` plus the Hankel
/// matrix with first row `(v₂, …, v_n, 0)` and last row `(0, v_n, …, v₂)`.
pub fn toeplitz_plus_hankel(v: &[f64]) -> Result<DMatrix<f64>> {
    let n = v.len();
    if n == 0 {
        return Err(Error::InvalidDimension(
            "toeplitz_plus_hankel needs a non-empty vector".into(),
        ));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let toeplitz = v[i.abs_diff(j)];
        // 1-based anti-diagonal index s = i + j; the Hankel part reflects at s = n + 1.
        let s = i + j + 2;
        let hankel = match s.cmp(&(n + 1)) {
            std::cmp::Ordering::Less => v[s - 1],
            std::cmp::Ordering::Equal => 0.0,
            std::cmp::Ordering::Greater => v[2 * n + 1 - s],
        };
        toeplitz + hankel
    }))
}

/// `M = W⁻¹ C_n (I + Z)` with `W = diag(C_n(:, 1))` and `Z` the
/// superdiagonal shift. `M v` are the eigenvalues of `th(v)`.
pub fn build_m_matrix(n: usize) -> Result<DMatrix<f64>> {
    let c = build_dct_matrix(n)?;
    let mut shifted = DMatrix::<f64>::identity(n, n);
    for i in 0..n.saturating_sub(1) {
        shifted[(i, i + 1)] = 1.0;
    }
    let mut m = &c * shifted;
    for i in 0..n {
        let w = c[(i, 0)];
        if w.abs() < f64::EPSILON {
            return Err(Error::InvalidInput(format!(
                "first DCT column vanishes at row {i}"
            )));
        }
        m.row_mut(i).scale_mut(1.0 / w);
    }
    Ok(m)
}

/// `G = M⁻¹ C_n`: the map from a tube `t` to the generator `g` with
/// `eig(th(g)) = C_n t`, i.e. `C_n th(G t) C_nᵀ = Diag(C_n t)`.
pub fn generator_matrix(n: usize) -> Result<DMatrix<f64>> {
    let m = build_m_matrix(n)?;
    let c = build_dct_matrix(n)?;
    m.lu().solve(&c).ok_or_else(|| {
        Error::InvalidInput(format!("structured transform of order {n} is singular"))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn max_offdiag(m: &DMatrix<f64>) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if i != j {
                    worst = worst.max(m[(i, j)].abs());
                }
            }
        }
        worst
    }

    #[test]
    fn zero_length_is_rejected() {
        assert!(matches!(build_dct_matrix(0), Err(Error::InvalidDimension(_))));
        assert!(toeplitz_plus_hankel(&[]).is_err());
    }

    #[test]
    fn dct_of_order_one_and_two() {
        assert_eq!(build_dct_matrix(1).unwrap(), DMatrix::from_element(1, 1, 1.0));
        let c2 = build_dct_matrix(2).unwrap();
        let h = 1.0 / 2f64.sqrt();
        let expected = DMatrix::from_row_slice(2, 2, &[h, h, h, -h]);
        assert!((c2 - expected).amax() < 1e-15);
    }

    #[test]
    fn dct_matrix_is_orthogonal_up_to_64() {
        for n in 1..=64 {
            let c = build_dct_matrix(n).unwrap();
            let id = DMatrix::<f64>::identity(n, n);
            assert!((&c * c.transpose() - &id).amax() <= 1e-12, "n = {n}");
            assert!((c.transpose() * &c - &id).amax() <= 1e-12, "n = {n}");
        }
    }

    #[test]
    fn plan_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [1, 2, 3, 7, 16] {
            let p = plan(n);
            let v: Vec<f64> = Tensor3::random_normal(n, 1, 1, &mut rng).into_vec();
            let back = p.inverse(&p.forward(&v));
            let err: f64 = v.iter().zip(&back).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let nv: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            assert!(err <= 1e-12 * nv);
        }
    }

    #[test]
    fn constant_tubes_map_to_first_coefficient() {
        let t = Tensor3::from_fn(2, 2, 5, |i, j, _| (1 + i + 2 * j) as f64);
        let f = dct_mode3(&t);
        for i in 0..2 {
            for j in 0..2 {
                let c = (1 + i + 2 * j) as f64;
                let tube = f.tube(i, j);
                assert!((tube.0[0] - c * 5f64.sqrt()).abs() < 1e-12);
                assert!(tube.0[1..].iter().all(|x| x.abs() < 1e-12));
            }
        }
    }

    #[test]
    fn single_slice_transform_is_identity() {
        let t = Tensor3::from_fn(3, 2, 1, |i, j, _| (i * 2 + j) as f64);
        assert_eq!(dct_mode3(&t), t);
        assert_eq!(idct_mode3(&t), t);
    }

    #[test]
    fn mode3_matches_tube_by_tube_matrix_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t = Tensor3::random_normal(3, 2, 4, &mut rng);
        let c = build_dct_matrix(4).unwrap();
        let f = dct_mode3(&t);
        for i in 0..3 {
            for j in 0..2 {
                let expect = &c * DVector::from_vec(t.tube(i, j).0);
                for k in 0..4 {
                    assert!((f.get(i, j, k) - expect[k]).abs() < 1e-13);
                }
            }
        }
        let back = idct_mode3(&f);
        assert!((&back - &t).fro_norm() <= 1e-12 * t.fro_norm());
        assert!((f.fro_norm() - t.fro_norm()).abs() <= 1e-12 * t.fro_norm());
    }

    #[test]
    fn th_of_first_unit_vector_is_identity() {
        for n in 1..6 {
            let mut v = vec![0.0; n];
            v[0] = 1.0;
            assert_eq!(toeplitz_plus_hankel(&v).unwrap(), DMatrix::identity(n, n));
        }
    }

    #[test]
    fn th_of_second_unit_vector() {
        let th = toeplitz_plus_hankel(&[0.0, 1.0, 0.0]).unwrap();
        // Toeplitz [[0,1,0],[1,0,1],[0,1,0]] plus the reflected Hankel corners.
        let expected = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
        assert_eq!(th, expected);
        let c = build_dct_matrix(3).unwrap();
        assert!(max_offdiag(&(&c * th * c.transpose())) <= 1e-12);
    }

    #[test]
    fn m_matrix_order_one_and_invertibility() {
        assert_eq!(build_m_matrix(1).unwrap(), DMatrix::from_element(1, 1, 1.0));
        let m = build_m_matrix(4).unwrap();
        let sv = m.singular_values();
        let cond = sv.max() / sv.min();
        assert!(cond.is_finite() && cond < 1e3, "cond = {cond}");
    }

    #[test]
    fn m_matrix_gives_th_eigenvalues_and_is_not_a_rescaled_dct() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 4;
        let v = Tensor3::random_normal(n, 1, 1, &mut rng).into_vec();
        let c = build_dct_matrix(n).unwrap();
        let m = build_m_matrix(n).unwrap();
        let d = &c * toeplitz_plus_hankel(&v).unwrap() * c.transpose();
        let mv = &m * DVector::from_column_slice(&v);
        for i in 0..n {
            assert!((d[(i, i)] - mv[i]).abs() < 1e-12);
        }
        // M Cᵀ would be diagonal if M were a diagonal rescaling of C.
        assert!(max_offdiag(&(&m * c.transpose())) > 0.1);
    }

    #[test]
    fn generator_map_makes_th_diagonal_in_dct_coordinates() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in [1, 2, 3, 6, 8] {
            let t = Tensor3::random_normal(n, 1, 1, &mut rng).into_vec();
            let g = generator_matrix(n).unwrap() * DVector::from_column_slice(&t);
            let c = build_dct_matrix(n).unwrap();
            let d = &c * toeplitz_plus_hankel(g.as_slice()).unwrap() * c.transpose();
            let ct = &c * DVector::from_column_slice(&t);
            for i in 0..n {
                for j in 0..n {
                    let expect = if i == j { ct[i] } else { 0.0 };
                    assert!((d[(i, j)] - expect).abs() < 1e-12, "n = {n}");
                }
            }
        }
    }
}
