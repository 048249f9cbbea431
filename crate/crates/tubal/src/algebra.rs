//! The c-product algebra on third-order tensors.
//!
//! Every product here is computed slice-wise in the transform domain: move
//! the operands through [`dct_mode3`], combine frontal slices, and come back
//! with [`idct_mode3`]. The block-matrix route ([`mat`] / [`ten`]) is kept
//! as an independent definition of the same product.

use nalgebra::DMatrix;

use crate::dense;
use crate::error::{Error, Result};
use crate::tensor::{Tensor3, Tube};
use crate::transform::{
    build_dct_matrix, build_m_matrix, dct_mode3, dct_tube, generator_matrix, idct_mode3,
    idct_tube, mode3_product,
};

/// Relative tolerance used by the numerical rank notions.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Block Toeplitz-plus-Hankel matrix built from the given blocks:
/// block `(p, q)` is `A_{|p-q|+1}` plus the Hankel block that reflects at
/// anti-diagonal `n + 1` (first block row `A₂ … A_n 0`, last `0 A_n … A₂`).
pub fn block_toeplitz_hankel(blocks: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let n = blocks.len();
    let first = blocks
        .first()
        .ok_or_else(|| Error::InvalidDimension("no blocks supplied".into()))?;
    let (r, c) = first.shape();
    if blocks.iter().any(|b| b.shape() != (r, c)) {
        return Err(Error::InvalidDimension(
            "all blocks must share one shape".into(),
        ));
    }
    let mut out = DMatrix::zeros(r * n, c * n);
    for p in 0..n {
        for q in 0..n {
            let mut block = blocks[p.abs_diff(q)].clone();
            let s = p + q + 2;
            if s <= n {
                block += &blocks[s - 1];
            } else if s > n + 1 {
                block += &blocks[2 * n + 1 - s];
            }
            out.view_mut((p * r, q * c), (r, c)).copy_from(&block);
        }
    }
    Ok(out)
}

/// The `n1·n3 × n2·n3` block Toeplitz-plus-Hankel matrix of `a`.
///
/// Its blocks are the slices of `a ×₃ (M⁻¹C)`, the unique structured
/// embedding that the orthonormal DCT block-diagonalizes into the transform
/// slices of `a`: `(C ⊗ I) mat(a) (Cᵀ ⊗ I) = blockdiag(ã⁽¹⁾, …, ã⁽ⁿ³⁾)`.
/// For `n3 = 1` this is the single slice itself.
pub fn mat(a: &Tensor3) -> DMatrix<f64> {
    let g = generator_matrix(a.n3()).expect("n3 >= 1");
    let gen = mode3_product(a, &g).expect("square generator");
    let blocks: Vec<DMatrix<f64>> = gen.slices().map(|s| s.clone_owned()).collect();
    block_toeplitz_hankel(&blocks).expect("blocks share a shape")
}

/// Inverse of [`mat`]. Reads the defining blocks from the first block
/// column and does not check the rest of the structure.
pub fn ten(m: &DMatrix<f64>, dims: (usize, usize, usize)) -> Result<Tensor3> {
    let (n1, n2, n3) = dims;
    if n3 == 0 || m.shape() != (n1 * n3, n2 * n3) {
        return Err(Error::InvalidDimension(format!(
            "a {}x{} matrix is not mat() of a {n1}x{n2}x{n3} tensor",
            m.nrows(),
            m.ncols()
        )));
    }
    // First block column: G_p + G_{p+1} for p < n3 - 1, and G_{n3} last.
    let mut gens = vec![DMatrix::<f64>::zeros(n1, n2); n3];
    gens[n3 - 1] = m.view(((n3 - 1) * n1, 0), (n1, n2)).clone_owned();
    for p in (0..n3 - 1).rev() {
        gens[p] = m.view((p * n1, 0), (n1, n2)) - &gens[p + 1];
    }
    let gen = Tensor3::from_slices(&gens)?;
    let inv = build_dct_matrix(n3)?.transpose() * build_m_matrix(n3)?;
    mode3_product(&gen, &inv)
}

fn check_conformable(a: &Tensor3, b: &Tensor3) -> Result<()> {
    if a.n2() != b.n1() || a.n3() != b.n3() {
        return Err(Error::InvalidDimension(format!(
            "c-product of {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

/// Slice-wise product of two tensors that are already in the transform domain.
pub(crate) fn slice_product(a_hat: &Tensor3, b_hat: &Tensor3) -> Tensor3 {
    let (n1, _, n3) = a_hat.shape();
    let m = b_hat.n2();
    let mut out = Tensor3::zeros(n1, m, n3);
    for k in 0..n3 {
        out.slice_mut(k)
            .gemm(1.0, &a_hat.slice(k), &b_hat.slice(k), 0.0);
    }
    out
}

/// The c-product `A ⋆c B`.
pub fn cproduct(a: &Tensor3, b: &Tensor3) -> Result<Tensor3> {
    check_conformable(a, b)?;
    Ok(idct_mode3(&slice_product(&dct_mode3(a), &dct_mode3(b))))
}

/// `Aᵀ ⋆c B` without materializing the transpose.
pub fn cproduct_tn(a: &Tensor3, b: &Tensor3) -> Result<Tensor3> {
    if a.n1() != b.n1() || a.n3() != b.n3() {
        return Err(Error::InvalidDimension(format!(
            "transposed c-product of {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let (ah, bh) = (dct_mode3(a), dct_mode3(b));
    let mut out = Tensor3::zeros(a.n2(), b.n2(), a.n3());
    for k in 0..a.n3() {
        out.slice_mut(k).gemm_tr(1.0, &ah.slice(k), &bh.slice(k), 0.0);
    }
    Ok(idct_mode3(&out))
}

/// The tube `e` with `e ⋆c x = x`: all ones in the transform domain.
pub fn identity_tube(n3: usize) -> Tube {
    idct_tube(&Tube(vec![1.0; n3]))
}

/// `ℐ`: every transform-domain frontal slice is `I_{n1}`.
pub fn identity_tensor(n1: usize, n3: usize) -> Tensor3 {
    let e = identity_tube(n3);
    let mut out = Tensor3::zeros(n1, n1, n3);
    for i in 0..n1 {
        out.set_tube(i, i, &e);
    }
    out
}

/// Inverse under the c-product, slice by slice in the transform domain.
pub fn inverse(a: &Tensor3) -> Result<Tensor3> {
    let (n1, n2, n3) = a.shape();
    if n1 != n2 {
        return Err(Error::InvalidDimension(format!(
            "inverse of a non-square {n1}x{n2}x{n3} tensor"
        )));
    }
    let limit = 1.0 / (100.0 * f64::EPSILON);
    let a_hat = dct_mode3(a);
    let mut out = Tensor3::zeros(n1, n1, n3);
    for k in 0..n3 {
        let s = a_hat.slice(k).clone_owned();
        let sv = dense::singular_values(&s)?;
        let (smax, smin) = (sv[0], sv[sv.len() - 1]);
        let condition = if smin > 0.0 {
            smax / smin
        } else {
            f64::INFINITY
        };
        if condition > limit {
            return Err(Error::SingularTensor {
                slice: k,
                condition,
            });
        }
        let inv = s.try_inverse().ok_or(Error::SingularTensor {
            slice: k,
            condition,
        })?;
        out.slice_mut(k).copy_from(&inv);
    }
    Ok(idct_mode3(&out))
}

pub fn inner_product(a: &Tensor3, b: &Tensor3) -> Result<f64> {
    a.inner(b)
}

pub fn fro_norm(a: &Tensor3) -> f64 {
    a.fro_norm()
}

/// Tube-valued pairing: the transform of the result holds the Frobenius
/// inner products of matching transform-domain slices.
pub fn tube_dot(a: &Tensor3, b: &Tensor3) -> Result<Tube> {
    a.check_same_shape(b, "tube_dot")?;
    let (ah, bh) = (dct_mode3(a), dct_mode3(b));
    let hat = (0..a.n3())
        .map(|k| ah.slice(k).dot(&bh.slice(k)))
        .collect();
    Ok(idct_tube(&Tube(hat)))
}

/// `a ⋇ B`: every tube of `B` c-multiplied by `a`.
pub fn tube_times(a: &Tube, b: &Tensor3) -> Result<Tensor3> {
    if a.len() != b.n3() {
        return Err(Error::InvalidDimension(format!(
            "tube of length {} against a tensor with n3 = {}",
            a.len(),
            b.n3()
        )));
    }
    let a_hat = dct_tube(a);
    let mut b_hat = dct_mode3(b);
    for (k, &s) in a_hat.entries().iter().enumerate() {
        b_hat.slice_mut(k).scale_mut(s);
    }
    Ok(idct_mode3(&b_hat))
}

/// `Σ_j y_j 𝒰_j` over equally shaped blocks.
pub fn global_combine(blocks: &[Tensor3], y: &[f64]) -> Result<Tensor3> {
    if blocks.len() != y.len() || blocks.is_empty() {
        return Err(Error::InvalidDimension(format!(
            "{} blocks combined with {} weights",
            blocks.len(),
            y.len()
        )));
    }
    let shape = blocks[0].shape();
    let mut out = Tensor3::zeros(shape.0, shape.1, shape.2);
    for (blk, &w) in blocks.iter().zip(y) {
        if blk.shape() != shape {
            return Err(Error::InvalidDimension(
                "blocks must share one shape".into(),
            ));
        }
        out.axpy(w, blk);
    }
    Ok(out)
}

/// Column-wise extension: `[𝕌 ⊛ c¹, …, 𝕌 ⊛ cᵐ]` for the columns of `c`.
pub fn global_combine_matrix(blocks: &[Tensor3], c: &DMatrix<f64>) -> Result<Tensor3> {
    let parts = c
        .column_iter()
        .map(|col| global_combine(blocks, col.as_slice()))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&Tensor3> = parts.iter().collect();
    Tensor3::hcat(&refs)
}

/// c-Kronecker product: transform slices are Kronecker products of the
/// operands' transform slices.
pub fn ckron(a: &Tensor3, b: &Tensor3) -> Result<Tensor3> {
    if a.n3() != b.n3() {
        return Err(Error::InvalidDimension(format!(
            "c-Kronecker product with n3 = {} and {}",
            a.n3(),
            b.n3()
        )));
    }
    let (ah, bh) = (dct_mode3(a), dct_mode3(b));
    let slices: Vec<DMatrix<f64>> = (0..a.n3())
        .map(|k| ah.slice(k).kronecker(&bh.slice(k)))
        .collect();
    Ok(idct_mode3(&Tensor3::from_slices(&slices)?))
}

/// Stacks the lateral slices of `a` vertically into one lateral slice.
pub fn tvect(a: &Tensor3) -> Tensor3 {
    let (n1, n2, n3) = a.shape();
    // Column-major slices already list lateral slice 1, then 2, ...
    Tensor3::from_vec(n1 * n2, 1, n3, a.data().to_vec()).expect("same entry count")
}

/// `[[A, B], [C, D]]` assembled slice by slice.
pub fn block_compose(a: &Tensor3, b: &Tensor3, c: &Tensor3, d: &Tensor3) -> Result<Tensor3> {
    let n3 = a.n3();
    let ok = a.n1() == b.n1()
        && c.n1() == d.n1()
        && a.n2() == c.n2()
        && b.n2() == d.n2()
        && [b.n3(), c.n3(), d.n3()].iter().all(|&x| x == n3);
    if !ok {
        return Err(Error::InvalidDimension(format!(
            "cannot compose blocks {:?}, {:?}, {:?}, {:?}",
            a.shape(),
            b.shape(),
            c.shape(),
            d.shape()
        )));
    }
    let (r1, r2, c1, c2) = (a.n1(), c.n1(), a.n2(), b.n2());
    let mut out = Tensor3::zeros(r1 + r2, c1 + c2, n3);
    for k in 0..n3 {
        let mut s = out.slice_mut(k);
        s.view_mut((0, 0), (r1, c1)).copy_from(&a.slice(k));
        s.view_mut((0, c1), (r1, c2)).copy_from(&b.slice(k));
        s.view_mut((r1, 0), (r2, c1)).copy_from(&c.slice(k));
        s.view_mut((r1, c1), (r2, c2)).copy_from(&d.slice(k));
    }
    Ok(out)
}

/// `‖Qᵀ⋆Q − ℐ‖_F ≤ tol` and `‖Q⋆Qᵀ − ℐ‖_F ≤ tol`.
pub fn is_orthogonal(q: &Tensor3, tol: f64) -> bool {
    let (n1, n2, n3) = q.shape();
    if n1 != n2 {
        return false;
    }
    let id = identity_tensor(n1, n3);
    let left = cproduct_tn(q, q).expect("square");
    let right = cproduct(q, &q.transpose()).expect("square");
    (&left - &id).fro_norm() <= tol && (&right - &id).fro_norm() <= tol
}

/// Singular values of every transform-domain slice, largest first.
pub(crate) fn slice_singular_values(a: &Tensor3) -> Result<Vec<Vec<f64>>> {
    let a_hat = dct_mode3(a);
    (0..a.n3())
        .map(|k| dense::singular_values(&a_hat.slice(k).clone_owned()))
        .collect()
}

/// Number of singular tubes whose norm exceeds `tol` times the first one.
pub fn tubal_rank(a: &Tensor3, tol: f64) -> Result<usize> {
    let sv = slice_singular_values(a)?;
    let m = a.n1().min(a.n2());
    // The orthonormal transform preserves tube norms, so ‖S(i,i,:)‖ can be
    // read off the transform-domain singular values.
    let norms: Vec<f64> = (0..m)
        .map(|i| sv.iter().map(|s| s[i] * s[i]).sum::<f64>().sqrt())
        .collect();
    Ok(match norms.first() {
        Some(&lead) if lead > 0.0 => norms.iter().filter(|&&x| x > tol * lead).count(),
        _ => 0,
    })
}

/// Numerical rank of each transform-domain slice, relative to the largest
/// singular value over all slices.
pub fn multi_rank(a: &Tensor3, tol: f64) -> Result<Vec<usize>> {
    let sv = slice_singular_values(a)?;
    let top = sv
        .iter()
        .filter_map(|s| s.first().copied())
        .fold(0.0, f64::max);
    Ok(sv
        .iter()
        .map(|s| {
            if top == 0.0 {
                0
            } else {
                s.iter().filter(|&&x| x > tol * top).count()
            }
        })
        .collect())
}
