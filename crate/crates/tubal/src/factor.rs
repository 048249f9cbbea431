//! c-SVD and c-QR: matrix factorizations applied to every transform-domain
//! frontal slice.
//!
//! Sign convention: the largest-magnitude entry of each left singular vector
//! is made nonnegative (first such entry on ties), flipping the matching
//! right singular vector. QR factors get a nonnegative diagonal in `R`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::algebra::cproduct;
use crate::dense;
use crate::error::{Error, Result};
use crate::tensor::{Tensor3, Tube};
use crate::transform::{dct_mode3, idct_mode3};

/// `A = U ⋆c S ⋆c Vᵀ`.
///
/// From [`csvd`], `U` and `V` are square and `S` has the shape of `A`.
/// From [`csvd_economy`], only the leading `m = min(n1, n2)` lateral slices
/// are kept: `U` is `n1 × m`, `S` is `m × m`, `V` is `n2 × m`.
#[derive(Debug, Clone)]
pub struct CsvdFactors {
    pub u: Tensor3,
    pub s: Tensor3,
    pub v: Tensor3,
}

impl CsvdFactors {
    /// `U ⋆c S ⋆c Vᵀ`.
    pub fn reconstruct(&self) -> Tensor3 {
        let (uh, sh, vh) = (dct_mode3(&self.u), dct_mode3(&self.s), dct_mode3(&self.v));
        let mut out = Tensor3::zeros(self.u.n1(), self.v.n1(), self.u.n3());
        for k in 0..self.u.n3() {
            let us = uh.slice(k) * sh.slice(k);
            out.slice_mut(k).gemm(1.0, &us, &vh.slice(k).transpose(), 0.0);
        }
        idct_mode3(&out)
    }

    /// Diagonal of every transform-domain slice of `S`, largest first.
    pub fn transform_singular_values(&self) -> Vec<Vec<f64>> {
        let sh = dct_mode3(&self.s);
        let m = self.s.n1().min(self.s.n2());
        (0..self.s.n3())
            .map(|k| (0..m).map(|i| sh.get(i, i, k)).collect())
            .collect()
    }

    /// The singular tubes `S(i, i, :)`.
    pub fn singular_tubes(&self) -> Vec<Tube> {
        let m = self.s.n1().min(self.s.n2());
        (0..m).map(|i| self.s.tube(i, i)).collect()
    }

    /// `‖S(i, i, :)‖_F` for every diagonal position.
    pub fn singular_tube_norms(&self) -> Vec<f64> {
        self.singular_tubes().iter().map(Tube::norm).collect()
    }
}

/// Thin SVD of one slice with the crate's ordering and sign conventions.
pub(crate) struct SliceSvd {
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub v: DMatrix<f64>,
}

pub(crate) fn slice_svd(m: DMatrix<f64>) -> Result<SliceSvd> {
    let (mut u, sigma, mut v) = dense::thin_svd(&m)?;
    for i in 0..sigma.len() {
        let col = u.column(i);
        let pivot = col
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(bi, bv), (idx, &x)| {
                if x.abs() > bv.abs() {
                    (idx, x)
                } else {
                    (bi, bv)
                }
            })
            .1;
        if pivot < 0.0 {
            u.column_mut(i).neg_mut();
            v.column_mut(i).neg_mut();
        }
    }
    Ok(SliceSvd { u, sigma, v })
}

/// Extends orthonormal columns `q` (`n × m`) to an `n × n` orthogonal matrix
/// whose first `m` columns are exactly `q`.
fn complete_orthonormal(q: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, m) = q.shape();
    if m == n {
        return q.clone();
    }
    let mut aug = DMatrix::zeros(n, m + n);
    aug.columns_mut(0, m).copy_from(q);
    aug.columns_mut(m, n).fill_with_identity();
    let mut full = aug.qr().q();
    full.columns_mut(0, m).copy_from(q);
    full
}

fn check_finite(a: &Tensor3) -> Result<()> {
    if let Some(pos) = a.data().iter().position(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "non-finite entry at flat index {pos}"
        )));
    }
    Ok(())
}

fn per_slice_svd(a: &Tensor3) -> Result<Vec<SliceSvd>> {
    let a_hat = dct_mode3(a);
    (0..a.n3())
        .into_par_iter()
        .map(|k| slice_svd(a_hat.slice(k).clone_owned()))
        .collect()
}

/// Full c-SVD with square orthogonal `U` (`n1 × n1 × n3`) and `V`.
pub fn csvd(a: &Tensor3) -> Result<CsvdFactors> {
    check_finite(a)?;
    let (n1, n2, n3) = a.shape();
    let parts = per_slice_svd(a)?;
    let mut u = Tensor3::zeros(n1, n1, n3);
    let mut s = Tensor3::zeros(n1, n2, n3);
    let mut v = Tensor3::zeros(n2, n2, n3);
    for (k, p) in parts.iter().enumerate() {
        u.slice_mut(k).copy_from(&complete_orthonormal(&p.u));
        v.slice_mut(k).copy_from(&complete_orthonormal(&p.v));
        for (i, &x) in p.sigma.iter().enumerate() {
            s.set(i, i, k, x);
        }
    }
    Ok(CsvdFactors {
        u: idct_mode3(&u),
        s: idct_mode3(&s),
        v: idct_mode3(&v),
    })
}

/// Economy c-SVD: only the leading `min(n1, n2)` singular triplets.
pub fn csvd_economy(a: &Tensor3) -> Result<CsvdFactors> {
    check_finite(a)?;
    let (n1, n2, n3) = a.shape();
    let m = n1.min(n2);
    let parts = per_slice_svd(a)?;
    let mut u = Tensor3::zeros(n1, m, n3);
    let mut s = Tensor3::zeros(m, m, n3);
    let mut v = Tensor3::zeros(n2, m, n3);
    for (k, p) in parts.iter().enumerate() {
        u.slice_mut(k).copy_from(&p.u);
        v.slice_mut(k).copy_from(&p.v);
        for (i, &x) in p.sigma.iter().enumerate() {
            s.set(i, i, k, x);
        }
    }
    Ok(CsvdFactors {
        u: idct_mode3(&u),
        s: idct_mode3(&s),
        v: idct_mode3(&v),
    })
}

/// Leading `r` singular triplets and the rank-`r` approximation they span.
#[derive(Debug, Clone)]
pub struct TruncatedCsvd {
    pub factors: CsvdFactors,
    pub approx: Tensor3,
}

fn truncate_factors(f: &CsvdFactors, r: usize) -> CsvdFactors {
    let s_hat = dct_mode3(&f.s);
    let mut s = Tensor3::zeros(r, r, f.s.n3());
    for k in 0..f.s.n3() {
        for i in 0..r {
            s.set(i, i, k, s_hat.get(i, i, k));
        }
    }
    CsvdFactors {
        u: f.u.lateral_range(0..r),
        s: idct_mode3(&s),
        v: f.v.lateral_range(0..r),
    }
}

/// `A_r = Σ_{i ≤ r} U(:,i,:) ⋆c S(i,i,:) ⋆c V(:,i,:)ᵀ`.
pub fn truncated_csvd(a: &Tensor3, r: usize) -> Result<TruncatedCsvd> {
    let m = a.n1().min(a.n2());
    if r == 0 || r > m {
        return Err(Error::InvalidArgument(format!(
            "truncation index {r} outside 1..={m}"
        )));
    }
    let full = csvd_economy(a)?;
    let factors = truncate_factors(&full, r);
    let approx = factors.reconstruct();
    Ok(TruncatedCsvd { factors, approx })
}

/// The singular-triplet expansion `Σ_{i < terms} U(:,i,:) ⋆c S(i,i,:) ⋆c V(:,i,:)ᵀ`,
/// evaluated term by term with spatial-domain c-products.
pub fn triplet_expansion(f: &CsvdFactors, terms: usize) -> Result<Tensor3> {
    let m = f.s.n1().min(f.s.n2());
    if terms > m {
        return Err(Error::InvalidArgument(format!(
            "{terms} terms requested from {m} singular triplets"
        )));
    }
    let mut out = Tensor3::zeros(f.u.n1(), f.v.n1(), f.u.n3());
    for i in 0..terms {
        let us = cproduct(&f.u.lateral(i), &f.s.tube(i, i).to_tensor())?;
        out += &cproduct(&us, &f.v.lateral(i).transpose())?;
    }
    Ok(out)
}

/// `A = Q ⋆c R` with orthogonal `Q` (`n1 × n1 × n3`) and f-upper-triangular `R`.
#[derive(Debug, Clone)]
pub struct CqrFactors {
    pub q: Tensor3,
    pub r: Tensor3,
}

pub fn cqr(a: &Tensor3) -> Result<CqrFactors> {
    check_finite(a)?;
    let (n1, n2, n3) = a.shape();
    let a_hat = dct_mode3(a);
    let parts: Vec<(DMatrix<f64>, DMatrix<f64>)> = (0..n3)
        .into_par_iter()
        .map(|k| {
            let qr = a_hat.slice(k).clone_owned().qr();
            let (mut q, mut r) = (qr.q(), qr.r());
            for i in 0..r.nrows() {
                if r[(i, i)] < 0.0 {
                    r.row_mut(i).neg_mut();
                    q.column_mut(i).neg_mut();
                }
            }
            (q, r)
        })
        .collect();
    let mut q = Tensor3::zeros(n1, n1, n3);
    let mut r = Tensor3::zeros(n1, n2, n3);
    for (k, (qk, rk)) in parts.iter().enumerate() {
        q.slice_mut(k).copy_from(&complete_orthonormal(qk));
        r.slice_mut(k).rows_mut(0, rk.nrows()).copy_from(rk);
    }
    Ok(CqrFactors {
        q: idct_mode3(&q),
        r: idct_mode3(&r),
    })
}

/// Outcome of comparing `Σ_k A_k` with `(Σ_k U_k)(Σ_k S_k)(Σ_k V_kᵀ)`.
#[derive(Debug, Clone)]
pub struct SliceSumCheck {
    pub lhs: DMatrix<f64>,
    pub rhs: DMatrix<f64>,
    /// Least-squares `c` in `lhs ≈ c · rhs`.
    pub constant: f64,
    /// `‖lhs − c · rhs‖_F`.
    pub residual: f64,
}

/// Measures the scalar relating the slice sums of `A = U ⋆c S ⋆c Vᵀ` to the
/// product of the factors' slice sums. Under the orthonormal DCT it is `1/n3`.
pub fn slice_sum_identity_check(f: &CsvdFactors) -> SliceSumCheck {
    fn slice_sum(t: &Tensor3) -> DMatrix<f64> {
        t.slices()
            .fold(DMatrix::zeros(t.n1(), t.n2()), |acc, s| acc + s)
    }
    let lhs = slice_sum(&f.reconstruct());
    let rhs = slice_sum(&f.u) * slice_sum(&f.s) * slice_sum(&f.v).transpose();
    let denom = rhs.norm_squared();
    let constant = if denom > 0.0 { lhs.dot(&rhs) / denom } else { 0.0 };
    let residual = (&lhs - &rhs * constant).norm();
    SliceSumCheck {
        lhs,
        rhs,
        constant,
        residual,
    }
}
