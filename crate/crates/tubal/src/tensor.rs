//! Dense third-order tensors and tubal scalars.
//!
//! Storage is slice-major: frontal slice `k` occupies a contiguous block of
//! `n1 * n2` entries, column-major within the slice, so every frontal slice
//! can be viewed as an `nalgebra` matrix without copying.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// A dense real `n1 × n2 × n3` tensor.
#[derive(Clone, PartialEq)]
pub struct Tensor3 {
    n1: usize,
    n2: usize,
    n3: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(n1: usize, n2: usize, n3: usize) -> Self {
        Tensor3 {
            n1,
            n2,
            n3,
            data: vec![0.0; n1 * n2 * n3],
        }
    }

    /// Wraps slice-major data. Rejects length mismatches and non-finite entries.
    pub fn from_vec(n1: usize, n2: usize, n3: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n1 * n2 * n3 {
            return Err(Error::InvalidDimension(format!(
                "{} entries supplied for a {n1}x{n2}x{n3} tensor",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite entry at flat index {pos}"
            )));
        }
        Ok(Tensor3 { n1, n2, n3, data })
    }

    pub fn from_fn(
        n1: usize,
        n2: usize,
        n3: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(n1 * n2 * n3);
        for k in 0..n3 {
            for j in 0..n2 {
                for i in 0..n1 {
                    data.push(f(i, j, k));
                }
            }
        }
        Tensor3 { n1, n2, n3, data }
    }

    /// Stacks equally sized matrices as frontal slices.
    pub fn from_slices(slices: &[DMatrix<f64>]) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| Error::InvalidDimension("no frontal slices supplied".into()))?;
        let (n1, n2) = first.shape();
        let mut data = Vec::with_capacity(n1 * n2 * slices.len());
        for (k, s) in slices.iter().enumerate() {
            if s.shape() != (n1, n2) {
                return Err(Error::InvalidDimension(format!(
                    "slice {k} is {}x{}, expected {n1}x{n2}",
                    s.nrows(),
                    s.ncols()
                )));
            }
            data.extend_from_slice(s.as_slice());
        }
        Ok(Tensor3 {
            n1,
            n2,
            n3: slices.len(),
            data,
        })
    }

    /// A single-slice tensor holding `m`.
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        Tensor3 {
            n1: m.nrows(),
            n2: m.ncols(),
            n3: 1,
            data: m.as_slice().to_vec(),
        }
    }

    /// Entries drawn i.i.d. from the standard normal distribution.
    pub fn random_normal<R: Rng + ?Sized>(n1: usize, n2: usize, n3: usize, rng: &mut R) -> Self {
        let data = (0..n1 * n2 * n3)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        Tensor3 { n1, n2, n3, data }
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.n1, self.n2, self.n3)
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn n3(&self) -> usize {
        self.n3
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.n1 && j < self.n2 && k < self.n3);
        i + self.n1 * (j + self.n2 * k)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.offset(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) {
        let o = self.offset(i, j, k);
        self.data[o] = value;
    }

    fn slice_range(&self, k: usize) -> std::ops::Range<usize> {
        let sz = self.n1 * self.n2;
        k * sz..(k + 1) * sz
    }

    /// Frontal slice `k` as a borrowed matrix.
    pub fn slice(&self, k: usize) -> DMatrixView<'_, f64> {
        DMatrixView::from_slice(&self.data[self.slice_range(k)], self.n1, self.n2)
    }

    pub fn slice_mut(&mut self, k: usize) -> DMatrixViewMut<'_, f64> {
        let r = self.slice_range(k);
        let (n1, n2) = (self.n1, self.n2);
        DMatrixViewMut::from_slice(&mut self.data[r], n1, n2)
    }

    pub fn slices(&self) -> impl Iterator<Item = DMatrixView<'_, f64>> + '_ {
        (0..self.n3).map(move |k| self.slice(k))
    }

    pub fn tube(&self, i: usize, j: usize) -> Tube {
        Tube((0..self.n3).map(|k| self.get(i, j, k)).collect())
    }

    pub fn set_tube(&mut self, i: usize, j: usize, tube: &Tube) {
        assert_eq!(tube.len(), self.n3, "tube length must equal n3");
        for (k, &x) in tube.0.iter().enumerate() {
            self.set(i, j, k, x);
        }
    }

    /// Lateral slices `cols` as an `n1 × cols.len() × n3` tensor.
    pub fn lateral_range(&self, cols: std::ops::Range<usize>) -> Tensor3 {
        assert!(cols.end <= self.n2, "lateral range out of bounds");
        let w = cols.len();
        let mut out = Tensor3::zeros(self.n1, w, self.n3);
        for k in 0..self.n3 {
            let src = self.slice(k);
            out.slice_mut(k)
                .copy_from(&src.columns(cols.start, w));
        }
        out
    }

    /// Lateral slice `j` as an `n1 × 1 × n3` tensor.
    pub fn lateral(&self, j: usize) -> Tensor3 {
        self.lateral_range(j..j + 1)
    }

    /// Concatenates tensors along the second mode (side by side).
    pub fn hcat(parts: &[&Tensor3]) -> Result<Tensor3> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidDimension("nothing to concatenate".into()))?;
        let (n1, n3) = (first.n1, first.n3);
        if let Some(bad) = parts.iter().find(|p| p.n1 != n1 || p.n3 != n3) {
            return Err(Error::InvalidDimension(format!(
                "cannot concatenate {:?} with {:?} along mode 2",
                bad.shape(),
                first.shape()
            )));
        }
        let n2: usize = parts.iter().map(|p| p.n2).sum();
        let mut out = Tensor3::zeros(n1, n2, n3);
        for k in 0..n3 {
            let mut col = 0;
            let mut dst = out.slice_mut(k);
            for p in parts {
                dst.columns_mut(col, p.n2).copy_from(&p.slice(k));
                col += p.n2;
            }
        }
        Ok(out)
    }

    /// Slice-wise transpose: `n2 × n1 × n3`, slice order unchanged.
    pub fn transpose(&self) -> Tensor3 {
        let mut out = Tensor3::zeros(self.n2, self.n1, self.n3);
        for k in 0..self.n3 {
            out.slice_mut(k).copy_from(&self.slice(k).transpose());
        }
        out
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &Tensor3) -> Result<f64> {
        self.check_same_shape(other, "inner product")?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|x| *x *= alpha);
    }

    pub fn scaled(&self, alpha: f64) -> Tensor3 {
        let mut out = self.clone();
        out.scale(alpha);
        out
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &Tensor3) {
        assert_eq!(self.shape(), other.shape(), "axpy shape mismatch");
        for (y, x) in self.data.iter_mut().zip(&other.data) {
            *y += alpha * x;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub(crate) fn check_same_shape(&self, other: &Tensor3, what: &str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::InvalidDimension(format!(
                "{what}: shapes {:?} and {:?} differ",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }
}

impl fmt::Debug for Tensor3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tensor3({}x{}x{})", self.n1, self.n2, self.n3)?;
        if self.data.len() <= 64 {
            for k in 0..self.n3 {
                write!(f, "\n[:, :, {k}] = {}", self.slice(k).clone_owned())?;
            }
        }
        Ok(())
    }
}

impl Add for &Tensor3 {
    type Output = Tensor3;
    fn add(self, rhs: &Tensor3) -> Tensor3 {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &Tensor3 {
    type Output = Tensor3;
    fn sub(self, rhs: &Tensor3) -> Tensor3 {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl AddAssign<&Tensor3> for Tensor3 {
    fn add_assign(&mut self, rhs: &Tensor3) {
        self.axpy(1.0, rhs);
    }
}

impl SubAssign<&Tensor3> for Tensor3 {
    fn sub_assign(&mut self, rhs: &Tensor3) {
        self.axpy(-1.0, rhs);
    }
}

impl Neg for &Tensor3 {
    type Output = Tensor3;
    fn neg(self) -> Tensor3 {
        self.scaled(-1.0)
    }
}

impl Mul<f64> for &Tensor3 {
    type Output = Tensor3;
    fn mul(self, rhs: f64) -> Tensor3 {
        self.scaled(rhs)
    }
}

/// A tubal scalar: a `1 × 1 × n3` tensor stored as its `n3` entries.
#[derive(Clone, Debug, PartialEq)]
pub struct Tube(pub Vec<f64>);

impl Tube {
    pub fn zeros(n3: usize) -> Self {
        Tube(vec![0.0; n3])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn to_tensor(&self) -> Tensor3 {
        Tensor3 {
            n1: 1,
            n2: 1,
            n3: self.0.len(),
            data: self.0.clone(),
        }
    }
}

impl Sub for &Tube {
    type Output = Tube;
    fn sub(self, rhs: &Tube) -> Tube {
        assert_eq!(self.len(), rhs.len(), "tube length mismatch");
        Tube(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_slice_major_column_major() {
        let t = Tensor3::from_fn(2, 3, 2, |i, j, k| (100 * k + 10 * j + i) as f64);
        assert_eq!(&t.data()[..6], &[0.0, 1.0, 10.0, 11.0, 20.0, 21.0]);
        assert_eq!(t.data()[6], 100.0);
        assert_eq!(t.slice(1)[(1, 2)], 121.0);
        assert_eq!(t.tube(1, 2), Tube(vec![21.0, 121.0]));
    }

    #[test]
    fn from_vec_rejects_bad_input() {
        assert!(matches!(
            Tensor3::from_vec(2, 2, 2, vec![0.0; 7]),
            Err(Error::InvalidDimension(_))
        ));
        assert!(matches!(
            Tensor3::from_vec(1, 1, 2, vec![0.0, f64::NAN]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn lateral_and_hcat_are_inverse() {
        let t = Tensor3::from_fn(3, 4, 2, |i, j, k| (i + 3 * j + 12 * k) as f64);
        let parts: Vec<Tensor3> = (0..4).map(|j| t.lateral(j)).collect();
        let refs: Vec<&Tensor3> = parts.iter().collect();
        assert_eq!(Tensor3::hcat(&refs).unwrap(), t);
        assert_eq!(t.lateral_range(1..3).shape(), (3, 2, 2));
        assert_eq!(t.lateral_range(1..3).get(2, 1, 1), t.get(2, 2, 1));
    }

    #[test]
    fn transpose_is_slicewise_involution() {
        let t = Tensor3::from_fn(2, 3, 3, |i, j, k| (i * 7 + j * 3 + k) as f64);
        let tt = t.transpose();
        assert_eq!(tt.shape(), (3, 2, 3));
        assert_eq!(tt.get(2, 1, 2), t.get(1, 2, 2));
        assert_eq!(tt.transpose(), t);
    }

    #[test]
    fn norm_and_inner() {
        let t = Tensor3::from_vec(1, 2, 2, vec![1.0, 2.0, 2.0, 4.0]).unwrap();
        assert_eq!(t.fro_norm(), 5.0);
        assert_eq!(t.inner(&t).unwrap(), 25.0);
        assert!(t.inner(&Tensor3::zeros(2, 1, 2)).is_err());
    }
}
