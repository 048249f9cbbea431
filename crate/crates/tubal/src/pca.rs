//! Eigenface PCA on vectorized images and tubal PCA over the c-product.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::factor::{csvd_economy, slice_svd};
use crate::golub_kahan::{
    default_tube_tol, lift_leading, start_block, tggka, ttggka, GkOptions,
};
use crate::tensor::Tensor3;
use crate::transform::dct_mode3;

/// How the projection basis is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainMethod {
    /// Golub-Kahan bidiagonalization followed by a small SVD.
    Ttpca,
    /// Dense c-SVD of the whole training tensor.
    Csvd,
    /// Matrix PCA on vectorized images (all channels in one column).
    Eigenface,
}

impl TrainMethod {
    pub fn code(self) -> u32 {
        match self {
            TrainMethod::Ttpca => 0,
            TrainMethod::Csvd => 1,
            TrainMethod::Eigenface => 2,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(TrainMethod::Ttpca),
            1 => Some(TrainMethod::Csvd),
            2 => Some(TrainMethod::Eigenface),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TrainMethod::Ttpca => "ttpca",
            TrainMethod::Csvd => "csvd",
            TrainMethod::Eigenface => "eigenface",
        }
    }
}

/// Nearest training item in projected space.
#[derive(Debug, Clone, PartialEq)]
pub struct Match {
    pub label: String,
    pub index: usize,
    pub distance: f64,
}

/// Anything that maps one image to its nearest training item.
pub trait Classifier {
    fn predict(&self, image: &Tensor3) -> Result<Match>;
}

fn argmin(distances: impl Iterator<Item = f64>) -> (usize, f64) {
    // Strict comparison keeps the lowest index on ties.
    distances
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bd), (i, d)| if d < bd { (i, d) } else { (bi, bd) })
}

fn check_labels(labels: &[String], count: usize) -> Result<()> {
    if labels.len() != count {
        return Err(Error::InvalidDimension(format!(
            "{} labels for {count} training items",
            labels.len()
        )));
    }
    Ok(())
}

/// Makes the largest-magnitude entry of every column nonnegative.
fn fix_column_signs(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        let pivot = col
            .iter()
            .copied()
            .fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
        if pivot < 0.0 {
            col.neg_mut();
        }
    }
}

// ---------------------------------------------------------------------------
// Eigenfaces

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenMethod {
    /// Golub-Kahan on the centered data with the given number of steps.
    GolubKahan { steps: usize, seed: u64 },
    /// Dense thin SVD of the centered data.
    FullSvd,
    /// Eigenvectors of the small `p × p` Gram matrix mapped back to image space.
    Covariance,
}

/// Outcome of thresholded eigenface classification.
#[derive(Debug, Clone, PartialEq)]
pub enum Decision {
    NotAFace { residual: f64 },
    UnknownFace { residual: f64, nearest: Match },
    Identified(Match),
}

#[derive(Debug, Clone)]
pub struct EigenfaceModel {
    pub mean: DVector<f64>,
    /// `nm × k` with orthonormal columns.
    pub basis: DMatrix<f64>,
    /// `k × p`, column `i` is `basisᵀ (x_i − mean)`.
    pub projected_train: DMatrix<f64>,
    pub labels: Vec<String>,
    pub theta: f64,
}

/// Relative cut-off for dropping directions with vanishing singular value.
const SPECTRUM_RTOL: f64 = 1e-12;

pub fn build_eigenface_model(
    images: &DMatrix<f64>,
    labels: &[String],
    k: usize,
    method: EigenMethod,
) -> Result<EigenfaceModel> {
    let (nm, p) = images.shape();
    check_labels(labels, p)?;
    if p < 2 {
        return Err(Error::InvalidArgument(format!(
            "at least two training images are needed, got {p}"
        )));
    }
    if k == 0 || k > p {
        return Err(Error::InvalidArgument(format!("basis size {k} outside 1..={p}")));
    }
    if images.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("training images contain non-finite values".into()));
    }
    let mean = images.column_mean();
    let mut centered = images.clone();
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }
    let scale = centered.norm();
    if scale == 0.0 {
        return Err(Error::DegenerateData(
            "all training images are identical".into(),
        ));
    }

    let mut basis = match method {
        EigenMethod::FullSvd => {
            let svd = slice_svd(centered.clone())?;
            svd.u.columns(0, k.min(svd.u.ncols())).into_owned()
        }
        EigenMethod::Covariance => {
            let gram = centered.tr_mul(&centered);
            let eig = gram.symmetric_eigen();
            let mut order: Vec<usize> = (0..p).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
            let sigma_max = eig.eigenvalues[order[0]].max(0.0).sqrt();
            let keep: Vec<usize> = order
                .into_iter()
                .take(k)
                .filter(|&i| eig.eigenvalues[i].max(0.0).sqrt() > SPECTRUM_RTOL * sigma_max)
                .collect();
            let mut u = DMatrix::zeros(nm, keep.len());
            for (c, &i) in keep.iter().enumerate() {
                let sigma = eig.eigenvalues[i].sqrt();
                u.set_column(c, &(&centered * eig.eigenvectors.column(i) / sigma));
            }
            u
        }
        EigenMethod::GolubKahan { steps, seed } => {
            let steps = steps.max(k).min(p.min(nm));
            let x = Tensor3::from_matrix(&centered);
            let run = tggka(&x, &start_block(p, 1, 1, seed), steps, GkOptions { seed, ..GkOptions::default() })?;
            let done = run.steps();
            if done == 0 {
                return Err(Error::DegenerateData(
                    "start vector lies in the null space of the centered data".into(),
                ));
            }
            let mut c = DMatrix::zeros(done, done + 1);
            c.view_mut((0, 0), (done, done)).copy_from(&run.c_matrix());
            c[(done - 1, done)] = run.betas[done - 1];
            let ritz = slice_svd(c)?;
            let u_stack = DMatrix::from_fn(nm, done, |i, j| run.u_blocks[j].get(i, 0, 0));
            let keep = ritz
                .sigma
                .iter()
                .take(k)
                .filter(|&&s| s > SPECTRUM_RTOL * ritz.sigma[0])
                .count();
            u_stack * ritz.u.columns(0, keep)
        }
    };
    fix_column_signs(&mut basis);
    let projected_train = basis.tr_mul(&centered);
    let theta = 0.5 * max_pairwise_distance(&projected_train);
    Ok(EigenfaceModel {
        mean,
        basis,
        projected_train,
        labels: labels.to_vec(),
        theta,
    })
}

fn max_pairwise_distance(cols: &DMatrix<f64>) -> f64 {
    (0..cols.ncols())
        .into_par_iter()
        .map(|i| {
            (i + 1..cols.ncols())
                .map(|j| (cols.column(i) - cols.column(j)).norm())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

impl EigenfaceModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    fn check_dim(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::InvalidDimension(format!(
                "image of length {} against a model of length {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// `basisᵀ (x − mean)`.
    pub fn project(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        Ok(self.basis.tr_mul(&(x - &self.mean)))
    }

    /// `basis · y + mean`.
    pub fn reconstruct(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.basis * y + &self.mean
    }

    /// Nearest training projection, ignoring the threshold.
    pub fn nearest(&self, x: &DVector<f64>) -> Result<Match> {
        let y = self.project(x)?;
        Ok(self.nearest_projected(&y))
    }

    fn nearest_projected(&self, y: &DVector<f64>) -> Match {
        let (index, distance) =
            argmin(self.projected_train.column_iter().map(|c| (c - y).norm()));
        Match {
            label: self.labels[index].clone(),
            index,
            distance,
        }
    }

    /// Thresholded decision: reconstruction residual first, then distance to
    /// the closest training projection.
    pub fn classify(&self, x: &DVector<f64>) -> Result<Decision> {
        let y = self.project(x)?;
        let residual = (x - self.reconstruct(&y)).norm();
        if residual >= self.theta {
            return Ok(Decision::NotAFace { residual });
        }
        let nearest = self.nearest_projected(&y);
        if nearest.distance >= self.theta {
            Ok(Decision::UnknownFace { residual, nearest })
        } else {
            Ok(Decision::Identified(nearest))
        }
    }

    /// The same model as a one-slice tubal model acting on flattened images.
    pub fn to_ttpca(&self) -> TtpcaModel {
        let r = self.rank();
        let l = self.dim();
        TtpcaModel::from_parts(
            Tensor3::from_vec(l, 1, 1, self.mean.as_slice().to_vec()).expect("sizes agree"),
            Tensor3::from_matrix(&self.basis),
            Tensor3::from_matrix(&self.projected_train),
            self.labels.clone(),
            r,
            r,
            TrainMethod::Eigenface,
        )
        .expect("eigenface parts are consistent")
    }
}

/// All channels of an image stacked into one column.
pub fn flatten_image(image: &Tensor3) -> DVector<f64> {
    DVector::from_column_slice(image.data())
}

impl Classifier for EigenfaceModel {
    fn predict(&self, image: &Tensor3) -> Result<Match> {
        self.nearest(&flatten_image(image))
    }
}

// ---------------------------------------------------------------------------
// Tubal PCA

/// Lateral slices `vec(I_i) − mean` of shape `L × N × n3`, and the mean
/// image tensor `L × 1 × n3`.
pub fn build_training_tensor(images: &[Tensor3]) -> Result<(Tensor3, Tensor3)> {
    let first = images
        .first()
        .ok_or_else(|| Error::InvalidArgument("no training images".into()))?;
    let (n1, n2, n3) = first.shape();
    let l = n1 * n2;
    let n = images.len();
    let mut x = Tensor3::zeros(l, n, n3);
    let mut mean = Tensor3::zeros(l, 1, n3);
    for (i, img) in images.iter().enumerate() {
        if img.shape() != (n1, n2, n3) {
            return Err(Error::InvalidDimension(format!(
                "image {i} has shape {:?}, expected {:?}",
                img.shape(),
                (n1, n2, n3)
            )));
        }
        for k in 0..n3 {
            let src = img.slice(k);
            let col = DVector::from_iterator(l, src.iter().copied());
            x.slice_mut(k).set_column(i, &col);
        }
    }
    for k in 0..n3 {
        let m = x.slice(k).column_mean();
        mean.slice_mut(k).set_column(0, &m);
        for mut col in x.slice_mut(k).column_iter_mut() {
            col -= &m;
        }
    }
    Ok((x, mean))
}

/// Trained tubal PCA classifier.
#[derive(Debug, Clone)]
pub struct TtpcaModel {
    pub mean: Tensor3,
    /// `L × r × n3`.
    pub projector: Tensor3,
    /// `r × N × n3`.
    pub projected_train: Tensor3,
    pub labels: Vec<String>,
    pub r: usize,
    pub k: usize,
    pub method: TrainMethod,
    projector_hat: Tensor3,
    projected_hat: Tensor3,
}

impl TtpcaModel {
    /// Assembles a model from stored parts after checking their shapes.
    pub fn from_parts(
        mean: Tensor3,
        projector: Tensor3,
        projected_train: Tensor3,
        labels: Vec<String>,
        r: usize,
        k: usize,
        method: TrainMethod,
    ) -> Result<Self> {
        let (l, one, n3) = mean.shape();
        let ok = one == 1
            && projector.shape() == (l, r, n3)
            && projected_train.n1() == r
            && projected_train.n3() == n3
            && labels.len() == projected_train.n2();
        if !ok || r == 0 {
            return Err(Error::InvalidDimension(format!(
                "inconsistent model parts: mean {:?}, projector {:?}, projections {:?}, {} labels, r = {r}",
                mean.shape(),
                projector.shape(),
                projected_train.shape(),
                labels.len()
            )));
        }
        Ok(TtpcaModel {
            projector_hat: dct_mode3(&projector),
            projected_hat: dct_mode3(&projected_train),
            mean,
            projector,
            projected_train,
            labels,
            r,
            k,
            method,
        })
    }

    pub fn image_len(&self) -> usize {
        self.mean.n1()
    }

    pub fn n3(&self) -> usize {
        self.mean.n3()
    }

    pub fn train_count(&self) -> usize {
        self.labels.len()
    }

    /// The model restricted to its first `r` projection directions.
    pub fn truncate(&self, r: usize) -> Result<TtpcaModel> {
        if r == 0 || r > self.r {
            return Err(Error::InvalidArgument(format!(
                "truncation index {r} outside 1..={}",
                self.r
            )));
        }
        let (n, n3) = (self.train_count(), self.n3());
        let mut proj = Tensor3::zeros(r, n, n3);
        for k in 0..n3 {
            proj.slice_mut(k).copy_from(&self.projected_train.slice(k).rows(0, r));
        }
        TtpcaModel::from_parts(
            self.mean.clone(),
            self.projector.lateral_range(0..r),
            proj,
            self.labels.clone(),
            r,
            self.k,
            self.method,
        )
    }

    /// `Pᵀ ⋆c (column − mean)` for an `L × 1 × n3` column, in the transform
    /// domain.
    fn project_hat(&self, column: &Tensor3) -> Result<Tensor3> {
        if column.shape() != self.mean.shape() {
            return Err(Error::InvalidDimension(format!(
                "image column {:?} against a model expecting {:?}",
                column.shape(),
                self.mean.shape()
            )));
        }
        let centered = dct_mode3(&(column - &self.mean));
        let mut out = Tensor3::zeros(self.r, 1, self.n3());
        for k in 0..self.n3() {
            let y = self.projector_hat.slice(k).tr_mul(&centered.slice(k));
            out.slice_mut(k).copy_from(&y);
        }
        Ok(out)
    }

    /// Projected, centered test column.
    pub fn project(&self, column: &Tensor3) -> Result<Tensor3> {
        Ok(crate::transform::idct_mode3(&self.project_hat(column)?))
    }

    /// Reshapes an image to the column layout the model was trained on.
    pub fn image_column(&self, image: &Tensor3) -> Result<Tensor3> {
        let (l, _, n3) = self.mean.shape();
        if image.len() != l * n3 {
            return Err(Error::InvalidDimension(format!(
                "image {:?} does not match a model of {} entries per slice and {} slices",
                image.shape(),
                l,
                n3
            )));
        }
        if self.method != TrainMethod::Eigenface && image.n3() != n3 {
            return Err(Error::InvalidDimension(format!(
                "image has {} slices, model expects {n3}",
                image.n3()
            )));
        }
        // Slice-major, column-major storage already lists vec(I⁽ʲ⁾) slice by slice.
        Tensor3::from_vec(l, 1, n3, image.data().to_vec())
    }

    /// Distances from a column to every projected training item.
    pub fn distances(&self, column: &Tensor3) -> Result<Vec<f64>> {
        let y = self.project_hat(column)?;
        let n3 = self.n3();
        Ok((0..self.train_count())
            .map(|i| {
                (0..n3)
                    .map(|k| (self.projected_hat.slice(k).column(i) - y.slice(k).column(0)).norm_squared())
                    .sum::<f64>()
                    .sqrt()
            })
            .collect())
    }

    pub fn classify_column(&self, column: &Tensor3) -> Result<Match> {
        let (index, distance) = argmin(self.distances(column)?.into_iter());
        Ok(Match {
            label: self.labels[index].clone(),
            index,
            distance,
        })
    }

    pub fn classify(&self, image: &Tensor3) -> Result<Match> {
        self.classify_column(&self.image_column(image)?)
    }

    /// The `m` nearest training items, closest first.
    pub fn top(&self, image: &Tensor3, m: usize) -> Result<Vec<Match>> {
        let d = self.distances(&self.image_column(image)?)?;
        let mut order: Vec<usize> = (0..d.len()).collect();
        order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
        Ok(order
            .into_iter()
            .take(m)
            .map(|i| Match {
                label: self.labels[i].clone(),
                index: i,
                distance: d[i],
            })
            .collect())
    }
}

impl Classifier for TtpcaModel {
    fn predict(&self, image: &Tensor3) -> Result<Match> {
        self.classify(image)
    }
}

fn projected(p: &Tensor3, x: &Tensor3) -> Result<Tensor3> {
    crate::algebra::cproduct_tn(p, x)
}

/// Golub-Kahan based tubal PCA: `k` steps of the tube bidiagonalization on
/// the centered training tensor, then the leading `r` lifted directions.
pub fn build_ttpca_model(
    x: &Tensor3,
    mean: &Tensor3,
    labels: &[String],
    r: usize,
    k: usize,
    opts: GkOptions,
) -> Result<TtpcaModel> {
    let (l, n, n3) = x.shape();
    check_labels(labels, n)?;
    if r == 0 || r > k || k > l.min(n) {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= r <= k <= {}, got r = {r}, k = {k}",
            l.min(n)
        )));
    }
    if x.fro_norm() == 0.0 {
        return Err(Error::DegenerateData("centered training tensor is zero".into()));
    }
    let run = ttggka(x, &start_block(n, 1, n3, opts.seed), k, default_tube_tol(x), opts)?;
    let lead = lift_leading(&run, r)?;
    let proj = projected(&lead.p, x)?;
    TtpcaModel::from_parts(
        mean.clone(),
        lead.p,
        proj,
        labels.to_vec(),
        r,
        k,
        TrainMethod::Ttpca,
    )
}

/// Reference model whose projector is the leading `r` left singular slices
/// of the full c-SVD.
pub fn build_csvd_model(
    x: &Tensor3,
    mean: &Tensor3,
    labels: &[String],
    r: usize,
) -> Result<TtpcaModel> {
    let (l, n, _) = x.shape();
    check_labels(labels, n)?;
    let m = l.min(n);
    if r == 0 || r > m {
        return Err(Error::InvalidArgument(format!("rank {r} outside 1..={m}")));
    }
    let f = csvd_economy(x)?;
    let p = f.u.lateral_range(0..r);
    let proj = projected(&p, x)?;
    TtpcaModel::from_parts(mean.clone(), p, proj, labels.to_vec(), r, m, TrainMethod::Csvd)
}

/// Recognition statistics over a labelled test set.
#[derive(Debug, Clone, PartialEq)]
pub struct RecognitionReport {
    pub rate: f64,
    pub correct: usize,
    pub total: usize,
    /// Sorted union of true and predicted labels.
    pub classes: Vec<String>,
    /// `confusion[t][p]`: items of class `t` predicted as class `p`.
    pub confusion: Vec<Vec<usize>>,
    /// Per true class; `None` for classes that only appear as predictions.
    pub per_class: Vec<Option<f64>>,
    pub predictions: Vec<Match>,
}

pub fn evaluate<C: Classifier + Sync>(
    model: &C,
    images: &[Tensor3],
    labels: &[String],
) -> Result<RecognitionReport> {
    if images.is_empty() {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    if images.len() != labels.len() {
        return Err(Error::InvalidDimension(format!(
            "{} test images with {} labels",
            images.len(),
            labels.len()
        )));
    }
    let predictions = images
        .par_iter()
        .map(|img| model.predict(img))
        .collect::<Result<Vec<_>>>()?;
    let classes: Vec<String> = labels
        .iter()
        .chain(predictions.iter().map(|m| &m.label))
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let pos = |s: &str| classes.binary_search_by(|c| c.as_str().cmp(s)).expect("label collected");
    let mut confusion = vec![vec![0usize; classes.len()]; classes.len()];
    let mut correct = 0;
    for (truth, pred) in labels.iter().zip(&predictions) {
        confusion[pos(truth)][pos(&pred.label)] += 1;
        correct += usize::from(*truth == pred.label);
    }
    let per_class = confusion
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let total: usize = row.iter().sum();
            (total > 0).then(|| row[i] as f64 / total as f64)
        })
        .collect();
    Ok(RecognitionReport {
        rate: correct as f64 / images.len() as f64,
        correct,
        total: images.len(),
        classes,
        confusion,
        per_class,
        predictions,
    })
}
