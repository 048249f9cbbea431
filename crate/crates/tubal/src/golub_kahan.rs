//! Tensor Golub-Kahan bidiagonalizations.
//!
//! [`tggka`] normalizes blocks with the global Frobenius norm and produces a
//! real upper bidiagonal matrix. [`ttggka`] normalizes with tube fibers via
//! [`normalize`] and produces an upper bidiagonal tube tensor. Because the
//! tube recurrence decouples across transform-domain slices, it is run as
//! independent matrix recurrences on those slices.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DMatrixView};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::algebra::{ckron, cproduct, global_combine_matrix, identity_tensor};
use crate::error::{Error, Result};
use crate::factor::slice_svd;
use crate::tensor::{Tensor3, Tube};
use crate::transform::{dct_mode3, idct_mode3, idct_tube};

/// Relative breakdown threshold for [`tggka`].
pub const GLOBAL_BREAKDOWN_RTOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GkOptions {
    /// Re-orthogonalize every new block against all earlier ones (twice).
    pub reorthogonalize: bool,
    /// Seed for random replacement directions in [`normalize`].
    pub seed: u64,
}

impl Default for GkOptions {
    fn default() -> Self {
        GkOptions {
            reorthogonalize: true,
            seed: 0,
        }
    }
}

impl GkOptions {
    /// The plain two-term recurrence with no re-orthogonalization.
    pub fn literal() -> Self {
        GkOptions {
            reorthogonalize: false,
            seed: 0,
        }
    }
}

/// Seeded standard-normal start block of shape `n2 × s × n3`.
pub fn start_block(n2: usize, s: usize, n3: usize, seed: u64) -> Tensor3 {
    Tensor3::random_normal(n2, s, n3, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn slice_rng(seed: u64, slice: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(slice as u64 + 1);
    rng
}

fn random_unit(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let m = DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal));
    let n = m.norm();
    m / n
}

/// Scales `x` to unit Frobenius norm. Returns the norm, or `None` (with `x`
/// replaced by a random unit block) when the norm is at most `tol`.
fn normalize_block(x: &mut DMatrix<f64>, tol: f64, rng: &mut ChaCha8Rng) -> Option<f64> {
    let a = x.norm();
    if a > tol {
        *x /= a;
        Some(a)
    } else {
        *x = random_unit(x.nrows(), x.ncols(), rng);
        None
    }
}

fn sub_scaled(x: &mut DMatrix<f64>, c: f64, q: &DMatrix<f64>) {
    x.zip_apply(q, |xi, qi| *xi -= c * qi);
}

fn reorthogonalize(x: &mut DMatrix<f64>, basis: &[DMatrix<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = q.dot(x);
            sub_scaled(x, c, q);
        }
    }
}

/// Output of [`normalize`]: `A = a ⋇ Q` when no slice was replaced.
#[derive(Debug, Clone)]
pub struct Normalized {
    pub q: Tensor3,
    pub a: Tube,
    /// Transform-domain slices whose norm was at most `tol`.
    pub replaced: Vec<usize>,
}

impl Normalized {
    /// Every slice hit the tolerance branch.
    pub fn is_total_breakdown(&self) -> bool {
        self.replaced.len() == self.q.n3()
    }
}

/// Tube normalization: every transform-domain slice of `Q` gets unit
/// Frobenius norm and `a` collects the norms. Slices with norm at most `tol`
/// are replaced by a random unit slice and their entry of `a` is set to 0.
pub fn normalize<R: Rng + ?Sized>(a: &Tensor3, tol: f64, rng: &mut R) -> Normalized {
    let mut hat = dct_mode3(a);
    let mut a_hat = vec![0.0; a.n3()];
    let mut replaced = Vec::new();
    for (j, aj) in a_hat.iter_mut().enumerate() {
        let norm = hat.slice(j).norm();
        let mut s = hat.slice_mut(j);
        if norm > tol {
            s /= norm;
            *aj = norm;
        } else {
            s.iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
            let n = s.norm();
            s /= n;
            replaced.push(j);
        }
    }
    Normalized {
        q: idct_mode3(&hat),
        a: idct_tube(&Tube(a_hat)),
        replaced,
    }
}

/// Default tube tolerance: `n3 · ε · ‖A‖_F`.
pub fn default_tube_tol(a: &Tensor3) -> f64 {
    a.n3() as f64 * f64::EPSILON * a.fro_norm()
}

fn blocks_from_hat(per_slice: &[Vec<DMatrix<f64>>], count: usize) -> Result<Vec<Tensor3>> {
    (0..count)
        .map(|i| {
            let slices: Vec<DMatrix<f64>> = per_slice.iter().map(|s| s[i].clone()).collect();
            Ok(idct_mode3(&Tensor3::from_slices(&slices)?))
        })
        .collect()
}

fn check_inputs(a: &Tensor3, v1: &Tensor3, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidArgument("number of steps must be positive".into()));
    }
    if v1.n1() != a.n2() || v1.n3() != a.n3() || v1.n2() == 0 {
        return Err(Error::InvalidDimension(format!(
            "start block {:?} does not fit a tensor of shape {:?}",
            v1.shape(),
            a.shape()
        )));
    }
    if v1.fro_norm() == 0.0 {
        return Err(Error::InvalidInput("start block is zero".into()));
    }
    Ok(())
}

/// Result of [`tggka`]. With `k` completed steps there are `k` left blocks,
/// `k + 1` right blocks, `k` alphas and `k` betas.
#[derive(Debug, Clone)]
pub struct GkMatrixResult {
    pub u_blocks: Vec<Tensor3>,
    pub v_blocks: Vec<Tensor3>,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    /// 1-based step at which the recurrence stopped early.
    pub breakdown_step: Option<usize>,
}

impl GkMatrixResult {
    pub fn steps(&self) -> usize {
        self.u_blocks.len()
    }

    /// The `k × k` upper bidiagonal matrix with the alphas on its diagonal.
    pub fn c_matrix(&self) -> DMatrix<f64> {
        let k = self.steps();
        DMatrix::from_fn(k, k, |i, j| {
            if i == j {
                self.alphas[i]
            } else if j == i + 1 {
                self.betas[i]
            } else {
                0.0
            }
        })
    }
}

/// Global Golub-Kahan bidiagonalization with Frobenius normalization.
pub fn tggka(a: &Tensor3, v1: &Tensor3, k: usize, opts: GkOptions) -> Result<GkMatrixResult> {
    check_inputs(a, v1, k)?;
    let n3 = a.n3();
    let a_hat = dct_mode3(a);
    let tol = GLOBAL_BREAKDOWN_RTOL * a.fro_norm();
    let global_norm = |x: &[DMatrix<f64>]| x.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt();
    let global_dot =
        |x: &[DMatrix<f64>], y: &[DMatrix<f64>]| x.iter().zip(y).map(|(p, q)| p.dot(q)).sum::<f64>();
    let apply = |x: &[DMatrix<f64>], transpose: bool| -> Vec<DMatrix<f64>> {
        (0..n3)
            .into_par_iter()
            .map(|j| {
                if transpose {
                    a_hat.slice(j).tr_mul(&x[j])
                } else {
                    a_hat.slice(j) * &x[j]
                }
            })
            .collect()
    };
    let reorth = |x: &mut Vec<DMatrix<f64>>, basis: &[Vec<DMatrix<f64>>]| {
        for _ in 0..2 {
            for q in basis {
                let c = global_dot(q, x);
                for (xj, qj) in x.iter_mut().zip(q) {
                    sub_scaled(xj, c, qj);
                }
            }
        }
    };

    let v1_hat = dct_mode3(v1);
    let scale = v1.fro_norm();
    let mut vs: Vec<Vec<DMatrix<f64>>> = vec![(0..n3).map(|j| v1_hat.slice(j) / scale).collect()];
    let mut us: Vec<Vec<DMatrix<f64>>> = Vec::new();
    let (mut alphas, mut betas) = (Vec::new(), Vec::new());
    let mut breakdown_step = None;

    for step in 1..=k {
        let mut u = apply(&vs[step - 1], false);
        if let Some(prev) = us.last() {
            let beta = betas[step - 2];
            for (uj, pj) in u.iter_mut().zip(prev) {
                sub_scaled(uj, beta, pj);
            }
        }
        if opts.reorthogonalize {
            reorth(&mut u, &us);
        }
        let alpha = global_norm(&u);
        if alpha <= tol {
            breakdown_step = Some(step);
            break;
        }
        u.iter_mut().for_each(|m| *m /= alpha);

        let mut v = apply(&u, true);
        for (vj, pj) in v.iter_mut().zip(&vs[step - 1]) {
            sub_scaled(vj, alpha, pj);
        }
        if opts.reorthogonalize {
            reorth(&mut v, &vs);
        }
        let beta = global_norm(&v);
        us.push(u);
        alphas.push(alpha);
        betas.push(beta);
        if beta <= tol {
            vs.push(v.iter().map(|m| DMatrix::zeros(m.nrows(), m.ncols())).collect());
            breakdown_step = Some(step);
            break;
        }
        v.iter_mut().for_each(|m| *m /= beta);
        vs.push(v);
    }

    let to_tensor = |blocks: &[DMatrix<f64>]| -> Result<Tensor3> {
        Ok(idct_mode3(&Tensor3::from_slices(blocks)?))
    };
    Ok(GkMatrixResult {
        u_blocks: us.iter().map(|b| to_tensor(b)).collect::<Result<_>>()?,
        v_blocks: vs.iter().map(|b| to_tensor(b)).collect::<Result<_>>()?,
        alphas,
        betas,
        breakdown_step,
    })
}

/// The tubes of an upper bidiagonal `k × (k+1) × n3` tensor.
#[derive(Debug, Clone)]
pub struct TubeBidiagonal {
    pub a_tubes: Vec<Tube>,
    pub b_tubes: Vec<Tube>,
    pub n3: usize,
}

impl TubeBidiagonal {
    pub fn steps(&self) -> usize {
        self.a_tubes.len()
    }

    /// `k × (k+1) × n3` with `a_i` at `(i, i)` and `b_i` at `(i, i+1)`.
    pub fn extended(&self) -> Tensor3 {
        let k = self.steps();
        let mut t = Tensor3::zeros(k, k + 1, self.n3);
        for i in 0..k {
            t.set_tube(i, i, &self.a_tubes[i]);
            t.set_tube(i, i + 1, &self.b_tubes[i]);
        }
        t
    }

    /// The square `k × k × n3` part.
    pub fn square(&self) -> Tensor3 {
        self.extended().lateral_range(0..self.steps())
    }
}

/// Result of [`ttggka`]: `k` left blocks, `k + 1` right blocks.
#[derive(Debug, Clone)]
pub struct GkTubeResult {
    pub u_blocks: Vec<Tensor3>,
    pub v_blocks: Vec<Tensor3>,
    pub bidiag: TubeBidiagonal,
    /// `(step, slice)` pairs, both 1-based and 0-based respectively, where a
    /// normalization fell back to a random direction.
    pub breakdown_slices: BTreeSet<(usize, usize)>,
    /// 1-based step at which every slice broke down together.
    pub breakdown_step: Option<usize>,
}

impl GkTubeResult {
    pub fn steps(&self) -> usize {
        self.u_blocks.len()
    }
}

struct SliceRun {
    us: Vec<DMatrix<f64>>,
    vs: Vec<DMatrix<f64>>,
    alphas: Vec<f64>,
    betas: Vec<f64>,
    u_hit: Vec<bool>,
    v_hit: Vec<bool>,
}

fn slice_recurrence(
    a: DMatrixView<'_, f64>,
    v1: DMatrix<f64>,
    k: usize,
    tol: f64,
    reorth: bool,
    rng: &mut ChaCha8Rng,
) -> SliceRun {
    let mut run = SliceRun {
        us: Vec::with_capacity(k),
        vs: vec![v1],
        alphas: Vec::with_capacity(k),
        betas: Vec::with_capacity(k),
        u_hit: Vec::with_capacity(k),
        v_hit: Vec::with_capacity(k),
    };
    for i in 0..k {
        let mut u = a * &run.vs[i];
        if i > 0 {
            sub_scaled(&mut u, run.betas[i - 1], &run.us[i - 1]);
        }
        if reorth {
            reorthogonalize(&mut u, &run.us);
        }
        let alpha = normalize_block(&mut u, tol, rng);
        run.u_hit.push(alpha.is_none());
        let alpha = alpha.unwrap_or(0.0);

        let mut v = a.tr_mul(&u);
        sub_scaled(&mut v, alpha, &run.vs[i]);
        if reorth {
            reorthogonalize(&mut v, &run.vs);
        }
        let beta = normalize_block(&mut v, tol, rng);
        run.v_hit.push(beta.is_none());
        run.us.push(u);
        run.alphas.push(alpha);
        run.betas.push(beta.unwrap_or(0.0));
        run.vs.push(v);
    }
    run
}

/// Tube-global Golub-Kahan bidiagonalization. The start block is tube
/// normalized on entry; `tol` is compared with transform-domain slice norms.
pub fn ttggka(
    a: &Tensor3,
    v1: &Tensor3,
    k: usize,
    tol: f64,
    opts: GkOptions,
) -> Result<GkTubeResult> {
    check_inputs(a, v1, k)?;
    if tol.is_nan() || tol < 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance {tol} is not valid")));
    }
    let n3 = a.n3();
    let a_hat = dct_mode3(a);
    let v1_hat = dct_mode3(v1);
    let mut runs: Vec<SliceRun> = (0..n3)
        .into_par_iter()
        .map(|j| {
            let mut rng = slice_rng(opts.seed, j);
            let mut v = v1_hat.slice(j).clone_owned();
            normalize_block(&mut v, tol, &mut rng);
            slice_recurrence(a_hat.slice(j), v, k, tol, opts.reorthogonalize, &mut rng)
        })
        .collect();

    // The slices run independently; the first normalization that failed on
    // every slice at once ends the shared recurrence.
    let mut completed = k;
    let mut breakdown_step = None;
    for i in 0..k {
        if runs.iter().all(|r| r.u_hit[i]) {
            completed = i;
            breakdown_step = Some(i + 1);
            break;
        }
        if runs.iter().all(|r| r.v_hit[i]) {
            completed = i + 1;
            breakdown_step = Some(i + 1);
            break;
        }
    }
    let mut breakdown_slices = BTreeSet::new();
    for (j, r) in runs.iter().enumerate() {
        for i in 0..completed {
            if r.u_hit[i] || r.v_hit[i] {
                breakdown_slices.insert((i + 1, j));
            }
        }
    }
    for r in &mut runs {
        r.us.truncate(completed);
        r.alphas.truncate(completed);
        r.betas.truncate(completed);
        r.vs.truncate(completed + 1);
    }
    let tubes = |pick: &dyn Fn(&SliceRun) -> &Vec<f64>| -> Vec<Tube> {
        (0..completed)
            .map(|i| idct_tube(&Tube(runs.iter().map(|r| pick(r)[i]).collect())))
            .collect()
    };
    let bidiag = TubeBidiagonal {
        a_tubes: tubes(&|r| &r.alphas),
        b_tubes: tubes(&|r| &r.betas),
        n3,
    };
    let us: Vec<Vec<DMatrix<f64>>> = runs.iter().map(|r| r.us.clone()).collect();
    let vs: Vec<Vec<DMatrix<f64>>> = runs.iter().map(|r| r.vs.clone()).collect();
    Ok(GkTubeResult {
        u_blocks: blocks_from_hat(&us, completed)?,
        v_blocks: blocks_from_hat(&vs, completed + 1)?,
        bidiag,
        breakdown_slices,
        breakdown_step,
    })
}

fn stack(blocks: &[Tensor3]) -> Result<Tensor3> {
    let refs: Vec<&Tensor3> = blocks.iter().collect();
    Tensor3::hcat(&refs)
}

/// Residuals `‖A⋆𝕍_k − 𝕌_k⊛C_k‖_F` and
/// `‖Aᵀ⋆𝕌_k − 𝕍_k⊛C_kᵀ − β_k[0, …, 0, 𝒱_{k+1}]‖_F`.
pub fn tggka_residuals(a: &Tensor3, res: &GkMatrixResult) -> Result<(f64, f64)> {
    let k = res.steps();
    if k == 0 {
        return Ok((0.0, 0.0));
    }
    let c = res.c_matrix();
    let vk = stack(&res.v_blocks[..k])?;
    let uk = stack(&res.u_blocks)?;
    let first = &cproduct(a, &vk)? - &global_combine_matrix(&res.u_blocks, &c)?;

    let mut rhs = global_combine_matrix(&res.v_blocks[..k], &c.transpose())?;
    let s = res.v_blocks[0].n2();
    let tail = res.v_blocks[k].scaled(res.betas[k - 1]);
    for col in 0..s {
        for kk in 0..a.n3() {
            for row in 0..a.n2() {
                let idx = (k - 1) * s + col;
                let value = rhs.get(row, idx, kk) + tail.get(row, col, kk);
                rhs.set(row, idx, kk, value);
            }
        }
    }
    let second = &cproduct(&a.transpose(), &uk)? - &rhs;
    Ok((first.fro_norm(), second.fro_norm()))
}

/// Residuals `‖A⋆𝕍_k − 𝕌_k⋆(𝒞_k ⊙ ℐ)‖_F` and `‖Aᵀ⋆𝕌_k − 𝕍_{k+1}⋆(𝒞̃_kᵀ ⊙ ℐ)‖_F`,
/// with `⊙` the c-Kronecker product and `ℐ` the `s × s × n3` identity.
pub fn ttggka_residuals(a: &Tensor3, res: &GkTubeResult) -> Result<(f64, f64)> {
    let k = res.steps();
    if k == 0 {
        return Ok((0.0, 0.0));
    }
    let s = res.v_blocks[0].n2();
    let id = identity_tensor(s, a.n3());
    let uk = stack(&res.u_blocks)?;
    let vk = stack(&res.v_blocks[..k])?;
    let vk1 = stack(&res.v_blocks)?;
    let ck = ckron(&res.bidiag.square(), &id)?;
    let ck_ext_t = ckron(&res.bidiag.extended().transpose(), &id)?;
    let first = &cproduct(a, &vk)? - &cproduct(&uk, &ck)?;
    let second = &cproduct(&a.transpose(), &uk)? - &cproduct(&vk1, &ck_ext_t)?;
    Ok((first.fro_norm(), second.fro_norm()))
}

/// Approximate leading singular tubes and left singular lateral slices.
#[derive(Debug, Clone)]
pub struct LeadingSingular {
    pub sigma_tubes: Vec<Tube>,
    /// `n1 × r × n3`: `𝕌_k ⋆c Φ(:, i, :)` for `i < r`.
    pub p: Tensor3,
    pub steps: usize,
    pub breakdown_step: Option<usize>,
}

/// Runs `k` steps of [`ttggka`] with a single-column start block, takes the
/// c-SVD `𝒞̃_k = Φ ⋆c Σ ⋆c Ψᵀ` and lifts the leading `r` left singular slices.
pub fn leading_singular_elements(
    a: &Tensor3,
    k: usize,
    r: usize,
    opts: GkOptions,
) -> Result<LeadingSingular> {
    if r == 0 || r > k {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= r <= k, got r = {r}, k = {k}"
        )));
    }
    let v1 = start_block(a.n2(), 1, a.n3(), opts.seed);
    let run = ttggka(a, &v1, k, default_tube_tol(a), opts)?;
    lift_leading(&run, r)
}

pub(crate) fn lift_leading(run: &GkTubeResult, r: usize) -> Result<LeadingSingular> {
    let steps = run.steps();
    if steps < r {
        return Err(Error::Breakdown {
            completed: steps,
            requested: r,
        });
    }
    let n3 = run.bidiag.n3;
    let c_hat = dct_mode3(&run.bidiag.extended());
    let u_hat = dct_mode3(&stack(&run.u_blocks)?);
    let parts: Vec<(DMatrix<f64>, Vec<f64>)> = (0..n3)
        .into_par_iter()
        .map(|j| {
            let svd = slice_svd(c_hat.slice(j).clone_owned())?;
            let p = u_hat.slice(j) * svd.u.columns(0, r);
            Ok((p, svd.sigma))
        })
        .collect::<Result<_>>()?;
    let p_slices: Vec<DMatrix<f64>> = parts.iter().map(|(p, _)| p.clone()).collect();
    let sigma_tubes = (0..r)
        .map(|i| idct_tube(&Tube(parts.iter().map(|(_, s)| s[i]).collect())))
        .collect();
    Ok(LeadingSingular {
        sigma_tubes,
        p: idct_mode3(&Tensor3::from_slices(&p_slices)?),
        steps,
        breakdown_step: run.breakdown_step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{identity_tube, tube_dot, tube_times};
    use crate::factor::csvd;
    use crate::transform::dct_tube;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn normalize_examples() {
        // Transform slices of unit norm are left alone.
        let mut hat = Tensor3::random_normal(3, 2, 4, &mut rng(1));
        for j in 0..4 {
            let n = hat.slice(j).norm();
            hat.slice_mut(j).scale_mut(1.0 / n);
        }
        let a = idct_mode3(&hat);
        let n = normalize(&a, 1e-14, &mut rng(0));
        assert!((&n.q - &a).fro_norm() < 1e-12);
        assert!((&n.a - &identity_tube(4)).norm() < 1e-12);

        let m = Tensor3::random_normal(3, 2, 1, &mut rng(2));
        let n = normalize(&m, 1e-14, &mut rng(0));
        assert!((&n.q - &m.scaled(1.0 / m.fro_norm())).fro_norm() < 1e-14);
        assert!((n.a.entries()[0] - m.fro_norm()).abs() < 1e-12);

        let a = Tensor3::random_normal(4, 2, 3, &mut rng(3));
        let n = normalize(&a, 1e-14, &mut rng(0));
        assert!(n.replaced.is_empty());
        assert!((&tube_times(&n.a, &n.q).unwrap() - &a).fro_norm() <= 1e-12 * a.fro_norm());
        let d = dct_tube(&tube_dot(&n.q, &n.q).unwrap());
        assert!(d.entries().iter().all(|x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn normalize_zero_is_total_breakdown() {
        let n = normalize(&Tensor3::zeros(3, 1, 2), 1e-14, &mut rng(0));
        assert!(n.is_total_breakdown());
        assert_eq!(n.a.entries(), &[0.0, 0.0]);
        let d = dct_tube(&tube_dot(&n.q, &n.q).unwrap());
        assert!(d.entries().iter().all(|x| (x - 1.0).abs() < 1e-12));
    }

    fn textbook_gk(a: &DMatrix<f64>, v1: &DMatrix<f64>, k: usize) -> (Vec<f64>, Vec<f64>) {
        let mut v = v1 / v1.norm();
        let mut u_prev = DMatrix::zeros(a.nrows(), 1);
        let (mut al, mut be) = (vec![], vec![]);
        let mut beta = 0.0;
        for _ in 0..k {
            let mut u = a * &v - &u_prev * beta;
            let alpha = u.norm();
            u /= alpha;
            let mut w = a.transpose() * &u - &v * alpha;
            beta = w.norm();
            w /= beta;
            al.push(alpha);
            be.push(beta);
            u_prev = u;
            v = w;
        }
        (al, be)
    }

    #[test]
    fn tggka_matches_textbook_for_matrices() {
        let a = Tensor3::random_normal(9, 7, 1, &mut rng(4));
        let v1 = start_block(7, 1, 1, 5);
        let res = tggka(&a, &v1, 5, GkOptions::literal()).unwrap();
        let (al, be) = textbook_gk(&a.slice(0).clone_owned(), &v1.slice(0).clone_owned(), 5);
        for i in 0..5 {
            assert!((res.alphas[i] - al[i]).abs() < 1e-12);
            assert!((res.betas[i] - be[i]).abs() < 1e-12);
        }
        let c = res.c_matrix();
        let ctc = c.transpose() * &c;
        assert!((&ctc - ctc.transpose()).amax() < 1e-15);
        for i in 0..5usize {
            for j in 0..5usize {
                if i.abs_diff(j) > 1 {
                    assert_eq!(ctc[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn tggka_diagonal_breakdown() {
        let a = Tensor3::from_matrix(&DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            3.0, 2.0, 1.0,
        ])));
        let mut v1 = Tensor3::zeros(3, 1, 1);
        v1.set(0, 0, 0, 1.0);
        let res = tggka(&a, &v1, 3, GkOptions::literal()).unwrap();
        assert_eq!(res.alphas, vec![3.0]);
        assert_eq!(res.betas, vec![0.0]);
        assert_eq!(res.breakdown_step, Some(1));
        assert_eq!(res.v_blocks.len(), 2);
    }

    #[test]
    fn tggka_first_step_and_relations() {
        let a = Tensor3::random_normal(6, 5, 3, &mut rng(6));
        let v1 = start_block(5, 1, 3, 7);
        let res = tggka(&a, &v1, 1, GkOptions::literal()).unwrap();
        let av = cproduct(&a, &res.v_blocks[0]).unwrap();
        assert!((&av - &res.u_blocks[0].scaled(res.alphas[0])).fro_norm() < 1e-12 * a.fro_norm());

        for s in [1, 2] {
            let v1 = start_block(5, s, 3, 8);
            let res = tggka(&a, &v1, 4, GkOptions::literal()).unwrap();
            for b in res.u_blocks.iter().chain(&res.v_blocks) {
                assert!((b.fro_norm() - 1.0).abs() < 1e-12);
            }
            let (r1, r2) = tggka_residuals(&a, &res).unwrap();
            assert!(r1 <= 1e-10 * a.fro_norm() && r2 <= 1e-10 * a.fro_norm());
        }
    }

    #[test]
    fn ttggka_degenerates_to_tggka_for_one_slice() {
        let a = Tensor3::random_normal(8, 6, 1, &mut rng(9));
        let v1 = start_block(6, 1, 1, 10);
        let g = tggka(&a, &v1, 4, GkOptions::literal()).unwrap();
        let t = ttggka(&a, &v1, 4, 1e-14, GkOptions::literal()).unwrap();
        for i in 0..4 {
            assert!((t.bidiag.a_tubes[i].entries()[0] - g.alphas[i]).abs() < 1e-12);
            assert!((t.bidiag.b_tubes[i].entries()[0] - g.betas[i]).abs() < 1e-12);
            assert!((&t.u_blocks[i] - &g.u_blocks[i]).fro_norm() < 1e-10);
        }
    }

    #[test]
    fn ttggka_first_step_and_relations() {
        let a = Tensor3::random_normal(8, 6, 3, &mut rng(11));
        let v1 = start_block(6, 1, 3, 12);
        let t = ttggka(&a, &v1, 1, default_tube_tol(&a), GkOptions::literal()).unwrap();
        let lhs = cproduct(&a, &t.v_blocks[0]).unwrap();
        let rhs = tube_times(&t.bidiag.a_tubes[0], &t.u_blocks[0]).unwrap();
        assert!((&lhs - &rhs).fro_norm() < 1e-12 * a.fro_norm());

        for s in [1, 2] {
            let v1 = start_block(6, s, 3, 13);
            let t = ttggka(&a, &v1, 5, default_tube_tol(&a), GkOptions::literal()).unwrap();
            assert!(t.breakdown_slices.is_empty());
            let e = identity_tube(3);
            for b in t.u_blocks.iter().chain(&t.v_blocks) {
                assert!((&tube_dot(b, b).unwrap() - &e).norm() < 1e-10);
            }
            let (r1, r2) = ttggka_residuals(&a, &t).unwrap();
            assert!(r1 <= 1e-9 * a.fro_norm() && r2 <= 1e-9 * a.fro_norm(), "{r1} {r2}");
            let c = dct_mode3(&t.bidiag.extended());
            for j in 0..3 {
                for row in 0..5 {
                    for col in 0..6 {
                        if col != row && col != row + 1 {
                            assert_eq!(c.get(row, col, j), 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn ttggka_reaches_total_breakdown_past_the_rank() {
        let a = Tensor3::random_normal(4, 3, 2, &mut rng(14));
        let v1 = start_block(3, 1, 2, 15);
        let t = ttggka(&a, &v1, 6, default_tube_tol(&a), GkOptions::default()).unwrap();
        assert_eq!(t.steps(), 3);
        assert_eq!(t.breakdown_step, Some(3));
        let (r1, r2) = ttggka_residuals(&a, &t).unwrap();
        assert!(r1 <= 1e-9 * a.fro_norm() && r2 <= 1e-9 * a.fro_norm());
    }

    #[test]
    fn leading_elements_match_full_csvd() {
        let a = Tensor3::random_normal(10, 7, 3, &mut rng(16));
        let full = csvd(&a).unwrap();
        let lead = leading_singular_elements(&a, 7, 3, GkOptions::default()).unwrap();
        let s1 = full.s.tube(0, 0);
        assert!((&lead.sigma_tubes[0] - &s1).norm() <= 1e-8 * s1.norm());
        let ptp = crate::algebra::cproduct_tn(&lead.p, &lead.p).unwrap();
        assert!((&ptp - &identity_tensor(3, 3)).fro_norm() < 1e-10);
        assert!(matches!(
            leading_singular_elements(&a, 2, 3, GkOptions::default()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn matrix_leading_value_converges() {
        let a = Tensor3::random_normal(30, 20, 1, &mut rng(17));
        let sigma = crate::dense::singular_values(&a.slice(0).clone_owned()).unwrap()[0];
        let errs: Vec<f64> = [2, 6, 20]
            .iter()
            .map(|&k| {
                let l = leading_singular_elements(&a, k, 1, GkOptions::default()).unwrap();
                (l.sigma_tubes[0].entries()[0] - sigma).abs()
            })
            .collect();
        assert!(errs[2] <= errs[0]);
        assert!(errs[2] < 1e-10 * sigma);
    }
}
