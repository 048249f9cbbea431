//! Wall-clock comparison of Golub-Kahan and dense c-SVD training.

use std::time::{Duration, Instant};

use crate::error::Result;
use crate::golub_kahan::GkOptions;
use crate::pca::{build_csvd_model, build_ttpca_model};
use crate::tensor::Tensor3;

#[derive(Debug, Clone, Copy)]
pub struct BenchReport {
    pub ttpca: Duration,
    pub csvd: Duration,
}

impl BenchReport {
    /// Dense time over Golub-Kahan time.
    pub fn speedup(&self) -> f64 {
        self.csvd.as_secs_f64() / self.ttpca.as_secs_f64().max(f64::MIN_POSITIVE)
    }
}

/// Trains both models on the same centered training tensor and times each.
pub fn bench_training(
    x: &Tensor3,
    mean: &Tensor3,
    labels: &[String],
    r: usize,
    k: usize,
    opts: GkOptions,
) -> Result<BenchReport> {
    let start = Instant::now();
    build_ttpca_model(x, mean, labels, r, k, opts)?;
    let ttpca = start.elapsed();
    let start = Instant::now();
    build_csvd_model(x, mean, labels, r)?;
    let csvd = start.elapsed();
    Ok(BenchReport { ttpca, csvd })
}
