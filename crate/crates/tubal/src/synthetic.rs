//! Seeded synthetic data for tests, benchmarks and demos.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::tensor::Tensor3;
use crate::transform::idct_mode3;

/// Labelled train and test images.
#[derive(Debug, Clone)]
pub struct LabelledSet {
    pub train: Vec<Tensor3>,
    pub train_labels: Vec<String>,
    pub test: Vec<Tensor3>,
    pub test_labels: Vec<String>,
}

/// `classes` Gaussian clusters of `shape`-sized images. Class means have
/// entries of standard deviation `separation`; every image adds unit
/// standard-normal noise.
pub fn gaussian_classes(
    classes: usize,
    train_per_class: usize,
    test_per_class: usize,
    shape: (usize, usize, usize),
    separation: f64,
    seed: u64,
) -> LabelledSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n1, n2, n3) = shape;
    let means: Vec<Tensor3> = (0..classes)
        .map(|_| Tensor3::random_normal(n1, n2, n3, &mut rng).scaled(separation))
        .collect();
    let mut set = LabelledSet {
        train: Vec::new(),
        train_labels: Vec::new(),
        test: Vec::new(),
        test_labels: Vec::new(),
    };
    for (c, mean) in means.iter().enumerate() {
        for i in 0..train_per_class + test_per_class {
            let img = mean + &Tensor3::random_normal(n1, n2, n3, &mut rng);
            let label = format!("class{c}");
            if i < train_per_class {
                set.train.push(img);
                set.train_labels.push(label);
            } else {
                set.test.push(img);
                set.test_labels.push(label);
            }
        }
    }
    set
}

/// A tensor whose transform-domain slices are `U_j diag(σ_j) V_jᵀ` with
/// random orthonormal factors and `σ_j(i) = c_j · rate^i`.
pub fn decaying_spectrum(n1: usize, n2: usize, n3: usize, rate: f64, seed: u64) -> Tensor3 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = n1.min(n2);
    let mut hat = Tensor3::zeros(n1, n2, n3);
    for j in 0..n3 {
        let u = Tensor3::random_normal(n1, m, 1, &mut rng).slice(0).clone_owned().qr().q();
        let v = Tensor3::random_normal(n2, m, 1, &mut rng).slice(0).clone_owned().qr().q();
        let lead: f64 = 1.0 + rng.sample::<f64, _>(StandardNormal).abs();
        let sigma = nalgebra::DVector::from_fn(m, |i, _| lead * rate.powi(i as i32));
        let s = u * nalgebra::DMatrix::from_diagonal(&sigma) * v.transpose();
        hat.slice_mut(j).copy_from(&s);
    }
    idct_mode3(&hat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::slice_singular_values;

    #[test]
    fn spectrum_is_as_requested() {
        let t = decaying_spectrum(8, 6, 2, 0.5, 3);
        for sv in slice_singular_values(&t).unwrap() {
            for w in sv.windows(2) {
                assert!((w[1] / w[0] - 0.5).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn classes_have_requested_sizes() {
        let s = gaussian_classes(3, 4, 2, (2, 2, 1), 5.0, 1);
        assert_eq!((s.train.len(), s.test.len()), (12, 6));
        assert_eq!(s.test_labels[5], "class2");
    }
}
