use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tubal::golub_kahan::GkOptions;
use tubal::idx::{load_idx, IdxData};
use tubal::pca::{build_csvd_model, build_training_tensor, build_ttpca_model, evaluate};
use tubal::synthetic::gaussian_classes;

fn fixture(name: &str) -> IdxData {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data");
    load_idx(
        dir.join(format!("mnist-{name}-images.idx3")),
        dir.join(format!("mnist-{name}-labels.idx1")),
    )
    .unwrap()
}

#[test]
fn training_set_is_recalled_at_full_rank() {
    let set = gaussian_classes(4, 5, 0, (6, 5, 2), 2.0, 3);
    let (x, mean) = build_training_tensor(&set.train).unwrap();
    let model = build_csvd_model(&x, &mean, &set.train_labels, 20).unwrap();
    let report = evaluate(&model, &set.train, &set.train_labels).unwrap();
    assert_eq!(report.rate, 1.0);
    assert!(report.predictions.iter().enumerate().all(|(i, m)| m.index == i && m.distance <= 1e-8));
}

#[test]
fn permuted_labels_give_chance_level() {
    let set = gaussian_classes(5, 8, 8, (6, 6, 2), 4.0, 17);
    let (x, mean) = build_training_tensor(&set.train).unwrap();
    let model = build_ttpca_model(&x, &mean, &set.train_labels, 8, 16, GkOptions::default()).unwrap();
    assert!(evaluate(&model, &set.test, &set.test_labels).unwrap().rate >= 0.95);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let trials = 200;
    let mut total = 0.0;
    let mut labels = set.test_labels.clone();
    for _ in 0..trials {
        labels.shuffle(&mut rng);
        total += evaluate(&model, &set.test, &labels).unwrap().rate;
    }
    let mean_rate = total / trials as f64;
    assert!((mean_rate - 0.2).abs() < 0.03, "mean rate {mean_rate}");
}

#[test]
fn digit_rate_grows_with_rank() {
    let (train, test) = (fixture("train").head(1000), fixture("test").head(200));
    let images = train.images();
    let (x, mean) = build_training_tensor(&images).unwrap();
    let labels = train.label_strings();
    let model = build_ttpca_model(&x, &mean, &labels, 40, 100, GkOptions::default()).unwrap();
    let rates: Vec<f64> = [1, 5, 10, 20, 40]
        .iter()
        .map(|&r| {
            let m = model.truncate(r).unwrap();
            evaluate(&m, &test.images(), &test.label_strings()).unwrap().rate
        })
        .collect();
    assert!(rates.windows(2).all(|w| w[1] >= w[0] - 0.02), "{rates:?}");
    assert!(rates[4] > rates[0] + 0.4, "{rates:?}");
}
