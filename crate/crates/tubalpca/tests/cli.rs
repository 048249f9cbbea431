use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tubal::dataset::{load_image, save_image};
use tubal::synthetic::gaussian_classes;
use tubal::Tensor3;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tubalpca"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn tubalpca")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}, stderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn field<'a>(text: &'a str, key: &str) -> &'a str {
    text.split_whitespace()
        .find_map(|w| w.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
        .unwrap_or_else(|| panic!("no `{key}=` in {text}"))
}

/// Maps unit-variance data into `[0, 1]` so it survives 8-bit PNG storage.
fn to_pixels(t: &Tensor3) -> Tensor3 {
    let (a, b, c) = t.shape();
    Tensor3::from_fn(a, b, c, |i, j, k| (0.5 + 0.06 * t.get(i, j, k)).clamp(0.0, 1.0))
}

/// `root/<label>/<n>.png`, `per_class` images for each of `classes` labels.
fn write_dataset(root: &Path, classes: usize, per_class: usize, seed: u64) {
    let set = gaussian_classes(classes, per_class, 0, (16, 12, 3), 5.0, seed);
    for (i, (img, label)) in set.train.iter().zip(&set.train_labels).enumerate() {
        let dir = root.join(label);
        fs::create_dir_all(&dir).unwrap();
        save_image(dir.join(format!("{i:03}.png")), &to_pixels(img)).unwrap();
    }
}

fn gradient_image(path: &Path) {
    let t = Tensor3::from_fn(20, 14, 3, |i, j, k| {
        let x = (i as f64 * 0.37 + j as f64 * 0.11 + k as f64).sin();
        0.5 + 0.45 * x * ((i * j) as f64 * 0.05).cos()
    });
    save_image(path, &t).unwrap();
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn evaluate_synthetic_png_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("faces");
    write_dataset(&data, 10, 12, 21);
    let model = dir.path().join("m.ttpca");
    let manifest = dir.path().join("faces.tsv");
    let common = ["--size", "16x12", "--test-count", "4", "--seed", "5"];

    let mut args = vec!["train", "--data", s(&data), "--rank", "10", "--model", s(&model)];
    args.extend(common);
    args.extend(["--write-manifest", s(&manifest)]);
    let out = stdout(&run(&args));
    assert_eq!(field(&out, "N"), "80");

    let csv = dir.path().join("sweep.csv");
    let mut args = vec!["evaluate", "--model", s(&model), "--data", s(&data), "--out-csv", s(&csv)];
    args.extend(common);
    let out = stdout(&run(&args));
    let rate: f64 = field(&out, "rate").parse().unwrap();
    assert!(rate >= 0.95, "{out}");
    assert_eq!(field(&out, "total"), "40");
    let sweep = fs::read_to_string(&csv).unwrap();
    assert!(sweep.starts_with("r,rate,correct,total\n1,"));
    assert!(sweep.lines().last().unwrap().starts_with("10,"));

    // The saved manifest reproduces the same split.
    let again = stdout(&run(&["evaluate", "--model", s(&model), "--data", s(&manifest)]));
    assert_eq!(field(&again, "rate"), field(&out, "rate"));
}

#[test]
fn classify_prints_label_distance_and_top_list() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("faces");
    write_dataset(&data, 3, 5, 4);
    let model = dir.path().join("m.ttpca");
    let train = ["train", "--data", s(&data), "--size", "16x12", "--rank", "4", "--method", "eigenface"];
    stdout(&run(&[&train[..], &["--model", s(&model)]].concat()));

    let probe = data.join("class1").join("005.png");
    let out = stdout(&run(&["classify", "--model", s(&model), "--top", "3", s(&probe)]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 4);
    let head: Vec<&str> = lines[0].split('\t').collect();
    assert_eq!(head[1], "class1");
    // A training image is its own nearest neighbour.
    assert!(head[2].parse::<f64>().unwrap() < 1e-8);
    assert!(lines[1].trim_start().starts_with("1\tclass1\t5\t"));
}

#[test]
fn corrupted_model_is_a_clean_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("faces");
    write_dataset(&data, 2, 4, 8);
    let model = dir.path().join("m.ttpca");
    stdout(&run(&["train", "--data", s(&data), "--size", "16x12", "--rank", "2", "--model", s(&model)]));

    let mut bytes = fs::read(&model).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x40;
    fs::write(&model, bytes).unwrap();
    let probe = data.join("class0").join("000.png");
    let out = run(&["classify", "--model", s(&model), s(&probe)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error kind=data msg="), "{err}");
    assert!(err.contains("checksum"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn compress_full_rank_reproduces_the_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.png");
    gradient_image(&input);
    let output = dir.path().join("out.png");
    let csv = dir.path().join("spectrum.csv");
    let out = stdout(&run(&[
        "compress", s(&input), "--rank", "14", "-o", s(&output), "--out-csv", s(&csv),
    ]));
    assert!(field(&out, "relative_error").parse::<f64>().unwrap() < 1e-10);
    let (a, b) = (load_image(&input, None, 3).unwrap(), load_image(&output, None, 3).unwrap());
    assert!((&a - &b).max_abs() <= 0.5 / 255.0 + 1e-12);

    let text = fs::read_to_string(&csv).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').skip(1).map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 14);
    for col in 0..rows[0].len() {
        assert!(rows.windows(2).all(|w| w[1][col] <= w[0][col] + 1e-12), "column {col}");
    }
}

#[test]
fn compress_error_shrinks_with_rank() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.png");
    gradient_image(&input);
    let errors: Vec<f64> = (1..=14)
        .map(|r| {
            let o: PathBuf = dir.path().join(format!("r{r}.png"));
            let out = stdout(&run(&["compress", s(&input), "--rank", &r.to_string(), "-o", s(&o)]));
            field(&out, "relative_error").parse().unwrap()
        })
        .collect();
    assert!(errors.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{errors:?}");

    let out = run(&["compress", s(&input), "--rank", "15", "-o", s(&dir.path().join("x.png"))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn svd_reports_ranks_and_tubes() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.png");
    gradient_image(&input);
    let out = stdout(&run(&["svd", s(&input), "--top", "3"]));
    let mut lines = out.lines();
    let head = lines.next().unwrap();
    assert_eq!(field(head, "shape"), "20x14x3");
    assert_eq!(field(head, "multi_rank").split(',').count(), 3);
    let norms: Vec<f64> = lines.map(|l| l.split('\t').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(norms.len(), 3);
    assert!(norms[0] >= norms[1] && norms[1] >= norms[2]);
}

#[test]
fn training_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("faces");
    write_dataset(&data, 3, 6, 2);
    let train = |name: &str, threads: &str| {
        let model = dir.path().join(name);
        let out = bin()
            .env("TUBALPCA_THREADS", threads)
            .args(["train", "--data", s(&data), "--size", "16x12", "--rank", "5", "--seed", "7"])
            .args(["--model", s(&model)])
            .output()
            .unwrap();
        stdout(&out);
        fs::read(model).unwrap()
    };
    assert_eq!(train("a", "1"), train("b", "4"));
}

#[test]
fn bench_reports_both_timings() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bench.csv");
    let out = stdout(&run(&[
        "bench", "--synthetic", "20x10x2", "--classes", "4", "--per-class", "10", "-r", "3", "-k", "6",
        "--out-csv", s(&csv),
    ]));
    assert_eq!(field(&out, "tensor"), "200x40x2");
    assert!(field(&out, "speedup").parse::<f64>().unwrap() > 0.0);
    assert_eq!(fs::read_to_string(csv).unwrap().lines().count(), 2);
}

#[test]
fn usage_errors_exit_with_one() {
    let out = run(&["train", "--rank", "3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error kind=usage"));

    let out = run(&["train", "--rank", "3", "--model", "m"]);
    assert_eq!(out.status.code(), Some(1));

    let out = bin().env("TUBALPCA_THREADS", "zero").args(["svd", "x.png"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn missing_files_are_data_errors() {
    let out = run(&["classify", "--model", "/nonexistent/model", "x.png"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["svd", "/nonexistent/image.png"]);
    assert_eq!(out.status.code(), Some(2));
}
