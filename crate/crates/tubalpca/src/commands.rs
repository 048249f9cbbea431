use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;
use tubal::algebra::{multi_rank, tubal_rank};
use tubal::bench::bench_training;
use tubal::dataset::{load_image, save_image};
use tubal::factor::{csvd_economy, truncated_csvd, CsvdFactors};
use tubal::golub_kahan::GkOptions;
use tubal::model_file::{load_model, save_model, ModelFile};
use tubal::pca::{
    build_csvd_model, build_eigenface_model, build_training_tensor, build_ttpca_model, evaluate,
    flatten_image, EigenMethod, TtpcaModel,
};
use tubal::synthetic::gaussian_classes;
use tubal::{Error, Result, Tensor3};

use crate::cli::{BenchArgs, ClassifyArgs, CompressArgs, EvaluateArgs, Method, SvdArgs, TrainArgs};
use crate::data::{self, image_for_model, size_arg, Role};

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Default Golub-Kahan step count for a target rank.
fn default_steps(r: usize, cap: usize) -> usize {
    (2 * r + 20).min(cap)
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let set = data::load(&args.data, args.seed, Role::Train, None)?;
    if set.images.is_empty() {
        return Err(Error::InvalidArgument("no training images".into()));
    }
    let started = Instant::now();
    let opts = GkOptions {
        seed: args.seed,
        ..GkOptions::default()
    };
    let model = match args.method {
        Method::Ttpca | Method::Csvd => {
            let (x, mean) = build_training_tensor(&set.images)?;
            if args.method == Method::Csvd {
                build_csvd_model(&x, &mean, &set.labels, args.rank)?
            } else {
                let k = args.steps.unwrap_or(default_steps(args.rank, x.n1().min(x.n2())));
                build_ttpca_model(&x, &mean, &set.labels, args.rank, k, opts)?
            }
        }
        Method::Eigenface => {
            let columns: Vec<_> = set.images.iter().map(flatten_image).collect();
            check_same_len(&columns)?;
            let m = DMatrix::from_columns(&columns);
            let cap = m.nrows().min(m.ncols());
            let steps = args.steps.unwrap_or(default_steps(args.rank, cap));
            let method = EigenMethod::GolubKahan {
                steps,
                seed: args.seed,
            };
            build_eigenface_model(&m, &set.labels, args.rank, method)?.to_ttpca()
        }
    };
    let elapsed = started.elapsed().as_secs_f64();
    let file = ModelFile {
        model,
        image_size: set.image_size,
        unit_pixels: true,
        bilinear: set.bilinear,
    };
    save_model(&args.model, &file)?;
    let m = &file.model;
    println!(
        "model={} method={} L={} N={} n3={} r={} k={} train_seconds={elapsed:.3}",
        args.model.display(),
        m.method.name(),
        m.image_len(),
        m.train_count(),
        m.n3(),
        m.r,
        m.k
    );
    Ok(())
}

fn check_same_len(columns: &[nalgebra::DVector<f64>]) -> Result<()> {
    match columns.iter().map(|c| c.len()).collect::<std::collections::BTreeSet<_>>().len() {
        1 => Ok(()),
        _ => Err(Error::InvalidInput("training images differ in size".into())),
    }
}

pub fn classify(args: &ClassifyArgs) -> Result<()> {
    let file = load_model(&args.model)?;
    for path in &args.images {
        let image = image_for_model(path, &file)?;
        let best = file.model.classify(&image)?;
        println!("{}\t{}\t{:.6e}", path.display(), best.label, best.distance);
        if let Some(m) = args.top {
            for (rank, hit) in file.model.top(&image, m)?.iter().enumerate() {
                println!("  {}\t{}\t{}\t{:.6e}", rank + 1, hit.label, hit.index, hit.distance);
            }
        }
    }
    Ok(())
}

fn sweep_ranks(requested: Option<&[usize]>, model: &TtpcaModel) -> Result<Vec<usize>> {
    let ranks: Vec<usize> = match requested {
        Some(list) => {
            if let Some(bad) = list.iter().find(|&&r| r == 0 || r > model.r) {
                return Err(Error::InvalidArgument(format!(
                    "sweep index {bad} outside 1..={}",
                    model.r
                )));
            }
            list.to_vec()
        }
        None => [1, 5, 10, 20, 40]
            .into_iter()
            .filter(|&r| r < model.r)
            .chain([model.r])
            .collect(),
    };
    Ok(ranks)
}

pub fn evaluate_cmd(args: &EvaluateArgs) -> Result<()> {
    let file = load_model(&args.model)?;
    let set = data::load(&args.data, args.seed, Role::Test, Some(&file))?;
    let ranks = sweep_ranks(args.ranks.as_deref(), &file.model)?;
    let mut csv = String::from("r,rate,correct,total\n");
    let mut full = None;
    for &r in &ranks {
        let model = file.model.truncate(r)?;
        let report = evaluate(&model, &set.images, &set.labels)?;
        let _ = writeln!(csv, "{r},{:.6},{},{}", report.rate, report.correct, report.total);
        if r == file.model.r {
            full = Some(report);
        }
    }
    let report = match full {
        Some(rep) => rep,
        None => evaluate(&file.model, &set.images, &set.labels)?,
    };
    println!(
        "rate={:.6} correct={} total={} r={}",
        report.rate, report.correct, report.total, file.model.r
    );
    for (class, rate) in report.classes.iter().zip(&report.per_class) {
        if let Some(rate) = rate {
            println!("class\t{class}\t{rate:.6}");
        }
    }
    print!("{csv}");
    if let Some(path) = &args.out_csv {
        write_text(path, &csv)?;
    }
    Ok(())
}

fn spectrum_csv(f: &CsvdFactors) -> String {
    let norms = f.singular_tube_norms();
    let slices = f.transform_singular_values();
    let mut csv = String::from("i,tube_norm");
    for k in 0..slices.len() {
        let _ = write!(csv, ",sigma_slice{}", k + 1);
    }
    csv.push('\n');
    for (i, norm) in norms.iter().enumerate() {
        let _ = write!(csv, "{},{norm:.12e}", i + 1);
        for s in &slices {
            let _ = write!(csv, ",{:.12e}", s[i]);
        }
        csv.push('\n');
    }
    csv
}

fn load_single(path: &Path, size: Option<&str>, channels: usize) -> Result<Tensor3> {
    load_image(path, size_arg(size)?, channels)
}

pub fn compress(args: &CompressArgs) -> Result<()> {
    let a = load_single(&args.input, args.size.as_deref(), args.channels)?;
    let t = truncated_csvd(&a, args.rank)?;
    save_image(&args.output, &t.approx)?;
    let err = (&a - &t.approx).fro_norm() / a.fro_norm().max(f64::MIN_POSITIVE);
    let (n1, n2, n3) = a.shape();
    println!(
        "output={} shape={n1}x{n2}x{n3} r={} relative_error={err:.6e}",
        args.output.display(),
        args.rank
    );
    if let Some(path) = &args.out_csv {
        write_text(path, &spectrum_csv(&csvd_economy(&a)?))?;
    }
    Ok(())
}

pub fn svd(args: &SvdArgs) -> Result<()> {
    let a = load_single(&args.input, args.size.as_deref(), args.channels)?;
    let f = csvd_economy(&a)?;
    let (n1, n2, n3) = a.shape();
    let ranks = multi_rank(&a, args.tol)?;
    println!(
        "shape={n1}x{n2}x{n3} tubal_rank={} multi_rank={}",
        tubal_rank(&a, args.tol)?,
        ranks.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
    );
    for (i, tube) in f.singular_tubes().iter().enumerate().take(args.top) {
        let entries = tube.entries().iter().map(|x| format!("{x:.6e}")).collect::<Vec<_>>();
        println!("{}\t{:.6e}\t{}", i + 1, tube.norm(), entries.join(" "));
    }
    if let Some(path) = &args.out_csv {
        write_text(path, &spectrum_csv(&f))?;
    }
    Ok(())
}

fn parse_shape(s: &str) -> Result<(usize, usize, usize)> {
    let parts: Vec<usize> = s
        .split(['x', 'X'])
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::InvalidArgument(format!("shape `{s}` is not of the form ROWSxCOLSxCHANNELS")))?;
    match parts[..] {
        [a, b, c] if a > 0 && b > 0 && c > 0 => Ok((a, b, c)),
        _ => Err(Error::InvalidArgument(format!(
            "shape `{s}` is not of the form ROWSxCOLSxCHANNELS"
        ))),
    }
}

pub fn bench(args: &BenchArgs) -> Result<()> {
    let (images, labels) = if args.data.data.is_some() || args.data.idx.is_some() {
        let set = data::load(&args.data, args.seed, Role::Train, None)?;
        (set.images, set.labels)
    } else {
        let shape = parse_shape(&args.synthetic)?;
        let set = gaussian_classes(args.classes, args.per_class, 0, shape, 1.0, args.seed);
        (set.train, set.train_labels)
    };
    let (x, mean) = build_training_tensor(&images)?;
    let opts = GkOptions {
        seed: args.seed,
        ..GkOptions::default()
    };
    let report = bench_training(&x, &mean, &labels, args.rank, args.steps, opts)?;
    let (l, n, n3) = x.shape();
    let (tt, cs) = (report.ttpca.as_secs_f64(), report.csvd.as_secs_f64());
    println!(
        "tensor={l}x{n}x{n3} r={} k={} ttpca_seconds={tt:.4} csvd_seconds={cs:.4} speedup={:.3}",
        args.rank,
        args.steps,
        report.speedup()
    );
    if let Some(path) = &args.out_csv {
        let csv = format!(
            "L,N,n3,r,k,ttpca_seconds,csvd_seconds,speedup\n{l},{n},{n3},{},{},{tt:.6},{cs:.6},{:.6}\n",
            args.rank,
            args.steps,
            report.speedup()
        );
        write_text(path, &csv)?;
    }
    Ok(())
}
