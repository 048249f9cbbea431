use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "tubalpca", version, about = "Tubal PCA face and digit recognition on the cosine-transform tensor product")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a recognition model and write it to disk.
    Train(TrainArgs),
    /// Identify one or more images with a trained model.
    Classify(ClassifyArgs),
    /// Measure the recognition rate on a labelled test set.
    Evaluate(EvaluateArgs),
    /// Low-tubal-rank approximation of a single image.
    Compress(CompressArgs),
    /// Report the singular tubes of an image.
    Svd(SvdArgs),
    /// Time Golub-Kahan training against full c-SVD training.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Ttpca,
    Csvd,
    Eigenface,
}

/// Where labelled images come from.
#[derive(Debug, Args)]
pub struct DataArgs {
    /// Image directory with one subdirectory per label, or a manifest file.
    #[arg(long, value_name = "PATH", conflicts_with = "idx")]
    pub data: Option<PathBuf>,

    /// IDX image file and IDX label file.
    #[arg(long, num_args = 2, value_names = ["IMAGES", "LABELS"])]
    pub idx: Option<Vec<PathBuf>>,

    /// Use only the first N IDX items.
    #[arg(long, value_name = "N", requires = "idx")]
    pub limit: Option<usize>,

    /// Resize images to ROWSxCOLS.
    #[arg(long, value_name = "ROWSxCOLS")]
    pub size: Option<String>,

    /// 1 for grayscale, 3 for RGB.
    #[arg(long)]
    pub channels: Option<usize>,

    /// Images held out per label when splitting a directory.
    #[arg(long, default_value_t = 0)]
    pub test_count: usize,

    /// Write the manifest built from a directory to this path.
    #[arg(long, value_name = "PATH")]
    pub write_manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Number of projection directions.
    #[arg(long, short = 'r')]
    pub rank: usize,

    /// Golub-Kahan steps; defaults to 2r + 20, capped by the data size.
    #[arg(long, short = 'k')]
    pub steps: Option<usize>,

    #[arg(long, value_enum, default_value_t = Method::Ttpca)]
    pub method: Method,

    /// Seed for the split and the Golub-Kahan start block.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output model path.
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub model: PathBuf,

    /// Also list the M nearest training items.
    #[arg(long, value_name = "M")]
    pub top: Option<usize>,

    #[arg(required = true)]
    pub images: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,

    #[command(flatten)]
    pub data: DataArgs,

    /// Must match the seed used for training when splitting a directory.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Truncation indices for the sweep, e.g. `1,5,10,20,40`.
    #[arg(long, value_delimiter = ',')]
    pub ranks: Option<Vec<usize>>,

    /// Write the sweep as CSV.
    #[arg(long, value_name = "PATH")]
    pub out_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompressArgs {
    pub input: PathBuf,

    #[arg(long, short = 'r')]
    pub rank: usize,

    /// Output image path.
    #[arg(long, short = 'o')]
    pub output: PathBuf,

    /// Write singular-tube norms and per-slice singular values as CSV.
    #[arg(long, value_name = "PATH")]
    pub out_csv: Option<PathBuf>,

    #[arg(long, default_value_t = 3)]
    pub channels: usize,

    #[arg(long, value_name = "ROWSxCOLS")]
    pub size: Option<String>,
}

#[derive(Debug, Args)]
pub struct SvdArgs {
    pub input: PathBuf,

    /// Number of singular tubes to print.
    #[arg(long, default_value_t = 10)]
    pub top: usize,

    /// Relative threshold for the tubal rank and multi-rank.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,

    #[arg(long, value_name = "PATH")]
    pub out_csv: Option<PathBuf>,

    #[arg(long, default_value_t = 3)]
    pub channels: usize,

    #[arg(long, value_name = "ROWSxCOLS")]
    pub size: Option<String>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Labelled images to train on; a seeded synthetic set is used otherwise.
    #[command(flatten)]
    pub data: DataArgs,

    /// Shape ROWSxCOLSxCHANNELS of the synthetic images.
    #[arg(long, default_value = "100x100x3")]
    pub synthetic: String,

    /// Synthetic classes and images per class.
    #[arg(long, default_value_t = 50)]
    pub classes: usize,
    #[arg(long, default_value_t = 10)]
    pub per_class: usize,

    #[arg(long, short = 'r', default_value_t = 20)]
    pub rank: usize,

    #[arg(long, short = 'k', default_value_t = 30)]
    pub steps: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, value_name = "PATH")]
    pub out_csv: Option<PathBuf>,
}
