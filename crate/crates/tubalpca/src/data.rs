//! Resolves `--data` / `--idx` into decoded, labelled images.

use std::path::Path;

use tubal::dataset::{load_image, load_image_dir, parse_size, Manifest};
use tubal::idx::load_idx;
use tubal::model_file::ModelFile;
use tubal::{Error, Result, Tensor3};

use crate::cli::DataArgs;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Train,
    Test,
}

pub struct Labelled {
    pub images: Vec<Tensor3>,
    pub labels: Vec<String>,
    pub image_size: (usize, usize),
    pub bilinear: bool,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub fn size_arg(size: Option<&str>) -> Result<Option<(usize, usize)>> {
    size.map(parse_size).transpose()
}

/// Loads the images of one split. Settings missing from the command line
/// fall back to the model header, then to the manifest.
pub fn load(args: &DataArgs, seed: u64, role: Role, model: Option<&ModelFile>) -> Result<Labelled> {
    let size = size_arg(args.size.as_deref())?.or(model.map(|m| m.image_size));
    let channels = args.channels.or(model.map(ModelFile::channels));
    if let Some(paths) = &args.idx {
        if args.channels.is_some_and(|c| c != 1) {
            return Err(usage("IDX data has exactly one channel"));
        }
        let mut data = load_idx(&paths[0], &paths[1])?;
        if let Some(n) = args.limit {
            data = data.head(n);
        }
        return Ok(Labelled {
            images: data.images(),
            labels: data.label_strings(),
            image_size: (data.rows, data.cols),
            bilinear: false,
        });
    }
    let Some(path) = &args.data else {
        return Err(usage("one of --data or --idx is required"));
    };
    let manifest = manifest_for(path, args, seed, size, channels)?;
    if let Some(out) = &args.write_manifest {
        manifest.save(out)?;
    }
    let split = load_image_dir(&manifest)?;
    let (images, labels) = match role {
        Role::Train => (split.train, split.train_labels),
        Role::Test => (split.test, split.test_labels),
    };
    Ok(Labelled {
        images,
        labels,
        image_size: manifest.image_size,
        bilinear: true,
    })
}

fn manifest_for(
    path: &Path,
    args: &DataArgs,
    seed: u64,
    size: Option<(usize, usize)>,
    channels: Option<usize>,
) -> Result<Manifest> {
    if path.is_dir() {
        let size = size.ok_or_else(|| usage("--size is required with an image directory"))?;
        return Manifest::from_directory(path, args.test_count, size, channels.unwrap_or(3), seed);
    }
    let mut manifest = Manifest::load(path)?;
    if let Some(s) = size {
        manifest.image_size = s;
    }
    if let Some(c) = channels {
        manifest.channels = c;
    }
    Ok(manifest)
}

/// Decodes a single image for a model, resized to the training size.
pub fn image_for_model(path: &Path, model: &ModelFile) -> Result<Tensor3> {
    load_image(path, Some(model.image_size), model.channels())
}
