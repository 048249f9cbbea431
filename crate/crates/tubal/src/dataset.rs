//! Image-directory datasets: a line-oriented manifest, seeded train/test
//! splits, and image decoding into tensors with one frontal slice per channel.
//!
//! Manifest format:
//!
//! ```text
//! # size 100x100
//! # channels 3
//! # seed 42
//! # resize bilinear
//! person01/img1.jpg<TAB>person01<TAB>train
//! ```
//!
//! Paths are relative to the manifest's directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use image::imageops::FilterType;
use image::{DynamicImage, GrayImage, RgbImage};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tensor::Tensor3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub path: PathBuf,
    pub label: String,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub root: PathBuf,
    pub entries: Vec<Entry>,
    /// `(rows, cols)` after resizing.
    pub image_size: (usize, usize),
    pub channels: usize,
    pub split_seed: u64,
}

const IMAGE_EXTENSIONS: &[&str] = &["png", "jpg", "jpeg", "bmp"];

fn fnv1a(seed: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in seed.to_le_bytes().iter().chain(label.as_bytes()) {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn parse_size(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::InvalidArgument(format!("size `{s}` is not of the form ROWSxCOLS"));
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let rows: usize = a.trim().parse().map_err(|_| bad())?;
    let cols: usize = b.trim().parse().map_err(|_| bad())?;
    if rows == 0 || cols == 0 {
        return Err(bad());
    }
    Ok((rows, cols))
}

fn check_channels(channels: usize) -> Result<()> {
    if channels == 1 || channels == 3 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("channels must be 1 or 3, got {channels}")))
    }
}

impl Manifest {
    /// Builds a manifest from `root/<label>/<image>` and holds out `test_count`
    /// images per label. The held-out images are a seeded shuffle of each
    /// label's files in name order.
    pub fn from_directory(
        root: impl AsRef<Path>,
        test_count: usize,
        image_size: (usize, usize),
        channels: usize,
        split_seed: u64,
    ) -> Result<Manifest> {
        check_channels(channels)?;
        let root = root.as_ref();
        let mut classes: BTreeMap<String, Vec<PathBuf>> = BTreeMap::new();
        let read = |p: &Path| fs::read_dir(p).map_err(|e| Error::io(p, e));
        for dir in read(root)? {
            let dir = dir.map_err(|e| Error::io(root, e))?.path();
            if !dir.is_dir() {
                continue;
            }
            let label = dir.file_name().unwrap_or_default().to_string_lossy().into_owned();
            for f in read(&dir)? {
                let f = f.map_err(|e| Error::io(&dir, e))?.path();
                let ext = f
                    .extension()
                    .map(|e| e.to_string_lossy().to_ascii_lowercase())
                    .unwrap_or_default();
                if f.is_file() && IMAGE_EXTENSIONS.contains(&ext.as_str()) {
                    let rel = f.strip_prefix(root).unwrap_or(&f).to_path_buf();
                    classes.entry(label.clone()).or_default().push(rel);
                }
            }
        }
        if classes.is_empty() {
            return Err(Error::format(root, "no labelled image subdirectories found"));
        }
        let mut entries = Vec::new();
        for (label, mut files) in classes {
            files.sort();
            if files.len() <= test_count {
                return Err(Error::format(
                    root.join(&label),
                    format!(
                        "label `{label}` has {} images, need more than the test count {test_count}",
                        files.len()
                    ),
                ));
            }
            let mut order: Vec<usize> = (0..files.len()).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(fnv1a(split_seed, &label)));
            let mut is_test = vec![false; files.len()];
            for &i in &order[..test_count] {
                is_test[i] = true;
            }
            for (f, t) in files.into_iter().zip(is_test) {
                entries.push(Entry {
                    path: f,
                    label: label.clone(),
                    split: if t { Split::Test } else { Split::Train },
                });
            }
        }
        Ok(Manifest {
            root: root.to_path_buf(),
            entries,
            image_size,
            channels,
            split_seed,
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let (r, c) = self.image_size;
        let _ = writeln!(s, "# size {r}x{c}");
        let _ = writeln!(s, "# channels {}", self.channels);
        let _ = writeln!(s, "# seed {}", self.split_seed);
        let _ = writeln!(s, "# resize bilinear");
        for e in &self.entries {
            let _ = writeln!(s, "{}\t{}\t{}", e.path.display(), e.label, e.split.name());
        }
        s
    }

    /// Writes the manifest. Entry paths stay relative when the file sits in
    /// the image root and become absolute otherwise, so [`Manifest::load`]
    /// finds the images again.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d,
            _ => Path::new("."),
        };
        let root = fs::canonicalize(&self.root).map_err(|e| Error::io(&self.root, e))?;
        let text = if fs::canonicalize(dir).ok().as_deref() == Some(root.as_path()) {
            self.to_text()
        } else {
            let mut rebased = self.clone();
            for e in &mut rebased.entries {
                e.path = root.join(&e.path);
            }
            rebased.to_text()
        };
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Parses a manifest; relative entry paths resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Manifest> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Manifest::parse(&text, root, path)
    }

    fn parse(text: &str, root: PathBuf, origin: &Path) -> Result<Manifest> {
        let mut size = None;
        let mut channels = 3;
        let mut seed = 0;
        let mut entries = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let err = |msg: String| Error::format(origin, format!("line {}: {msg}", no + 1));
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut words = rest.split_whitespace();
                match (words.next(), words.next()) {
                    (Some("size"), Some(v)) => size = Some(parse_size(v).map_err(|e| err(e.to_string()))?),
                    (Some("channels"), Some(v)) => {
                        channels = v.parse().map_err(|_| err(format!("bad channel count `{v}`")))?;
                        check_channels(channels).map_err(|e| err(e.to_string()))?;
                    }
                    (Some("seed"), Some(v)) => {
                        seed = v.parse().map_err(|_| err(format!("bad seed `{v}`")))?;
                    }
                    (Some("resize"), Some(v)) if v != "bilinear" => {
                        return Err(err(format!("unsupported resize filter `{v}`")));
                    }
                    _ => {}
                }
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(err(format!("expected 3 tab-separated fields, found {}", fields.len())));
            }
            let split = match fields[2].trim() {
                "train" => Split::Train,
                "test" => Split::Test,
                other => return Err(err(format!("unknown split `{other}`"))),
            };
            entries.push(Entry {
                path: PathBuf::from(fields[0]),
                label: fields[1].to_string(),
                split,
            });
        }
        let image_size = size.ok_or_else(|| Error::format(origin, "missing `# size ROWSxCOLS` header"))?;
        Ok(Manifest {
            root,
            entries,
            image_size,
            channels,
            split_seed: seed,
        })
    }

    pub fn count(&self, split: Split) -> usize {
        self.entries.iter().filter(|e| e.split == split).count()
    }
}

/// Decoded images of both splits.
#[derive(Debug, Clone)]
pub struct LoadedSplit {
    pub train: Vec<Tensor3>,
    pub train_labels: Vec<String>,
    pub test: Vec<Tensor3>,
    pub test_labels: Vec<String>,
}

/// Decodes every manifest entry in parallel.
pub fn load_image_dir(manifest: &Manifest) -> Result<LoadedSplit> {
    let mut per_label: BTreeMap<&str, usize> = BTreeMap::new();
    for e in manifest.entries.iter().filter(|e| e.split == Split::Train) {
        *per_label.entry(e.label.as_str()).or_default() += 1;
    }
    if let Some(e) = manifest.entries.iter().find(|e| !per_label.contains_key(e.label.as_str())) {
        return Err(Error::format(
            &manifest.root,
            format!("label `{}` has no training images", e.label),
        ));
    }
    let images = manifest
        .entries
        .par_iter()
        .map(|e| {
            load_image(
                manifest.root.join(&e.path),
                Some(manifest.image_size),
                manifest.channels,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = LoadedSplit {
        train: Vec::new(),
        train_labels: Vec::new(),
        test: Vec::new(),
        test_labels: Vec::new(),
    };
    for (e, img) in manifest.entries.iter().zip(images) {
        let (imgs, labs) = match e.split {
            Split::Train => (&mut out.train, &mut out.train_labels),
            Split::Test => (&mut out.test, &mut out.test_labels),
        };
        imgs.push(img);
        labs.push(e.label.clone());
    }
    Ok(out)
}

/// Decodes an image into `rows × cols × channels` with values in `[0, 1]`,
/// resizing bilinearly when `size` is given.
pub fn load_image(path: impl AsRef<Path>, size: Option<(usize, usize)>, channels: usize) -> Result<Tensor3> {
    check_channels(channels)?;
    let path = path.as_ref();
    let mut img = image::open(path).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::Image {
            path: path.to_path_buf(),
            msg: other.to_string(),
        },
    })?;
    if let Some((rows, cols)) = size {
        if (img.height() as usize, img.width() as usize) != (rows, cols) {
            img = img.resize_exact(cols as u32, rows as u32, FilterType::Triangle);
        }
    }
    Ok(image_to_tensor(&img, channels))
}

pub fn image_to_tensor(img: &DynamicImage, channels: usize) -> Tensor3 {
    let (w, h) = (img.width() as usize, img.height() as usize);
    if channels == 1 {
        let g = img.to_luma32f();
        Tensor3::from_fn(h, w, 1, |i, j, _| f64::from(g.get_pixel(j as u32, i as u32)[0]))
    } else {
        let c = img.to_rgb32f();
        Tensor3::from_fn(h, w, 3, |i, j, k| f64::from(c.get_pixel(j as u32, i as u32)[k]))
    }
}

fn to_byte(x: f64) -> u8 {
    (x.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Writes a 1- or 3-slice tensor as an 8-bit image, clamping to `[0, 1]`.
pub fn save_image(path: impl AsRef<Path>, t: &Tensor3) -> Result<()> {
    let path = path.as_ref();
    let (h, w, n3) = t.shape();
    let img = match n3 {
        1 => DynamicImage::ImageLuma8(GrayImage::from_fn(w as u32, h as u32, |x, y| {
            image::Luma([to_byte(t.get(y as usize, x as usize, 0))])
        })),
        3 => DynamicImage::ImageRgb8(RgbImage::from_fn(w as u32, h as u32, |x, y| {
            let p = |k| to_byte(t.get(y as usize, x as usize, k));
            image::Rgb([p(0), p(1), p(2)])
        })),
        _ => {
            return Err(Error::InvalidDimension(format!(
                "cannot write an image with {n3} channels"
            )))
        }
    };
    img.save(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tree(root: &Path, people: usize, per: usize) {
        for p in 0..people {
            let d = root.join(format!("person{p:02}"));
            fs::create_dir_all(&d).unwrap();
            for i in 0..per {
                let img = RgbImage::from_fn(6, 4, |x, y| image::Rgb([(x * 40) as u8, (y * 60) as u8, (p * 50 + i) as u8]));
                img.save(d.join(format!("img{i:02}.png"))).unwrap();
            }
        }
    }

    #[test]
    fn directory_split_is_seeded() {
        let dir = tempfile::tempdir().unwrap();
        write_tree(dir.path(), 3, 15);
        let m = Manifest::from_directory(dir.path(), 5, (4, 6), 3, 42).unwrap();
        assert_eq!(m.count(Split::Train), 30);
        assert_eq!(m.count(Split::Test), 15);
        let again = Manifest::from_directory(dir.path(), 5, (4, 6), 3, 42).unwrap();
        assert_eq!(m, again);
        let other = Manifest::from_directory(dir.path(), 5, (4, 6), 3, 43).unwrap();
        assert_ne!(m.entries, other.entries);
        assert_eq!(other.count(Split::Test), 15);
        assert!(Manifest::from_directory(dir.path(), 15, (4, 6), 3, 1).is_err());
    }

    #[test]
    fn manifest_round_trip_and_loading() {
        let dir = tempfile::tempdir().unwrap();
        write_tree(dir.path(), 2, 4);
        let m = Manifest::from_directory(dir.path(), 1, (2, 3), 3, 7).unwrap();
        let path = dir.path().join("faces.tsv");
        m.save(&path).unwrap();
        let back = Manifest::load(&path).unwrap();
        assert_eq!(back.entries, m.entries);
        assert_eq!((back.image_size, back.channels, back.split_seed), ((2, 3), 3, 7));

        let data = load_image_dir(&back).unwrap();
        assert_eq!((data.train.len(), data.test.len()), (6, 2));
        assert_eq!(data.train[0].shape(), (2, 3, 3));
        assert!(data.train[0].data().iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn manifest_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.tsv");
        fs::write(&path, "# size 4x4\na.png\tx\tvalidation\n").unwrap();
        assert!(Manifest::load(&path).unwrap_err().to_string().contains("line 2"));
        fs::write(&path, "a.png\tx\ttrain\n").unwrap();
        assert!(Manifest::load(&path).is_err());
        fs::write(&path, "# size 4x4\nmissing.png\tx\ttrain\n").unwrap();
        let m = Manifest::load(&path).unwrap();
        assert!(matches!(load_image_dir(&m), Err(Error::Io { .. })));
        fs::write(&path, "# size 4x4\nmissing.png\tx\ttest\n").unwrap();
        assert!(load_image_dir(&Manifest::load(&path).unwrap()).unwrap_err().to_string().contains("no training"));
    }

    #[test]
    fn grayscale_single_image() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.png");
        GrayImage::from_fn(3, 2, |x, y| image::Luma([(x * 100 + y * 10) as u8])).save(&p).unwrap();
        let t = load_image(&p, None, 1).unwrap();
        assert_eq!(t.shape(), (2, 3, 1));
        assert!((t.get(1, 2, 0) - 210.0 / 255.0).abs() < 1e-6);
        let out = dir.path().join("o.png");
        save_image(&out, &t).unwrap();
        let back = load_image(&out, None, 1).unwrap();
        assert!((&back - &t).max_abs() < 1e-6);
        fs::write(dir.path().join("bad.png"), b"not an image").unwrap();
        assert!(matches!(load_image(dir.path().join("bad.png"), None, 1), Err(Error::Image { .. })));
    }

    #[test]
    fn size_parsing() {
        assert_eq!(parse_size("100x80").unwrap(), (100, 80));
        assert!(parse_size("100").is_err());
        assert!(parse_size("0x3").is_err());
    }
}
