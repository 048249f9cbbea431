//! Reader and writer for the IDX files used by the handwritten-digit data.

use std::fs;
use std::io::{Cursor, Read, Write};
use std::path::Path;

use byteorder::{BigEndian, ReadBytesExt, WriteBytesExt};
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::tensor::Tensor3;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// Images as columns `vec(I)` (column by column, matching the tensor layout),
/// scaled to `[0, 1]`.
#[derive(Debug, Clone)]
pub struct IdxData {
    pub rows: usize,
    pub cols: usize,
    pub images: DMatrix<f64>,
    pub labels: Vec<u8>,
}

impl IdxData {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Image `i` as a `rows × cols × 1` tensor.
    pub fn image(&self, i: usize) -> Tensor3 {
        Tensor3::from_vec(self.rows, self.cols, 1, self.images.column(i).iter().copied().collect())
            .expect("column length is rows * cols")
    }

    pub fn images(&self) -> Vec<Tensor3> {
        (0..self.len()).map(|i| self.image(i)).collect()
    }

    pub fn label_strings(&self) -> Vec<String> {
        self.labels.iter().map(u8::to_string).collect()
    }

    /// The first `count` items.
    pub fn head(&self, count: usize) -> IdxData {
        let count = count.min(self.len());
        IdxData {
            rows: self.rows,
            cols: self.cols,
            images: self.images.columns(0, count).into_owned(),
            labels: self.labels[..count].to_vec(),
        }
    }
}

fn read_header(cur: &mut Cursor<&[u8]>, path: &Path, magic: u32, dims: usize) -> Result<Vec<usize>> {
    let found = cur
        .read_u32::<BigEndian>()
        .map_err(|_| Error::format(path, "file too short for an IDX header"))?;
    if found != magic {
        return Err(Error::format(
            path,
            format!("bad magic {found:#010x}, expected {magic:#010x}"),
        ));
    }
    (0..dims)
        .map(|_| {
            cur.read_u32::<BigEndian>()
                .map(|d| d as usize)
                .map_err(|_| Error::format(path, "file too short for an IDX header"))
        })
        .collect()
}

fn read_payload(cur: &mut Cursor<&[u8]>, path: &Path, len: usize) -> Result<Vec<u8>> {
    let mut buf = vec![0u8; len];
    cur.read_exact(&mut buf).map_err(|_| {
        Error::format(
            path,
            format!("truncated file: expected {len} payload bytes"),
        )
    })?;
    Ok(buf)
}

/// Returns `(rows, cols, images)` with one column per image.
pub fn read_images(path: impl AsRef<Path>) -> Result<(usize, usize, DMatrix<f64>)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut cur = Cursor::new(bytes.as_slice());
    let dims = read_header(&mut cur, path, IMAGES_MAGIC, 3)?;
    let (count, rows, cols) = (dims[0], dims[1], dims[2]);
    let pix = rows * cols;
    let payload = read_payload(&mut cur, path, count * pix)?;
    // File order is row by row; columns are stored column by column.
    let images = DMatrix::from_fn(pix, count, |p, i| {
        let (r, c) = (p % rows, p / rows);
        f64::from(payload[i * pix + r * cols + c]) / 255.0
    });
    Ok((rows, cols, images))
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut cur = Cursor::new(bytes.as_slice());
    let count = read_header(&mut cur, path, LABELS_MAGIC, 1)?[0];
    read_payload(&mut cur, path, count)
}

/// Loads an image file and its label file, checking that the counts agree.
pub fn load_idx(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<IdxData> {
    let (rows, cols, data) = read_images(&images)?;
    let lab = read_labels(&labels)?;
    if lab.len() != data.ncols() {
        return Err(Error::format(
            labels.as_ref(),
            format!("{} labels for {} images", lab.len(), data.ncols()),
        ));
    }
    Ok(IdxData {
        rows,
        cols,
        images: data,
        labels: lab,
    })
}

/// Writes raw pixel bytes (row by row per image).
pub fn write_images(path: impl AsRef<Path>, rows: usize, cols: usize, pixels: &[Vec<u8>]) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::with_capacity(16 + pixels.len() * rows * cols);
    out.write_u32::<BigEndian>(IMAGES_MAGIC).expect("vec write");
    for d in [pixels.len(), rows, cols] {
        out.write_u32::<BigEndian>(d as u32).expect("vec write");
    }
    for p in pixels {
        if p.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "image with {} pixels, expected {}",
                p.len(),
                rows * cols
            )));
        }
        out.write_all(p).expect("vec write");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn write_labels(path: impl AsRef<Path>, labels: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::with_capacity(8 + labels.len());
    out.write_u32::<BigEndian>(LABELS_MAGIC).expect("vec write");
    out.write_u32::<BigEndian>(labels.len() as u32).expect("vec write");
    out.extend_from_slice(labels);
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
