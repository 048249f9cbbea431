//! Binary model persistence.
//!
//! Layout, all little-endian:
//!
//! | field | type |
//! |---|---|
//! | magic `TTPCA\0` | 6 bytes |
//! | version | u16 |
//! | `L, r, N, n3, k, flags, rows, cols` | u32 each |
//! | mean, projector, projected training tensor | f64, slice-major |
//! | labels | u32 byte length + UTF-8, `N` times |
//! | CRC-32 of everything above | u32 |
//!
//! Flag bits 0-1 hold the training method, bit 2 marks pixels scaled to
//! `[0, 1]` and bit 3 marks bilinear resizing.

use std::fs;
use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::pca::{TrainMethod, TtpcaModel};
use crate::tensor::Tensor3;

pub const MAGIC: &[u8; 6] = b"TTPCA\0";
pub const VERSION: u16 = 1;

const FLAG_METHOD_MASK: u32 = 0b11;
const FLAG_UNIT_PIXELS: u32 = 1 << 2;
const FLAG_BILINEAR: u32 = 1 << 3;

#[derive(Debug, Clone)]
pub struct ModelFile {
    pub model: TtpcaModel,
    /// `(rows, cols)` of the training images.
    pub image_size: (usize, usize),
    pub unit_pixels: bool,
    pub bilinear: bool,
}

impl ModelFile {
    /// Channels per image: `n3` for tubal models; for eigenface models the
    /// channels are folded into `L`.
    pub fn channels(&self) -> usize {
        let (r, c) = self.image_size;
        match self.model.method {
            TrainMethod::Eigenface => self.model.image_len() / (r * c).max(1),
            _ => self.model.n3(),
        }
    }

    pub fn flags(&self) -> u32 {
        let mut f = self.model.method.code() & FLAG_METHOD_MASK;
        if self.unit_pixels {
            f |= FLAG_UNIT_PIXELS;
        }
        if self.bilinear {
            f |= FLAG_BILINEAR;
        }
        f
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let m = &self.model;
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.write_u16::<LittleEndian>(VERSION).expect("vec write");
        let header = [
            m.image_len(),
            m.r,
            m.train_count(),
            m.n3(),
            m.k,
            self.flags() as usize,
            self.image_size.0,
            self.image_size.1,
        ];
        for h in header {
            out.write_u32::<LittleEndian>(h as u32).expect("vec write");
        }
        for t in [&m.mean, &m.projector, &m.projected_train] {
            for &x in t.data() {
                out.write_f64::<LittleEndian>(x).expect("vec write");
            }
        }
        for label in &m.labels {
            out.write_u32::<LittleEndian>(label.len() as u32).expect("vec write");
            out.extend_from_slice(label.as_bytes());
        }
        let crc = crc32fast::hash(&out);
        out.write_u32::<LittleEndian>(crc).expect("vec write");
        out
    }

    /// Parses bytes produced by [`ModelFile::to_bytes`]; `path` is only used
    /// in error messages.
    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<ModelFile> {
        if bytes.len() < MAGIC.len() + 2 + 4 {
            return Err(Error::format(path, "file too short to be a model"));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().expect("four bytes"));
        let computed = crc32fast::hash(body);
        if stored != computed {
            return Err(Error::Checksum {
                path: path.to_path_buf(),
                stored,
                computed,
            });
        }
        if &body[..MAGIC.len()] != MAGIC {
            return Err(Error::format(path, "not a model file (bad magic)"));
        }
        let mut cur = Cursor::new(&body[MAGIC.len()..]);
        let short = |_| Error::format(path, "model file ends early");
        let version = cur.read_u16::<LittleEndian>().map_err(short)?;
        if version != VERSION {
            return Err(Error::Version {
                path: path.to_path_buf(),
                found: version,
                expected: VERSION,
            });
        }
        let mut header = [0usize; 8];
        for h in &mut header {
            *h = cur.read_u32::<LittleEndian>().map_err(short)? as usize;
        }
        let [l, r, n, n3, k, flags, rows, cols] = header;
        let method = TrainMethod::from_code(flags as u32 & FLAG_METHOD_MASK)
            .ok_or_else(|| Error::format(path, format!("unknown method code in flags {flags:#x}")))?;
        let mut read_tensor = |n1: usize, n2: usize| -> Result<Tensor3> {
            let count = n1 * n2 * n3;
            if count.saturating_mul(8) > body.len() {
                return Err(Error::format(path, "tensor payload larger than the file"));
            }
            let mut data = vec![0.0; count];
            cur.read_f64_into::<LittleEndian>(&mut data).map_err(short)?;
            Tensor3::from_vec(n1, n2, n3, data).map_err(|e| Error::format(path, e.to_string()))
        };
        let mean = read_tensor(l, 1)?;
        let projector = read_tensor(l, r)?;
        let projected = read_tensor(r, n)?;
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let len = cur.read_u32::<LittleEndian>().map_err(short)? as usize;
            if len > body.len() {
                return Err(Error::format(path, "label longer than the file"));
            }
            let mut buf = vec![0u8; len];
            cur.read_exact(&mut buf).map_err(short)?;
            labels.push(
                String::from_utf8(buf).map_err(|_| Error::format(path, "label is not UTF-8"))?,
            );
        }
        if (cur.position() as usize) != cur.get_ref().len() {
            return Err(Error::format(path, "trailing bytes after the label table"));
        }
        let model = TtpcaModel::from_parts(mean, projector, projected, labels, r, k, method)
            .map_err(|e| Error::format(path, e.to_string()))?;
        Ok(ModelFile {
            model,
            image_size: (rows, cols),
            unit_pixels: flags as u32 & FLAG_UNIT_PIXELS != 0,
            bilinear: flags as u32 & FLAG_BILINEAR != 0,
        })
    }
}

pub fn save_model(path: impl AsRef<Path>, model: &ModelFile) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelFile> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    ModelFile::from_bytes(&bytes, path)
}
