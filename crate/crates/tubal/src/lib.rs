//! Third-order tensor linear algebra over the cosine-transform product.
//!
//! The c-product multiplies `n1 × n2 × n3` tensors slice by slice after an
//! orthonormal DCT along the third mode. On top of it this crate provides
//! the c-SVD and c-QR, two tensor Golub-Kahan bidiagonalizations (global and
//! tube-wise), and a tubal PCA classifier for image data.

pub mod algebra;
pub mod bench;
pub mod dataset;
mod dense;
pub mod error;
pub mod factor;
pub mod golub_kahan;
pub mod idx;
pub mod model_file;
pub mod pca;
pub mod synthetic;
pub mod tensor;
pub mod transform;

pub use error::{Error, ErrorKind, Result};
pub use tensor::{Tensor3, Tube};
