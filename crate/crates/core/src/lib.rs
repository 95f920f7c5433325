//! Spectral analysis of third-order tensors under the t-product.
//!
//! A tensor `A` of shape `m x p x n` acts through its block-circulant
//! matrix; the DFT along the tube dimension block-diagonalizes that matrix
//! into `n` faces, and almost every routine here works face by face.

pub mod cli;
pub mod error;
pub mod exec;
pub mod io;
pub mod linalg;
pub mod matching;
pub mod ode;
pub mod perturbation;
pub mod pseudospectra;
pub mod qz;
pub mod random;
pub mod spectral;
pub mod tensor;
pub mod transform;

pub use error::{Result, TensorError};
pub use exec::Execution;
pub use linalg::{CMat, CVec, Norm};
pub use tensor::Tensor3;
pub use transform::FaceSet;
