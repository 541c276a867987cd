//! Cotangent Laplacian, truncated eigenbases and spectral descriptors.

pub mod cache;
mod cholesky;
mod descriptors;
mod eigen;
mod laplacian;
mod sparse;

pub use cholesky::{reverse_cuthill_mckee, EnvelopeCholesky};
pub use descriptors::{descriptors, DescriptorKind, DescriptorSet};
pub use eigen::{eigenbasis, eigenbasis_dense, eigenbasis_lanczos, SpectralBasis};
pub use laplacian::{build_laplacian, LaplacianPair};
pub use sparse::CsrMatrix;
