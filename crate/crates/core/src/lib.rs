//! Dense-mesh shape correspondence through intrinsic Delaunay remeshing.
//!
//! The pipeline samples each dense mesh with geodesic farthest-point
//! sampling, reads off the dual intrinsic Delaunay triangulation of the
//! Voronoi texels, estimates a functional map between the two small meshes
//! and carries it back to full resolution through closest-point
//! prolongation.

pub mod bench;
pub mod error;
pub mod fmap;
pub mod geodesic;
pub mod mesh;
pub mod pipeline;
pub mod prolongation;
pub mod remesh;
pub mod spectral;
pub mod textio;
pub mod timing;
pub mod voronoi;

pub use error::{Error, ErrorCategory, Result};
pub use mesh::TriMesh;
