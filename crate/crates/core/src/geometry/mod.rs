//! Surfaces, mesh I/O, normalization and normals.

pub mod io;
mod normalize;
mod normals;
mod surface;

pub use io::{load, load_surface, save, write_error_mesh, write_obj, write_ply, MeshFormat, PlyExtras};
pub use normalize::{normalize_pair, NormalizationRecord};
pub use normals::{compute_normals, PCA_NEIGHBORS};
pub use surface::{bounding_box, edges_from_faces, knn_edges, Surface, POINT_CLOUD_NEIGHBORS};
