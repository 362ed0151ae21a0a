use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::spatial::KdTree;
use crate::Vec3;

/// Neighbor count used to build a proximity graph over raw point clouds.
pub const POINT_CLOUD_NEIGHBORS: usize = 8;

/// A sampled surface: vertex positions with optional triangles.
///
/// `edges` are the undirected, deduplicated edges of the faces when faces are
/// present. Polylines and other face-less inputs may carry explicit edges.
#[derive(Clone, Debug, PartialEq)]
pub struct Surface {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    pub edges: Vec<[usize; 2]>,
    pub normals: Option<Vec<Vec3>>,
}

impl Surface {
    /// Triangle mesh; edges are derived from the faces.
    pub fn from_mesh(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidInput("surface has no vertices".into()));
        }
        let n = vertices.len();
        for (k, f) in faces.iter().enumerate() {
            if f.iter().any(|&i| i >= n) {
                return Err(Error::InvalidInput(format!(
                    "face {k} references a vertex outside 0..{n}"
                )));
            }
        }
        let edges = edges_from_faces(&faces);
        Ok(Surface {
            vertices,
            faces,
            edges,
            normals: None,
        })
    }

    /// Unstructured point set.
    pub fn from_points(vertices: Vec<Vec3>) -> Result<Self> {
        Self::from_mesh(vertices, Vec::new())
    }

    /// Face-less surface with explicit connectivity (e.g. a polyline).
    pub fn from_edges(vertices: Vec<Vec3>, edges: Vec<[usize; 2]>) -> Result<Self> {
        let mut s = Self::from_points(vertices)?;
        let n = s.vertices.len();
        let mut set = BTreeSet::new();
        for [a, b] in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({a}, {b}) references a vertex outside 0..{n}"
                )));
            }
            if a != b {
                set.insert([a.min(b), a.max(b)]);
            }
        }
        s.edges = set.into_iter().collect();
        Ok(s)
    }

    pub fn with_normals(mut self, normals: Vec<Vec3>) -> Result<Self> {
        if normals.len() != self.vertices.len() {
            return Err(Error::InvalidInput(format!(
                "{} normals for {} vertices",
                normals.len(),
                self.vertices.len()
            )));
        }
        self.normals = Some(normals);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn has_faces(&self) -> bool {
        !self.faces.is_empty()
    }

    /// Mean length of the surface edges. Point clouds without connectivity use
    /// the symmetrized k-nearest-neighbor graph instead.
    pub fn mean_edge_length(&self) -> f64 {
        let edges = if self.edges.is_empty() {
            knn_edges(&self.vertices, POINT_CLOUD_NEIGHBORS)
        } else {
            self.edges.clone()
        };
        if edges.is_empty() {
            return 0.0;
        }
        let total: f64 = edges
            .iter()
            .map(|&[a, b]| (self.vertices[a] - self.vertices[b]).norm())
            .sum();
        total / edges.len() as f64
    }

    /// Axis-aligned bounding box as (min, max).
    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        bounding_box(&self.vertices)
    }

    pub fn centroid(&self) -> Vec3 {
        let sum: Vec3 = self.vertices.iter().sum();
        sum / self.vertices.len() as f64
    }

    /// Checks the index and normal invariants; used by tests and after edits.
    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        if n == 0 {
            return Err(Error::InvalidInput("surface has no vertices".into()));
        }
        if self.faces.iter().flatten().any(|&i| i >= n) {
            return Err(Error::InvalidInput("face index out of range".into()));
        }
        let mut seen = BTreeSet::new();
        for &[a, b] in &self.edges {
            if a >= n || b >= n || a == b || !seen.insert([a.min(b), a.max(b)]) {
                return Err(Error::InvalidInput(format!("bad edge ({a}, {b})")));
            }
        }
        if let Some(normals) = &self.normals {
            if normals.len() != n || normals.iter().any(|v| (v.norm() - 1.0).abs() > 1e-6) {
                return Err(Error::InvalidInput("normals are not unit per-vertex".into()));
            }
        }
        Ok(())
    }
}

pub fn bounding_box(points: &[Vec3]) -> (Vec3, Vec3) {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (lo, hi)
}

/// Undirected edges of a triangle list, each exactly once, sorted.
pub fn edges_from_faces(faces: &[[usize; 3]]) -> Vec<[usize; 2]> {
    let mut set = BTreeSet::new();
    for f in faces {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            if a != b {
                set.insert([a.min(b), a.max(b)]);
            }
        }
    }
    set.into_iter().collect()
}

/// Symmetrized k-nearest-neighbor edge set of a point cloud.
pub fn knn_edges(points: &[Vec3], k: usize) -> Vec<[usize; 2]> {
    if points.len() < 2 {
        return Vec::new();
    }
    let tree = KdTree::new(points.to_vec());
    let mut set = BTreeSet::new();
    for (i, p) in points.iter().enumerate() {
        for (j, _) in tree.k_nearest(p, k + 1) {
            if j != i {
                set.insert([i.min(j), i.max(j)]);
            }
        }
    }
    set.into_iter().collect()
}
