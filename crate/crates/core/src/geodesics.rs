//! On-surface distances.
//!
//! Triangle meshes use fast marching with a planar unfolding update per
//! triangle; surfaces without faces fall back to Dijkstra over their edges, or
//! over a symmetrized 8-nearest-neighbor graph for raw point clouds.
//! Unreachable vertices get `+inf`, as do vertices beyond an optional cap.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::geometry::{knn_edges, Surface, POINT_CLOUD_NEIGHBORS};
use crate::Vec3;

#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicField {
    pub source_vertex: usize,
    pub distances: Vec<f64>,
    pub capped_at: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    FastMarching,
    Dijkstra,
}

/// Precomputed connectivity for repeated distance queries on one surface.
#[derive(Clone, Debug)]
pub struct GeodesicDomain {
    positions: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    vertex_faces: Vec<Vec<usize>>,
    adjacency: Vec<Vec<(usize, f64)>>,
    method: Method,
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    dist: f64,
    vertex: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    // Reversed: BinaryHeap pops the smallest distance, then smallest index.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then(other.vertex.cmp(&self.vertex))
    }
}

impl GeodesicDomain {
    pub fn new(surface: &Surface) -> Result<Self> {
        if surface.has_faces() {
            let n = surface.len();
            let mut vertex_faces = vec![Vec::new(); n];
            for (k, f) in surface.faces.iter().enumerate() {
                for &v in f {
                    if !vertex_faces[v].contains(&k) {
                        vertex_faces[v].push(k);
                    }
                }
            }
            let mut d = Self::with_edges(&surface.vertices, &surface.edges, Method::FastMarching);
            d.faces = surface.faces.clone();
            d.vertex_faces = vertex_faces;
            Ok(d)
        } else if !surface.edges.is_empty() {
            Ok(Self::with_edges(&surface.vertices, &surface.edges, Method::Dijkstra))
        } else if surface.len() < 2 {
            Err(Error::Degenerate(
                "distance queries need faces, edges, or at least 2 points".into(),
            ))
        } else {
            let edges = knn_edges(&surface.vertices, POINT_CLOUD_NEIGHBORS);
            Ok(Self::with_edges(&surface.vertices, &edges, Method::Dijkstra))
        }
    }

    /// Dijkstra over the explicit edge set, ignoring faces.
    pub fn edge_graph(surface: &Surface) -> Self {
        Self::with_edges(&surface.vertices, &surface.edges, Method::Dijkstra)
    }

    fn with_edges(positions: &[Vec3], edges: &[[usize; 2]], method: Method) -> Self {
        let mut adjacency = vec![Vec::new(); positions.len()];
        for &[a, b] in edges {
            let len = (positions[a] - positions[b]).norm();
            adjacency[a].push((b, len));
            adjacency[b].push((a, len));
        }
        GeodesicDomain {
            positions: positions.to_vec(),
            faces: Vec::new(),
            vertex_faces: Vec::new(),
            adjacency,
            method,
        }
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn field_from(&self, seed: usize, cap: Option<f64>) -> Result<GeodesicField> {
        if seed >= self.positions.len() {
            return Err(Error::InvalidInput(format!(
                "seed {seed} out of range 0..{}",
                self.positions.len()
            )));
        }
        let distances = self.distances_from(seed, cap);
        Ok(GeodesicField {
            source_vertex: seed,
            distances,
            capped_at: cap,
        })
    }

    /// Distances from `seed`; entries beyond `cap` are `+inf`.
    pub fn distances_from(&self, seed: usize, cap: Option<f64>) -> Vec<f64> {
        let n = self.positions.len();
        let limit = cap.unwrap_or(f64::INFINITY);
        let mut dist = vec![f64::INFINITY; n];
        let mut alive = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[seed] = 0.0;
        heap.push(Entry {
            dist: 0.0,
            vertex: seed,
        });
        while let Some(Entry { dist: d, vertex: v }) = heap.pop() {
            if alive[v] || d > dist[v] {
                continue;
            }
            if d > limit {
                break;
            }
            alive[v] = true;
            let relax = |c: usize, cand: f64, dist: &mut [f64], heap: &mut BinaryHeap<Entry>| {
                if cand < dist[c] {
                    dist[c] = cand;
                    heap.push(Entry { dist: cand, vertex: c });
                }
            };
            match self.method {
                Method::Dijkstra => {
                    for &(c, len) in &self.adjacency[v] {
                        if !alive[c] {
                            relax(c, d + len, &mut dist, &mut heap);
                        }
                    }
                }
                Method::FastMarching => {
                    for &fi in &self.vertex_faces[v] {
                        let f = self.faces[fi];
                        let others: Vec<usize> = f.iter().copied().filter(|&u| u != v).collect();
                        if others.len() != 2 {
                            continue;
                        }
                        for (c, o) in [(others[0], others[1]), (others[1], others[0])] {
                            if alive[c] {
                                continue;
                            }
                            let mut cand = d + (self.positions[c] - self.positions[v]).norm();
                            if alive[o] {
                                cand = cand.min(self.unfold(v, d, o, dist[o], c));
                            }
                            relax(c, cand, &mut dist, &mut heap);
                        }
                    }
                    // Edges not covered by any face.
                    for &(c, len) in &self.adjacency[v] {
                        if !alive[c] {
                            relax(c, d + len, &mut dist, &mut heap);
                        }
                    }
                }
            }
        }
        for (d, a) in dist.iter_mut().zip(&alive) {
            if !*a {
                *d = f64::INFINITY;
            }
        }
        dist
    }

    /// Triangle update: distance at `c` from a virtual planar source placed so
    /// that it lies `da` from `a` and `db` from `b`, opposite `c` across edge
    /// `ab`. Returns `+inf` when the front does not reach `c` through the edge.
    fn unfold(&self, a: usize, da: f64, b: usize, db: f64, c: usize) -> f64 {
        let pa = self.positions[a];
        let ab = self.positions[b] - pa;
        let len = ab.norm();
        if len == 0.0 {
            return f64::INFINITY;
        }
        let ex = ab / len;
        let ac = self.positions[c] - pa;
        let cx = ac.dot(&ex);
        let cy = (ac - ex * cx).norm();
        if cy == 0.0 {
            return f64::INFINITY;
        }
        let sx = (da * da - db * db + len * len) / (2.0 * len);
        let sy2 = da * da - sx * sx;
        if sy2 < 0.0 {
            return f64::INFINITY;
        }
        let sy = -sy2.sqrt();
        let t = -sy / (cy - sy);
        let cross = sx + t * (cx - sx);
        if !(0.0..=len).contains(&cross) {
            return f64::INFINITY;
        }
        let dc = ((cx - sx).powi(2) + (cy - sy).powi(2)).sqrt();
        if dc < da.max(db) {
            return f64::INFINITY;
        }
        dc
    }
}

/// Single-source distances on `surface`.
pub fn geodesic_from(surface: &Surface, seed: usize, cap: Option<f64>) -> Result<GeodesicField> {
    GeodesicDomain::new(surface)?.field_from(seed, cap)
}

/// Running pointwise minimum over single-source fields. Each added seed
/// writes only the vertices whose distance shrinks.
#[derive(Clone, Debug)]
pub struct MultiSourceField {
    pub distances: Vec<f64>,
    pub seeds: Vec<usize>,
    cap: Option<f64>,
}

impl MultiSourceField {
    pub fn new(n: usize, cap: Option<f64>) -> Self {
        MultiSourceField {
            distances: vec![f64::INFINITY; n],
            seeds: Vec::new(),
            cap,
        }
    }

    pub fn add_seed(&mut self, domain: &GeodesicDomain, seed: usize) -> Result<()> {
        let field = domain.field_from(seed, self.cap)?;
        for (m, d) in self.distances.iter_mut().zip(field.distances) {
            if d < *m {
                *m = d;
            }
        }
        self.seeds.push(seed);
        Ok(())
    }
}

pub fn multi_source_geodesic(
    domain: &GeodesicDomain,
    seeds: &[usize],
    cap: Option<f64>,
) -> Result<Vec<f64>> {
    if seeds.is_empty() {
        return Err(Error::InvalidInput("no seeds given".into()));
    }
    let mut field = MultiSourceField::new(domain.len(), cap);
    for &s in seeds {
        field.add_seed(domain, s)?;
    }
    Ok(field.distances)
}
