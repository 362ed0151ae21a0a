//! Embedded deformation graph: node sampling, node connectivity, and the
//! per-vertex blending weights `w_ij = (1 - D^2/R^2)^3`, normalized over the
//! nodes within geodesic radius `R`.

use std::collections::BTreeSet;
use std::path::Path;

use nalgebra::SymmetricEigen;
use rayon::prelude::*;

use crate::energy::TransformState;
use crate::error::{Error, Result};
use crate::geodesics::{GeodesicDomain, MultiSourceField};
use crate::geometry::{write_ply, PlyExtras, Surface};
use crate::{Mat3, Vec3};

/// Node pairs closer than this multiple of `R` are connected. Sampling keeps
/// nodes at least `R` apart, so the threshold must exceed `R` for the graph
/// to have edges; `2R` connects nodes whose influence regions can overlap.
pub const EDGE_RADIUS_FACTOR: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Sampler {
    #[default]
    Pca,
    Farthest,
}

impl std::str::FromStr for Sampler {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pca" => Ok(Sampler::Pca),
            "farthest" => Ok(Sampler::Farthest),
            _ => Err(Error::InvalidParameter(format!("unknown sampler `{s}`"))),
        }
    }
}

impl std::fmt::Display for Sampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sampler::Pca => "pca",
            Sampler::Farthest => "farthest",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphNode {
    pub source_index: usize,
    pub position: Vec3,
}

#[derive(Clone, Debug)]
pub struct DeformationGraph {
    pub nodes: Vec<GraphNode>,
    /// Undirected node pairs `(i, j)` with `i < j`, sorted.
    pub node_edges: Vec<[usize; 2]>,
    pub radius: f64,
    /// Per source vertex: `(node, w_ij)`, weights positive and summing to 1.
    pub influence: Vec<Vec<(usize, f64)>>,
    /// Source vertices with no node within `R`; each was bound to its nearest
    /// node with weight 1.
    pub uncovered: Vec<usize>,
    neighbors: Vec<Vec<usize>>,
}

/// Unnormalized blending weight for geodesic distance `d` and radius `r`.
pub fn influence_weight(d: f64, r: f64) -> f64 {
    let x = 1.0 - d * d / (r * r);
    x * x * x
}

/// Unit eigenvector of the largest covariance eigenvalue, sign-fixed so its
/// largest-magnitude component is positive.
pub fn principal_axis(points: &[Vec3]) -> Vec3 {
    let mean: Vec3 = points.iter().sum::<Vec3>() / points.len() as f64;
    let mut cov = Mat3::zeros();
    for p in points {
        let d = p - mean;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let axis: Vec3 = eig.eigenvectors.column(eig.eigenvalues.imax()).into();
    let k = axis.iamax();
    if axis[k] < 0.0 {
        -axis
    } else {
        axis
    }
}

/// Scans vertices in order of their projection on the principal axis and
/// keeps each one at geodesic distance `>= radius` from all kept nodes.
pub fn sample_nodes_pca(surface: &Surface, radius: f64) -> Result<Vec<usize>> {
    sample_pca(&GeodesicDomain::new(surface)?, &surface.vertices, radius)
}

fn check_radius(radius: f64) -> Result<()> {
    if radius > 0.0 && radius.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")))
    }
}

fn sample_pca(domain: &GeodesicDomain, points: &[Vec3], radius: f64) -> Result<Vec<usize>> {
    check_radius(radius)?;
    if points.is_empty() {
        return Ok(Vec::new());
    }
    let axis = principal_axis(points);
    let proj: Vec<f64> = points.iter().map(|p| p.dot(&axis)).collect();
    let mut order: Vec<usize> = (0..points.len()).collect();
    // Stable: equal projections keep index order.
    order.sort_by(|&a, &b| proj[a].total_cmp(&proj[b]));
    let mut field = MultiSourceField::new(points.len(), Some(radius));
    for v in order {
        if field.seeds.is_empty() || field.distances[v] >= radius {
            field.add_seed(domain, v)?;
        }
    }
    Ok(field.seeds)
}

/// Farthest-point sampling from vertex 0 until every vertex is within `radius`.
pub fn sample_nodes_farthest(surface: &Surface, radius: f64) -> Result<Vec<usize>> {
    sample_farthest(&GeodesicDomain::new(surface)?, surface.len(), radius)
}

fn sample_farthest(domain: &GeodesicDomain, n: usize, radius: f64) -> Result<Vec<usize>> {
    check_radius(radius)?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut field = MultiSourceField::new(n, None);
    field.add_seed(domain, 0)?;
    loop {
        let (far, dist) = field
            .distances
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &d)| if d > best.1 { (i, d) } else { best });
        if dist < radius {
            break;
        }
        field.add_seed(domain, far)?;
    }
    Ok(field.seeds)
}

pub fn build_graph(surface: &Surface, radius: f64, sampler: Sampler) -> Result<DeformationGraph> {
    let domain = GeodesicDomain::new(surface)?;
    build_graph_on(&domain, &surface.vertices, radius, sampler)
}

pub fn build_graph_on(
    domain: &GeodesicDomain,
    points: &[Vec3],
    radius: f64,
    sampler: Sampler,
) -> Result<DeformationGraph> {
    check_radius(radius)?;
    if points.is_empty() {
        return Err(Error::InvalidInput("cannot build a graph on an empty surface".into()));
    }
    let seeds = match sampler {
        Sampler::Pca => sample_pca(domain, points, radius)?,
        Sampler::Farthest => sample_farthest(domain, points.len(), radius)?,
    };
    let edge_cap = EDGE_RADIUS_FACTOR * radius;
    let fields: Vec<Vec<f64>> = seeds
        .par_iter()
        .map(|&s| domain.distances_from(s, Some(edge_cap)))
        .collect();

    let mut edges = BTreeSet::new();
    for (a, field) in fields.iter().enumerate() {
        for (b, &s) in seeds.iter().enumerate() {
            if a != b && field[s] < edge_cap {
                edges.insert([a.min(b), a.max(b)]);
            }
        }
    }

    let mut raw: Vec<Vec<(usize, f64)>> = vec![Vec::new(); points.len()];
    for (j, field) in fields.iter().enumerate() {
        for (i, &d) in field.iter().enumerate() {
            if d < radius {
                raw[i].push((j, d));
            }
        }
    }

    let mut uncovered = Vec::new();
    let influence: Vec<Vec<(usize, f64)>> = raw
        .into_iter()
        .enumerate()
        .map(|(i, list)| {
            let total: f64 = list.iter().map(|&(_, d)| influence_weight(d, radius)).sum();
            if list.is_empty() || !(total > 0.0) {
                uncovered.push(i);
                return vec![(nearest_node(domain, points, &seeds, i), 1.0)];
            }
            list.into_iter()
                .map(|(j, d)| (j, influence_weight(d, radius) / total))
                .collect()
        })
        .collect();

    let nodes: Vec<GraphNode> = seeds
        .iter()
        .map(|&s| GraphNode {
            source_index: s,
            position: points[s],
        })
        .collect();
    let node_edges: Vec<[usize; 2]> = edges.into_iter().collect();
    let mut neighbors = vec![Vec::new(); nodes.len()];
    for &[a, b] in &node_edges {
        neighbors[a].push(b);
        neighbors[b].push(a);
    }
    Ok(DeformationGraph {
        nodes,
        node_edges,
        radius,
        influence,
        uncovered,
        neighbors,
    })
}

/// Geodesically nearest node, falling back to Euclidean when no node is
/// reachable; ties pick the lowest node index.
fn nearest_node(domain: &GeodesicDomain, points: &[Vec3], seeds: &[usize], i: usize) -> usize {
    let d = domain.distances_from(i, None);
    let by = |f: &dyn Fn(usize) -> f64| {
        (0..seeds.len()).fold((0, f64::INFINITY), |best, j| {
            let v = f(j);
            if v < best.1 {
                (j, v)
            } else {
                best
            }
        })
    };
    let (j, dist) = by(&|j| d[seeds[j]]);
    if dist.is_finite() {
        j
    } else {
        by(&|j| (points[seeds[j]] - points[i]).norm()).0
    }
}

impl DeformationGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.node_edges.len()
    }

    /// Graph neighbors `N(p_j)`.
    pub fn neighbors(&self, j: usize) -> &[usize] {
        &self.neighbors[j]
    }

    /// Blends the node transforms at each point:
    /// `sum_j w_ij (A_j (v_i - p_j) + p_j + t_j)`.
    pub fn transform_points(&self, state: &TransformState, points: &[Vec3]) -> Result<Vec<Vec3>> {
        if points.len() != self.influence.len() {
            return Err(Error::InvalidInput(format!(
                "{} points for a graph built on {}",
                points.len(),
                self.influence.len()
            )));
        }
        if state.node_count() != self.nodes.len() {
            return Err(Error::InvalidInput(format!(
                "state has {} nodes, graph has {}",
                state.node_count(),
                self.nodes.len()
            )));
        }
        let affine = state.to_affine();
        Ok(points
            .iter()
            .zip(&self.influence)
            .map(|(v, inf)| {
                inf.iter().fold(Vec3::zeros(), |acc, &(j, w)| {
                    let p = self.nodes[j].position;
                    let (a, t) = &affine[j];
                    acc + w * (a * (v - p) + p + t)
                })
            })
            .collect())
    }

    /// Debug dump: nodes as PLY vertices with an `edge` element.
    pub fn write_ply(&self, path: impl AsRef<Path>) -> Result<()> {
        let pts = Surface::from_points(self.nodes.iter().map(|n| n.position).collect())?;
        write_ply(
            &pts,
            path,
            PlyExtras {
                edges: Some(&self.node_edges),
                ..Default::default()
            },
        )
    }
}

pub fn transform_points(
    graph: &DeformationGraph,
    state: &TransformState,
    points: &[Vec3],
) -> Result<Vec<Vec3>> {
    graph.transform_points(state, points)
}
