//! Per-vertex normals.
//!
//! Meshes: angle-weighted sum of incident face normals. Point clouds: PCA over
//! the 10 nearest neighbors, oriented by propagating along a minimum spanning
//! tree of the neighbor graph (edge cost `1 - |n_i . n_j|`), seeded at the
//! highest point with its normal pointing up.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::geometry::Surface;
use crate::spatial::KdTree;
use crate::{Mat3, Vec3};

pub const PCA_NEIGHBORS: usize = 10;

pub fn compute_normals(surface: &Surface) -> Result<Surface> {
    let normals = if surface.has_faces() {
        mesh_normals(surface)
    } else {
        if surface.len() < 3 {
            return Err(Error::Degenerate(
                "normal estimation needs at least 3 points".into(),
            ));
        }
        point_cloud_normals(&surface.vertices)
    };
    let mut out = surface.clone();
    out.normals = Some(normals);
    Ok(out)
}

fn mesh_normals(surface: &Surface) -> Vec<Vec3> {
    let v = &surface.vertices;
    let mut acc = vec![Vec3::zeros(); v.len()];
    for f in &surface.faces {
        let n = (v[f[1]] - v[f[0]]).cross(&(v[f[2]] - v[f[0]]));
        let len = n.norm();
        if len == 0.0 {
            continue;
        }
        let n = n / len;
        for k in 0..3 {
            let (a, b, c) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
            let e1 = v[b] - v[a];
            let e2 = v[c] - v[a];
            let angle = e1.angle(&e2);
            if angle.is_finite() {
                acc[a] += n * angle;
            }
        }
    }
    // Vertices outside any face keep a deterministic placeholder.
    acc.into_iter()
        .map(|n| {
            let len = n.norm();
            if len > 0.0 {
                n / len
            } else {
                Vec3::z()
            }
        })
        .collect()
}

fn point_cloud_normals(points: &[Vec3]) -> Vec<Vec3> {
    let tree = KdTree::new(points.to_vec());
    let k = PCA_NEIGHBORS.min(points.len());
    let neighborhoods: Vec<Vec<usize>> = points
        .iter()
        .map(|p| tree.k_nearest(p, k).into_iter().map(|(i, _)| i).collect())
        .collect();
    let mut normals: Vec<Vec3> = neighborhoods
        .iter()
        .map(|nb| {
            let mean: Vec3 = nb.iter().map(|&i| points[i]).sum::<Vec3>() / nb.len() as f64;
            let mut cov = Mat3::zeros();
            for &i in nb {
                let d = points[i] - mean;
                cov += d * d.transpose();
            }
            let eig = SymmetricEigen::new(cov);
            let n: Vec3 = eig.eigenvectors.column(eig.eigenvalues.imin()).into();
            n.normalize()
        })
        .collect();
    orient_by_mst(points, &neighborhoods, &mut normals);
    normals
}

fn orient_by_mst(points: &[Vec3], neighborhoods: &[Vec<usize>], normals: &mut [Vec3]) {
    let n = points.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, nb) in neighborhoods.iter().enumerate() {
        for &j in nb {
            if j != i {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    let mut visited = vec![false; n];
    loop {
        // Seed each component at its highest unvisited point.
        let seed = (0..n)
            .filter(|&i| !visited[i])
            .max_by(|&a, &b| points[a].z.total_cmp(&points[b].z).then(b.cmp(&a)));
        let Some(seed) = seed else { break };
        if normals[seed].z < 0.0 {
            normals[seed] = -normals[seed];
        }
        // Prim's algorithm; each vertex is oriented against its tree parent.
        let mut heap = BinaryHeap::new();
        visited[seed] = true;
        let push = |heap: &mut BinaryHeap<_>, normals: &[Vec3], i: usize, visited: &[bool]| {
            for &j in &adj[i] {
                if !visited[j] {
                    let cost = 1.0 - normals[i].dot(&normals[j]).abs();
                    heap.push(Reverse((ordered(cost), j, i)));
                }
            }
        };
        push(&mut heap, normals, seed, &visited);
        while let Some(Reverse((_, j, parent))) = heap.pop() {
            if visited[j] {
                continue;
            }
            visited[j] = true;
            if normals[j].dot(&normals[parent]) < 0.0 {
                normals[j] = -normals[j];
            }
            push(&mut heap, normals, j, &visited);
        }
    }
}

/// Total-order wrapper so costs can live in a heap.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Cost(f64);
impl Eq for Cost {}
impl PartialOrd for Cost {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Cost {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&o.0)
    }
}
fn ordered(x: f64) -> Cost {
    Cost(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    #[test]
    fn flat_triangle() {
        let s = Surface::from_mesh(
            vec![Vec3::zeros(), Vec3::x(), Vec3::y()],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let s = compute_normals(&s).unwrap();
        for n in s.normals.unwrap() {
            assert!((n.z.abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cube_corner_normals_are_diagonals() {
        let s = compute_normals(&shapes::cube()).unwrap();
        for (v, n) in s.vertices.iter().zip(s.normals.unwrap()) {
            let want = (v - Vec3::repeat(0.5)).map(f64::signum).normalize();
            assert!((n - want).norm() < 1e-12, "{v:?}: {n:?}");
        }
    }

    #[test]
    fn sphere_point_cloud_normals_are_radial() {
        // Fibonacci lattice: 100 evenly spread samples.
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        let pts: Vec<Vec3> = (0..100)
            .map(|i| {
                let z = 1.0 - (2.0 * i as f64 + 1.0) / 100.0;
                let phi = golden * i as f64;
                let r = (1.0 - z * z).sqrt();
                Vec3::new(r * phi.cos(), r * phi.sin(), z)
            })
            .collect();
        let s = compute_normals(&Surface::from_points(pts).unwrap()).unwrap();
        let limit = 15f64.to_radians().cos();
        for (v, n) in s.vertices.iter().zip(s.normals.unwrap()) {
            assert!(n.dot(&v.normalize()) > limit, "{v:?} {n:?}");
        }
    }

    #[test]
    fn too_few_points() {
        let s = Surface::from_points(vec![Vec3::zeros(), Vec3::x()]).unwrap();
        assert!(matches!(compute_normals(&s), Err(Error::Degenerate(_))));
    }
}
