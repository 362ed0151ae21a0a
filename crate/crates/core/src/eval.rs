//! Accuracy metrics and synthetic corruption of registration targets.

use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::energy::TransformState;
use crate::error::{Error, Result};
use crate::geodesics::GeodesicDomain;
use crate::geometry::{load, write_ply, PlyExtras, Surface};
use crate::graph::DeformationGraph;
use crate::{Mat3, Vec3};

/// Ground-truth deformed positions, index-aligned with the source.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub positions: Vec<Vec3>,
}

impl GroundTruth {
    pub fn write_ply(&self, path: impl AsRef<Path>) -> Result<()> {
        write_ply(&Surface::from_points(self.positions.clone())?, path, PlyExtras::default())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(GroundTruth {
            positions: load(path)?.vertices,
        })
    }
}

/// Root mean square of per-point deviations.
pub fn rmse(result: &[Vec3], gt: &GroundTruth) -> Result<f64> {
    rmse_over(result, gt, 0..result.len())
}

/// RMSE restricted to the given point indices.
pub fn rmse_over(result: &[Vec3], gt: &GroundTruth, indices: impl IntoIterator<Item = usize>) -> Result<f64> {
    if result.len() != gt.positions.len() {
        return Err(Error::InvalidInput(format!(
            "{} result points for {} ground-truth points",
            result.len(),
            gt.positions.len()
        )));
    }
    let (mut sum, mut count) = (0.0, 0usize);
    for i in indices {
        if i >= result.len() {
            return Err(Error::InvalidInput(format!("index {i} out of range")));
        }
        sum += (result[i] - gt.positions[i]).norm_squared();
        count += 1;
    }
    if count == 0 {
        return Err(Error::InvalidInput("no points to evaluate".into()));
    }
    Ok((sum / count as f64).sqrt())
}

fn unit_normals(s: &Surface) -> Result<&[Vec3]> {
    s.normals
        .as_deref()
        .ok_or_else(|| Error::InvalidInput("surface has no normals".into()))
}

/// Moves a random `floor(fraction * n)` subset of vertices along their normals
/// by `N(0, sigma^2)` offsets.
pub fn add_gaussian_normal_noise(s: &Surface, fraction: f64, sigma: f64, seed: u64) -> Result<Surface> {
    let normals = unit_normals(s)?;
    if !(0.0..=1.0).contains(&fraction) || !(sigma >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise needs fraction in [0, 1] and sigma >= 0, got {fraction} and {sigma}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut out = s.clone();
    let count = (fraction * s.len() as f64).floor() as usize;
    let mut chosen = sample(&mut rng, s.len(), count).into_vec();
    chosen.sort_unstable();
    for i in chosen {
        out.vertices[i] += normals[i] * normal.sample(&mut rng);
    }
    Ok(out)
}

/// Moves a random `floor(fraction * n)` subset of vertices by exactly
/// `distance` along their normals, with random sign.
pub fn add_normal_outliers(s: &Surface, fraction: f64, distance: f64, seed: u64) -> Result<Surface> {
    let normals = unit_normals(s)?;
    if !(0.0..=1.0).contains(&fraction) || !(distance >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "outliers need fraction in [0, 1] and distance >= 0, got {fraction} and {distance}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = s.clone();
    let count = (fraction * s.len() as f64).floor() as usize;
    let mut chosen = sample(&mut rng, s.len(), count).into_vec();
    chosen.sort_unstable();
    for i in chosen {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        out.vertices[i] += normals[i] * (sign * distance);
    }
    Ok(out)
}

/// Removes every vertex within `radius` (geodesic) of `seed_vertex`, plus
/// incident faces and edges. Returns the remaining surface and, for each of
/// its vertices, the original index.
pub fn remove_region(s: &Surface, seed_vertex: usize, radius: f64) -> Result<(Surface, Vec<usize>)> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
    }
    if seed_vertex >= s.len() {
        return Err(Error::InvalidInput(format!("seed vertex {seed_vertex} out of range")));
    }
    let domain = GeodesicDomain::new(s)?;
    let dist = domain.distances_from(seed_vertex, Some(radius));
    let kept: Vec<usize> = (0..s.len()).filter(|&i| i != seed_vertex && !(dist[i] <= radius)).collect();
    if kept.is_empty() {
        return Err(Error::InvalidInput("region removal leaves no vertices".into()));
    }
    let mut remap = vec![usize::MAX; s.len()];
    for (new, &old) in kept.iter().enumerate() {
        remap[old] = new;
    }
    let vertices: Vec<Vec3> = kept.iter().map(|&i| s.vertices[i]).collect();
    let mut out = if s.has_faces() {
        let faces: Vec<[usize; 3]> = s
            .faces
            .iter()
            .filter(|f| f.iter().all(|&v| remap[v] != usize::MAX))
            .map(|f| [remap[f[0]], remap[f[1]], remap[f[2]]])
            .collect();
        Surface::from_mesh(vertices, faces)?
    } else {
        let edges: Vec<[usize; 2]> = s
            .edges
            .iter()
            .filter(|e| remap[e[0]] != usize::MAX && remap[e[1]] != usize::MAX)
            .map(|e| [remap[e[0]], remap[e[1]]])
            .collect();
        Surface::from_edges(vertices, edges)?
    };
    if let Some(n) = &s.normals {
        out.normals = Some(kept.iter().map(|&i| n[i]).collect());
    }
    Ok((out, kept))
}

/// Geodesic radius around `seed_vertex` such that `remove_region` with it
/// drops about `fraction` of the vertices: the distance of the vertex at that
/// rank.
pub fn radius_for_fraction(s: &Surface, seed_vertex: usize, fraction: f64) -> Result<f64> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(format!("fraction must lie in (0, 1), got {fraction}")));
    }
    if seed_vertex >= s.len() {
        return Err(Error::InvalidInput(format!("seed vertex {seed_vertex} out of range")));
    }
    let mut d = GeodesicDomain::new(s)?.distances_from(seed_vertex, None);
    d.retain(|x| x.is_finite());
    d.sort_by(f64::total_cmp);
    let k = ((fraction * s.len() as f64) as usize).min(d.len() - 1);
    if !(d[k] > 0.0) {
        return Err(Error::Degenerate("removal radius is zero".into()));
    }
    Ok(d[k])
}

/// Deforms `s` with the graph blending of `state`; the result is both the
/// synthetic target and the ground truth.
pub fn synthesize_deformation(
    s: &Surface,
    graph: &DeformationGraph,
    state: &TransformState,
) -> Result<(Surface, GroundTruth)> {
    let positions = graph.transform_points(state, &s.vertices)?;
    let mut target = s.clone();
    target.vertices = positions.clone();
    target.normals = None;
    Ok((target, GroundTruth { positions }))
}

/// A smooth bend: node `j` rotates by an angle growing linearly (up to
/// `max_angle_deg`) with its coordinate along `axis`, about `hinge` through
/// the centroid of the nodes, and translates so neighbouring nodes agree to
/// first order.
pub fn smooth_bend_state(graph: &DeformationGraph, axis: Vec3, hinge: Vec3, max_angle_deg: f64) -> TransformState {
    let axis = axis.normalize();
    let hinge = hinge.normalize();
    let positions: Vec<Vec3> = graph.nodes.iter().map(|n| n.position).collect();
    let center = positions.iter().sum::<Vec3>() / positions.len().max(1) as f64;
    let extent = positions
        .iter()
        .map(|p| (p - center).dot(&axis).abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let blocks: Vec<(Mat3, Vec3)> = positions
        .iter()
        .map(|p| {
            let s = (p - center).dot(&axis) / extent;
            let angle = max_angle_deg.to_radians() * s.max(0.0);
            let rot = *nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(hinge), angle).matrix();
            // Rigid rotation about the hinge line through the center.
            let moved = rot * (p - center) + center;
            (rot, moved - p)
        })
        .collect();
    TransformState::from_affine(&blocks)
}

/// Independent random rotations of at most `max_angle_deg` per node (random
/// axes), with translations keeping each node in place.
pub fn random_node_rotations(graph: &DeformationGraph, max_angle_deg: f64, seed: u64) -> TransformState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks: Vec<(Mat3, Vec3)> = graph
        .nodes
        .iter()
        .map(|_| {
            let axis = loop {
                let a = Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0));
                if a.norm() > 1e-3 && a.norm() <= 1.0 {
                    break a;
                }
            };
            let angle = rng.random_range(-max_angle_deg..=max_angle_deg).to_radians();
            let rot = *nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle).matrix();
            (rot, Vec3::zeros())
        })
        .collect();
    TransformState::from_affine(&blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::compute_normals;
    use crate::graph::{build_graph, Sampler};
    use crate::shapes;

    #[test]
    fn rmse_examples() {
        let a = vec![Vec3::zeros(), Vec3::x()];
        let gt = GroundTruth { positions: a.clone() };
        assert_eq!(rmse(&a, &gt).unwrap(), 0.0);
        let off: Vec<Vec3> = a.iter().map(|p| p + Vec3::new(0.0, 0.3, 0.4)).collect();
        assert!((rmse(&off, &gt).unwrap() - 0.5).abs() < 1e-15);
        let r = vec![Vec3::new(3.0, 0.0, 0.0), Vec3::new(1.0, 4.0, 0.0)];
        assert!((rmse(&r, &gt).unwrap() - (12.5f64).sqrt()).abs() < 1e-12);
        assert!((rmse(&r, &gt).unwrap() - 3.5355).abs() < 1e-4);
        assert!(rmse(&r[..1], &gt).is_err());
    }

    #[test]
    fn rmse_is_rigid_invariant() {
        let s = shapes::wavy_sheet(8);
        let gt = GroundTruth {
            positions: s.vertices.iter().map(|p| p * 1.01 + Vec3::new(0.0, 0.01, 0.0)).collect(),
        };
        let rot = *nalgebra::Rotation3::from_euler_angles(0.4, -1.0, 2.0).matrix();
        let t = Vec3::new(3.0, -1.0, 0.5);
        let gt2 = GroundTruth {
            positions: gt.positions.iter().map(|p| rot * p + t).collect(),
        };
        let r2: Vec<Vec3> = s.vertices.iter().map(|p| rot * p + t).collect();
        assert!((rmse(&s.vertices, &gt).unwrap() - rmse(&r2, &gt2).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn noise_examples() {
        let s = compute_normals(&shapes::wavy_sheet(10)).unwrap();
        assert_eq!(add_gaussian_normal_noise(&s, 0.5, 0.0, 1).unwrap(), s);
        assert_eq!(add_gaussian_normal_noise(&s, 0.0, 0.1, 1).unwrap(), s);
        let a = add_gaussian_normal_noise(&s, 0.5, 0.1, 7).unwrap();
        let b = add_gaussian_normal_noise(&s, 0.5, 0.1, 7).unwrap();
        assert_eq!(a, b);
        let moved = a.vertices.iter().zip(&s.vertices).filter(|(p, q)| p != q).count();
        assert_eq!(moved, s.len() / 2);
        let bare = Surface::from_points(s.vertices.clone()).unwrap();
        assert!(matches!(add_gaussian_normal_noise(&bare, 0.5, 0.1, 1), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn noise_standard_deviation() {
        let s = compute_normals(&shapes::grid(100, 100, 0.01)).unwrap();
        let l = s.mean_edge_length();
        let sigma = 0.3 * l;
        let n = add_gaussian_normal_noise(&s, 1.0, sigma, 11).unwrap();
        let d: Vec<f64> = n
            .vertices
            .iter()
            .zip(&s.vertices)
            .zip(s.normals.as_ref().unwrap())
            .map(|((p, q), nn)| (p - q).dot(nn))
            .collect();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (d.len() - 1) as f64;
        assert!((var.sqrt() - sigma).abs() < 0.05 * sigma);
    }

    #[test]
    fn outliers_move_by_exact_distance() {
        let s = compute_normals(&shapes::wavy_sheet(10)).unwrap();
        let o = add_normal_outliers(&s, 0.2, 0.5, 3).unwrap();
        let d: Vec<f64> = o.vertices.iter().zip(&s.vertices).map(|(p, q)| (p - q).norm()).collect();
        assert_eq!(d.iter().filter(|&&x| x > 0.0).count(), s.len() / 5);
        assert!(d.iter().all(|&x| x == 0.0 || (x - 0.5).abs() < 1e-12));
    }

    #[test]
    fn region_removal() {
        let s = shapes::grid(10, 10, 0.1);
        let (tiny, kept) = remove_region(&s, 55, 0.01).unwrap();
        assert_eq!(tiny.len(), s.len() - 1);
        assert!(!kept.contains(&55));
        tiny.validate().unwrap();
        assert!(matches!(remove_region(&s, 0, 100.0), Err(Error::InvalidInput(_))));
        let (part, kept) = remove_region(&s, 0, 0.35).unwrap();
        part.validate().unwrap();
        let removed = s.len() - kept.len();
        assert_eq!(part.len() + removed, s.len());
        for (new, &old) in kept.iter().enumerate() {
            assert_eq!(part.vertices[new], s.vertices[old]);
        }
    }

    #[test]
    fn radius_matches_requested_fraction() {
        let s = shapes::wavy_sheet(30);
        let r = radius_for_fraction(&s, 400, 0.2).unwrap();
        let (_, kept) = remove_region(&s, 400, r).unwrap();
        let removed = 1.0 - kept.len() as f64 / s.len() as f64;
        assert!((removed - 0.2).abs() < 0.02, "{removed}");
        assert!(radius_for_fraction(&s, 0, 1.0).is_err());
        assert!(radius_for_fraction(&s, 10_000, 0.2).is_err());
    }

    #[test]
    fn synthesis_examples() {
        let s = shapes::wavy_sheet(10);
        let g = build_graph(&s, 0.3, Sampler::Pca).unwrap();
        let (t, gt) = synthesize_deformation(&s, &g, &TransformState::identity(g.node_count())).unwrap();
        for ((a, b), c) in t.vertices.iter().zip(&gt.positions).zip(&s.vertices) {
            assert!((a - c).norm() < 1e-14 && (b - c).norm() < 1e-14);
        }

        let rot = *nalgebra::Rotation3::from_euler_angles(0.1, 0.2, 0.3).matrix();
        let tr = Vec3::new(0.5, 0.0, -0.2);
        let rigid = crate::correspondence::RigidTransform {
            rotation: rot,
            translation: tr,
        };
        let st = crate::correspondence::lift_rigid_to_state(&rigid, &g);
        let (t, _) = synthesize_deformation(&s, &g, &st).unwrap();
        for (p, q) in s.vertices.iter().zip(&t.vertices) {
            assert!((rot * p + tr - q).norm() < 1e-12);
        }

        let st = random_node_rotations(&g, 5.0, 4);
        let (_, gt) = synthesize_deformation(&s, &g, &st).unwrap();
        for (i, v) in s.vertices.iter().enumerate() {
            let mut want = Vec3::zeros();
            for &(j, w) in &g.influence[i] {
                let p = g.nodes[j].position;
                want += w * (st.linear(j) * (v - p) + p + st.translation(j));
            }
            assert!((gt.positions[i] - want).norm() < 1e-12);
        }
        for j in 0..g.node_count() {
            let a = st.linear(j);
            let angle = ((a.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos().to_degrees();
            assert!(angle <= 5.0 + 1e-9);
        }
    }

    #[test]
    fn bend_respects_angle_bound() {
        let s = shapes::wavy_sheet(12);
        let g = build_graph(&s, 0.2, Sampler::Pca).unwrap();
        let st = smooth_bend_state(&g, Vec3::x(), Vec3::y(), 10.0);
        for j in 0..g.node_count() {
            let a = st.linear(j);
            let angle = ((a.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos().to_degrees();
            assert!(angle <= 10.0 + 1e-9);
        }
    }

    #[test]
    fn ground_truth_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let gt = GroundTruth {
            positions: vec![Vec3::new(1.0, 2.0, 3.0), Vec3::new(-0.5, 0.25, 1e-3)],
        };
        let path = dir.path().join("gt.ply");
        gt.write_ply(&path).unwrap();
        let back = GroundTruth::load(&path).unwrap();
        for (a, b) in back.positions.iter().zip(&gt.positions) {
            assert!((a - b).norm() < 1e-6);
        }
    }
}
