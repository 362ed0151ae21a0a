//! Closest-point correspondences, pair rejection and rigid ICP.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::energy::TransformState;
use crate::error::{Error, Result};
use crate::geometry::Surface;
use crate::graph::DeformationGraph;
use crate::spatial::KdTree;
use crate::{Mat3, Vec3};

/// Hard pair rejection used during rigid initialization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rejection {
    /// Pairs farther apart than this are rejected (normalized units).
    pub max_distance: f64,
    /// Pairs whose normals differ by more than this many degrees are rejected.
    pub max_angle_deg: f64,
}

impl Default for Rejection {
    fn default() -> Self {
        Rejection {
            max_distance: 0.3,
            max_angle_deg: 60.0,
        }
    }
}

impl Rejection {
    fn accepts(&self, distance: f64, n_query: &Vec3, n_target: &Vec3) -> bool {
        let cos = n_query.dot(n_target).clamp(-1.0, 1.0);
        distance <= self.max_distance && cos >= self.max_angle_deg.to_radians().cos() - 1e-12
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CorrespondenceSet {
    pub target_indices: Vec<usize>,
    pub targets: Vec<Vec3>,
    pub distances: Vec<f64>,
    pub valid: Vec<bool>,
}

impl CorrespondenceSet {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Debug dump: `source,target,distance,valid` per pair.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut write = || -> std::io::Result<()> {
            writeln!(w, "source,target,distance,valid")?;
            for i in 0..self.len() {
                writeln!(
                    w,
                    "{i},{},{},{}",
                    self.target_indices[i], self.distances[i], self.valid[i] as u8
                )?;
            }
            w.flush()
        };
        write().map_err(|e| Error::io(path, e))
    }
}

pub fn build_spatial_index(points: &[Vec3]) -> Result<KdTree> {
    KdTree::build(points.to_vec())
}

/// Exact nearest target vertex for every query. With `reject`, both the
/// queries and the target must carry normals.
pub fn find_correspondences(
    queries: &[Vec3],
    query_normals: Option<&[Vec3]>,
    target: &Surface,
    index: &KdTree,
    reject: Option<&Rejection>,
) -> Result<CorrespondenceSet> {
    if index.is_empty() {
        return Err(Error::InvalidInput("spatial index is empty".into()));
    }
    let normals = match reject {
        Some(_) => {
            let qn = query_normals
                .ok_or_else(|| Error::InvalidInput("rejection needs query normals".into()))?;
            let tn = target
                .normals
                .as_deref()
                .ok_or_else(|| Error::InvalidInput("rejection needs target normals".into()))?;
            if qn.len() != queries.len() {
                return Err(Error::InvalidInput(format!(
                    "{} query normals for {} queries",
                    qn.len(),
                    queries.len()
                )));
            }
            Some((qn, tn))
        }
        None => None,
    };
    let found: Vec<(usize, f64, bool)> = queries
        .par_iter()
        .enumerate()
        .map(|(i, q)| {
            let (j, d) = index.nearest(q).expect("non-empty index");
            let ok = match (reject, normals) {
                (Some(r), Some((qn, tn))) => r.accepts(d, &qn[i], &tn[j]),
                _ => true,
            };
            (j, d, ok)
        })
        .collect();
    let pts = index.points();
    Ok(CorrespondenceSet {
        target_indices: found.iter().map(|f| f.0).collect(),
        targets: found.iter().map(|f| pts[f.0]).collect(),
        distances: found.iter().map(|f| f.1).collect(),
        valid: found.iter().map(|f| f.2).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidTransform {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform {
            rotation: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    /// `self` after `first`.
    pub fn after(&self, first: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * first.rotation,
            translation: self.rotation * first.translation + self.translation,
        }
    }

    /// Least-squares rigid map taking `src[k]` onto `dst[k]`: SVD of the
    /// cross-covariance, with the smallest singular direction flipped when the
    /// optimum would be a reflection.
    pub fn best_fit(src: &[Vec3], dst: &[Vec3]) -> Option<RigidTransform> {
        if src.len() != dst.len() || src.is_empty() {
            return None;
        }
        let n = src.len() as f64;
        let cs = src.iter().sum::<Vec3>() / n;
        let cd = dst.iter().sum::<Vec3>() / n;
        let mut h = Mat3::zeros();
        for (s, d) in src.iter().zip(dst) {
            h += (d - cd) * (s - cs).transpose();
        }
        let svd = h.svd(true, true);
        let mut u = svd.u?;
        let v_t = svd.v_t?;
        if (u * v_t).determinant() < 0.0 {
            let k = svd.singular_values.imin();
            u.column_mut(k).neg_mut();
        }
        let rotation = u * v_t;
        Some(RigidTransform {
            rotation,
            translation: cd - rotation * cs,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IcpParams {
    pub iterations: usize,
    pub rejection: Rejection,
}

impl Default for IcpParams {
    fn default() -> Self {
        IcpParams {
            iterations: 15,
            rejection: Rejection::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IcpOutcome {
    pub transform: RigidTransform,
    /// Mean squared distance over valid pairs, before each iteration's update.
    pub msd: Vec<f64>,
}

/// Point-to-point ICP with rejection. Starts from the best fit of
/// `seed_pairs` (source index, target index) when given.
pub fn rigid_icp(
    source: &Surface,
    target: &Surface,
    params: &IcpParams,
    seed_pairs: Option<&[(usize, usize)]>,
) -> Result<IcpOutcome> {
    let src_normals = source
        .normals
        .as_deref()
        .ok_or_else(|| Error::InvalidInput("rigid initialization needs source normals".into()))?;
    let index = build_spatial_index(&target.vertices)?;
    let mut current = RigidTransform::identity();
    if let Some(pairs) = seed_pairs {
        let mut src = Vec::with_capacity(pairs.len());
        let mut dst = Vec::with_capacity(pairs.len());
        for &(i, j) in pairs {
            if i >= source.len() || j >= target.len() {
                return Err(Error::InvalidInput(format!("seed pair ({i}, {j}) out of range")));
            }
            src.push(source.vertices[i]);
            dst.push(target.vertices[j]);
        }
        if src.len() < 3 {
            return Err(Error::Initialization {
                iteration: 0,
                message: format!("{} seed pairs, need at least 3", src.len()),
            });
        }
        current = RigidTransform::best_fit(&src, &dst).ok_or_else(|| Error::Initialization {
            iteration: 0,
            message: "seed pair alignment failed".into(),
        })?;
    }

    let mut msd = Vec::with_capacity(params.iterations);
    for it in 0..params.iterations {
        let moved: Vec<Vec3> = source.vertices.iter().map(|p| current.apply(p)).collect();
        let normals: Vec<Vec3> = src_normals.iter().map(|n| current.rotation * n).collect();
        let corr = find_correspondences(&moved, Some(&normals), target, &index, Some(&params.rejection))?;
        let (mut src, mut dst) = (Vec::new(), Vec::new());
        let mut sum = 0.0;
        for i in 0..corr.len() {
            if corr.valid[i] {
                src.push(moved[i]);
                dst.push(corr.targets[i]);
                sum += corr.distances[i] * corr.distances[i];
            }
        }
        if src.len() < 3 {
            return Err(Error::Initialization {
                iteration: it + 1,
                message: format!("only {} valid correspondence pairs", src.len()),
            });
        }
        msd.push(sum / src.len() as f64);
        let step = RigidTransform::best_fit(&src, &dst).ok_or_else(|| Error::Initialization {
            iteration: it + 1,
            message: "closed-form alignment failed".into(),
        })?;
        current = step.after(&current);
    }
    Ok(IcpOutcome {
        transform: current,
        msd,
    })
}

pub fn rigid_icp_init(
    source: &Surface,
    target: &Surface,
    params: &IcpParams,
    seed_pairs: Option<&[(usize, usize)]>,
) -> Result<RigidTransform> {
    Ok(rigid_icp(source, target, params, seed_pairs)?.transform)
}

/// Per-node transforms reproducing a rigid map through the blending:
/// `A_j = R`, `t_j = R p_j + t - p_j`.
pub fn lift_rigid_to_state(rt: &RigidTransform, graph: &DeformationGraph) -> TransformState {
    let blocks: Vec<(Mat3, Vec3)> = graph
        .nodes
        .iter()
        .map(|n| (rt.rotation, rt.rotation * n.position + rt.translation - n.position))
        .collect();
    TransformState::from_affine(&blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::compute_normals;
    use crate::graph::{build_graph, Sampler};
    use crate::shapes;
    use nalgebra::{Rotation3, Unit};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rigid(angle_deg: f64, axis: Vec3, t: Vec3) -> RigidTransform {
        RigidTransform {
            rotation: *Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle_deg.to_radians())
                .matrix(),
            translation: t,
        }
    }

    fn moved(s: &Surface, rt: &RigidTransform) -> Surface {
        let mut out = s.clone();
        out.vertices = s.vertices.iter().map(|p| rt.apply(p)).collect();
        compute_normals(&out).unwrap()
    }

    fn test_shape() -> Surface {
        compute_normals(&shapes::bumpy_tube(16, 20)).unwrap()
    }

    #[test]
    fn correspondences_and_rejection() {
        let t = Surface::from_points(vec![Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0)])
            .unwrap()
            .with_normals(vec![Vec3::z(), Vec3::z()])
            .unwrap();
        let index = build_spatial_index(&t.vertices).unwrap();
        let q = [Vec3::zeros(), Vec3::new(0.0, 0.5, 0.0), Vec3::new(1.0, 0.0, 0.0)];
        let qn = [Vec3::z(), Vec3::z(), -Vec3::z()];
        let c = find_correspondences(&q, Some(&qn), &t, &index, Some(&Rejection::default())).unwrap();
        assert_eq!(c.target_indices, vec![0, 0, 1]);
        assert_eq!(c.distances[0], 0.0);
        assert!((c.distances[1] - 0.5).abs() < 1e-12);
        assert_eq!(c.valid, vec![true, false, false]);
        let plain = find_correspondences(&q, None, &t, &index, None).unwrap();
        assert!(plain.valid.iter().all(|&v| v));
        assert!(matches!(
            find_correspondences(&q, None, &t, &index, Some(&Rejection::default())),
            Err(Error::InvalidInput(_))
        ));
        assert!(build_spatial_index(&[]).is_err());
    }

    #[test]
    fn correspondences_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let pts: Vec<Vec3> = (0..500).map(|_| Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0))).collect();
        let t = Surface::from_points(pts.clone()).unwrap();
        let index = build_spatial_index(&pts).unwrap();
        let q: Vec<Vec3> = (0..200).map(|_| Vec3::from_fn(|_, _| rng.random_range(-1.2..1.2))).collect();
        let c = find_correspondences(&q, None, &t, &index, None).unwrap();
        for (i, qi) in q.iter().enumerate() {
            let (bj, bd) = pts
                .iter()
                .enumerate()
                .map(|(j, p)| (j, (p - qi).norm()))
                .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
            assert_eq!(c.target_indices[i], bj);
            assert!((c.distances[i] - bd).abs() < 1e-9);
            assert!((c.distances[i] - (qi - c.targets[i]).norm()).abs() < 1e-9);
        }
    }

    #[test]
    fn best_fit_recovers_rigid_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let src: Vec<Vec3> = (0..30).map(|_| Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0))).collect();
        let rt = rigid(73.0, Vec3::new(0.3, -1.0, 0.5), Vec3::new(1.0, 2.0, -0.5));
        let dst: Vec<Vec3> = src.iter().map(|p| rt.apply(p)).collect();
        let fit = RigidTransform::best_fit(&src, &dst).unwrap();
        assert!((fit.rotation - rt.rotation).norm() < 1e-10);
        assert!((fit.translation - rt.translation).norm() < 1e-10);
        assert!((fit.rotation.transpose() * fit.rotation - Mat3::identity()).norm() < 1e-9);
        assert!(fit.rotation.determinant() > 0.0);
        // Planar, mirrored input still yields a proper rotation.
        let flat: Vec<Vec3> = src.iter().map(|p| Vec3::new(p.x, p.y, 0.0)).collect();
        let mirrored: Vec<Vec3> = flat.iter().map(|p| Vec3::new(p.x, -p.y, 0.0)).collect();
        assert!(RigidTransform::best_fit(&flat, &mirrored).unwrap().rotation.determinant() > 0.0);
    }

    #[test]
    fn icp_fixed_point_is_identity() {
        let s = test_shape();
        let rt = rigid_icp_init(&s, &s, &IcpParams::default(), None).unwrap();
        assert!((rt.rotation - Mat3::identity()).norm() < 1e-9);
        assert!(rt.translation.norm() < 1e-9);
    }

    #[test]
    fn icp_recovers_small_rotation() {
        let s = test_shape();
        let truth = rigid(10.0, Vec3::z(), Vec3::new(0.03, -0.02, 0.01));
        let t = moved(&s, &truth);
        let out = rigid_icp(&s, &t, &IcpParams::default(), None).unwrap();
        assert!((out.transform.rotation - truth.rotation).norm() < 1e-6);
        assert!((out.transform.translation - truth.translation).norm() < 1e-6);
        for w in out.msd.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
    }

    #[test]
    fn icp_rejects_far_outliers() {
        let s = test_shape();
        let truth = rigid(5.0, Vec3::new(1.0, 1.0, 0.0), Vec3::new(0.01, 0.0, 0.02));
        let mut t = moved(&s, &truth);
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let n_out = (0.3 * s.len() as f64) as usize;
        let mut verts = t.vertices.clone();
        let mut normals = t.normals.clone().unwrap();
        for _ in 0..n_out {
            let dir = Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0)).normalize();
            verts.push(dir * rng.random_range(3.0..4.0));
            normals.push(dir);
        }
        t = Surface::from_points(verts).unwrap().with_normals(normals).unwrap();
        let out = rigid_icp_init(&s, &t, &IcpParams::default(), None).unwrap();
        assert!((out.rotation - truth.rotation).norm() < 1e-4);
        assert!((out.translation - truth.translation).norm() < 1e-4);
    }

    #[test]
    fn icp_from_seed_pairs() {
        let s = test_shape();
        let truth = rigid(120.0, Vec3::new(0.2, 1.0, 0.1), Vec3::new(0.5, 0.0, 0.0));
        let t = moved(&s, &truth);
        let pairs: Vec<(usize, usize)> = (0..s.len()).step_by(37).map(|i| (i, i)).collect();
        let out = rigid_icp_init(&s, &t, &IcpParams::default(), Some(&pairs)).unwrap();
        assert!((out.rotation - truth.rotation).norm() < 1e-9);
        let err = rigid_icp_init(&s, &t, &IcpParams::default(), Some(&pairs[..2])).unwrap_err();
        assert!(matches!(err, Error::Initialization { iteration: 0, .. }));
    }

    #[test]
    fn icp_fails_without_valid_pairs() {
        let s = test_shape();
        let far = moved(&s, &rigid(0.0, Vec3::z(), Vec3::new(10.0, 0.0, 0.0)));
        let err = rigid_icp_init(&s, &far, &IcpParams::default(), None).unwrap_err();
        assert!(matches!(err, Error::Initialization { iteration: 1, .. }));
    }

    #[test]
    fn lifted_state_reproduces_rigid_map() {
        let s = shapes::wavy_sheet(10);
        let g = build_graph(&s, 0.3, Sampler::Pca).unwrap();
        let id = lift_rigid_to_state(&RigidTransform::identity(), &g);
        assert_eq!(id, TransformState::identity(g.node_count()));
        let t0 = Vec3::new(0.1, -0.2, 0.3);
        let tr = lift_rigid_to_state(&rigid(0.0, Vec3::z(), t0), &g);
        for j in 0..g.node_count() {
            assert_eq!(tr.linear(j), Mat3::identity());
            assert!((tr.translation(j) - t0).norm() < 1e-15);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        for _ in 0..10 {
            let rt = rigid(
                rng.random_range(-180.0..180.0),
                Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0)),
                Vec3::from_fn(|_, _| rng.random_range(-1.0..1.0)),
            );
            let st = lift_rigid_to_state(&rt, &g);
            let out = g.transform_points(&st, &s.vertices).unwrap();
            for (p, q) in s.vertices.iter().zip(&out) {
                assert!((rt.apply(p) - q).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn csv_dump() {
        let dir = tempfile::tempdir().unwrap();
        let c = CorrespondenceSet {
            target_indices: vec![3, 1],
            targets: vec![Vec3::zeros(); 2],
            distances: vec![0.5, 0.25],
            valid: vec![true, false],
        };
        let path = dir.path().join("c.csv");
        c.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "source,target,distance,valid\n0,3,0.5,1\n1,1,0.25,0\n");
    }
}
