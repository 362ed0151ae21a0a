use crate::energy::{energy_rot, Kernel, TransformState};
use crate::error::{Error, Result};
use crate::graph::DeformationGraph;
use crate::Vec3;

/// Kernel widths and term weights of the registration energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyParams {
    pub nu_a: f64,
    pub nu_r: f64,
    pub alpha: f64,
    pub beta: f64,
    pub kernel: Kernel,
}

impl EnergyParams {
    pub fn new(nu_a: f64, nu_r: f64, alpha: f64, beta: f64) -> Result<Self> {
        let p = EnergyParams {
            nu_a,
            nu_r,
            alpha,
            beta,
            kernel: Kernel::Welsch,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_kernel(mut self, kernel: Kernel) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu_a > 0.0) || !(self.nu_r > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "kernel widths must be positive (nu_a = {}, nu_r = {})",
                self.nu_a, self.nu_r
            )));
        }
        if !(self.alpha >= 0.0) || !(self.beta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "term weights must be non-negative (alpha = {}, beta = {})",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }
}

/// `A_j (p_i - p_j) + p_j + t_j - (p_i + t_i)`.
pub fn residual_dij(state: &TransformState, i: usize, j: usize, positions: &[Vec3]) -> Vec3 {
    let (pi, pj) = (positions[i], positions[j]);
    state.linear(j) * (pi - pj) + pj + state.translation(j) - (pi + state.translation(i))
}

/// `|v~_i - u_i|` for every source point.
pub fn align_residuals(
    graph: &DeformationGraph,
    source: &[Vec3],
    state: &TransformState,
    targets: &[Vec3],
) -> Result<Vec<f64>> {
    if targets.len() != source.len() {
        return Err(Error::InvalidInput(format!(
            "{} correspondence targets for {} source points",
            targets.len(),
            source.len()
        )));
    }
    let moved = graph.transform_points(state, source)?;
    Ok(moved.iter().zip(targets).map(|(v, u)| (v - u).norm()).collect())
}

/// `|D_ij|` over directed edge occurrences: for every undirected edge `(a, b)`
/// first `D_ab`, then `D_ba`.
pub fn reg_residuals(graph: &DeformationGraph, state: &TransformState) -> Vec<f64> {
    let p: Vec<Vec3> = graph.nodes.iter().map(|n| n.position).collect();
    graph
        .node_edges
        .iter()
        .flat_map(|&[a, b]| [(a, b), (b, a)])
        .map(|(i, j)| residual_dij(state, i, j, &p).norm())
        .collect()
}

pub fn energy_align(
    graph: &DeformationGraph,
    source: &[Vec3],
    state: &TransformState,
    targets: &[Vec3],
    kernel: Kernel,
    nu_a: f64,
) -> Result<f64> {
    Ok(align_residuals(graph, source, state, targets)?
        .into_iter()
        .map(|r| kernel.value(r, nu_a))
        .sum())
}

pub fn energy_reg(graph: &DeformationGraph, state: &TransformState, kernel: Kernel, nu_r: f64) -> f64 {
    reg_residuals(graph, state)
        .into_iter()
        .map(|r| kernel.value(r, nu_r))
        .sum()
}

/// `E_align + alpha E_reg + beta E_rot` with correspondence targets held fixed.
pub fn total_energy(
    graph: &DeformationGraph,
    source: &[Vec3],
    state: &TransformState,
    targets: &[Vec3],
    params: &EnergyParams,
) -> Result<f64> {
    params.validate()?;
    let align = energy_align(graph, source, state, targets, params.kernel, params.nu_a)?;
    let reg = energy_reg(graph, state, params.kernel, params.nu_r);
    Ok(align + params.alpha * reg + params.beta * energy_rot(state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::welsch;
    use crate::graph::{build_graph, Sampler};
    use crate::{shapes, Mat3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(rng: &mut ChaCha8Rng, r: usize, scale: f64) -> TransformState {
        let blocks: Vec<(Mat3, Vec3)> = (0..r)
            .map(|_| {
                (
                    Mat3::identity() + Mat3::from_fn(|_, _| rng.random_range(-scale..scale)),
                    Vec3::from_fn(|_, _| rng.random_range(-scale..scale)),
                )
            })
            .collect();
        TransformState::from_affine(&blocks)
    }

    #[test]
    fn dij_examples() {
        let p = vec![Vec3::new(1.0, 0.0, 0.0), Vec3::zeros()];
        let id = TransformState::identity(2);
        assert_eq!(residual_dij(&id, 0, 1, &p), Vec3::zeros());
        let t0 = Vec3::new(0.3, -2.0, 5.0);
        let tr = TransformState::from_affine(&[(Mat3::identity(), t0), (Mat3::identity(), t0)]);
        assert!(residual_dij(&tr, 0, 1, &p).norm() < 1e-15);
        let rz = Mat3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        let rot = TransformState::from_affine(&[(Mat3::identity(), Vec3::zeros()), (rz, Vec3::zeros())]);
        assert!((residual_dij(&rot, 0, 1, &p) - Vec3::new(-1.0, 1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn align_energy_examples() {
        let s = shapes::grid(6, 6, 0.2);
        let g = build_graph(&s, 0.5, Sampler::Pca).unwrap();
        let id = TransformState::identity(g.node_count());
        let aligned = energy_align(&g, &s.vertices, &id, &s.vertices, Kernel::Welsch, 0.1).unwrap();
        assert!(aligned < 1e-20);
        let mut targets = s.vertices.clone();
        targets[7].z += 0.25;
        let one = energy_align(&g, &s.vertices, &id, &targets, Kernel::Welsch, 0.1).unwrap();
        assert!((one - welsch(0.25, 0.1).unwrap()).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = random_state(&mut rng, g.node_count(), 0.05);
        let targets: Vec<Vec3> = s
            .vertices
            .iter()
            .map(|v| v + Vec3::from_fn(|_, _| rng.random_range(-0.05..0.05)))
            .collect();
        let got = energy_align(&g, &s.vertices, &x, &targets, Kernel::Welsch, 0.07).unwrap();
        let mut want = 0.0;
        for (i, v) in s.vertices.iter().enumerate() {
            let mut moved = Vec3::zeros();
            for &(j, w) in &g.influence[i] {
                let p = g.nodes[j].position;
                moved += w * (x.linear(j) * (v - p) + p + x.translation(j));
            }
            want += welsch((moved - targets[i]).norm(), 0.07).unwrap();
        }
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn reg_energy_examples() {
        let s = shapes::wavy_sheet(12);
        let g = build_graph(&s, 0.2, Sampler::Pca).unwrap();
        assert!(g.edge_count() > 0);
        let r = g.node_count();
        assert!(energy_reg(&g, &TransformState::identity(r), Kernel::Welsch, 0.3) < 1e-20);

        let rot = *nalgebra::Rotation3::from_euler_angles(0.3, -0.2, 1.1).matrix();
        let t = Vec3::new(0.4, 0.1, -0.7);
        let lifted: Vec<(Mat3, Vec3)> = g
            .nodes
            .iter()
            .map(|n| (rot, rot * n.position + t - n.position))
            .collect();
        let e = energy_reg(&g, &TransformState::from_affine(&lifted), Kernel::Welsch, 0.3);
        assert!(e < 1e-24);

        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let x = random_state(&mut rng, r, 0.2);
        let p: Vec<Vec3> = g.nodes.iter().map(|n| n.position).collect();
        let mut want = 0.0;
        for i in 0..r {
            for &j in g.neighbors(i) {
                let (a, ti, tj) = (x.linear(j), x.translation(i), x.translation(j));
                let d = a * (p[i] - p[j]) + p[j] + tj - (p[i] + ti);
                want += welsch(d.norm(), 0.3).unwrap();
            }
        }
        assert!((energy_reg(&g, &x, Kernel::Welsch, 0.3) - want).abs() < 1e-12);
    }

    #[test]
    fn total_is_weighted_sum() {
        let s = shapes::grid(5, 5, 0.25);
        let g = build_graph(&s, 0.6, Sampler::Pca).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = random_state(&mut rng, g.node_count(), 0.1);
        let params = EnergyParams::new(0.1, 0.2, 0.7, 1.3).unwrap();
        let tot = total_energy(&g, &s.vertices, &x, &s.vertices, &params).unwrap();
        let want = energy_align(&g, &s.vertices, &x, &s.vertices, Kernel::Welsch, 0.1).unwrap()
            + 0.7 * energy_reg(&g, &x, Kernel::Welsch, 0.2)
            + 1.3 * energy_rot(&x);
        assert!((tot - want).abs() < 1e-12);
        assert!(EnergyParams::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(EnergyParams::new(1.0, 1.0, -1.0, 1.0).is_err());
    }
}
