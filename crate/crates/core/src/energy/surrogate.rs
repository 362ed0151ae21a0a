use std::sync::Arc;

use nalgebra::DMatrix;

use crate::energy::{project_rotation, EnergyParams, TransformState};
use crate::error::{Error, Result};
use crate::graph::DeformationGraph;
use crate::sparse::{gram_pattern, CholeskyFactor, CsrMatrix, Ordering, SymbolicCholesky, SymmetricCsc};
use crate::{Mat3, Vec3};

/// Diagonal shift added to `H0` so that nodes with no coverage on their
/// translation rows still factor.
pub const H0_JITTER: f64 = 1e-8;

/// The parts of the quadratic system fixed by the graph and the source:
/// `F X + P` gives the deformed source points, `B X - Y` the regularization
/// residuals (one row per directed edge), and the symbolic factorization of
/// the `H0` pattern.
#[derive(Debug)]
pub struct MatrixForm {
    pub f: CsrMatrix,
    pub p: DMatrix<f64>,
    pub b: CsrMatrix,
    pub y: DMatrix<f64>,
    /// `(i, j)` of each row of `B`.
    pub directed_edges: Vec<(usize, usize)>,
    h0_pattern: SymmetricCsc,
    symbolic: Arc<SymbolicCholesky>,
}

impl MatrixForm {
    pub fn new(graph: &DeformationGraph, source: &[Vec3]) -> Result<Self> {
        let r = graph.node_count();
        if r == 0 {
            return Err(Error::InvalidInput("deformation graph has no nodes".into()));
        }
        if source.len() != graph.influence.len() {
            return Err(Error::InvalidInput(format!(
                "{} source points for a graph built on {}",
                source.len(),
                graph.influence.len()
            )));
        }
        let dim = 4 * r;
        let mut p = DMatrix::zeros(source.len(), 3);
        let mut f_rows = Vec::with_capacity(source.len());
        for (i, (v, inf)) in source.iter().zip(&graph.influence).enumerate() {
            let mut row = Vec::with_capacity(4 * inf.len());
            for &(j, w) in inf {
                let pj = graph.nodes[j].position;
                let d = v - pj;
                row.extend([(4 * j, w * d.x), (4 * j + 1, w * d.y), (4 * j + 2, w * d.z), (4 * j + 3, w)]);
                for c in 0..3 {
                    p[(i, c)] += w * pj[c];
                }
            }
            f_rows.push(row);
        }

        let directed_edges: Vec<(usize, usize)> = graph
            .node_edges
            .iter()
            .flat_map(|&[a, b]| [(a, b), (b, a)])
            .collect();
        let mut y = DMatrix::zeros(directed_edges.len(), 3);
        let mut b_rows = Vec::with_capacity(directed_edges.len());
        for (row_index, &(i, j)) in directed_edges.iter().enumerate() {
            let d = graph.nodes[i].position - graph.nodes[j].position;
            b_rows.push(vec![
                (4 * j, d.x),
                (4 * j + 1, d.y),
                (4 * j + 2, d.z),
                (4 * j + 3, 1.0),
                (4 * i + 3, -1.0),
            ]);
            for c in 0..3 {
                y[(row_index, c)] = d[c];
            }
        }

        let f = CsrMatrix::from_rows(dim, f_rows);
        let b = CsrMatrix::from_rows(dim, b_rows);
        let h0_pattern = gram_pattern(dim, &[&f, &b]);
        let symbolic = Arc::new(SymbolicCholesky::analyze(&h0_pattern, Ordering::default()));
        Ok(MatrixForm {
            f,
            p,
            b,
            y,
            directed_edges,
            h0_pattern,
            symbolic,
        })
    }

    pub fn node_count(&self) -> usize {
        self.f.ncols() / 4
    }

    pub fn symbolic(&self) -> &Arc<SymbolicCholesky> {
        &self.symbolic
    }

    pub fn h0_pattern(&self) -> &SymmetricCsc {
        &self.h0_pattern
    }

    /// Deformed source points `F X + P`.
    pub fn deformed(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.f.mul_dense(x) + &self.p
    }

    pub fn deformed_points(&self, x: &DMatrix<f64>) -> Vec<Vec3> {
        rows_to_points(&self.deformed(x))
    }

    /// Regularization residual rows `B X - Y`.
    pub fn reg_rows(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.b.mul_dense(x) - &self.y
    }
}

/// Weighted least-squares surrogate at one outer iterate.
#[derive(Debug)]
pub struct SurrogateSystem<'a> {
    pub form: &'a MatrixForm,
    /// `U`: frozen correspondence targets, one row per source point.
    pub targets: DMatrix<f64>,
    /// Diagonal of `W_a`.
    pub align_weights: Vec<f64>,
    /// Diagonal of `W_r`, one entry per directed edge.
    pub reg_weights: Vec<f64>,
    pub params: EnergyParams,
}

/// Freezes the correspondence targets and computes the surrogate weights at
/// `state`.
pub fn assemble_surrogate<'a>(
    form: &'a MatrixForm,
    state: &TransformState,
    targets: &[Vec3],
    params: &EnergyParams,
) -> Result<SurrogateSystem<'a>> {
    params.validate()?;
    if targets.len() != form.f.nrows() {
        return Err(Error::InvalidInput(format!(
            "{} correspondence targets for {} source points",
            targets.len(),
            form.f.nrows()
        )));
    }
    if state.node_count() != form.node_count() {
        return Err(Error::InvalidInput(format!(
            "state has {} nodes, system has {}",
            state.node_count(),
            form.node_count()
        )));
    }
    let u = points_to_rows(targets);
    let x = state.as_matrix();
    let kernel = params.kernel;
    let align = form.deformed(x) - &u;
    let align_weights = (0..align.nrows())
        .map(|i| kernel.surrogate_weight(align.row(i).norm(), params.nu_a).sqrt())
        .collect();
    let reg = form.reg_rows(x);
    let reg_weights = (0..reg.nrows())
        .map(|i| kernel.surrogate_weight(reg.row(i).norm(), params.nu_r).sqrt())
        .collect();
    Ok(SurrogateSystem {
        form,
        targets: u,
        align_weights,
        reg_weights,
        params: *params,
    })
}

impl SurrogateSystem<'_> {
    pub fn dim(&self) -> usize {
        self.form.f.ncols()
    }

    /// `F X + P - U`.
    pub fn align_rows(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.form.deformed(x) - &self.targets
    }

    /// `|W_a (F X + P - U)|_F^2`.
    pub fn align_term(&self, x: &DMatrix<f64>) -> f64 {
        weighted_sq_norm(&self.align_rows(x), &self.align_weights)
    }

    /// `|W_r (B X - Y)|_F^2`.
    pub fn reg_term(&self, x: &DMatrix<f64>) -> f64 {
        weighted_sq_norm(&self.form.reg_rows(x), &self.reg_weights)
    }

    pub fn energy(&self, x: &DMatrix<f64>) -> f64 {
        let (rot, _) = rotation_term(x, false);
        self.align_term(x) + self.params.alpha * self.reg_term(x) + self.params.beta * rot
    }

    pub fn gradient(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.energy_and_gradient(x).1
    }

    /// Surrogate energy and its gradient
    /// `2 [F^T W_a^2 (F X + P - U) + alpha B^T W_r^2 (B X - Y) + beta (J X - Z)]`.
    pub fn energy_and_gradient(&self, x: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
        let p = &self.params;
        let ra = self.align_rows(x);
        let rr = self.form.reg_rows(x);
        let (rot, jx_minus_z) = rotation_term(x, true);
        let energy = weighted_sq_norm(&ra, &self.align_weights)
            + p.alpha * weighted_sq_norm(&rr, &self.reg_weights)
            + p.beta * rot;
        let wa2: Vec<f64> = self.align_weights.iter().map(|w| w * w).collect();
        let wr2: Vec<f64> = self.reg_weights.iter().map(|w| w * w).collect();
        let mut g = self.form.f.transpose_mul_weighted(Some(&wa2), &ra);
        g += p.alpha * self.form.b.transpose_mul_weighted(Some(&wr2), &rr);
        g += p.beta * jx_minus_z.expect("requested");
        g *= 2.0;
        (energy, g)
    }

    /// The robust energy with correspondences frozen at this system's targets.
    pub fn frozen_energy(&self, x: &DMatrix<f64>) -> f64 {
        let p = &self.params;
        let ra = self.align_rows(x);
        let rr = self.form.reg_rows(x);
        let align: f64 = (0..ra.nrows()).map(|i| p.kernel.value(ra.row(i).norm(), p.nu_a)).sum();
        let reg: f64 = (0..rr.nrows()).map(|i| p.kernel.value(rr.row(i).norm(), p.nu_r)).sum();
        align + p.alpha * reg + p.beta * rotation_term(x, false).0
    }

    /// `2 (F^T W_a^2 F + alpha B^T W_r^2 B + beta J) + jitter I`.
    pub fn assemble_h0(&self) -> SymmetricCsc {
        let p = &self.params;
        let mut h = self.form.h0_pattern.clone();
        let wa2: Vec<f64> = self.align_weights.iter().map(|w| w * w).collect();
        let wr2: Vec<f64> = self.reg_weights.iter().map(|w| w * w).collect();
        h.add_gram(&self.form.f, &wa2, 2.0);
        h.add_gram(&self.form.b, &wr2, 2.0 * p.alpha);
        for k in 0..h.n {
            let j_diag = if k % 4 == 3 { 0.0 } else { 1.0 };
            h.add(k, k, 2.0 * p.beta * j_diag + H0_JITTER);
        }
        h
    }

    /// Numeric factorization of `H0` reusing the cached symbolic analysis.
    pub fn factor_h0(&self) -> Result<CholeskyFactor> {
        self.form.symbolic.factor(&self.assemble_h0())
    }
}

/// `sum_j |A_j - proj(A_j)|^2` and optionally `J X - Z`.
fn rotation_term(x: &DMatrix<f64>, want_grad: bool) -> (f64, Option<DMatrix<f64>>) {
    let r = x.nrows() / 4;
    let mut total = 0.0;
    let mut g = want_grad.then(|| DMatrix::zeros(x.nrows(), 3));
    for j in 0..r {
        let at: Mat3 = x.fixed_view::<3, 3>(4 * j, 0).into();
        let a = at.transpose();
        let diff = a - project_rotation(&a);
        total += diff.norm_squared();
        if let Some(g) = g.as_mut() {
            g.fixed_view_mut::<3, 3>(4 * j, 0).copy_from(&diff.transpose());
        }
    }
    (total, g)
}

fn weighted_sq_norm(rows: &DMatrix<f64>, w: &[f64]) -> f64 {
    (0..rows.nrows()).map(|i| w[i] * w[i] * rows.row(i).norm_squared()).sum()
}

pub(crate) fn points_to_rows(points: &[Vec3]) -> DMatrix<f64> {
    DMatrix::from_fn(points.len(), 3, |i, c| points[i][c])
}

pub(crate) fn rows_to_points(m: &DMatrix<f64>) -> Vec<Vec3> {
    (0..m.nrows())
        .map(|i| Vec3::new(m[(i, 0)], m[(i, 1)], m[(i, 2)]))
        .collect()
}
