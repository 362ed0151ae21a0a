use std::time::Instant;

use nalgebra::DMatrix;

use crate::correspondence::{
    build_spatial_index, find_correspondences, lift_rigid_to_state, rigid_icp_init, CorrespondenceSet,
    RigidTransform,
};
use crate::energy::{assemble_surrogate, EnergyParams, MatrixForm, SurrogateSystem, TransformState};
use crate::error::{Error, Result};
use crate::geometry::{compute_normals, Surface};
use crate::graph::{build_graph, DeformationGraph};
use crate::solver::{
    minimize, InnerOutcome, InnerParams, RegistrationResult, SolverParams, StageStop, StageSummary,
    TraceRow,
};
use crate::spatial::KdTree;
use crate::Vec3;

/// Number of annealing stages from `nu_a_max` down to `nu_a_min` when the
/// width halves per stage and the minimum itself gets a full stage.
pub fn stage_count(nu_a_max: f64, nu_a_min: f64) -> usize {
    let mut nu = nu_a_max.max(nu_a_min);
    let mut n = 1;
    while nu != nu_a_min {
        nu = (0.5 * nu).max(nu_a_min);
        n += 1;
    }
    n
}

/// Minimizes one surrogate with L-BFGS, starting from `x0`. `H0` is factored
/// once, reusing the symbolic analysis cached on the matrix form.
pub fn solve_inner(sys: &SurrogateSystem<'_>, x0: &TransformState, params: &SolverParams) -> Result<InnerOutcome> {
    let factor = sys.factor_h0()?;
    let inner = InnerParams {
        memory: params.m,
        gamma: params.gamma,
        eps1: params.eps1,
        max_iterations: params.max_inner_iterations,
    };
    Ok(minimize(sys, x0.as_matrix().clone(), |q| factor.solve(q), &inner))
}

/// Builds the deformation graph on `source` and registers it onto `target`.
/// Both surfaces are expected in a common normalized frame.
pub fn register(source: &Surface, target: &Surface, params: &SolverParams) -> Result<RegistrationResult> {
    params.validate()?;
    let l_bar = source.mean_edge_length();
    if !(l_bar > 0.0) {
        return Err(Error::Degenerate("source has zero mean edge length".into()));
    }
    let graph = build_graph(source, params.radius_factor * l_bar, params.sampler)?;
    register_with_graph(source, target, graph, params)
}

pub fn register_with_graph(
    source: &Surface,
    target: &Surface,
    graph: DeformationGraph,
    params: &SolverParams,
) -> Result<RegistrationResult> {
    params.validate()?;
    let started = Instant::now();
    if graph.node_count() == 0 {
        return Err(Error::InvalidInput("deformation graph has no nodes".into()));
    }
    if target.is_empty() {
        return Err(Error::InvalidInput("target is empty".into()));
    }
    let l_bar = source.mean_edge_length();
    if !(l_bar > 0.0) {
        return Err(Error::Degenerate("source has zero mean edge length".into()));
    }
    let source = with_normals(source)?;
    let target = with_normals(target)?;

    let rigid = if params.rigid_init {
        rigid_icp_init(&source, &target, &params.icp, None)?
    } else {
        RigidTransform::identity()
    };
    let form = MatrixForm::new(&graph, &source.vertices)?;
    let mut x = lift_rigid_to_state(&rigid, &graph).into_matrix();
    let index = build_spatial_index(&target.vertices)?;

    let mut moved = form.deformed_points(&x);
    let d_bar = initial_median_distance(&moved, &source, &target, &index, &rigid, params)?;
    let nu_a_min = params.nu_a_min_factor * l_bar;
    let nu_a_max = (params.nu_a_max_factor * d_bar).max(nu_a_min);
    let nu_r_max = params.nu_r_max_factor * l_bar;
    let n = source.len() as f64;
    let alpha = if graph.edge_count() == 0 {
        0.0
    } else {
        params.k_alpha * n / graph.edge_count() as f64
    };
    let beta = params.k_beta * n / graph.node_count() as f64;

    let (mut nu_a, mut nu_r) = if params.fixed_nu {
        let halvings = stage_count(nu_a_max, nu_a_min) - 1;
        (nu_a_min, nu_r_max * 0.5f64.powi(halvings as i32))
    } else {
        (nu_a_max, nu_r_max)
    };

    let mut trace = Vec::new();
    let mut stages = Vec::new();
    let mut corr = nearest(&moved, &target, &index)?;
    for stage in 0.. {
        let energy_params = EnergyParams {
            nu_a,
            nu_r,
            alpha,
            beta,
            kernel: params.kernel,
        };
        energy_params.validate()?;
        let mut iterations = 0;
        let stop = loop {
            let state = TransformState::from_matrix(x.clone())?;
            let sys = assemble_surrogate(&form, &state, &corr.targets, &energy_params)?;
            let energy = sys.frozen_energy(&x);
            let inner = solve_inner(&sys, &state, params)?;
            let next_moved = form.deformed_points(&inner.x);
            let max_disp = max_displacement(&moved, &next_moved);
            x = inner.x;
            moved = next_moved;
            corr = nearest(&moved, &target, &index)?;
            trace.push(TraceRow {
                stage,
                outer_iter: iterations,
                nu_a,
                nu_r,
                energy,
                max_disp,
                elapsed_seconds: started.elapsed().as_secs_f64(),
            });
            iterations += 1;
            if max_disp < params.eps2 {
                break StageStop::Converged;
            }
            if iterations >= params.i_max {
                break StageStop::IterationCap;
            }
        };
        let final_energy = robust_energy(&form, &x, &corr.targets, &energy_params)?;
        stages.push(StageSummary {
            nu_a,
            nu_r,
            iterations,
            stop,
            final_energy,
        });
        if params.fixed_nu || nu_a == nu_a_min {
            break;
        }
        nu_a = (0.5 * nu_a).max(nu_a_min);
        nu_r *= 0.5;
    }

    Ok(RegistrationResult {
        final_state: TransformState::from_matrix(x)?,
        transformed_source: moved,
        energy_trace: trace,
        stages,
        graph,
        alpha,
        beta,
        nu_a_max,
        nu_a_min,
        nu_r_max,
        mean_edge_length: l_bar,
    })
}

fn with_normals(s: &Surface) -> Result<Surface> {
    if s.normals.is_some() {
        Ok(s.clone())
    } else {
        compute_normals(s)
    }
}

fn nearest(points: &[Vec3], target: &Surface, index: &KdTree) -> Result<CorrespondenceSet> {
    find_correspondences(points, None, target, index, None)
}

/// Median distance of the initial pairs that survive rejection, or of all
/// pairs when none survive.
fn initial_median_distance(
    moved: &[Vec3],
    source: &Surface,
    target: &Surface,
    index: &KdTree,
    rigid: &RigidTransform,
    params: &SolverParams,
) -> Result<f64> {
    let normals: Vec<Vec3> = source
        .normals
        .as_deref()
        .expect("normals computed")
        .iter()
        .map(|n| rigid.rotation * n)
        .collect();
    let corr = find_correspondences(moved, Some(&normals), target, index, Some(&params.icp.rejection))?;
    let mut d: Vec<f64> = corr
        .distances
        .iter()
        .zip(&corr.valid)
        .filter(|(_, &v)| v)
        .map(|(&d, _)| d)
        .collect();
    if d.is_empty() {
        d = corr.distances.clone();
    }
    d.sort_by(f64::total_cmp);
    let m = d.len();
    Ok(if m % 2 == 1 {
        d[m / 2]
    } else {
        0.5 * (d[m / 2 - 1] + d[m / 2])
    })
}

fn robust_energy(form: &MatrixForm, x: &DMatrix<f64>, targets: &[Vec3], params: &EnergyParams) -> Result<f64> {
    let state = TransformState::from_matrix(x.clone())?;
    Ok(assemble_surrogate(form, &state, targets, params)?.frozen_energy(x))
}

fn max_displacement(a: &[Vec3], b: &[Vec3]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)
}
