//! Inner L-BFGS solver, the majorization-minimization outer loop and the
//! kernel-width annealing driver.

mod lbfgs;
mod mm;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub use lbfgs::{
    line_search, minimize, two_loop_direction, CurvaturePair, InnerOutcome, InnerParams, InnerStop,
    LbfgsHistory, LineSearchStep, Objective, CURVATURE_EPS, MIN_STEP,
};
pub use mm::{register, register_with_graph, solve_inner, stage_count};

use crate::correspondence::{IcpParams, Rejection};
use crate::energy::{Kernel, TransformState};
use crate::error::{Error, Result};
use crate::graph::{DeformationGraph, Sampler};
use crate::Vec3;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverParams {
    /// L-BFGS memory.
    pub m: usize,
    /// Sufficient-decrease constant of the line search.
    pub gamma: f64,
    /// Inner loop stops when an accepted step lowers the surrogate by less.
    pub eps1: f64,
    /// Outer loop stops when no deformed source point moves farther.
    pub eps2: f64,
    /// Outer iterations per annealing stage.
    pub i_max: usize,
    /// Safety cap on L-BFGS iterations per inner solve.
    pub max_inner_iterations: usize,
    /// `nu_a_max = factor * median initial correspondence distance`.
    pub nu_a_max_factor: f64,
    /// `nu_a_min = factor * mean source edge length`.
    pub nu_a_min_factor: f64,
    /// `nu_r_max = factor * mean source edge length`.
    pub nu_r_max_factor: f64,
    pub k_alpha: f64,
    pub k_beta: f64,
    /// Run a single stage at the final widths of the annealing schedule.
    pub fixed_nu: bool,
    pub sampler: Sampler,
    /// Graph radius in multiples of the mean source edge length.
    pub radius_factor: f64,
    pub kernel: Kernel,
    /// Rigid ICP before the non-rigid solve; identity otherwise.
    pub rigid_init: bool,
    pub icp: IcpParams,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            m: 5,
            gamma: 0.3,
            eps1: 1e-3,
            eps2: 1e-3,
            i_max: 100,
            max_inner_iterations: 1000,
            nu_a_max_factor: 10.0,
            nu_a_min_factor: 0.5,
            nu_r_max_factor: 40.0,
            k_alpha: 1.0,
            k_beta: 1.0,
            fixed_nu: false,
            sampler: Sampler::Pca,
            radius_factor: 5.0,
            kernel: Kernel::Welsch,
            rigid_init: true,
            icp: IcpParams {
                iterations: 15,
                rejection: Rejection::default(),
            },
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("eps1", self.eps1),
            ("eps2", self.eps2),
            ("nu_a_max_factor", self.nu_a_max_factor),
            ("nu_a_min_factor", self.nu_a_min_factor),
            ("nu_r_max_factor", self.nu_r_max_factor),
            ("radius_factor", self.radius_factor),
            ("eps_d", self.icp.rejection.max_distance),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidParameter(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        if !(self.k_alpha >= 0.0) || !(self.k_beta >= 0.0) {
            return Err(Error::InvalidParameter("k_alpha and k_beta must be non-negative".into()));
        }
        if !(0.0..=180.0).contains(&self.icp.rejection.max_angle_deg) {
            return Err(Error::InvalidParameter(format!(
                "theta must lie in [0, 180] degrees, got {}",
                self.icp.rejection.max_angle_deg
            )));
        }
        if self.i_max == 0 || self.max_inner_iterations == 0 {
            return Err(Error::InvalidParameter("iteration caps must be at least 1".into()));
        }
        Ok(())
    }
}

/// One outer iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub stage: usize,
    pub outer_iter: usize,
    pub nu_a: f64,
    pub nu_r: f64,
    /// Robust energy at the iterate entering this outer iteration, with
    /// correspondences found at that iterate.
    pub energy: f64,
    /// Largest displacement of a deformed source point during the iteration.
    pub max_disp: f64,
    pub elapsed_seconds: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StageStop {
    Converged,
    IterationCap,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageSummary {
    pub nu_a: f64,
    pub nu_r: f64,
    pub iterations: usize,
    pub stop: StageStop,
    /// Robust energy at the stage's final iterate (correspondences refreshed).
    pub final_energy: f64,
}

#[derive(Clone, Debug)]
pub struct RegistrationResult {
    pub final_state: TransformState,
    /// Deformed source positions, in the frame the registration ran in.
    pub transformed_source: Vec<Vec3>,
    pub energy_trace: Vec<TraceRow>,
    pub stages: Vec<StageSummary>,
    pub graph: DeformationGraph,
    pub alpha: f64,
    pub beta: f64,
    pub nu_a_max: f64,
    pub nu_a_min: f64,
    pub nu_r_max: f64,
    pub mean_edge_length: f64,
}

pub const TRACE_HEADER: &str = "stage,outer_iter,nu_a,nu_r,energy,max_disp,elapsed_seconds";

/// Writes the trace as CSV. Without timing the elapsed column is written as
/// 0 so that repeated runs produce identical files.
pub fn write_trace_csv(rows: &[TraceRow], path: impl AsRef<Path>, timing: bool) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(w, "{TRACE_HEADER}")?;
        for r in rows {
            let t = if timing { r.elapsed_seconds } else { 0.0 };
            writeln!(
                w,
                "{},{},{:e},{:e},{:e},{:e},{:e}",
                r.stage, r.outer_iter, r.nu_a, r.nu_r, r.energy, r.max_disp, t
            )?;
        }
        w.flush()
    };
    write().map_err(|e| Error::io(path, e))
}
