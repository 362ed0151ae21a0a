//! Robust non-rigid registration of a deformable source surface onto a target
//! point set.
//!
//! The source is deformed by an embedded deformation graph whose per-node
//! affine transforms are found by minimizing Welsch-robust alignment and
//! regularization energies plus a rigidity term. Each outer
//! majorization-minimization step replaces the robust terms by weighted
//! quadratics, and the resulting sub-problem is solved with L-BFGS using a
//! sparse Cholesky factorization of the fixed quadratic part as the initial
//! Hessian. Kernel widths are annealed from coarse to fine.

pub mod correspondence;
pub mod energy;
pub mod error;
pub mod eval;
pub mod geodesics;
pub mod geometry;
pub mod graph;
pub mod pipeline;
pub mod shapes;
pub mod solver;
pub mod sparse;
pub mod spatial;

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;

pub use correspondence::{CorrespondenceSet, Rejection, RigidTransform};
pub use energy::{EnergyParams, Kernel, TransformState};
pub use error::{Error, Result};
pub use geometry::{NormalizationRecord, Surface};
pub use graph::{DeformationGraph, Sampler};
pub use solver::{RegistrationResult, SolverParams};
