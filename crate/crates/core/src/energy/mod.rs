//! Registration energies, their quadratic surrogates and the matrix form used
//! by the solver.

mod kernel;
mod rotation;
mod state;
mod surrogate;
mod terms;

pub use kernel::{welsch, Kernel};
pub use rotation::{energy_rot, project_rotation};
pub use state::TransformState;
pub use surrogate::{assemble_surrogate, MatrixForm, SurrogateSystem, H0_JITTER};
pub use terms::{
    align_residuals, energy_align, energy_reg, reg_residuals, residual_dij, total_energy,
    EnergyParams,
};
