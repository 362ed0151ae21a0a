//! Sparse matrices used by the solver: row-compressed assembly matrices and a
//! symmetric positive definite factorization.

mod cholesky;
mod csr;

pub use cholesky::{CholeskyFactor, Ordering, SymbolicCholesky};
pub use csr::{gram_pattern, CsrMatrix, SymmetricCsc};
