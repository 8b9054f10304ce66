//! Dense and sparse complex linear algebra: Kronecker products, the matrix
//! exponential, LU solves and norms.
//!
//! Two-mode operators are always laid out with the flat index
//! `(n1, n2) -> n1 * dim2 + n2`, which is what [`kron`] produces.

mod dense;
mod expm;
mod lu;
mod sparse;
mod vector;

pub use dense::{frob_norm, kron, kron_apply, kron_apply_block, spectral_norm, ComplexMatrix};
pub use expm::matexp;
pub use lu::{solve, LuFactors};
pub use sparse::{kron_sparse, SparseMatrix};
pub use vector::{inner, vec_norm, ComplexVector};

pub use num_complex::Complex64;

#[cfg(test)]
mod tests;
