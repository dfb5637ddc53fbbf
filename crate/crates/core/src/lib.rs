//! Pairwise low-rank factorization of the two-body term of second-quantized
//! fermionic Hamiltonians whose single-particle basis functions are complex.
//!
//! The interaction
//!
//! ```text
//! H2 = 1/2 sum_{pqrs} h[p,q,r,s] c†_p c†_q c_r c_s
//! ```
//!
//! is reordered into `1/2 sum h c†_p c_s c†_q c_r` plus a one-body correction,
//! the grouped matrix `M[(p,s),(q,r)] = h[p,q,r,s]` is eigendecomposed, and
//! every eigenvector is reshaped into an `N x N` slice that is either purely
//! symmetric or purely antisymmetric. Diagonalizing each slice yields a sum of
//! squares of rotated number operators:
//!
//! ```text
//! H2 = S + sum_L (±1/2) w_L sum_{ab} λ_a λ_b n_a^(L) n_b^(L)
//! ```
//!
//! The [`fock`] module checks that identity by brute force in the
//! `2^N`-dimensional occupation basis.
//!
//! Module map:
//! - [`tensor`]: data model, symmetry checks, index grouping
//! - [`factorize`]: grouped eigendecomposition, parity resolution, slices
//! - [`assemble`]: the factored Hamiltonian, reconstruction, truncation
//! - [`fock`] and [`trotter`]: dense many-body oracle and product-formula errors
//! - [`generators`]: random, real-basis and ring plane-wave instances
//! - [`io`]: binary tensor files and text factor files

pub mod assemble;
pub mod error;
pub mod factorize;
pub mod fock;
pub mod generators;
pub mod io;
mod linalg;
pub mod parallel;
pub mod tensor;
pub mod trotter;

pub use assemble::{
    factorize_hamiltonian, reconstruct_grouped, reconstruct_tensor, truncate, truncation_scan,
    FactoredHamiltonian, TruncationReport,
};
pub use error::{Error, Result};
pub use factorize::{FactorSlice, FactorizationOptions, Parity, SchurResult};
pub use fock::FockMatrix;
pub use tensor::{
    GroupedMatrix, HamiltonianInstance, InteractionTensor, OneBodyMatrix, SymmetryReport,
    TwoBodyTensor,
};
pub use trotter::TrotterScanResult;

pub use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64;
