//! On-disk formats.
//!
//! - [`tensor_file`]: `FHT1`, a little-endian binary container for the
//!   two-body tensor and an optional one-body matrix.
//! - [`factor_file`]: `FHF1`, a JSON document holding a factored
//!   Hamiltonian with every float written to 17 significant digits.

pub mod factor_file;
pub mod tensor_file;

pub use factor_file::FactorFile;
pub use tensor_file::TensorFile;
