//! Dense complex linear algebra on tensor products of finite-dimensional sites.

pub mod eig;
pub mod matrix;
pub mod random;
pub mod schmidt;
pub mod space;
pub mod svd;

pub use eig::{eigvalsh, expm_herm, func_herm, herm_eig, logm_herm, HermEig};
pub use matrix::{hs_inner, kron, paulis, ComplexMatrix, C64};
pub use schmidt::{op_schmidt, schmidt_reconstruct, SchmidtTerm};
pub use space::{embed, partial_trace, trace_out, SiteSpace, SupportedOperator};
pub use svd::{svd, Svd};
