//! Quantum Markov networks: conditional-independence checks on many-body
//! states, cumulant expansions of Hamiltonians and commuting decompositions.

pub mod cumulants;
pub mod decompose;
pub mod error;
pub mod generators;
pub mod graphs;
pub mod io;
pub mod markov;
pub mod model;
pub mod par;
pub mod pauli;
pub mod tensor;

pub use error::{QmnError, Result};

/// Site identifier.
pub type SiteId = u32;
