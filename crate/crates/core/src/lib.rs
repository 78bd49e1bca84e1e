//! Threshold-entanglement numerics for qubit systems: marginal spectra and
//! purities, the spectral absolute-separability test, gradient search for
//! threshold-entangled states, linear-programming lower bounds from weight
//! enumerators, moment-relaxation upper bounds on separable purity, and
//! stabilizer Rényi entropies.

pub mod combinatorics;
pub mod enumerator;
pub mod error;
pub mod fixtures;
pub mod format;
pub mod magic;
pub mod purity_bound;
pub mod search;
pub mod separability;
pub mod state;

pub use error::{Result, TeshError};
