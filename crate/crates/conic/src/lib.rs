//! Dense LP/SDP solving for small conic programs.
//!
//! Problems are stated in standard primal form over products of
//! nonnegative orthants and PSD cones ([`ConicProblem`]) and solved by a
//! primal-dual interior-point method ([`solve`]). Problems can be exchanged
//! with external solvers through the SDPA sparse format ([`sdpa`]).

pub mod dense;
mod error;
pub mod problem;
pub mod sdpa;
mod solver;

pub use error::{ConicError, Result};
pub use problem::{Block, ConicProblem, Cone, LmiBuilder, SparseSym, SymEntry};
pub use sdpa::{export_sdpa, import_sdpa, parse_sdpa, read_sdpa, write_sdpa};
pub use solver::{solve, ConicSolution, SolveStatus, SolverSettings};
