//! Library side of the `tesh` command: argument types, the bounds table
//! and the subcommand drivers. The binary only forwards to [`run`].

pub mod app;
pub mod bounds;
pub mod nrange;

pub use app::{run, ExitStatus};
pub use bounds::{build_table, BoundsReport, BoundsRow, Verdict};
pub use nrange::NRange;
