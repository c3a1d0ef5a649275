//! Sturm–Liouville solver based on truncated Neumann series of Bessel
//! functions.

pub mod acceptance;
pub mod bessel;
pub mod cache;
pub mod coefficients;
pub mod error;
pub mod expr;
pub mod grid;
pub mod liouville;
pub mod oracles;
pub mod problem;
pub mod roots;
pub mod solver;
pub mod seed;

pub use error::{Error, Result};
pub use grid::{Grid, SampledFn};
pub use problem::{BoundarySpec, Coefficient, SLProblem};
