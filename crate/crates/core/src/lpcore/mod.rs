//! Sparse LP model, embedded simplex solver and MPS export.

mod factor;
mod model;
mod mps;
mod simplex;

pub use model::{ColId, Column, LinearProgram, Row, RowId, Sense};
pub use mps::{write_mps, MpsExport};
pub use simplex::{solve, solve_with, Basis, LpSolution, LpStatus, SolveOptions, VarStatus, FEASIBILITY_TOL};
