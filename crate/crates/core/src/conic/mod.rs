//! Convex subproblems of the branch-reduce-and-bound search.

mod clarabel_backend;
mod common;
mod cuts;
mod problem;
mod region;
mod subproblems;

pub use clarabel_backend::ClarabelSolver;
pub use common::improve_common_allocation;
pub use cuts::{argument_cuts, ray_rows, CutRow};
pub use problem::{BackendFailure, ConeBlock, ConeKind, ConicOutcome, ConicProblem, ConicSolver, LinExpr};
pub use region::{DualPoint, SearchBox};
pub use subproblems::{
    solve_bounding, solve_primal_check, BoundOutcome, RawSolution, SubproblemBuilder, Subproblems,
};
