//! Globally optimal linear precoding for 1-layer rate-splitting multiple
//! access in the Gaussian MISO downlink.
//!
//! The crate maximizes weighted sum rate or energy efficiency over the
//! common precoder, the private precoders and the common-rate split. The
//! search runs in the space of private SINRs, the common SINR and the
//! phases of the common-stream gains; each box of that space is bounded by
//! a second-order cone program and feasible points are confirmed with a
//! second SOCP, so the returned incumbent carries an `(epsilon, eta)`
//! optimality certificate.
//!
//! Module map:
//!
//! * [`model`]: problem data, SINR/rate arithmetic, feasibility checks.
//! * [`conic`]: subproblem builders (bounding, primal check, common-rate
//!   allocation) over a generic conic solver contract.
//! * [`sit`]: the branch-reduce-and-bound engine.
//! * [`oracle`]: slow ground truth by grid enumeration and closed forms.
//! * [`bench`]: channel generation and experiment orchestration.

pub mod bench;
pub mod conic;
pub mod error;
pub mod model;
pub mod oracle;
pub mod sit;

pub use conic::{BoundOutcome, DualPoint, SearchBox};
pub use error::{ConicError, Error, ModelError, Result};
pub use model::{Candidate, Mode, ProblemInstance, RateReport};
pub use sit::{sit_solve, SolveResult, SolveStatus, SolverConfig};
