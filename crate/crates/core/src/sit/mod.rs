//! Successive incumbent transcending branch-reduce-and-bound.
//!
//! The engine searches boxes of `(gamma_p, s, alpha)` for points whose
//! min-max SINR violation is negative at the current threshold `delta`.
//! Every confirmed point raises the threshold to its objective plus `eta`;
//! boxes whose bound exceeds `-epsilon` are discarded. When no box is left
//! the incumbent is `(epsilon, eta)`-optimal, or the problem has no
//! `epsilon`-essential feasible point at all.

mod branch;
mod engine;
mod reduce;

use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use branch::{angle_0_2pi, branch, recover_dual_point, select_dimension, snap_angle, Branching, DegenerateBox};
pub use engine::{candidate_from_check, sit_solve, sit_solve_with};
pub use reduce::{power_floor, reduce_box, reduction_terms, ReductionTerms};

use crate::conic::DualPoint;
use crate::model::{Candidate, Mode, RateReport};

/// Accept a primal check value up to this to absorb solver tolerance.
pub const CHECK_ACCEPT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Essential-feasibility margin; boxes with bound above `-epsilon` are pruned.
    pub epsilon: f64,
    /// Objective tolerance of the certificate.
    pub eta: f64,
    pub max_iter: u64,
    #[serde(with = "opt_secs")]
    pub time_limit: Option<Duration>,
    pub branching: Branching,
    pub initial_candidate: Option<Candidate>,
    pub mode: Mode,
    /// Reduce, bound and check the two children of an iteration
    /// concurrently. Results do not depend on this flag.
    pub parallel: bool,
    /// Record one trace entry per node.
    pub trace: bool,
    /// In rate-splitting mode without an initial candidate, first solve
    /// the unicast-only restriction and start from its solution.
    pub warm_start: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            eta: 0.01,
            max_iter: 1_000_000,
            time_limit: None,
            branching: Branching::Absolute,
            initial_candidate: None,
            mode: Mode::Rsma,
            parallel: false,
            trace: false,
            warm_start: false,
        }
    }
}

impl SolverConfig {
    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn validate(&self) -> Result<(), crate::Error> {
        if !(self.epsilon > 0.0) || !(self.eta > 0.0) {
            return Err(crate::Error::Config(format!(
                "epsilon and eta must be positive (got {}, {})",
                self.epsilon, self.eta
            )));
        }
        Ok(())
    }
}

mod opt_secs {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Option<Duration>, s: S) -> Result<S::Ok, S::Error> {
        d.map(|d| d.as_secs_f64()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Duration>, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.map(Duration::from_secs_f64))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    EpsilonEssentialInfeasible,
    IterLimit,
    TimeLimit,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::EpsilonEssentialInfeasible => "epsilon-essential-infeasible",
            SolveStatus::IterLimit => "iter-limit",
            SolveStatus::TimeLimit => "time-limit",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: u64,
    /// Boxes created by bisection.
    pub nodes: u64,
    pub reductions_empty: u64,
    pub bounds_solved: u64,
    pub bounds_infeasible: u64,
    pub primal_checks: u64,
    pub primal_checks_passed: u64,
    pub incumbent_updates: u64,
    pub pruned: u64,
    pub degenerate: u64,
    pub max_queue: usize,
    /// Nodes spent on the unicast-only warm start.
    pub warm_start_nodes: u64,
    pub reduce_secs: f64,
    pub bound_secs: f64,
    pub check_secs: f64,
    pub total_secs: f64,
}

/// One record of the node trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub id: u64,
    pub parent: Option<u64>,
    pub iteration: u64,
    /// `None` when the box was reduced away or its bound is infinite.
    pub beta: Option<f64>,
    pub reduced_empty: bool,
    pub pruned: bool,
    pub incumbent: bool,
    pub delta: f64,
}

/// Certificate attached to a result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub epsilon: f64,
    pub eta: f64,
    /// Final threshold; no `epsilon`-essential feasible point reaches it
    /// when the search is exhausted.
    pub delta: f64,
    pub open_boxes: usize,
    /// Smallest bound among open boxes (`None` once exhausted).
    pub min_open_beta: Option<f64>,
    pub statement: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub candidate: Option<Candidate>,
    pub report: Option<RateReport>,
    /// Search-space coordinates of the incumbent.
    pub incumbent_point: Option<DualPoint>,
    pub certificate: Certificate,
    pub stats: SolveStats,
    /// Threshold after every iteration.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub delta_history: Vec<f64>,
    #[serde(skip)]
    pub trace: Vec<TraceRecord>,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}
