//! [`ConicSolver`] backed by the Clarabel interior-point solver.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use super::problem::{BackendFailure, ConeKind, ConicOutcome, ConicProblem, ConicSolver};

const CONSTANT_ROW_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct ClarabelSolver {
    pub max_iter: u32,
    pub tol: f64,
}

impl Default for ClarabelSolver {
    fn default() -> Self {
        Self { max_iter: 200, tol: 1e-8 }
    }
}

impl ClarabelSolver {
    fn settings(&self) -> DefaultSettings<f64> {
        DefaultSettingsBuilder::default()
            .verbose(false)
            .max_iter(self.max_iter)
            .tol_gap_abs(self.tol)
            .tol_gap_rel(self.tol)
            .tol_feas(self.tol)
            .max_threads(1)
            .build()
            .expect("static clarabel settings are valid")
    }
}

/// Standard form `A x + s = b, s in K`: a row `g.x + g0 in K` becomes
/// `A = -g`, `b = g0`. Linear rows without variables are checked here and
/// dropped.
fn to_standard_form(
    problem: &ConicProblem,
) -> Option<(CscMatrix<f64>, Vec<f64>, CscMatrix<f64>, Vec<f64>, Vec<SupportedConeT<f64>>)> {
    let n = problem.num_vars;
    let mut rows_i = Vec::new();
    let mut cols_j = Vec::new();
    let mut vals = Vec::new();
    let mut b = Vec::new();
    let mut cones: Vec<SupportedConeT<f64>> = Vec::new();

    let mut push_row = |row: &super::problem::LinExpr, b: &mut Vec<f64>| {
        let r = b.len();
        for &(j, c) in &row.terms {
            if c != 0.0 {
                rows_i.push(r);
                cols_j.push(j);
                vals.push(-c);
            }
        }
        b.push(row.constant);
    };

    for block in &problem.blocks {
        match block.kind {
            ConeKind::Zero | ConeKind::Nonneg => {
                let mut count = 0;
                for row in &block.rows {
                    if row.is_constant() {
                        let ok = match block.kind {
                            ConeKind::Zero => row.constant.abs() <= CONSTANT_ROW_TOL,
                            _ => row.constant >= -CONSTANT_ROW_TOL,
                        };
                        if !ok {
                            return None;
                        }
                        continue;
                    }
                    push_row(row, &mut b);
                    count += 1;
                }
                if count > 0 {
                    cones.push(match block.kind {
                        ConeKind::Zero => SupportedConeT::ZeroConeT(count),
                        _ => SupportedConeT::NonnegativeConeT(count),
                    });
                }
            }
            ConeKind::Soc => {
                for row in &block.rows {
                    push_row(row, &mut b);
                }
                cones.push(SupportedConeT::SecondOrderConeT(block.rows.len()));
            }
        }
    }

    let m = b.len();
    let a = CscMatrix::new_from_triplets(m, n, rows_i, cols_j, vals);
    let p = CscMatrix::zeros((n, n));
    let mut q = vec![0.0; n];
    for &(i, c) in &problem.objective {
        q[i] += c;
    }
    Some((p, q, a, b, cones))
}

impl ConicSolver for ClarabelSolver {
    fn solve(&self, problem: &ConicProblem) -> Result<ConicOutcome, BackendFailure> {
        if let Err(e) = problem.validate() {
            return Err(BackendFailure { status: e.to_string() });
        }
        let Some((p, q, a, b, cones)) = to_standard_form(problem) else {
            return Ok(ConicOutcome::Infeasible);
        };
        let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, self.settings())
            .map_err(|e| BackendFailure { status: format!("setup: {e}") })?;
        solver.solve();
        match solver.solution.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => {
                let x = solver.solution.x.clone();
                let objective = problem.objective_value(&x);
                Ok(ConicOutcome::Optimal { x, objective })
            }
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => Ok(ConicOutcome::Infeasible),
            other => Err(BackendFailure { status: format!("{other:?}") }),
        }
    }
}
