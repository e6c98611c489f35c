//! Generic conic program representation and the solver contract.
//!
//! A problem minimizes a linear objective subject to blocks of affine
//! expressions, each block constrained to lie in one cone:
//!
//! * `Zero`: every expression equals zero,
//! * `Nonneg`: every expression is nonnegative,
//! * `Soc`: `rows[0] >= ||rows[1..]||`.

use std::fmt;

use crate::error::ConicError;

/// Affine expression `sum_i coef_i * x_i + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn constant(value: f64) -> Self {
        Self { terms: Vec::new(), constant: value }
    }

    pub fn var(index: usize) -> Self {
        Self { terms: vec![(index, 1.0)], constant: 0.0 }
    }

    pub fn term(mut self, index: usize, coef: f64) -> Self {
        self.terms.push((index, coef));
        self
    }

    pub fn plus_const(mut self, value: f64) -> Self {
        self.constant += value;
        self
    }

    pub fn add(mut self, other: &LinExpr) -> Self {
        self.terms.extend_from_slice(&other.terms);
        self.constant += other.constant;
        self
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        for (_, c) in &mut self.terms {
            *c *= factor;
        }
        self.constant *= factor;
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, c)| c * x[i]).sum::<f64>() + self.constant
    }

    /// Largest magnitude among the summands of `eval(x)`.
    pub fn magnitude(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, c)| (c * x[i]).abs()).fold(self.constant.abs(), f64::max)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|&(_, c)| c == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeKind {
    Zero,
    Nonneg,
    Soc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeBlock {
    pub kind: ConeKind,
    pub rows: Vec<LinExpr>,
    /// Short label used in text dumps.
    pub label: &'static str,
}

impl ConeBlock {
    pub fn zero(label: &'static str, rows: Vec<LinExpr>) -> Self {
        Self { kind: ConeKind::Zero, rows, label }
    }

    pub fn nonneg(label: &'static str, rows: Vec<LinExpr>) -> Self {
        Self { kind: ConeKind::Nonneg, rows, label }
    }

    /// `head >= ||tail||`. A block with an all-zero tail is stored as a
    /// single nonnegative row.
    pub fn soc(label: &'static str, head: LinExpr, tail: Vec<LinExpr>) -> Self {
        let tail: Vec<LinExpr> = tail.into_iter().filter(|e| !(e.is_constant() && e.constant == 0.0)).collect();
        if tail.is_empty() {
            return Self::nonneg(label, vec![head]);
        }
        let mut rows = Vec::with_capacity(tail.len() + 1);
        rows.push(head);
        rows.extend(tail);
        Self { kind: ConeKind::Soc, rows, label }
    }

    /// Largest violation of this block at `x` (zero when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        match self.kind {
            ConeKind::Zero => self.rows.iter().map(|r| r.eval(x).abs()).fold(0.0, f64::max),
            ConeKind::Nonneg => self.rows.iter().map(|r| (-r.eval(x)).max(0.0)).fold(0.0, f64::max),
            ConeKind::Soc => {
                let head = self.rows[0].eval(x);
                let tail = self.rows[1..].iter().map(|r| r.eval(x).powi(2)).sum::<f64>().sqrt();
                (tail - head).max(0.0)
            }
        }
    }
}

/// `min objective . x` subject to every block.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicProblem {
    pub num_vars: usize,
    pub objective: Vec<(usize, f64)>,
    pub blocks: Vec<ConeBlock>,
}

impl ConicProblem {
    pub fn new(num_vars: usize, objective: Vec<(usize, f64)>) -> Self {
        Self { num_vars, objective, blocks: Vec::new() }
    }

    pub fn push(&mut self, block: ConeBlock) {
        self.blocks.push(block);
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().map(|&(i, c)| c * x[i]).sum()
    }

    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.blocks.iter().map(|b| b.violation(x)).fold(0.0, f64::max)
    }

    /// Like `max_violation`, with each block's violation divided by
    /// `1 +` the largest summand involved, so badly scaled rows are not
    /// held to an absolute tolerance.
    pub fn max_relative_violation(&self, x: &[f64]) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.violation(x) / (1.0 + b.rows.iter().map(|r| r.magnitude(x)).fold(0.0, f64::max)))
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<(), ConicError> {
        for block in &self.blocks {
            if block.rows.is_empty() {
                return Err(ConicError::Malformed(format!("empty block '{}'", block.label)));
            }
            for row in &block.rows {
                if let Some(&(i, c)) = row.terms.iter().find(|&&(i, c)| i >= self.num_vars || !c.is_finite()) {
                    return Err(ConicError::Malformed(format!(
                        "block '{}' has term ({i}, {c}) with {} variables",
                        block.label, self.num_vars
                    )));
                }
                if !row.constant.is_finite() {
                    return Err(ConicError::Malformed(format!("block '{}' has a non-finite constant", block.label)));
                }
            }
        }
        Ok(())
    }
}

/// Line-oriented dump: one `obj` line, then one line per row prefixed by
/// its cone (`zero`, `nonneg`, `soc.head`, `soc.tail`). Rows list
/// `index:coefficient` pairs followed by `const:value`.
impl fmt::Display for ConicProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "vars {}", self.num_vars)?;
        write!(f, "obj")?;
        for (i, c) in &self.objective {
            write!(f, " {i}:{c:e}")?;
        }
        writeln!(f)?;
        for block in &self.blocks {
            for (r, row) in block.rows.iter().enumerate() {
                let tag = match (block.kind, r) {
                    (ConeKind::Zero, _) => "zero",
                    (ConeKind::Nonneg, _) => "nonneg",
                    (ConeKind::Soc, 0) => "soc.head",
                    (ConeKind::Soc, _) => "soc.tail",
                };
                write!(f, "{tag} {}", block.label)?;
                for (i, c) in &row.terms {
                    write!(f, " {i}:{c:e}")?;
                }
                writeln!(f, " const:{:e}", row.constant)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConicOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
}

/// Backend-reported failure, before any retry policy is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct BackendFailure {
    pub status: String,
}

pub trait ConicSolver: Send + Sync {
    fn solve(&self, problem: &ConicProblem) -> Result<ConicOutcome, BackendFailure>;
}
