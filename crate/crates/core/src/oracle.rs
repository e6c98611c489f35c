//! Slow reference solutions used to validate the branch-and-bound search.
//!
//! [`grid_certify`] enumerates a uniform grid over the search space and
//! solves the fixed-SINR feasibility problem at each point. It always
//! returns a value that some feasible precoder achieves, so it is a lower
//! bound on the optimum. [`closed_form_special_cases`] covers the instances
//! whose optimum is known analytically.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conic::{DualPoint, Subproblems};
use crate::error::{Error, Result};
use crate::model::{initial_box_for, log2_1p, Candidate, Mode, ProblemInstance, RateReport};
use crate::sit::{candidate_from_check, CHECK_ACCEPT_TOL};

/// Largest grid `grid_certify` accepts.
pub const GRID_LIMIT: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCertificate {
    /// Best objective over feasible grid points, `None` if no point is
    /// feasible.
    pub value: Option<f64>,
    pub candidate: Option<Candidate>,
    pub report: Option<RateReport>,
    pub resolution: usize,
    /// Number of grid points covered.
    pub points: u128,
    /// Feasibility problems actually solved.
    pub solves: u64,
    /// Solves that failed numerically; counted as infeasible.
    pub failures: u64,
}

/// One axis of the grid.
#[derive(Debug, Clone)]
enum Axis {
    Gamma(usize, Vec<f64>),
    Common(Vec<f64>),
    Phase(usize, Vec<f64>),
}

impl Axis {
    fn values(&self) -> &[f64] {
        match self {
            Axis::Gamma(_, v) | Axis::Common(v) | Axis::Phase(_, v) => v,
        }
    }

    fn set(&self, point: &mut DualPoint, index: usize) {
        match self {
            Axis::Gamma(k, v) => point.gamma_p[*k] = v[index],
            Axis::Common(v) => point.s = v[index],
            Axis::Phase(k, v) => point.alpha[*k] = v[index],
        }
    }
}

/// `n` points uniform in `log2(1 + x)` over `[0, hi]`.
fn rate_axis(hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    let top = log2_1p(hi);
    (0..n).map(|j| (top * j as f64 / (n - 1) as f64).exp2() - 1.0).collect()
}

fn axes(inst: &ProblemInstance, mode: Mode, resolution: usize) -> Vec<Axis> {
    let root = initial_box_for(inst, mode);
    let mut axes = Vec::new();
    if mode.uses_private() {
        for k in 0..inst.users() {
            axes.push(Axis::Gamma(k, rate_axis(root.gamma_hi[k], resolution)));
        }
    }
    if mode.uses_common() {
        axes.push(Axis::Common(rate_axis(root.s_hi, resolution)));
        for k in 0..root.alpha_lo.len() {
            axes.push(Axis::Phase(k, (0..resolution).map(|j| TAU * j as f64 / resolution as f64).collect()));
        }
    }
    axes
}

/// Number of points of the grid `grid_certify` would enumerate.
pub fn grid_points(inst: &ProblemInstance, mode: Mode, resolution: usize) -> u128 {
    axes(inst, mode, resolution.max(1)).iter().map(|a| a.values().len() as u128).product()
}

struct ColumnResult {
    found: Option<(f64, Candidate, RateReport)>,
    solves: u64,
    failures: u64,
}

/// Best objective over a uniform grid of `resolution` points per axis.
///
/// Rate axes are uniform in `log2(1 + x)` up to the initial box; phases
/// are uniform in `[0, 2pi)`. SINR targets that are achievable stay
/// achievable when any of them is lowered, so along the last rate axis
/// only the largest achievable grid index is located (by bisection), which
/// gives the same maximum as visiting every point. Rate floors and the
/// common-rate split are applied to the precoders found there.
pub fn grid_certify(inst: &ProblemInstance, resolution: usize, mode: Mode) -> Result<GridCertificate> {
    if resolution == 0 {
        return Err(Error::Config("grid resolution must be positive".into()));
    }
    if inst.users() > 3 {
        return Err(Error::Config(format!("grid oracle supports at most 3 users, got {}", inst.users())));
    }
    let points = grid_points(inst, mode, resolution);
    if points > GRID_LIMIT {
        return Err(Error::GridTooLarge { points, limit: GRID_LIMIT });
    }

    let mut axes = axes(inst, mode, resolution);
    // bisect along the last rate axis
    let frontier_pos = axes.iter().rposition(|a| !matches!(a, Axis::Phase(..))).expect("at least one rate axis");
    let frontier = axes.remove(frontier_pos);
    let radices: Vec<usize> = axes.iter().map(|a| a.values().len()).collect();
    let columns: usize = radices.iter().product();

    let floorless = inst.with_rate_floors(vec![0.0; inst.users()])?;
    let subproblems = Subproblems::new(&floorless, mode);
    let base = DualPoint {
        gamma_p: vec![0.0; inst.users()],
        s: 0.0,
        alpha: vec![0.0; initial_box_for(inst, mode).alpha_lo.len()],
    };

    let results: Vec<ColumnResult> = (0..columns)
        .into_par_iter()
        .map(|col| {
            let mut point = base.clone();
            let mut rest = col;
            for (axis, &radix) in axes.iter().zip(&radices) {
                axis.set(&mut point, rest % radix);
                rest /= radix;
            }
            let mut out = ColumnResult { found: None, solves: 0, failures: 0 };
            let probe = |j: usize, out: &mut ColumnResult| {
                let mut p = point.clone();
                frontier.set(&mut p, j);
                out.solves += 1;
                match subproblems.primal_check(&p, 0.0) {
                    Ok(check) if check.beta <= CHECK_ACCEPT_TOL => check.raw,
                    Ok(_) => None,
                    Err(_) => {
                        out.failures += 1;
                        None
                    }
                }
            };
            let Some(mut best_raw) = probe(0, &mut out) else {
                return out;
            };
            let (mut lo, mut hi) = (0, frontier.values().len());
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                match probe(mid, &mut out) {
                    Some(raw) => {
                        lo = mid;
                        best_raw = raw;
                    }
                    None => hi = mid,
                }
            }
            out.found = candidate_from_check(inst, mode, &best_raw).map(|(c, r, _)| (r.objective, c, r));
            out
        })
        .collect();

    let mut best: Option<(f64, Candidate, RateReport)> = None;
    let (mut solves, mut failures) = (0, 0);
    for r in results {
        solves += r.solves;
        failures += r.failures;
        if let Some(found) = r.found {
            if best.as_ref().map_or(true, |b| found.0 > b.0) {
                best = Some(found);
            }
        }
    }
    let (value, candidate, report) = match best {
        Some((v, c, r)) => (Some(v), Some(c), Some(r)),
        None => (None, None, None),
    };
    Ok(GridCertificate { value, candidate, report, resolution, points, solves, failures })
}

/// Golden-section maximization of a unimodal function on `[a, b]`.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if b - a <= 1e-13 * b.abs().max(1.0) {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = f(x1);
        }
    }
    let x = 0.5 * (a + b);
    // endpoints cover monotone objectives
    [(x, f(x)), (a, f(a)), (b, f(b))]
        .into_iter()
        .fold((x, f64::NEG_INFINITY), |acc, c| if c.1 > acc.1 { c } else { acc })
}

/// Exact optimum of the instances with a known solution:
///
/// * one user: `u log2(1 + p ||h||^2) / (mu p + P_c)` maximized over the
///   transmit power `p` between the rate floor and the budget (the
///   function is quasi-concave, so a golden-section search is exact up to
///   its tolerance);
/// * two users with orthogonal channels of equal norm, equal weights,
///   `mu = 0` and no rate floors: `2 u log2(1 + P ||h||^2 / 2) / P_c`.
///
/// Returns `None` for every other instance, including one-user instances
/// whose floor cannot be met.
pub fn closed_form_special_cases(inst: &ProblemInstance) -> Option<f64> {
    let (p_max, mu, pc) = (inst.power(), inst.mu(), inst.circuit_power());
    match inst.users() {
        1 => {
            let gain = inst.channel_norm_sqr(0);
            let u = inst.weights()[0];
            let p_min = (inst.rate_floors()[0].exp2() - 1.0) / gain;
            if p_min > p_max * (1.0 + 1e-12) {
                return None;
            }
            let f = |p: f64| u * log2_1p(p * gain) / (mu * p + pc);
            if mu == 0.0 {
                return Some(f(p_max));
            }
            Some(golden_max(f, p_min.min(p_max), p_max).1)
        }
        2 => {
            let (n1, n2) = (inst.channel_norm_sqr(0), inst.channel_norm_sqr(1));
            let cross = crate::model::inner(inst.channel(0), inst.channel(1)).norm();
            let w = inst.weights();
            let orthogonal = cross <= 1e-12 * (n1 * n2).sqrt();
            let equal_norm = (n1 - n2).abs() <= 1e-12 * n1.max(n2);
            let plain = mu == 0.0 && w[0] == w[1] && inst.rate_floors().iter().all(|&r| r == 0.0);
            (orthogonal && equal_norm && plain).then(|| 2.0 * w[0] * log2_1p(p_max * n1 / 2.0) / pc)
        }
        _ => None,
    }
}
