use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use super::branch::{angle_0_2pi, branch, recover_dual_point};
use super::reduce::reduce_box;
use super::{Certificate, SolveResult, SolveStats, SolveStatus, SolverConfig, TraceRecord, CHECK_ACCEPT_TOL};
use crate::conic::{improve_common_allocation, DualPoint, RawSolution, SearchBox, Subproblems};
use crate::error::Error;
use crate::model::{check_primal_feasible, compute_sinrs, initial_box_for, Candidate, Mode, ProblemInstance, RateReport, FEASIBILITY_TOL};

struct QueueEntry {
    beta: f64,
    seq: u64,
    id: u64,
    region: SearchBox,
}

impl PartialEq for QueueEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for QueueEntry {}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// BinaryHeap is a max-heap: smallest beta first, then oldest entry.
impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.beta.total_cmp(&self.beta).then_with(|| other.seq.cmp(&self.seq))
    }
}

/// A confirmed primal point.
#[derive(Debug, Clone)]
struct Found {
    candidate: Candidate,
    report: RateReport,
    point: DualPoint,
}

#[derive(Debug, Default)]
struct ChildOutcome {
    region: Option<SearchBox>,
    beta: f64,
    found: Option<Found>,
    bounded: bool,
    checked: bool,
    reduce_secs: f64,
    bound_secs: f64,
    check_secs: f64,
}

/// Builds a feasible candidate from the precoders of a primal-check
/// solution: the precoders are scaled into the power ball if the solver
/// overshot, the SINRs are re-evaluated and the common rate is split by
/// [`improve_common_allocation`]. Returns `None` if the result fails the
/// feasibility check.
pub fn candidate_from_check(
    inst: &ProblemInstance,
    mode: Mode,
    raw: &RawSolution,
) -> Option<(Candidate, RateReport, DualPoint)> {
    let mut cand = Candidate { p_c: raw.p_c.clone(), p: raw.p.clone(), c: vec![0.0; inst.users()] };
    let power = cand.total_power();
    if power > inst.power() {
        let scale = (inst.power() / power).sqrt();
        for z in cand.p_c.iter_mut().chain(cand.p.iter_mut().flatten()) {
            *z *= scale;
        }
    }
    let rates = compute_sinrs(inst, &cand).ok()?;
    let s = if mode.uses_common() { rates.min_gamma_c() } else { 0.0 };
    cand.c = improve_common_allocation(inst, &rates.gamma_p, s)?;
    if !check_primal_feasible(inst, &cand, FEASIBILITY_TOL).ok()?.is_feasible() {
        return None;
    }
    let report = compute_sinrs(inst, &cand).ok()?;
    let alpha = (1..inst.users())
        .take(if mode.uses_common() { inst.users() - 1 } else { 0 })
        .map(|k| {
            let e = crate::model::inner(inst.channel(k), &cand.p_c);
            angle_0_2pi(e.re, e.im)
        })
        .collect();
    let point = DualPoint { gamma_p: report.gamma_p.clone(), s, alpha };
    Some((cand, report, point))
}

fn process_child(
    inst: &ProblemInstance,
    mode: Mode,
    subproblems: &Subproblems,
    child: SearchBox,
    delta: f64,
) -> Result<ChildOutcome, Error> {
    let mut out = ChildOutcome { beta: f64::INFINITY, ..Default::default() };
    let start = Instant::now();
    let reduced = reduce_box(inst, &child, delta);
    out.reduce_secs = start.elapsed().as_secs_f64();
    let Some(region) = reduced else {
        return Ok(out);
    };

    let start = Instant::now();
    let bound = subproblems.bound(&region, delta)?;
    out.bound_secs = start.elapsed().as_secs_f64();
    out.bounded = true;
    out.beta = bound.beta;

    if let (Some(raw), true) = (&bound.raw, bound.beta <= 0.0) {
        let point = recover_dual_point(raw, &region);
        let start = Instant::now();
        let check = subproblems.primal_check(&point, delta)?;
        out.check_secs = start.elapsed().as_secs_f64();
        out.checked = true;
        if let (Some(raw), true) = (&check.raw, check.beta <= CHECK_ACCEPT_TOL) {
            if let Some((candidate, report, point)) = candidate_from_check(inst, mode, raw) {
                out.found = Some(Found { candidate, report, point });
            }
        }
    }
    out.region = Some(region);
    Ok(out)
}

/// Runs the branch-reduce-and-bound search with the default conic backend.
pub fn sit_solve(inst: &ProblemInstance, config: &SolverConfig) -> Result<SolveResult, Error> {
    let subproblems = Subproblems::new(inst, config.mode);
    sit_solve_with(inst, config, &subproblems)
}

/// Runs the search with caller-provided subproblem solvers.
pub fn sit_solve_with(
    inst: &ProblemInstance,
    config: &SolverConfig,
    subproblems: &Subproblems,
) -> Result<SolveResult, Error> {
    config.validate()?;
    let started = Instant::now();
    let mode = config.mode;
    let root = initial_box_for(inst, mode);
    let initial_widths = root.widths();

    let mut stats = SolveStats::default();
    let mut warm = None;
    if config.warm_start && mode == Mode::Rsma && config.initial_candidate.is_none() {
        let sub = SolverConfig { warm_start: false, trace: false, ..config.clone() }.with_mode(Mode::UnicastOnly);
        let result = sit_solve(inst, &sub)?;
        stats.warm_start_nodes = result.stats.nodes;
        warm = result.candidate;
    }
    let config = &SolverConfig { initial_candidate: warm.or_else(|| config.initial_candidate.clone()), ..config.clone() };

    let mut trace = Vec::new();
    let mut delta_history = Vec::new();
    let mut incumbent: Option<Found> = None;
    let mut delta = 0.0;

    if let Some(cand) = &config.initial_candidate {
        let feas = check_primal_feasible(inst, cand, FEASIBILITY_TOL)?;
        if !feas.is_feasible() {
            return Err(Error::Config("initial candidate is not feasible".into()));
        }
        let report = compute_sinrs(inst, cand)?;
        let alpha = (1..inst.users())
            .take(root.alpha_lo.len())
            .map(|k| {
                let e = crate::model::inner(inst.channel(k), &cand.p_c);
                angle_0_2pi(e.re, e.im)
            })
            .collect();
        let point = DualPoint { gamma_p: report.gamma_p.clone(), s: report.min_gamma_c(), alpha };
        delta = report.objective + config.eta;
        incumbent = Some(Found { candidate: cand.clone(), report, point });
    }

    let mut queue = BinaryHeap::new();
    let mut next_id = 0u64;
    let mut seq = 0u64;
    queue.push(QueueEntry { beta: f64::NEG_INFINITY, seq, id: next_id, region: root });
    if config.trace {
        trace.push(TraceRecord {
            id: 0,
            parent: None,
            iteration: 0,
            beta: None,
            reduced_empty: false,
            pruned: false,
            incumbent: false,
            delta,
        });
    }
    next_id += 1;

    let status = loop {
        if queue.is_empty() {
            break if incumbent.is_some() { SolveStatus::Optimal } else { SolveStatus::EpsilonEssentialInfeasible };
        }
        if stats.iterations >= config.max_iter {
            break SolveStatus::IterLimit;
        }
        if config.time_limit.is_some_and(|limit| started.elapsed() >= limit) {
            break SolveStatus::TimeLimit;
        }
        stats.iterations += 1;
        let entry = queue.pop().expect("queue is nonempty");
        let Ok((left, right)) = branch(&entry.region, config.branching, &initial_widths) else {
            stats.degenerate += 1;
            continue;
        };
        stats.nodes += 2;

        let (a, b) = if config.parallel {
            rayon::join(
                || process_child(inst, mode, subproblems, left, delta),
                || process_child(inst, mode, subproblems, right, delta),
            )
        } else {
            (
                process_child(inst, mode, subproblems, left, delta),
                process_child(inst, mode, subproblems, right, delta),
            )
        };
        let children = [a?, b?];

        // incumbent: best objective among the two children
        let mut best: Option<usize> = None;
        for (i, child) in children.iter().enumerate() {
            if let Some(found) = &child.found {
                if best.map_or(true, |j| found.report.objective > children[j].found.as_ref().unwrap().report.objective)
                {
                    best = Some(i);
                }
            }
        }
        let mut improved_by = None;
        if let Some(i) = best {
            let found = children[i].found.as_ref().unwrap();
            if found.report.objective > delta - config.eta {
                delta = found.report.objective + config.eta;
                incumbent = Some(found.clone());
                stats.incumbent_updates += 1;
                improved_by = Some(i);
            }
        }

        for (i, child) in children.into_iter().enumerate() {
            stats.reduce_secs += child.reduce_secs;
            stats.bound_secs += child.bound_secs;
            stats.check_secs += child.check_secs;
            if child.region.is_none() {
                stats.reductions_empty += 1;
            }
            if child.bounded {
                stats.bounds_solved += 1;
                if child.beta.is_infinite() {
                    stats.bounds_infeasible += 1;
                }
            }
            if child.checked {
                stats.primal_checks += 1;
            }
            if child.found.is_some() {
                stats.primal_checks_passed += 1;
            }
            let keep = child.beta <= -config.epsilon;
            if config.trace {
                trace.push(TraceRecord {
                    id: next_id,
                    parent: Some(entry.id),
                    iteration: stats.iterations,
                    beta: child.beta.is_finite().then_some(child.beta),
                    reduced_empty: child.region.is_none(),
                    pruned: !keep,
                    incumbent: improved_by == Some(i),
                    delta,
                });
            }
            match (keep, child.region) {
                (true, Some(region)) => {
                    seq += 1;
                    queue.push(QueueEntry { beta: child.beta, seq, id: next_id, region });
                }
                _ => stats.pruned += 1,
            }
            next_id += 1;
        }
        stats.max_queue = stats.max_queue.max(queue.len());
        delta_history.push(delta);
    };
    stats.total_secs = started.elapsed().as_secs_f64();

    let min_open_beta = queue.iter().map(|e| e.beta).min_by(|a, b| a.total_cmp(b));
    let objective = incumbent.as_ref().map(|f| f.report.objective);
    let statement = match (status, objective) {
        (SolveStatus::Optimal, Some(obj)) => format!(
            "objective {obj:.6} is within {} of every {}-essential feasible point (none reaches {:.6})",
            config.eta, config.epsilon, delta
        ),
        (SolveStatus::EpsilonEssentialInfeasible, _) => {
            format!("no {}-essential feasible point exists", config.epsilon)
        }
        _ => format!("search stopped with {} open boxes", queue.len()),
    };
    let certificate = Certificate {
        epsilon: config.epsilon,
        eta: config.eta,
        delta,
        open_boxes: queue.len(),
        min_open_beta,
        statement,
    };
    let (candidate, report, incumbent_point) = match incumbent {
        Some(f) => (Some(f.candidate), Some(f.report), Some(f.point)),
        None => (None, None, None),
    };
    Ok(SolveResult {
        status,
        objective,
        candidate,
        report,
        incumbent_point,
        certificate,
        stats,
        delta_history,
        trace,
    })
}
