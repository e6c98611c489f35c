//! Property checks shared by the proptest suite and the acceptance suite.
//! Each check draws its data from a seed and returns a description of the
//! first violation it finds.

#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rsma_core::bench::generate_channels;
use rsma_core::conic::{argument_cuts, improve_common_allocation, solve_bounding};
use rsma_core::model::{compute_sinrs, initial_box, inner, log2_1p};
use rsma_core::sit::{angle_0_2pi, reduce_box};
use rsma_core::{sit_solve, Candidate, Mode, ProblemInstance, SearchBox, SolveStatus, SolverConfig};

pub type Check = Result<(), String>;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut ChaCha20Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Random precoders scaled to a random fraction of the power budget.
pub fn random_candidate(inst: &ProblemInstance, rng: &mut ChaCha20Rng, common: bool) -> Candidate {
    let (k, m) = (inst.users(), inst.antennas());
    let mut cand = Candidate::zeros(k, m);
    if common {
        cand.p_c = (0..m).map(|_| gaussian(rng)).collect();
    }
    cand.p = (0..k).map(|_| (0..m).map(|_| gaussian(rng)).collect()).collect();
    let scale = (rng.gen_range(0.05..1.0) * inst.power() / cand.total_power()).sqrt();
    for z in cand.p_c.iter_mut().chain(cand.p.iter_mut().flatten()) {
        *z *= scale;
    }
    cand
}

/// Random instance with `k` users and `m` antennas.
pub fn random_instance(rng: &mut ChaCha20Rng, k: usize, m: usize, mu: f64) -> ProblemInstance {
    let channels = generate_channels(k, m, rng.gen());
    let power = rng.gen_range(0.5..10.0);
    let weights = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
    let pc = rng.gen_range(0.2..2.0);
    ProblemInstance::new(channels, power, weights, mu, pc, vec![0.0; k]).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// SINRs and rates do not change when every precoder is rotated by the
/// same phase.
pub fn rotation_invariance(seed: u64) -> Check {
    let mut rng = rng(seed);
    let k = rng.gen_range(1..=3);
    let m = rng.gen_range(1..=3);
    let inst = random_instance(&mut rng, k, m, 0.0);
    let cand = random_candidate(&inst, &mut rng, true);
    let theta = rng.gen_range(-TAU..TAU);
    let a = compute_sinrs(&inst, &cand).unwrap();
    let b = compute_sinrs(&inst, &cand.rotated(theta)).unwrap();
    for (x, y) in a.gamma_p.iter().chain(&a.gamma_c).zip(b.gamma_p.iter().chain(&b.gamma_c)) {
        if !close(*x, *y, 1e-10) {
            return Err(format!("seed {seed}: SINR {x} became {y} after rotation by {theta}"));
        }
    }
    if !close(a.objective, b.objective, 1e-10) {
        return Err(format!("seed {seed}: objective {} became {}", a.objective, b.objective));
    }
    Ok(())
}

/// Every point of `{d <= |e|, arg e in [lo, hi]}` satisfies the cut rows
/// at `t = 0`, and points outside the sector violate one of them.
pub fn cut_envelope(seed: u64) -> Check {
    let mut rng = rng(seed);
    let width = rng.gen_range(0.0..=PI);
    let lo = rng.gen_range(0.0..=TAU - width);
    let hi = lo + width;
    let rows = argument_cuts(lo, hi).map_err(|e| e.to_string())?;
    for _ in 0..50 {
        let phi = rng.gen_range(lo..=hi);
        let r = rng.gen_range(0.0..10.0);
        let d = rng.gen_range(0.0..=1.0) * r;
        let (re, im) = (r * phi.cos(), r * phi.sin());
        if let Some(row) = rows.iter().find(|row| row.eval(re, im, d) < -1e-9 * (1.0 + r)) {
            return Err(format!("seed {seed}: ({re}, {im}, d={d}) in sector [{lo}, {hi}] cut by {row:?}"));
        }
    }
    // a point clearly outside the sector
    if width < PI - 0.02 {
        let phi = hi + rng.gen_range(0.01..(TAU - width - 0.01).min(PI - width));
        let (re, im) = (phi.cos(), phi.sin());
        if rows.iter().all(|row| row.eval(re, im, 0.0) >= 0.0) {
            return Err(format!("seed {seed}: angle {phi} outside [{lo}, {hi}] passes every cut"));
        }
    }
    Ok(())
}

/// Random sub-box of `outer`.
fn random_subbox(rng: &mut ChaCha20Rng, outer: &SearchBox) -> SearchBox {
    let mut b = outer.clone();
    for dim in 0..outer.dims() {
        let (lo, hi) = (outer.lower(dim), outer.upper(dim));
        let x = rng.gen_range(0.0..=1.0);
        let y = rng.gen_range(0.0..=1.0);
        let (a, c) = if x <= y { (x, y) } else { (y, x) };
        b.set_bounds(dim, lo + a * (hi - lo), lo + c * (hi - lo));
    }
    b
}

/// The bound of a box never drops below the bound of a box enclosing it.
pub fn bound_monotonicity(seed: u64) -> Check {
    let mut rng = rng(seed);
    let mu = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.1..2.0) };
    let inst = random_instance(&mut rng, 2, 2, mu);
    let parent = random_subbox(&mut rng, &initial_box(&inst));
    let child = random_subbox(&mut rng, &parent);
    let delta = rng.gen_range(0.0..3.0);
    let bp = solve_bounding(&inst, Mode::Rsma, &parent, delta).map_err(|e| e.to_string())?.beta;
    let bc = solve_bounding(&inst, Mode::Rsma, &child, delta).map_err(|e| e.to_string())?.beta;
    if bc < bp - 1e-6 {
        return Err(format!("seed {seed}: child bound {bc} below parent bound {bp}"));
    }
    Ok(())
}

/// A point realized by actual precoders, with rate floors and a threshold
/// it meets, survives the reduction of any box containing it.
pub fn reduction_safety(seed: u64) -> Check {
    let mut rng = rng(seed);
    let k = rng.gen_range(2..=3);
    let mu = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.1..2.0) };
    let base = random_instance(&mut rng, k, 2, mu);
    let cand = random_candidate(&base, &mut rng, true);
    // phases are measured with h_1^H p_c real and nonnegative
    let cand = cand.rotated(-inner(base.channel(0), &cand.p_c).arg());
    let report = compute_sinrs(&base, &cand).unwrap();
    let s = report.min_gamma_c();
    let s_log = log2_1p(s);

    // split the common rate at random and set floors the point meets
    let mut shares: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..1.0)).collect();
    let total: f64 = shares.iter().sum();
    shares.iter_mut().for_each(|x| *x *= s_log / total);
    let floors: Vec<f64> = (0..k)
        .map(|i| rng.gen_range(0.0..=1.0) * (shares[i] + report.private_rate[i]))
        .collect();
    let inst = base.with_rate_floors(floors).unwrap();
    let rate: f64 = (0..k).map(|i| inst.weights()[i] * (shares[i] + report.private_rate[i])).sum();
    let objective = rate / (inst.mu() * cand.total_power() + inst.circuit_power());
    let delta = rng.gen_range(0.0..=1.0) * objective;

    let alpha: Vec<f64> = (1..k)
        .map(|i| {
            let e = inner(inst.channel(i), &cand.p_c);
            angle_0_2pi(e.re, e.im)
        })
        .collect();
    let root = initial_box(&inst);
    let mut b = root.clone();
    let point: Vec<f64> = report.gamma_p.iter().copied().chain([s]).chain(alpha.iter().copied()).collect();
    for (dim, &x) in point.iter().enumerate() {
        let hi_max = root.upper(dim).max(x);
        let lo = x * rng.gen_range(0.0..=1.0);
        let hi = x + rng.gen_range(0.0..=1.0) * (hi_max - x);
        b.set_bounds(dim, lo, hi);
    }
    match reduce_box(&inst, &b, delta) {
        None => Err(format!("seed {seed}: box holding a point of objective {objective} >= {delta} reduced away")),
        Some(r) if !r.contains(&report.gamma_p, s, &alpha, 1e-9) => {
            Err(format!("seed {seed}: reduced box {r:?} lost point {point:?}"))
        }
        Some(_) => Ok(()),
    }
}

fn unicast_config() -> SolverConfig {
    SolverConfig { trace: true, ..SolverConfig::default() }.with_mode(Mode::UnicastOnly)
}

/// The threshold never decreases and ends at the incumbent value plus eta.
pub fn delta_monotone(seed: u64) -> Check {
    let mut rng = rng(seed);
    let inst = random_instance(&mut rng, 2, 2, 0.0);
    let config = unicast_config();
    let result = sit_solve(&inst, &config).map_err(|e| e.to_string())?;
    if result.status != SolveStatus::Optimal {
        return Err(format!("seed {seed}: status {:?}", result.status));
    }
    if let Some(w) = result.delta_history.windows(2).find(|w| w[1] < w[0]) {
        return Err(format!("seed {seed}: threshold fell from {} to {}", w[0], w[1]));
    }
    let last = *result.delta_history.last().unwrap();
    if !close(last, result.objective.unwrap() + config.eta, 1e-12) {
        return Err(format!("seed {seed}: final threshold {last} vs objective {:?}", result.objective));
    }
    Ok(())
}

/// The optimal value is nondecreasing in the power budget, up to the
/// solver tolerance `eta`.
pub fn value_monotone_in_power(seed: u64) -> Check {
    let mut rng = rng(seed);
    let inst = ProblemInstance::wsr(generate_channels(2, 2, rng.gen()), 1.0).unwrap();
    let config = unicast_config();
    let mut previous: Option<(f64, f64)> = None;
    for db in [-10.0, -5.0, 0.0, 5.0, 10.0] {
        let power = 10f64.powf(db / 10.0);
        let result = sit_solve(&inst.with_power(power).unwrap(), &config).map_err(|e| e.to_string())?;
        let value = result.objective.ok_or_else(|| format!("seed {seed}: no solution at {db} dB"))?;
        if let Some((p, v)) = previous {
            if value < v - config.eta {
                return Err(format!("seed {seed}: value {value} at P={power} below {v} at P={p}"));
            }
        }
        previous = Some((power, value));
    }
    Ok(())
}

/// Best objective of `n` random feasible candidates: random precoders in
/// the power ball with the common rate split by the allocation rule.
pub fn best_random_candidate(inst: &ProblemInstance, mode: Mode, n: usize, seed: u64) -> f64 {
    let mut rng = rng(seed);
    let mut best = f64::NEG_INFINITY;
    for _ in 0..n {
        let mut cand = random_candidate(inst, &mut rng, mode.uses_common());
        let report = compute_sinrs(inst, &cand).unwrap();
        let s = if mode.uses_common() { report.min_gamma_c() } else { 0.0 };
        let Some(c) = improve_common_allocation(inst, &report.gamma_p, s) else {
            continue;
        };
        cand.c = c;
        best = best.max(compute_sinrs(inst, &cand).unwrap().objective);
    }
    best
}
