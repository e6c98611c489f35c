//! Box reduction from necessary conditions on the rate split and the
//! threshold row.

use crate::conic::SearchBox;
use crate::model::{log2_1p, ProblemInstance};

/// Lower bound on the consumed power `mu (min ||p_c||^2 + sum min ||p_k||^2) + P_c`
/// over SINRs at least `(s, gamma)`.
pub fn power_floor(inst: &ProblemInstance, s: f64, gamma: &[f64]) -> f64 {
    let k = inst.users();
    let inv_norm: Vec<f64> = (0..k).map(|i| 1.0 / inst.channel_norm_sqr(i)).collect();
    let common = s * inv_norm.iter().copied().fold(0.0, f64::max);
    let private: f64 = gamma.iter().zip(&inv_norm).map(|(g, n)| g * n).sum();
    inst.mu() * (common + private) + inst.circuit_power()
}

/// Quantities of the reduction test for one box.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionTerms {
    /// Rate-floor deficit `sum_{k in I} (R_k - log2(1 + gamma_hi,k)) - log2(1 + s_hi)`.
    pub v: f64,
    /// Upper bound on the weighted rate.
    pub u: f64,
    /// Lower bound on the consumed power.
    pub w: f64,
    /// Users whose floor is not met by the private rate at `gamma_hi`.
    pub deficit_users: Vec<bool>,
}

pub fn reduction_terms(inst: &ProblemInstance, region: &SearchBox) -> ReductionTerms {
    let gbar_log: Vec<f64> = region.gamma_hi.iter().map(|&g| log2_1p(g)).collect();
    let sbar_log = log2_1p(region.s_hi);
    let deficit_users: Vec<bool> = inst.rate_floors().iter().zip(&gbar_log).map(|(r, g)| r - g > 0.0).collect();
    let v = inst
        .rate_floors()
        .iter()
        .zip(&gbar_log)
        .zip(&deficit_users)
        .filter(|(_, &in_set)| in_set)
        .map(|((r, g), _)| r - g)
        .sum::<f64>()
        - sbar_log;
    let u = inst.max_weight() * sbar_log + inst.weights().iter().zip(&gbar_log).map(|(u, g)| u * g).sum::<f64>();
    let w = power_floor(inst, region.s_lo, &region.gamma_lo);
    ReductionTerms { v, u, w, deficit_users }
}

/// Shrinks `region` without losing any point that can satisfy the rate
/// split and reach objective `delta`. Returns `None` when no such point
/// exists. The phase block is left untouched.
pub fn reduce_box(inst: &ProblemInstance, region: &SearchBox, delta: f64) -> Option<SearchBox> {
    if region.is_empty() {
        return None;
    }
    let terms = reduction_terms(inst, region);
    if terms.v > 0.0 || terms.u < delta * terms.w {
        return None;
    }
    let excess = delta * terms.w - terms.u;
    let weights = inst.weights();
    let mut out = region.clone();

    for k in 0..region.users() {
        let hi = region.gamma_hi[k];
        let mut lo = region.gamma_lo[k];
        // zero weights carry no information in the threshold row
        if weights[k] > 0.0 {
            lo = lo.max((excess / weights[k]).exp2() * (1.0 + hi) - 1.0);
        }
        lo = if terms.deficit_users[k] {
            lo.max(terms.v.exp2() * (1.0 + hi) - 1.0)
        } else {
            lo.max((terms.v + inst.rate_floors()[k]).exp2() - 1.0)
        };
        out.gamma_lo[k] = lo;
    }
    let umax = inst.max_weight();
    let exponent = (excess / umax).max(terms.v);
    out.s_lo = region.s_lo.max(exponent.exp2() * (1.0 + region.s_hi) - 1.0);

    let scale = delta * inst.mu();
    if scale > 0.0 {
        let w_new = power_floor(inst, out.s_lo, &out.gamma_lo);
        let slack = terms.u - delta * w_new;
        if slack < 0.0 {
            return None;
        }
        let mut min_norm = f64::INFINITY;
        for k in 0..region.users() {
            let norm = inst.channel_norm_sqr(k);
            min_norm = min_norm.min(norm);
            out.gamma_hi[k] = region.gamma_hi[k].min(out.gamma_lo[k] + norm * slack / scale);
        }
        out.s_hi = region.s_hi.min(out.s_lo + min_norm * slack / scale);
    }

    if out.is_empty() {
        None
    } else {
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{initial_box, ProblemInstance};
    use num_complex::Complex64;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn two_user(rth: Vec<f64>, mu: f64) -> ProblemInstance {
        ProblemInstance::new(vec![vec![c(1.0), c(0.0)], vec![c(0.0), c(1.0)]], 10.0, vec![1.0, 1.0], mu, 1.0, rth)
            .unwrap()
    }

    #[test]
    fn inactive_reduction_keeps_box() {
        let inst = two_user(vec![0.0, 0.0], 0.0);
        let b = initial_box(&inst);
        assert_eq!(reduce_box(&inst, &b, 0.0), Some(b.clone()));
        // mu > 0 but delta = 0 skips upper tightening too
        let inst = two_user(vec![0.0, 0.0], 1.0);
        assert_eq!(reduce_box(&inst, &b, 0.0), Some(b));
    }

    #[test]
    fn unreachable_floors_empty_the_box() {
        let inst = two_user(vec![100.0, 100.0], 0.0);
        let b = SearchBox {
            gamma_lo: vec![0.0, 0.0],
            gamma_hi: vec![1.0, 1.0],
            s_lo: 0.0,
            s_hi: 1.0,
            alpha_lo: vec![0.0],
            alpha_hi: vec![1.0],
        };
        let terms = reduction_terms(&inst, &b);
        assert!((terms.v - 197.0).abs() < 1e-12, "{}", terms.v);
        assert_eq!(reduce_box(&inst, &b, 0.0), None);
    }

    #[test]
    fn threshold_above_rate_bound_empties_the_box() {
        let inst = two_user(vec![0.0, 0.0], 0.0);
        let b = initial_box(&inst);
        let terms = reduction_terms(&inst, &b);
        // U = 3 log2(11), W = 1
        let threshold = terms.u / terms.w;
        assert!((threshold - 3.0 * 11f64.log2()).abs() < 1e-12);
        assert!(reduce_box(&inst, &b, threshold * (1.0 + 1e-9)).is_none());
        assert!(reduce_box(&inst, &b, threshold * (1.0 - 1e-9)).is_some());
    }

    #[test]
    fn lower_bounds_rise_with_threshold() {
        let inst = two_user(vec![0.0, 0.0], 0.0);
        let b = initial_box(&inst);
        // U = 3 log2(11) ~ 10.38; ask for 9 bits
        let r = reduce_box(&inst, &b, 9.0).unwrap();
        let excess = 9.0 - 3.0 * 11f64.log2();
        let expect = excess.exp2() * 11.0 - 1.0;
        assert!((r.gamma_lo[0] - expect).abs() < 1e-12);
        assert!((r.s_lo - expect).abs() < 1e-12);
        assert_eq!(r.gamma_hi, b.gamma_hi);
    }

    #[test]
    fn floor_raises_private_lower_bound() {
        let inst = two_user(vec![1.0, 0.0], 0.0);
        let b = SearchBox {
            gamma_lo: vec![0.0, 0.0],
            gamma_hi: vec![3.0, 3.0],
            s_lo: 0.0,
            s_hi: 0.0,
            alpha_lo: vec![],
            alpha_hi: vec![],
        };
        // no common rate: user 1 needs log2(1 + gamma) >= 1
        let r = reduce_box(&inst, &b, 0.0).unwrap();
        assert!((r.gamma_lo[0] - 1.0).abs() < 1e-12, "{}", r.gamma_lo[0]);
    }

    #[test]
    fn energy_efficiency_caps_power() {
        let inst = two_user(vec![0.0, 0.0], 1.0);
        let b = initial_box(&inst);
        let delta = 1.0;
        let r = reduce_box(&inst, &b, delta).unwrap();
        let terms = reduction_terms(&inst, &b);
        let w_new = power_floor(&inst, r.s_lo, &r.gamma_lo);
        let cap = r.gamma_lo[0] + (terms.u - delta * w_new) / delta;
        assert!((r.gamma_hi[0] - cap.min(10.0)).abs() < 1e-12);
        assert!(r.gamma_hi[0] < 10.0);
    }
}
