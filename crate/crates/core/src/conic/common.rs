use crate::model::{log2_1p, ProblemInstance};

/// Slack allowed when the rate floors overshoot the common budget.
const BUDGET_SLACK: f64 = 1e-9;

/// Best split of the common rate for fixed SINRs.
///
/// Maximizes `sum_k u_k C_k` subject to `sum_k C_k <= log2(1 + s)` and
/// `C_k >= max(0, R_k^th - log2(1 + gamma_p,k))`. The LP optimum assigns
/// every share its floor and the rest of the budget to the largest weight
/// (lowest index on ties). Returns `None` when the floors exceed the
/// budget.
pub fn improve_common_allocation(inst: &ProblemInstance, gamma_p: &[f64], s_value: f64) -> Option<Vec<f64>> {
    let budget = log2_1p(s_value.max(0.0));
    let mut c: Vec<f64> = inst
        .rate_floors()
        .iter()
        .zip(gamma_p)
        .map(|(r, &g)| (r - log2_1p(g.max(0.0))).max(0.0))
        .collect();
    let used: f64 = c.iter().sum();
    if used > budget + BUDGET_SLACK {
        return None;
    }
    let remaining = (budget - used).max(0.0);
    let weights = inst.weights();
    let best = (0..weights.len()).fold(0, |best, k| if weights[k] > weights[best] { k } else { best });
    c[best] += remaining;
    Some(c)
}
