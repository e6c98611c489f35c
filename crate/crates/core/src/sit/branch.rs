use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::conic::{DualPoint, RawSolution, SearchBox};

/// Edges shorter than this are treated as collapsed.
pub const MIN_EDGE: f64 = 1e-12;

/// Edge selection rule for bisection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Branching {
    /// Longest edge.
    #[default]
    Absolute,
    /// Longest edge relative to the same edge of the initial box.
    Relative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegenerateBox;

/// Dimension bisected by `rule`; ties go to the lowest index.
pub fn select_dimension(region: &SearchBox, rule: Branching, initial_widths: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for d in 0..region.dims() {
        let width = region.width(d);
        if width < MIN_EDGE {
            continue;
        }
        let score = match rule {
            Branching::Absolute => width,
            Branching::Relative => match initial_widths.get(d) {
                Some(&w0) if w0 > 0.0 => width / w0,
                _ => width,
            },
        };
        if best.map_or(true, |(_, s)| score > s) {
            best = Some((d, score));
        }
    }
    best.map(|(d, _)| d)
}

/// Bisects `region` at the midpoint of the selected edge.
pub fn branch(
    region: &SearchBox,
    rule: Branching,
    initial_widths: &[f64],
) -> Result<(SearchBox, SearchBox), DegenerateBox> {
    let dim = select_dimension(region, rule, initial_widths).ok_or(DegenerateBox)?;
    Ok(region.bisect(dim))
}

/// Angle of a complex number mapped to `[0, 2pi)`.
pub fn angle_0_2pi(re: f64, im: f64) -> f64 {
    let a = im.atan2(re);
    if a < 0.0 {
        a + TAU
    } else {
        a
    }
}

/// Dual point from a bounding solution: log-rates mapped back through
/// `2^x - 1` and each phase snapped to the nearer end of its interval
/// (lower end on ties).
pub fn recover_dual_point(raw: &RawSolution, region: &SearchBox) -> DualPoint {
    let gamma_p = raw
        .gamma_log
        .iter()
        .enumerate()
        .map(|(k, &g)| (g.exp2() - 1.0).clamp(region.gamma_lo[k], region.gamma_hi[k]))
        .collect();
    let s = (raw.s_log.exp2() - 1.0).clamp(region.s_lo, region.s_hi);
    let alpha = region
        .alpha_lo
        .iter()
        .zip(&region.alpha_hi)
        .enumerate()
        .map(|(i, (&lo, &hi))| {
            let e = raw.e[i + 1];
            snap_angle(angle_0_2pi(e.re, e.im), lo, hi)
        })
        .collect();
    DualPoint { gamma_p, s, alpha }
}

pub fn snap_angle(angle: f64, lo: f64, hi: f64) -> f64 {
    if (hi - angle).abs() < (lo - angle).abs() {
        hi
    } else {
        lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn region(gamma_hi: Vec<f64>, s_hi: f64, alpha_hi: Vec<f64>) -> SearchBox {
        SearchBox {
            gamma_lo: vec![0.0; gamma_hi.len()],
            gamma_hi,
            s_lo: 0.0,
            s_hi,
            alpha_lo: vec![0.0; alpha_hi.len()],
            alpha_hi,
        }
    }

    #[test]
    fn longest_edge() {
        let b = region(vec![4.0, 2.0], 1.0, vec![PI]);
        let (l, r) = branch(&b, Branching::Absolute, &[]).unwrap();
        assert_eq!(l.gamma_hi[0], 2.0);
        assert_eq!(r.gamma_lo[0], 2.0);
        assert_eq!(l.gamma_hi[1], 2.0);
    }

    #[test]
    fn ties_pick_first_dimension() {
        let b = region(vec![1.0, 1.0], 1.0, vec![1.0]);
        assert_eq!(select_dimension(&b, Branching::Absolute, &[]), Some(0));
    }

    #[test]
    fn relative_rule_normalizes_by_initial_widths() {
        let b = region(vec![2.0, 2.0], 0.0, vec![]);
        assert_eq!(select_dimension(&b, Branching::Relative, &[100.0, 2.0, 0.0]), Some(1));
        assert_eq!(select_dimension(&b, Branching::Absolute, &[100.0, 2.0, 0.0]), Some(0));
    }

    #[test]
    fn collapsed_box_is_degenerate() {
        let b = region(vec![1e-13, 0.0], 0.0, vec![]);
        assert_eq!(branch(&b, Branching::Absolute, &[]), Err(DegenerateBox));
    }

    fn raw_with(gamma_log: Vec<f64>, e_angle: f64) -> RawSolution {
        RawSolution {
            p_c: vec![],
            p: vec![],
            c: vec![],
            gamma_log,
            s_log: 0.0,
            d: vec![0.0],
            e: vec![Complex64::new(1.0, 0.0), Complex64::from_polar(1.0, e_angle)],
            t: 0.0,
        }
    }

    #[test]
    fn dual_point_from_log_rates() {
        let b = region(vec![10.0, 10.0], 0.0, vec![1.0]);
        let p = recover_dual_point(&raw_with(vec![1.0, 2.0], 0.3), &b);
        assert!((p.gamma_p[0] - 1.0).abs() < 1e-12);
        assert!((p.gamma_p[1] - 3.0).abs() < 1e-12);
        assert_eq!(p.alpha, vec![0.0]);
    }

    #[test]
    fn phase_snapping() {
        assert_eq!(snap_angle(0.3, 0.0, 1.0), 0.0);
        assert_eq!(snap_angle(0.5, 0.0, 1.0), 0.0);
        assert_eq!(snap_angle(0.7, 0.0, 1.0), 1.0);
        assert!((angle_0_2pi(0.0, -1.0) - 1.5 * PI).abs() < 1e-15);
    }
}
