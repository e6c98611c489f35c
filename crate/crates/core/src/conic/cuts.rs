//! Convex envelope of `{(e, d) : d <= |e|, arg e in [lo, hi]}`.

use std::f64::consts::{PI, TAU};

use crate::error::ConicError;

const ANGLE_TOL: f64 = 1e-12;

/// Linear row `re * Re(e) + im * Im(e) + gap * (d - t) >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutRow {
    pub re: f64,
    pub im: f64,
    pub gap: f64,
}

impl CutRow {
    pub fn eval(&self, e_re: f64, e_im: f64, d_minus_t: f64) -> f64 {
        self.re * e_re + self.im * e_im + self.gap * d_minus_t
    }
}

/// Rows of the argument-cut envelope on `(Re e, Im e, d - t)`.
///
/// For sectors no wider than `pi` this returns the two half-planes
/// bounding the sector and the chord row
/// `a Re e + b Im e >= (d - t)(a^2 + b^2)` with `a, b` the midpoint of the
/// two unit vectors at the sector ends. Wider sectors have no convex
/// restriction and return an empty list.
pub fn argument_cuts(lo: f64, hi: f64) -> Result<Vec<CutRow>, ConicError> {
    if !(lo >= -ANGLE_TOL) || !(hi <= TAU + ANGLE_TOL) || !(lo <= hi) {
        return Err(ConicError::AngleRange { lo, hi });
    }
    if hi - lo > PI {
        return Ok(Vec::new());
    }
    let (sin_lo, cos_lo) = lo.sin_cos();
    let (sin_hi, cos_hi) = hi.sin_cos();
    let a = 0.5 * (cos_lo + cos_hi);
    let b = 0.5 * (sin_lo + sin_hi);
    Ok(vec![
        CutRow { re: -sin_lo, im: cos_lo, gap: 0.0 },
        CutRow { re: sin_hi, im: -cos_hi, gap: 0.0 },
        CutRow { re: a, im: b, gap: -(a * a + b * b) },
    ])
}

/// Rows pinning `arg e = alpha` with `|e| >= d - t`: `e` lies on the ray
/// (one equality, returned first) and its length covers `d - t`.
pub fn ray_rows(alpha: f64) -> (CutRow, [CutRow; 2]) {
    let (s, c) = alpha.sin_cos();
    (
        CutRow { re: s, im: -c, gap: 0.0 },
        [CutRow { re: c, im: s, gap: 0.0 }, CutRow { re: c, im: s, gap: -1.0 }],
    )
}
