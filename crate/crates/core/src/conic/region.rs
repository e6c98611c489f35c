use serde::{Deserialize, Serialize};

/// Rectangle over the private SINRs, the common SINR and the phases of the
/// common-stream gains `h_k^H p_c` for users `k > 1`.
///
/// Coordinates are flattened as `[gamma_1 .. gamma_K, s, alpha_2 .. alpha_K]`
/// for branching.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub gamma_lo: Vec<f64>,
    pub gamma_hi: Vec<f64>,
    pub s_lo: f64,
    pub s_hi: f64,
    pub alpha_lo: Vec<f64>,
    pub alpha_hi: Vec<f64>,
}

impl SearchBox {
    pub fn users(&self) -> usize {
        self.gamma_lo.len()
    }

    pub fn dims(&self) -> usize {
        self.gamma_lo.len() + 1 + self.alpha_lo.len()
    }

    pub fn lower(&self, dim: usize) -> f64 {
        let k = self.users();
        match dim {
            d if d < k => self.gamma_lo[d],
            d if d == k => self.s_lo,
            d => self.alpha_lo[d - k - 1],
        }
    }

    pub fn upper(&self, dim: usize) -> f64 {
        let k = self.users();
        match dim {
            d if d < k => self.gamma_hi[d],
            d if d == k => self.s_hi,
            d => self.alpha_hi[d - k - 1],
        }
    }

    pub fn width(&self, dim: usize) -> f64 {
        self.upper(dim) - self.lower(dim)
    }

    pub fn widths(&self) -> Vec<f64> {
        (0..self.dims()).map(|d| self.width(d)).collect()
    }

    pub fn set_bounds(&mut self, dim: usize, lo: f64, hi: f64) {
        let k = self.users();
        match dim {
            d if d < k => {
                self.gamma_lo[d] = lo;
                self.gamma_hi[d] = hi;
            }
            d if d == k => {
                self.s_lo = lo;
                self.s_hi = hi;
            }
            d => {
                self.alpha_lo[d - k - 1] = lo;
                self.alpha_hi[d - k - 1] = hi;
            }
        }
    }

    /// True when some lower bound exceeds its upper bound.
    pub fn is_empty(&self) -> bool {
        (0..self.dims()).any(|d| self.lower(d) > self.upper(d))
    }

    /// Bisects dimension `dim` at its midpoint.
    pub fn bisect(&self, dim: usize) -> (SearchBox, SearchBox) {
        let (lo, hi) = (self.lower(dim), self.upper(dim));
        let mid = 0.5 * (lo + hi);
        let mut left = self.clone();
        let mut right = self.clone();
        left.set_bounds(dim, lo, mid);
        right.set_bounds(dim, mid, hi);
        (left, right)
    }

    pub fn contains(&self, gamma: &[f64], s: f64, alpha: &[f64], tol: f64) -> bool {
        gamma.len() == self.users()
            && alpha.len() == self.alpha_lo.len()
            && gamma
                .iter()
                .enumerate()
                .all(|(k, &g)| g >= self.gamma_lo[k] - tol && g <= self.gamma_hi[k] + tol)
            && s >= self.s_lo - tol
            && s <= self.s_hi + tol
            && alpha
                .iter()
                .enumerate()
                .all(|(k, &a)| a >= self.alpha_lo[k] - tol && a <= self.alpha_hi[k] + tol)
    }

    /// True when `other` lies inside `self`.
    pub fn encloses(&self, other: &SearchBox) -> bool {
        self.dims() == other.dims()
            && (0..self.dims()).all(|d| other.lower(d) >= self.lower(d) && other.upper(d) <= self.upper(d))
    }
}

/// A point of the search space in linear (not log) coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPoint {
    pub gamma_p: Vec<f64>,
    pub s: f64,
    pub alpha: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sample() -> SearchBox {
        SearchBox {
            gamma_lo: vec![0.0, 0.0],
            gamma_hi: vec![4.0, 2.0],
            s_lo: 0.0,
            s_hi: 1.0,
            alpha_lo: vec![0.0],
            alpha_hi: vec![PI],
        }
    }

    #[test]
    fn flattened_coordinates() {
        let b = sample();
        assert_eq!(b.dims(), 4);
        assert_eq!(b.widths(), vec![4.0, 2.0, 1.0, PI]);
    }

    #[test]
    fn bisection_partitions_parent() {
        let b = sample();
        let (l, r) = b.bisect(3);
        assert_eq!(l.alpha_hi[0], PI / 2.0);
        assert_eq!(r.alpha_lo[0], PI / 2.0);
        assert!(b.encloses(&l) && b.encloses(&r));
        assert!(!l.is_empty());
    }

    #[test]
    fn emptiness() {
        let mut b = sample();
        b.s_lo = 2.0;
        assert!(b.is_empty());
    }
}
