//! Piecewise-linear upper approximation of `g -> g^2` on `[-1, 1]`.
//!
//! Knots sit at `l/N` for `l = -N..=N`. Segment `s` (for `s = -N..N-1`)
//! spans `[s/N, (s+1)/N]`. Integer knot indices keep interval bookkeeping
//! exact.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Chord of `g^2` through `a` and `b`, evaluated at `g`.
pub fn secant(a: f64, b: f64, g: f64) -> f64 {
    (a + b) * g - a * b
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PluGrid {
    pub n: usize,
}

impl PluGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("N must be >= 1"));
        }
        Ok(Self { n })
    }

    pub fn knot(&self, l: i64) -> f64 {
        l as f64 / self.n as f64
    }

    pub fn knots(&self) -> Vec<f64> {
        let n = self.n as i64;
        (-n..=n).map(|l| self.knot(l)).collect()
    }

    pub fn max_gap(&self) -> f64 {
        0.25 / (self.n * self.n) as f64
    }

    /// Index `s` of the segment `[s/N, (s+1)/N]` containing `g` (clamped to
    /// `[-1, 1]`; a knot belongs to the segment on its right, except `1`).
    pub fn segment_of(&self, g: f64) -> i64 {
        let n = self.n as i64;
        ((g * self.n as f64).floor() as i64).clamp(-n, n - 1)
    }

    /// The approximation itself: the chord on the segment containing `g`.
    pub fn value(&self, g: f64) -> f64 {
        let s = self.segment_of(g);
        secant(self.knot(s), self.knot(s + 1), g)
    }

    /// Slope of the approximation at `g` (right derivative at knots).
    pub fn slope(&self, g: f64) -> f64 {
        let s = self.segment_of(g);
        self.knot(s) + self.knot(s + 1)
    }

    /// SOS-II weights reproducing `g`: the left knot index and the weights
    /// on that knot and the next.
    pub fn sos2_weights(&self, g: f64) -> (i64, f64, f64) {
        let s = self.segment_of(g);
        let (a, b) = (self.knot(s), self.knot(s + 1));
        let w = ((g - a) / (b - a)).clamp(0.0, 1.0);
        (s, 1.0 - w, w)
    }

    pub fn full_interval(&self, group: usize) -> SegmentInterval {
        let n = self.n as i64;
        SegmentInterval { group, lo: -n, hi: n }
    }

    /// Smallest knot-aligned interval containing `[lo, hi]`.
    pub fn cover(&self, group: usize, lo: f64, hi: f64) -> SegmentInterval {
        let n = self.n as i64;
        let nf = self.n as f64;
        let l = ((lo * nf).floor() as i64).clamp(-n, n - 1);
        let h = ((hi * nf).ceil() as i64).clamp(l + 1, n);
        SegmentInterval { group, lo: l, hi: h }
    }
}

/// Active SOS-II range of one group as knot indices `lo < hi`: the group's
/// `g` is restricted to `[lo/N, hi/N]` and its `xi` to the chord there.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentInterval {
    pub group: usize,
    pub lo: i64,
    pub hi: i64,
}

impl SegmentInterval {
    pub fn a(&self, grid: &PluGrid) -> f64 {
        grid.knot(self.lo)
    }

    pub fn b(&self, grid: &PluGrid) -> f64 {
        grid.knot(self.hi)
    }

    pub fn segments(&self) -> i64 {
        self.hi - self.lo
    }

    pub fn is_single(&self) -> bool {
        self.hi - self.lo == 1
    }

    pub fn chord(&self, grid: &PluGrid, g: f64) -> f64 {
        secant(self.a(grid), self.b(grid), g)
    }

    /// Splits at interior knot `m` (`lo < m < hi`).
    pub fn split(&self, m: i64) -> (Self, Self) {
        assert!(self.lo < m && m < self.hi, "split knot must be interior");
        (Self { hi: m, ..*self }, Self { lo: m, ..*self })
    }

    /// Interior knot nearest to `g`.
    pub fn nearest_interior_knot(&self, grid: &PluGrid, g: f64) -> Option<i64> {
        if self.is_single() {
            return None;
        }
        let m = (g * grid.n as f64).round() as i64;
        Some(m.clamp(self.lo + 1, self.hi - 1))
    }

    pub fn intersect(&self, other: &Self) -> Option<Self> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo < hi).then_some(Self { group: self.group, lo, hi })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Max of chord - g^2 over a fine grid that includes every segment
    /// midpoint (where the maximum of a quadratic gap sits).
    fn sampled_max_gap(grid: &PluGrid) -> f64 {
        let mut pts: Vec<f64> = (0..=200_000).map(|i| -1.0 + 2.0 * i as f64 / 200_000.0).collect();
        let n = grid.n as i64;
        pts.extend((-n..n).map(|s| (grid.knot(s) + grid.knot(s + 1)) / 2.0));
        pts.iter().map(|&g| grid.value(g) - g * g).fold(f64::MIN, f64::max)
    }

    #[test]
    fn gap_is_quarter_over_n_squared() {
        for n in [1, 2, 3, 5, 10] {
            let grid = PluGrid::new(n).unwrap();
            let gap = sampled_max_gap(&grid);
            assert!((gap - 1.0 / (4.0 * (n * n) as f64)).abs() <= 1e-12, "N={n}: {gap}");
        }
        assert!((PluGrid::new(10).unwrap().max_gap() - 0.0025).abs() < 1e-15);
    }

    #[test]
    fn exact_at_knots() {
        let grid = PluGrid::new(3).unwrap();
        for k in grid.knots() {
            assert!((grid.value(k) - k * k).abs() < 1e-15);
        }
        assert_eq!(grid.knots().len(), 7);
        assert_eq!(grid.knots()[0], -1.0);
    }

    #[test]
    fn rejects_zero_segments() {
        assert!(PluGrid::new(0).is_err());
    }

    #[test]
    fn cover_is_knot_aligned() {
        let grid = PluGrid::new(3).unwrap();
        let c = grid.cover(0, -0.2, 0.5);
        assert_eq!((c.lo, c.hi), (-1, 2));
        let c = grid.cover(0, 0.0, 0.0);
        assert_eq!((c.lo, c.hi), (0, 1));
    }

    proptest! {
        #[test]
        fn sandwich(n in 1usize..12, g in -1.0f64..=1.0) {
            let grid = PluGrid::new(n).unwrap();
            let v = grid.value(g);
            prop_assert!(v >= g * g - 1e-15);
            prop_assert!(v - g * g <= grid.max_gap() + 1e-15);
        }

        #[test]
        fn sos2_reproduces_g_and_xi(n in 1usize..12, g in -1.0f64..=1.0) {
            let grid = PluGrid::new(n).unwrap();
            let (s, w0, w1) = grid.sos2_weights(g);
            let (a, b) = (grid.knot(s), grid.knot(s + 1));
            prop_assert!((w0 + w1 - 1.0).abs() < 1e-15 && w0 >= 0.0 && w1 >= 0.0);
            prop_assert!((w0 * a + w1 * b - g).abs() < 1e-14);
            prop_assert!((w0 * a * a + w1 * b * b - grid.value(g)).abs() < 1e-14);
        }

        #[test]
        fn wider_chord_dominates(n in 1usize..8, lo in -8i64..8, w in 1i64..8, g in -1.0f64..1.0) {
            let grid = PluGrid::new(n).unwrap();
            let nn = n as i64;
            let lo = lo.clamp(-nn, nn - 1);
            let hi = (lo + w).min(nn);
            let iv = SegmentInterval { group: 0, lo, hi };
            let g = g.clamp(iv.a(&grid), iv.b(&grid));
            prop_assert!(iv.chord(&grid, g) >= grid.value(g) - 1e-14);
            prop_assert!(iv.chord(&grid, g) - g * g <= (iv.b(&grid) - iv.a(&grid)).powi(2) / 4.0 + 1e-14);
        }
    }
}
