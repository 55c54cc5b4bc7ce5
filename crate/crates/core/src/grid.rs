//! Parameter grids on `(0, 1)`.

use crate::chain::ChainSpec;
use crate::defaults::{GRID_REFINE_FACTOR, GRID_REFINE_HALFWIDTH, RADIUS_FLOOR};

/// Midpoint nodes `(j + 1/2)/n`, `j = 0..n`.
pub fn midpoint(n: usize) -> Vec<f64> {
    (0..n).map(|j| (j as f64 + 0.5) / n as f64).collect()
}

/// Interior nodes `j/n`, `j = 1..n`.
pub fn interior(n: usize) -> Vec<f64> {
    (1..n).map(|j| j as f64 / n as f64).collect()
}

/// Midpoint grid of resolution `n`, with `factor`-times finer midpoint nodes
/// within `halfwidth` of `center`.
pub fn refined(n: usize, center: f64, halfwidth: f64, factor: usize) -> Vec<f64> {
    let mut ts: Vec<f64> = midpoint(n).into_iter().filter(|t| (t - center).abs() > halfwidth).collect();
    ts.extend(midpoint(n * factor).into_iter().filter(|t| (t - center).abs() <= halfwidth));
    ts.sort_by(f64::total_cmp);
    ts
}

/// Analysis grid for a chain: refined around the junction of two-branch
/// chains, with singular windows and sub-floor radii removed.
pub fn analysis_grid(chain: &ChainSpec, n: usize) -> Vec<f64> {
    let ts = if chain.is_two_branch() {
        refined(n, 0.5, GRID_REFINE_HALFWIDTH, GRID_REFINE_FACTOR)
    } else {
        midpoint(n)
    };
    admissible(chain, ts, RADIUS_FLOOR)
}

/// Drops excluded parameters and circles with radius below `floor`.
pub fn admissible(chain: &ChainSpec, ts: Vec<f64>, floor: f64) -> Vec<f64> {
    ts.into_iter().filter(|&t| !chain.is_excluded(t) && chain.radius(t) >= floor).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refined_grid_is_sorted_and_denser_near_center() {
        let ts = refined(100, 0.5, 0.05, 4);
        assert!(ts.windows(2).all(|w| w[0] < w[1]));
        let near = ts.iter().filter(|t| (*t - 0.5).abs() <= 0.05).count();
        assert_eq!(near, 40);
        assert_eq!(ts.len(), 90 + 40);
    }
}
