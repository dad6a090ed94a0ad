//! Stepsize thresholds `gamma_bar_k(kappa)`, the roots of `T_k` in `(1, gamma_bar_inf)`,
//! and the regime index `N_bar`.

use serde::{Deserialize, Serialize};

use crate::curvature::t_k;
use crate::error::{domain, Error, Result};

pub const DEFAULT_TOL: f64 = 1e-12;
const BRACKET_EPS: f64 = 1e-12;
const MAX_ITER: usize = 200;

/// `2 / (1 + max(kappa, 0))`.
pub fn gamma_bar_inf(kappa: f64) -> f64 {
    2.0 / (1.0 + kappa.max(0.0))
}

/// Closed form of the first threshold.
pub fn gamma_bar_1(kappa: f64) -> f64 {
    3.0 / (1.0 + kappa + (1.0 - kappa + kappa * kappa).sqrt())
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa < 1.0) || !kappa.is_finite() {
        return domain(format!("kappa must be finite and < 1, got {kappa}"));
    }
    Ok(())
}

/// Moves `r` up by ulps until `T_k(r) >= 0`, so that `n_bar(gamma_bar(k)) >= k`.
fn settle_up(mut r: f64, kappa: f64, k: usize) -> Result<f64> {
    for _ in 0..64 {
        if t_k(r, kappa, k)? >= 0.0 {
            return Ok(r);
        }
        r = r.next_up();
    }
    Err(Error::Solver(format!("threshold {k} could not be settled at kappa = {kappa}")))
}

/// Threshold `gamma_bar_k(kappa)`; `gamma_bar_0 = 1` by convention.
///
/// The returned value is the smallest located step with `T_k >= 0`.
pub fn gamma_bar(k: usize, kappa: f64, tol: f64) -> Result<f64> {
    check_kappa(kappa)?;
    if !(tol > 0.0) {
        return domain("tolerance must be positive");
    }
    match k {
        0 => return Ok(1.0),
        1 => return settle_up(gamma_bar_1(kappa), kappa, 1),
        _ => {}
    }
    let mut lo = 1.0 + BRACKET_EPS;
    let mut hi = gamma_bar_inf(kappa) - BRACKET_EPS;
    if t_k(lo, kappa, k)? >= 0.0 || t_k(hi, kappa, k)? < 0.0 {
        return Err(Error::Solver(format!("T_{k} does not change sign at kappa = {kappa}")));
    }
    for _ in 0..MAX_ITER {
        if hi - lo <= tol {
            return settle_up(hi, kappa, k);
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return settle_up(hi, kappa, k);
        }
        if t_k(mid, kappa, k)? >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(Error::Solver(format!("bisection for gamma_bar_{k} hit the iteration cap")))
}

/// Largest `k <= k_max` with `T_k(gl) >= 0`, or 0 when `gl <= 1` or `T_1 < 0`.
pub fn n_bar(gl: f64, kappa: f64, k_max: usize) -> Result<usize> {
    check_kappa(kappa)?;
    if !(gl > 0.0 && gl < gamma_bar_inf(kappa)) {
        return domain(format!("gl = {gl} outside (0, {})", gamma_bar_inf(kappa)));
    }
    if gl <= 1.0 {
        return Ok(0);
    }
    let mut last = 0;
    for k in 1..=k_max {
        if t_k(gl, kappa, k)? >= 0.0 {
            last = k;
        } else {
            break;
        }
    }
    Ok(last)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdTable {
    pub kappa: f64,
    /// `(k, gamma_bar_k)` for `k = 1..=k_max`.
    pub values: Vec<(usize, f64)>,
    pub gamma_bar_inf: f64,
}

pub fn threshold_table(kappa: f64, k_max: usize) -> Result<ThresholdTable> {
    let inf = gamma_bar_inf(kappa);
    let mut values = Vec::with_capacity(k_max);
    let mut prev = 1.0;
    for k in 1..=k_max {
        let g = gamma_bar(k, kappa, DEFAULT_TOL)?;
        if !(g > prev && g < inf) {
            return Err(Error::Solver(format!(
                "threshold sequence not increasing at k = {k}: {prev} then {g}"
            )));
        }
        values.push((k, g));
        prev = g;
    }
    Ok(ThresholdTable { kappa, values, gamma_bar_inf: inf })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_threshold_convex_is_three_halves() {
        assert_eq!(gamma_bar(1, 0.0, DEFAULT_TOL).unwrap(), 1.5);
    }

    #[test]
    fn known_thresholds() {
        let g2 = gamma_bar(2, 0.0, DEFAULT_TOL).unwrap();
        assert_eq!(format!("{g2:.3}"), "1.606");
        let g5 = gamma_bar(5, 1e-3, DEFAULT_TOL).unwrap();
        assert_eq!(format!("{g5:.3}"), "1.746");
    }

    #[test]
    fn closed_form_agrees_with_bisection() {
        for &kappa in &[-4.0, -1.0, -0.1, 0.3, 0.9] {
            let closed = gamma_bar_1(kappa);
            let mut lo: f64 = 1.0 + 1e-12;
            let mut hi = gamma_bar_inf(kappa) - 1e-12;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if t_k(mid, kappa, 1).unwrap() >= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            assert!((closed - hi).abs() < 1e-12, "kappa {kappa}: {closed} vs {hi}");
        }
    }

    #[test]
    fn n_bar_examples() {
        assert_eq!(n_bar(1.83, -0.5, 10).unwrap(), 2);
        assert_eq!(n_bar(1.0 + 1e-9, -0.5, 10).unwrap(), 0);
        let g3 = gamma_bar(3, -0.5, DEFAULT_TOL).unwrap();
        assert_eq!(n_bar(g3, -0.5, 10).unwrap(), 3);
        assert_eq!(n_bar(g3 - 1e-9, -0.5, 10).unwrap(), 2);
    }

    #[test]
    fn table_examples() {
        let t = threshold_table(0.0, 5).unwrap();
        assert_eq!(format!("{:.3}", t.values[4].1), "1.747");
        let t = threshold_table(1e-4, 10).unwrap();
        assert_eq!(format!("{:.3}", t.values[9].1), "1.834");
        let t = threshold_table(-0.3, 1).unwrap();
        assert_eq!(t.values[0].1, gamma_bar(1, -0.3, DEFAULT_TOL).unwrap());
    }
}
