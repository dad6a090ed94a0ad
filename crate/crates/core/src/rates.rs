//! Worst-case rate denominators `D` such that
//! `min_i ||g_i||^2 / (2L) <= (f_0 - f_*) / D` after `N` steps.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::curvature::{p_coeff, pow_neg, step_gain, t_k, NormalizedStep};
use crate::error::{domain, Error, Result};
use crate::schedules;
use crate::thresholds::{gamma_bar_1, gamma_bar_inf, n_bar};

/// Which regime attains the minimum in a denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Regime {
    Sublinear(usize),
    LinearL,
    LinearMu,
    OneStep,
    Dynamic,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::Sublinear(k) => write!(f, "sublinear_{k}"),
            Regime::LinearL => f.write_str("linear_L"),
            Regime::LinearMu => f.write_str("linear_mu"),
            Regime::OneStep => f.write_str("one_step"),
            Regime::Dynamic => f.write_str("dynamic"),
        }
    }
}

impl FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "linear_L" => Regime::LinearL,
            "linear_mu" => Regime::LinearMu,
            "one_step" => Regime::OneStep,
            "dynamic" => Regime::Dynamic,
            _ => {
                let k = s
                    .strip_prefix("sublinear_")
                    .and_then(|k| k.parse().ok())
                    .ok_or_else(|| Error::Input(format!("unknown regime label {s:?}")))?;
                Regime::Sublinear(k)
            }
        })
    }
}

impl TryFrom<String> for Regime {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Regime> for String {
    fn from(r: Regime) -> Self {
        r.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NumeratorKind {
    GapToFstar,
    GapToFN,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateBound {
    pub denominator: f64,
    pub regime: Regime,
    pub numerator_kind: NumeratorKind,
}

impl RateBound {
    pub fn new(denominator: f64, regime: Regime) -> Self {
        Self { denominator, regime, numerator_kind: NumeratorKind::GapToFstar }
    }

    /// Bound with numerator `f_0 - f_N`, which drops the leading `1`.
    pub fn to_gap_fn(self) -> Self {
        match self.numerator_kind {
            NumeratorKind::GapToFN => self,
            NumeratorKind::GapToFstar => Self {
                denominator: self.denominator - 1.0,
                numerator_kind: NumeratorKind::GapToFN,
                ..self
            },
        }
    }

    /// Upper bound on `min_i ||g_i||^2 / (2L)` for the given gap.
    pub fn bound(&self, gap: f64) -> f64 {
        gap / self.denominator
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return domain("need at least one iteration");
    }
    if n > crate::curvature::K_MAX {
        return domain(format!("n = {n} exceeds the cap"));
    }
    Ok(())
}

fn check_gl(gl: f64) -> Result<()> {
    if !(gl > 0.0 && gl < 2.0) {
        return domain(format!("gl = {gl} outside (0, 2)"));
    }
    Ok(())
}

fn near_one(gl: f64) -> bool {
    (1.0 - gl).abs() < 1e-10
}

/// `(-1 + (1 - gl)^(-2N)) / gl`, infinite at `gl = 1`.
fn linear_l_term(gl: f64, n: usize) -> f64 {
    if near_one(gl) {
        f64::INFINITY
    } else {
        (-1.0 + pow_neg(1.0 - gl, 2 * n)) / gl
    }
}

pub fn denom_convex(gl: f64, n: usize) -> Result<RateBound> {
    check_gl(gl)?;
    check_n(n)?;
    let a = 2.0 * n as f64;
    let b = linear_l_term(gl, n);
    Ok(if a <= b {
        RateBound::new(1.0 + gl * a, Regime::Sublinear(0))
    } else {
        RateBound::new(1.0 + gl * b, Regime::LinearL)
    })
}

pub fn denom_strongly_convex(gl: f64, kappa: f64, n: usize) -> Result<RateBound> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return domain(format!("strongly convex rate needs kappa in (0, 1), got {kappa}"));
    }
    check_gl(gl)?;
    check_n(n)?;
    let s = NormalizedStep::new(gl, kappa);
    let a = (-1.0 + pow_neg(s.eta, 2 * n)) / s.gm;
    let b = linear_l_term(gl, n);
    Ok(if a <= b {
        RateBound::new(1.0 + gl * a, Regime::LinearMu)
    } else {
        RateBound::new(1.0 + gl * b, Regime::LinearL)
    })
}

fn check_nonconvex_args(gl: f64, gm: f64, n: usize) -> Result<f64> {
    check_gl(gl)?;
    check_n(n)?;
    if !(gm <= 0.0) {
        return domain(format!("P_N needs gm <= 0, got {gm}"));
    }
    Ok(gm / gl)
}

/// Sum form: `p(l,u) [N - (-l u / (l - u)) sum_{k=0}^{N} [T_k]_+]`.
///
/// Accepts `gm = 0`, where it reduces to `2N` exactly.
pub fn p_n_sum(gl: f64, gm: f64, n: usize) -> Result<f64> {
    let kappa = check_nonconvex_args(gl, gm, n)?;
    let p = p_coeff(gl, gm)?;
    let mut sum = 0.0;
    if gl > 1.0 && !near_one(gl) {
        for k in 1..=n {
            let t = t_k(gl, kappa, k)?;
            if t > 0.0 {
                sum += t;
            } else {
                break;
            }
        }
    }
    let c = -gl * gm / (gl - gm);
    Ok(p * (n as f64 - c * sum))
}

/// `(-1 + rho^(-2k)) / (l (1 - rho^2)) - (-1 + eta^(-2k)) / (u (1 - eta^2))`.
fn a_term(s: &NormalizedStep, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let lhs = (-1.0 + pow_neg(s.rho, 2 * k)) / (s.gl * (1.0 - s.rho * s.rho));
    let rhs = (-1.0 + pow_neg(s.eta, 2 * k)) / (s.gm * (1.0 - s.eta * s.eta));
    lhs - rhs
}

/// Min form: `p min_{0<=k<=N} { A_k / (1/l - 1/u) + N - k }`.
pub fn p_n_min(gl: f64, gm: f64, n: usize) -> Result<f64> {
    let kappa = check_nonconvex_args(gl, gm, n)?;
    if gm == 0.0 {
        return domain("min form needs gm < 0");
    }
    let s = NormalizedStep::new(gl, kappa);
    let p = p_coeff(gl, gm)?;
    if gl <= 1.0 || near_one(gl) {
        return Ok(p * n as f64);
    }
    let w = 1.0 / gl - 1.0 / gm;
    let best = (0..=n)
        .map(|k| a_term(&s, k) / w + (n - k) as f64)
        .fold(f64::INFINITY, f64::min);
    Ok(p * best)
}

/// Piecewise form, dispatching on `k = min(N_bar, N)`:
/// `p (N - k) + A_k / (1/(1 - rho^2) - 1/(1 - eta^2))`.
pub fn p_n_piecewise(gl: f64, gm: f64, n: usize) -> Result<f64> {
    let kappa = check_nonconvex_args(gl, gm, n)?;
    if gm == 0.0 {
        return domain("piecewise form needs gm < 0");
    }
    let p = p_coeff(gl, gm)?;
    if gl <= 1.0 || near_one(gl) {
        return Ok(p * n as f64);
    }
    let s = NormalizedStep::new(gl, kappa);
    let k = n_bar(gl, kappa, n)?;
    if k == 0 {
        return Ok(p * n as f64);
    }
    let w = 1.0 / (1.0 - s.rho * s.rho) - 1.0 / (1.0 - s.eta * s.eta);
    Ok(p * (n - k) as f64 + a_term(&s, k) / w)
}

pub fn denom_nonconvex_const(gl: f64, kappa: f64, n: usize) -> Result<RateBound> {
    if !(kappa < 0.0) {
        return domain(format!("nonconvex rate needs kappa < 0, got {kappa}"));
    }
    check_gl(gl)?;
    check_n(n)?;
    let pn = p_n_sum(gl, kappa * gl, n)?;
    let lin = linear_l_term(gl, n);
    Ok(if pn <= lin {
        let k = if gl <= 1.0 { 0 } else { n_bar(gl, kappa, n)? };
        RateBound::new(1.0 + gl * pn, Regime::Sublinear(k))
    } else {
        RateBound::new(1.0 + gl * lin, Regime::LinearL)
    })
}

/// Constant-step denominator for any `kappa < 1`, by sign of `kappa`.
pub fn denom_const(gl: f64, kappa: f64, n: usize) -> Result<RateBound> {
    if kappa > 0.0 {
        denom_strongly_convex(gl, kappa, n)
    } else if kappa == 0.0 {
        denom_convex(gl, n)
    } else {
        denom_nonconvex_const(gl, kappa, n)
    }
}

/// `1 + sum_i gl_i p(gl_i, kappa gl_i)` for steps up to the first threshold.
pub fn denom_variable(schedule: &[f64], kappa: f64) -> Result<RateBound> {
    if !(kappa <= 0.0) {
        return domain("variable-step rate needs kappa <= 0");
    }
    if schedule.is_empty() {
        return domain("empty schedule");
    }
    let cap = gamma_bar_1(kappa);
    let mut d = 1.0;
    for &gl in schedule {
        if !(gl > 0.0 && gl <= cap * (1.0 + 1e-14)) {
            return domain(format!("step {gl} outside (0, gamma_bar_1 = {cap}]"));
        }
        d += step_gain(gl, kappa * gl)?;
    }
    Ok(RateBound::new(d, Regime::OneStep))
}

pub fn denom_dynamic_strongly_convex(kappa: f64, n: usize) -> Result<RateBound> {
    if !(0.0..1.0).contains(&kappa) {
        return domain(format!("dynamic rate needs kappa in [0, 1), got {kappa}"));
    }
    check_n(n)?;
    let (s, gaps) = schedules::dynamic_sequence_with_gaps(kappa, n)?;
    Ok(RateBound::new(1.0 + s.entries[n - 1] / gaps[n - 1], Regime::Dynamic))
}

/// Dynamic schedule `min(s_i, gamma_star)` on nonconvex functions.
///
/// With `m` the number of untruncated steps among the first `N`, the
/// denominator is `1 + s_{m-1}/(2 - s_{m-1}(1+kappa)) + (N - m) r*`, where
/// `r* = gamma_star p(gamma_star, kappa gamma_star)`.
pub fn denom_dynamic_nonconvex(kappa: f64, n: usize) -> Result<RateBound> {
    if !(kappa < 0.0) {
        return domain(format!("nonconvex dynamic rate needs kappa < 0, got {kappa}"));
    }
    check_n(n)?;
    let gs = schedules::opt_const_nonconvex_asymptotic(kappa)?;
    let r_star = step_gain(gs, kappa * gs)?;
    let (s, gaps) = schedules::dynamic_sequence_with_gaps(kappa, n)?;
    let m = s.entries.iter().take_while(|&&x| x <= gs).count();
    let head = if m == 0 { 0.0 } else { s.entries[m - 1] / gaps[m - 1] };
    Ok(RateBound::new(1.0 + head + (n - m) as f64 * r_star, Regime::Dynamic))
}

/// `1 + sum_i gl_i (2 - gl_i)(2 - kappa gl_i) / (2 - gl_i (1 + kappa))`.
pub fn denom_conjectured_equivalent(schedule: &[f64], kappa: f64) -> Result<f64> {
    if schedule.is_empty() {
        return domain("empty schedule");
    }
    let mut d = 1.0;
    for &gl in schedule {
        let den = 2.0 - gl * (1.0 + kappa);
        if !(gl > 0.0 && den > 0.0) {
            return domain(format!("step {gl} outside (0, {})", gamma_bar_inf(kappa)));
        }
        d += gl * (2.0 - gl) * (2.0 - kappa * gl) / den;
    }
    Ok(d)
}

/// `1 + sum_i gl_i (2 - gl_i)`, the rate using only the upper curvature.
pub fn denom_classical_nesterov(schedule: &[f64]) -> Result<f64> {
    if schedule.is_empty() {
        return domain("empty schedule");
    }
    let mut d = 1.0;
    for &gl in schedule {
        check_gl(gl)?;
        d += gl * (2.0 - gl);
    }
    Ok(d)
}

/// `1 + sum_i gl_i (2 - (gl_i / 2) max(1, gl_i))` for steps in `(0, sqrt 3]`.
pub fn denom_aps(schedule: &[f64]) -> Result<f64> {
    if schedule.is_empty() {
        return domain("empty schedule");
    }
    let cap = 3f64.sqrt();
    let mut d = 1.0;
    for &gl in schedule {
        if !(gl > 0.0 && gl <= cap * (1.0 + 1e-15)) {
            return domain(format!("step {gl} outside (0, sqrt 3]"));
        }
        d += gl * (2.0 - 0.5 * gl * gl.max(1.0));
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thresholds::{gamma_bar, DEFAULT_TOL};

    fn r3(x: f64) -> String {
        format!("{x:.3}")
    }

    #[test]
    fn convex_examples() {
        let g2 = gamma_bar(2, 0.0, DEFAULT_TOL).unwrap();
        assert_eq!(r3(denom_convex(g2, 2).unwrap().denominator), "7.423");
        assert_eq!(denom_convex(1.0, 10).unwrap().denominator, 21.0);
        assert!(denom_convex(2.0, 1).is_err());
    }

    #[test]
    fn strongly_convex_examples() {
        let g5 = gamma_bar(5, 1e-3, DEFAULT_TOL).unwrap();
        assert_eq!(r3(denom_strongly_convex(g5, 1e-3, 5).unwrap().denominator), "18.633");
        let std = 2.0 / (1.0 + 1e-3);
        let d = denom_strongly_convex(std, 1e-3, 10).unwrap().denominator;
        assert_eq!(r3(d), "1.041");
        let want = ((1.0 - 1e-3) / (1.0 + 1e-3f64)).powi(-20);
        assert!((d - want).abs() < 1e-9);
    }

    #[test]
    fn strongly_convex_recovers_convex() {
        for &(gl, n) in &[(0.5, 3), (1.5, 2), (1.8, 4)] {
            let a = denom_strongly_convex(gl, 1e-9, n).unwrap().denominator;
            let b = denom_convex(gl, n).unwrap().denominator;
            assert!((a - b).abs() <= 1e-6 * b);
        }
    }

    #[test]
    fn short_step_p_n() {
        let (gl, gm) = (0.8, -0.4);
        let want = (2.0 + gm * gl / (gl - gm)) * 5.0;
        assert!((p_n_sum(gl, gm, 5).unwrap() - want).abs() < 1e-12);
        assert!((p_n_min(gl, gm, 5).unwrap() - want).abs() < 1e-12);
        assert!((p_n_piecewise(gl, gm, 5).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn p_n_at_threshold_hits_linear_value() {
        let kappa = -0.5;
        let g = gamma_bar(4, kappa, DEFAULT_TOL).unwrap();
        let lin = (-1.0 + (1.0 - g).powi(-8)) / g;
        assert!((p_n_sum(g, kappa * g, 4).unwrap() - lin).abs() < 1e-8);
    }

    #[test]
    fn p_n_convex_limit() {
        for n in 1..8 {
            assert_eq!(p_n_sum(1.7, 0.0, n).unwrap(), 2.0 * n as f64);
            assert!((p_n_sum(1.7, -1e-12, n).unwrap() - 2.0 * n as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn nonconvex_examples() {
        let kappa = -1e-3;
        let gs = schedules::opt_const_nonconvex_asymptotic(kappa).unwrap();
        assert_eq!(r3(denom_nonconvex_const(gs, kappa, 10).unwrap().denominator), "3.542");
        let d = denom_nonconvex_const(1.8348157719908045, kappa, 10).unwrap();
        assert_eq!(r3(d.denominator), "36.999");
        let a = denom_nonconvex_const(0.7, -1e6, 4).unwrap().denominator;
        let b = denom_classical_nesterov(&[0.7; 4]).unwrap();
        assert!((a - b).abs() <= 1e-3 * b);
    }

    #[test]
    fn regime_labels() {
        let d = denom_nonconvex_const(1.5, -0.5, 7).unwrap();
        assert_eq!(d.regime.to_string(), "sublinear_0");
        let d = denom_nonconvex_const(1.95, -0.5, 4).unwrap();
        assert_eq!(d.regime, Regime::LinearL);
        assert_eq!("sublinear_12".parse::<Regime>().unwrap(), Regime::Sublinear(12));
        let json = serde_json::to_string(&Regime::LinearMu).unwrap();
        assert_eq!(json, "\"linear_mu\"");
    }

    #[test]
    fn variable_examples() {
        let sched = [0.4, 0.9, 1.0];
        let d = denom_variable(&sched, -0.3).unwrap().denominator;
        let c = denom_nonconvex_const(0.9, -0.3, 3).unwrap().denominator;
        let dc = denom_variable(&[0.9; 3], -0.3).unwrap().denominator;
        assert!((dc - c).abs() < 1e-12);
        assert!(d > 1.0);
        let conv = denom_variable(&[1.2, 1.5, 0.3], 0.0).unwrap().denominator;
        assert!((conv - (1.0 + 2.0 * 3.0)).abs() < 1e-12);
        assert!(denom_variable(&[1.7], -0.1).is_err());
        // endpoint: gamma_bar_1(-1) = sqrt 3
        let s3 = 3f64.sqrt();
        let v = denom_variable(&[s3], -1.0).unwrap().denominator - 1.0;
        let c = denom_nonconvex_const(s3, -1.0, 1).unwrap().denominator - 1.0;
        assert!((v - c).abs() < 1e-9);
    }

    #[test]
    fn dynamic_examples() {
        assert_eq!(r3(denom_dynamic_strongly_convex(0.0, 2).unwrap().denominator), "7.464");
        assert_eq!(r3(denom_dynamic_strongly_convex(1e-3, 5).unwrap().denominator), "18.784");
        let s0 = gamma_bar_1(0.3);
        let d = denom_dynamic_strongly_convex(0.3, 1).unwrap().denominator;
        assert!((d - 1.0 - s0 / (2.0 - 1.3 * s0)).abs() < 1e-15);
        assert_eq!(r3(denom_dynamic_nonconvex(-1e-3, 10).unwrap().denominator), "37.246");
        assert_eq!(r3(denom_dynamic_nonconvex(-1e-3, 1).unwrap().denominator), "3.994");
        assert_eq!(r3(denom_dynamic_nonconvex(-1e-3, 30).unwrap().denominator), "112.489");
    }

    #[test]
    fn conjectured_equivalent_matches_dynamic() {
        for n in [1, 3, 8] {
            let s = schedules::dynamic_sequence(0.0, n).unwrap();
            let a = denom_conjectured_equivalent(&s.entries, 0.0).unwrap();
            let b = denom_dynamic_strongly_convex(0.0, n).unwrap().denominator;
            assert!((a - b).abs() < 1e-9 * b);
        }
        let t = schedules::truncated_schedule(-1e-3, 10).unwrap();
        assert_eq!(r3(denom_conjectured_equivalent(&t.entries, -1e-3).unwrap()), "37.246");
        let gl = 1.3;
        let a = denom_conjectured_equivalent(&[gl], -0.2).unwrap();
        assert!((a - 1.0 - gl * p_coeff(gl, -0.2 * gl).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn classical_examples() {
        assert_eq!(denom_classical_nesterov(&[1.0; 4]).unwrap(), 5.0);
        let g = 2.0 / 3f64.sqrt();
        assert!((denom_aps(&[g]).unwrap() - 2.5396).abs() < 1e-4);
        let s3 = 3f64.sqrt();
        assert!((denom_aps(&[s3]).unwrap() - 1.0 - s3 / 2.0).abs() < 1e-12);
    }

    #[test]
    fn gap_to_fn_drops_one() {
        let d = denom_convex(1.0, 3).unwrap();
        let e = d.to_gap_fn();
        assert_eq!(e.denominator, 6.0);
        assert_eq!(e.numerator_kind, NumeratorKind::GapToFN);
    }
}
