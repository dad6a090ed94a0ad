//! Optimal constant stepsizes and the dynamic stepsize sequence `s_k(kappa)`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::rates::denom_nonconvex_const;
use crate::thresholds::{gamma_bar, gamma_bar_1, DEFAULT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Constant,
    Dynamic,
    TruncatedDynamic,
    Custom,
}

/// Normalized stepsizes `gamma_i L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepsizeSchedule {
    pub entries: Vec<f64>,
    pub kind: ScheduleKind,
}

impl StepsizeSchedule {
    pub fn constant(gl: f64, n: usize) -> Self {
        Self { entries: vec![gl; n], kind: ScheduleKind::Constant }
    }

    pub fn custom(entries: Vec<f64>) -> Self {
        Self { entries, kind: ScheduleKind::Custom }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Single value if every entry is equal.
    pub fn as_constant(&self) -> Option<f64> {
        let first = *self.entries.first()?;
        self.entries.iter().all(|&g| g == first).then_some(first)
    }
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> Result<f64> {
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Solver(format!("no sign change on [{lo}, {hi}]")));
    }
    let lo_sign = flo.signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn opt_const_convex(n: usize) -> Result<f64> {
    check_n(n)?;
    gamma_bar(n, 0.0, DEFAULT_TOL)
}

pub fn opt_const_strongly_convex(kappa: f64, n: usize) -> Result<f64> {
    check_n(n)?;
    if !(kappa > 0.0 && kappa < 1.0) {
        return domain(format!("kappa must lie in (0, 1), got {kappa}"));
    }
    gamma_bar(n, kappa, DEFAULT_TOL)
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return domain("need at least one iteration");
    }
    Ok(())
}

/// Maximizer `gamma_star(kappa)` of the one-step gain `l p(l, kappa l)` on `[1, 2)`.
pub fn opt_const_nonconvex_asymptotic(kappa: f64) -> Result<f64> {
    if !(kappa < 0.0) || !kappa.is_finite() {
        return domain(format!("gamma_star needs finite kappa < 0, got {kappa}"));
    }
    let a = 1.0 + kappa;
    let cubic = |l: f64| -kappa * a * l * l * l + (3.0 * kappa + a * a) * l * l - 4.0 * a * l + 4.0;
    bisect(1.0, 2.0, cubic)
}

/// Curvature ratio below which `gamma_star <= gamma_bar_1`.
pub fn kappa_bar() -> f64 {
    let s5 = 5f64.sqrt();
    (-9.0 - 5.0 * s5 + (190.0 + 90.0 * s5).sqrt()) / 4.0
}

/// `s(2-s)(2-kappa s) - s)/(2 - s(1+kappa))`, the left side of the defining balance.
pub fn sigma(s: f64, kappa: f64) -> f64 {
    s * ((2.0 - s) * (2.0 - kappa * s) - 1.0) / (2.0 - s * (1.0 + kappa))
}

/// Next entry of the dynamic sequence and its gap `2 - s(1+kappa)`.
///
/// The balance `sigma(s_+) + s_k/(2 - s_k(1+kappa)) = 0` is cleared of
/// denominators and solved on `(s_k, gamma_bar_inf)` in the variable that
/// vanishes at the limit: the gap itself for `kappa > 0`, `2 - s` otherwise.
fn next_dynamic(prev: f64, gap_prev: f64, kappa: f64) -> Result<(f64, f64)> {
    let c = 1.0 + kappa;
    if kappa == 0.0 {
        let s = (3.0 - 2.0 * prev + (9.0 - 4.0 * prev).sqrt()) / (2.0 * (2.0 - prev));
        return Ok((s, 2.0 - s));
    }
    // (s, 2 - s, 2 - kappa s, gap) as functions of the solver variable
    let point = |v: f64| {
        if kappa > 0.0 {
            ((2.0 - v) / c, (2.0 * kappa + v) / c, (2.0 + kappa * v) / c, v)
        } else {
            (2.0 - v, v, 2.0 - 2.0 * kappa + kappa * v, -2.0 * kappa + v * c)
        }
    };
    let balance = |v: f64| {
        let (s, two_minus_s, two_minus_ks, gap) = point(v);
        s * (two_minus_s * two_minus_ks - 1.0) * gap_prev + prev * gap
    };
    let hi = if kappa > 0.0 { gap_prev } else { 2.0 - prev };
    if !(hi > 0.0) {
        let (s, _, _, gap) = point(0.0);
        return Ok((s, gap));
    }
    let v = bisect(0.0, hi, balance)?;
    let (s, _, _, gap) = point(v);
    Ok((s, gap))
}

/// `s_0, ..., s_{n-1}` with `s_0 = gamma_bar_1(kappa)`, together with the
/// gaps `2 - s_i(1+kappa)` computed without cancellation.
pub fn dynamic_sequence_with_gaps(kappa: f64, n: usize) -> Result<(StepsizeSchedule, Vec<f64>)> {
    check_n(n)?;
    if !(kappa < 1.0) {
        return domain(format!("kappa must be < 1, got {kappa}"));
    }
    let mut entries = Vec::with_capacity(n);
    let mut gaps = Vec::with_capacity(n);
    let mut s = gamma_bar_1(kappa);
    let mut gap = 2.0 - s * (1.0 + kappa);
    entries.push(s);
    gaps.push(gap);
    while entries.len() < n {
        (s, gap) = next_dynamic(s, gap, kappa)?;
        entries.push(s);
        gaps.push(gap);
    }
    Ok((StepsizeSchedule { entries, kind: ScheduleKind::Dynamic }, gaps))
}

pub fn dynamic_sequence(kappa: f64, n: usize) -> Result<StepsizeSchedule> {
    Ok(dynamic_sequence_with_gaps(kappa, n)?.0)
}

/// Defining balance between consecutive entries, relative to
/// `1 + s_prev/gap_prev`.
pub fn dynamic_balance_residual(prev: f64, gap_prev: f64, next: f64, gap_next: f64, kappa: f64) -> f64 {
    let sigma_next = next * ((2.0 - next) * (2.0 - kappa * next) - 1.0) / gap_next;
    let term = prev / gap_prev;
    (sigma_next + term) / (1.0 + term.abs())
}

/// `min(s_i, gamma_star)` for nonconvex classes.
pub fn truncated_schedule(kappa: f64, n: usize) -> Result<StepsizeSchedule> {
    let gs = opt_const_nonconvex_asymptotic(kappa)?;
    let mut s = dynamic_sequence(kappa, n)?;
    for e in &mut s.entries {
        *e = e.min(gs);
    }
    s.kind = ScheduleKind::TruncatedDynamic;
    Ok(s)
}

fn golden_max(a: f64, b: f64, f: &impl Fn(f64) -> f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (a, b);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-10 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Maximizer of the constant-step denominator over `[1, 2)` and its value.
///
/// Each threshold cell `[gamma_bar_k, gamma_bar_{k+1})`, `k < n`, is searched by
/// golden section together with its endpoints; beyond `gamma_bar_n` the
/// denominator decreases.
pub fn opt_const_nonconvex_numeric_with_value(kappa: f64, n: usize) -> Result<(f64, f64)> {
    check_n(n)?;
    if !(kappa < 0.0) {
        return domain(format!("kappa must be < 0, got {kappa}"));
    }
    let f = |gl: f64| denom_nonconvex_const(gl, kappa, n).map(|d| d.denominator).unwrap_or(f64::NEG_INFINITY);
    let mut edges = vec![1.0];
    for k in 1..=n {
        edges.push(gamma_bar(k, kappa, DEFAULT_TOL)?);
    }
    let mut best = (1.0, f(1.0));
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        for cand in [golden_max(a, b, &f), (b, f(b))] {
            if cand.1 > best.1 {
                best = cand;
            }
        }
    }
    Ok(best)
}

pub fn opt_const_nonconvex_numeric(kappa: f64, n: usize) -> Result<f64> {
    opt_const_nonconvex_numeric_with_value(kappa, n).map(|(gl, _)| gl)
}

/// Optimal constant step for any `kappa < 1`: `gamma_bar_N` for `kappa >= 0`,
/// the numeric maximizer otherwise.
pub fn opt_const(kappa: f64, n: usize) -> Result<f64> {
    if kappa >= 0.0 {
        check_n(n)?;
        gamma_bar(n, kappa, DEFAULT_TOL)
    } else {
        opt_const_nonconvex_numeric(kappa, n)
    }
}

/// `gamma_bar_1(kappa) - gamma_star(kappa)`, positive above `kappa_bar`.
pub fn gamma_star_margin(kappa: f64) -> Result<f64> {
    Ok(gamma_bar_1(kappa) - opt_const_nonconvex_asymptotic(kappa)?)
}
