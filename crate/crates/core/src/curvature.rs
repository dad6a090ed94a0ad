//! Function class `F_{mu,L}`, normalized step scalars and the elementary
//! functions `E_k`, `T_k` and `p` that every rate formula is built from.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Largest `k` accepted by [`e_k`] and [`t_k`].
pub const K_MAX: usize = 1_000_000;

/// Curvature class with upper curvature `L > 0` and lower curvature `mu < L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawClass", into = "RawClass")]
pub struct CurvatureClass {
    mu: f64,
    l_upper: f64,
    kappa: f64,
}

#[derive(Serialize, Deserialize)]
struct RawClass {
    mu: f64,
    #[serde(rename = "L")]
    l_upper: f64,
}

impl TryFrom<RawClass> for CurvatureClass {
    type Error = Error;
    fn try_from(raw: RawClass) -> Result<Self> {
        CurvatureClass::new(raw.mu, raw.l_upper)
    }
}

impl From<CurvatureClass> for RawClass {
    fn from(c: CurvatureClass) -> Self {
        RawClass { mu: c.mu, l_upper: c.l_upper }
    }
}

impl CurvatureClass {
    pub fn new(mu: f64, l_upper: f64) -> Result<Self> {
        if !(l_upper.is_finite() && l_upper > 0.0) {
            return domain(format!("upper curvature must be positive and finite, got {l_upper}"));
        }
        if !mu.is_finite() {
            return domain("lower curvature must be finite");
        }
        if mu >= l_upper {
            return domain(format!("need mu < L, got mu = {mu}, L = {l_upper}"));
        }
        let kappa = mu / l_upper;
        debug_assert!((kappa * l_upper - mu).abs() <= 1e-12 * (1.0 + mu.abs()));
        Ok(Self { mu, l_upper, kappa })
    }

    /// Class with `L = 1` and `mu = kappa`.
    pub fn from_kappa(kappa: f64) -> Result<Self> {
        Self::new(kappa, 1.0)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn l_upper(&self) -> f64 {
        self.l_upper
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Lipschitz constant of the gradient.
    pub fn lipschitz(&self) -> f64 {
        self.l_upper.max(-self.mu)
    }

    pub fn step(&self, gl: f64) -> NormalizedStep {
        NormalizedStep::new(gl, self.kappa)
    }
}

/// Per-step scalars `(gamma L, gamma mu, 1 - gamma L, 1 - gamma mu)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedStep {
    pub gl: f64,
    pub gm: f64,
    pub rho: f64,
    pub eta: f64,
}

impl NormalizedStep {
    pub fn new(gl: f64, kappa: f64) -> Self {
        let gm = kappa * gl;
        Self { gl, gm, rho: 1.0 - gl, eta: 1.0 - gm }
    }
}

/// `x^(-n)` by repeated squaring of the reciprocal.
pub(crate) fn pow_neg(x: f64, n: usize) -> f64 {
    let r = 1.0 / x;
    match i32::try_from(n) {
        Ok(n) => r.powi(n),
        Err(_) => r.powf(n as f64),
    }
}

fn check_k(k: usize) -> Result<()> {
    if k > K_MAX {
        return domain(format!("k = {k} exceeds the cap {K_MAX}"));
    }
    Ok(())
}

/// `E_k(x) = sum_{j=1}^{2k} x^(-j)`, with `E_0 = 0`.
pub fn e_k(x: f64, k: usize) -> Result<f64> {
    check_k(k)?;
    if x == 0.0 || !x.is_finite() {
        return domain(format!("E_k needs a finite nonzero argument, got {x}"));
    }
    if k == 0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(2.0 * k as f64);
    }
    if (1.0 - x).abs() <= 1e-8 {
        let r = 1.0 / x;
        let mut term = 1.0;
        let mut sum = 0.0;
        for _ in 0..2 * k {
            term *= r;
            sum += term;
        }
        return Ok(sum);
    }
    Ok((-1.0 + pow_neg(x, 2 * k)) / (1.0 - x))
}

/// `E_k(x) - E_k(y)`, keeping the sign when both terms overflow.
fn e_diff(x: f64, y: f64, k: usize) -> Result<f64> {
    let ex = e_k(x, k)?;
    let ey = e_k(y, k)?;
    let d = ex - ey;
    if d.is_finite() || !(ex.is_infinite() && ey.is_infinite()) {
        return Ok(d);
    }
    // both overflowed: compare in log scale
    let two_k = 2.0 * k as f64;
    let ax = -two_k * x.abs().ln();
    let ay = -two_k * y.abs().ln();
    let m = ax.max(ay);
    let sx = ((ax - m).exp() - (-m).exp()) / (1.0 - x);
    let sy = ((ay - m).exp() - (-m).exp()) / (1.0 - y);
    let s = sx - sy;
    Ok(if s == 0.0 { 0.0 } else { s.signum() * f64::INFINITY })
}

/// `T_k(gl, kappa) = E_k(1 - kappa gl) - E_k(1 - gl)`; `T_0 = 0`.
pub fn t_k(gl: f64, kappa: f64, k: usize) -> Result<f64> {
    check_k(k)?;
    if k == 0 {
        return Ok(0.0);
    }
    if !(gl > 0.0 && gl.is_finite()) {
        return domain(format!("T_k needs gl > 0, got {gl}"));
    }
    if gl == 1.0 {
        return domain("T_k is undefined at gl = 1 for k >= 1");
    }
    let s = NormalizedStep::new(gl, kappa);
    e_diff(s.eta, s.rho, k)
}

/// Coefficient `p(l, u) = 2 - (-l u) / (1 - u - |1 - l|)`.
pub fn p_coeff(l: f64, u: f64) -> Result<f64> {
    if !(l > 0.0 && l < 2.0) {
        return domain(format!("p needs l in (0, 2), got {l}"));
    }
    if u >= l {
        return domain(format!("p needs u < l, got u = {u}, l = {l}"));
    }
    let den = 1.0 - u - (1.0 - l).abs();
    if den <= 0.0 {
        return domain(format!("step beyond the stability range: 2 - l - u = {den}"));
    }
    Ok(2.0 - (-l * u) / den)
}

/// `l p(l, u)`, the per-step gain in the one-step rates.
pub(crate) fn step_gain(l: f64, u: f64) -> Result<f64> {
    Ok(l * p_coeff(l, u)?)
}
