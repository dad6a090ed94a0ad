//! Worst-case instances attaining the constant and variable stepsize rates,
//! as analytic functions or as triplet sets.

use serde::{Deserialize, Serialize};

use crate::curvature::{step_gain, t_k, CurvatureClass, NormalizedStep};
use crate::error::{domain, Error, Result};
use crate::interpolation::{dot, norm2, Triplet, TripletSet};
use crate::rates::{denom_const, denom_nonconvex_const, denom_variable, RateBound, Regime};
use crate::schedules::StepsizeSchedule;
use crate::thresholds::{gamma_bar, gamma_bar_1, n_bar, DEFAULT_TOL};

/// Quadratic piece `v + s (x - r) + (c/2)(x - r)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub curvature: f64,
    pub slope_at_ref: f64,
    pub value_at_ref: f64,
    #[serde(rename = "ref")]
    pub reference: f64,
}

impl Segment {
    fn eval(&self, x: f64) -> (f64, f64) {
        let d = x - self.reference;
        (
            self.value_at_ref + self.slope_at_ref * d + 0.5 * self.curvature * d * d,
            self.slope_at_ref + self.curvature * d,
        )
    }
}

/// C^1 piecewise quadratic on the line; segment `k` covers
/// `[breakpoints[k-1], breakpoints[k]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piecewise1D {
    pub breakpoints: Vec<f64>,
    pub segments: Vec<Segment>,
}

impl Piecewise1D {
    pub fn new(breakpoints: Vec<f64>, segments: Vec<Segment>) -> Result<Self> {
        if segments.len() != breakpoints.len() + 1 {
            return Err(Error::Input("need one more segment than breakpoints".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Input("breakpoints must be sorted".into()));
        }
        Ok(Self { breakpoints, segments })
    }

    pub fn eval(&self, x: f64) -> (f64, f64) {
        let k = self.breakpoints.partition_point(|&b| b < x);
        self.segments[k].eval(x)
    }

    /// Largest value or slope mismatch between neighbouring segments.
    pub fn continuity_defect(&self) -> f64 {
        self.breakpoints
            .iter()
            .enumerate()
            .map(|(k, &b)| {
                let (fl, gl) = self.segments[k].eval(b);
                let (fr, gr) = self.segments[k + 1].eval(b);
                (fl - fr).abs().max((gl - gr).abs())
            })
            .fold(0.0, f64::max)
    }
}

/// `L x^2/2` for `|x| <= tau`, `mu x^2/2 + (L - mu) tau |x| - (L - mu) tau^2/2` outside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HuberQuadratic {
    pub tau: f64,
    pub mu: f64,
    #[serde(rename = "L")]
    pub l_upper: f64,
}

impl HuberQuadratic {
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let (l, mu, tau) = (self.l_upper, self.mu, self.tau);
        if x.abs() <= tau {
            (0.5 * l * x * x, l * x)
        } else {
            let s = x.signum();
            (
                0.5 * mu * x * x + (l - mu) * tau * x.abs() - 0.5 * (l - mu) * tau * tau,
                mu * x + (l - mu) * tau * s,
            )
        }
    }
}

/// `x^T diag(h) x / 2 + b^T x + c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quadratic {
    pub hess_diag: Vec<f64>,
    pub linear: Vec<f64>,
    pub offset: f64,
}

impl Quadratic {
    pub fn eval(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let g: Vec<f64> = x.iter().zip(&self.hess_diag).zip(&self.linear).map(|((x, h), b)| h * x + b).collect();
        let f = x
            .iter()
            .zip(&self.hess_diag)
            .zip(&self.linear)
            .map(|((x, h), b)| 0.5 * h * x * x + b * x)
            .sum::<f64>()
            + self.offset;
        (f, g)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Piecewise1d(Piecewise1D),
    HuberQuadratic(HuberQuadratic),
    Quadratic(Quadratic),
    Triplets { triplets: TripletSet },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseInstance {
    pub class: CurvatureClass,
    pub schedule: StepsizeSchedule,
    pub gap: f64,
    pub payload: Payload,
    pub x0: Vec<f64>,
    pub expected_denominator: f64,
    pub regime: Regime,
    pub conjectured: bool,
}

impl WorstCaseInstance {
    pub fn n(&self) -> usize {
        self.schedule.len()
    }

    pub fn bound(&self) -> RateBound {
        RateBound::new(self.expected_denominator, self.regime)
    }
}

/// Value and gradient of an analytic payload.
pub fn eval_value_and_grad(payload: &Payload, x: &[f64]) -> Result<(f64, Vec<f64>)> {
    let one_d = |x: &[f64]| {
        if x.len() == 1 {
            Ok(x[0])
        } else {
            Err(Error::Input(format!("payload is one dimensional, got {} coordinates", x.len())))
        }
    };
    match payload {
        Payload::Piecewise1d(p) => {
            let (f, g) = p.eval(one_d(x)?);
            Ok((f, vec![g]))
        }
        Payload::HuberQuadratic(h) => {
            let (f, g) = h.eval(one_d(x)?);
            Ok((f, vec![g]))
        }
        Payload::Quadratic(q) => {
            if x.len() != q.hess_diag.len() {
                return Err(Error::Input("dimension mismatch with quadratic payload".into()));
            }
            Ok(q.eval(x))
        }
        Payload::Triplets { .. } => Err(Error::Input("triplet payloads have no oracle".into())),
    }
}

fn check_gap(gap: f64) -> Result<()> {
    if !(gap > 0.0 && gap.is_finite()) {
        return domain(format!("gap must be positive, got {gap}"));
    }
    Ok(())
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return domain("need at least one iteration");
    }
    Ok(())
}

/// `f_0 - f_N` when `f_N - f* = |g_N|^2/(2L)` and the bound is tight.
fn gap_n(gap: f64, denom: f64) -> f64 {
    gap * (denom - 1.0) / denom
}

fn linear_quadratic(cls: &CurvatureClass, gl: f64, n: usize, gap: f64, bound: RateBound) -> WorstCaseInstance {
    let l = cls.l_upper();
    WorstCaseInstance {
        class: *cls,
        schedule: StepsizeSchedule::constant(gl, n),
        gap,
        payload: Payload::Quadratic(Quadratic { hess_diag: vec![l], linear: vec![0.0], offset: 0.0 }),
        x0: vec![(2.0 * gap / l).sqrt()],
        expected_denominator: bound.denominator,
        regime: bound.regime,
        conjectured: false,
    }
}

fn huber(cls: &CurvatureClass, gl: f64, n: usize, gap: f64, bound: RateBound) -> WorstCaseInstance {
    let (l, mu) = (cls.l_upper(), cls.mu());
    let tau = (2.0 * gap / (l * bound.denominator)).sqrt();
    let b = (l - mu) * tau;
    let c = gap + 0.5 * (l - mu) * tau * tau;
    let x0 = 2.0 * c / (b + (b * b + 2.0 * mu * c).sqrt());
    WorstCaseInstance {
        class: *cls,
        schedule: StepsizeSchedule::constant(gl, n),
        gap,
        payload: Payload::HuberQuadratic(HuberQuadratic { tau, mu, l_upper: l }),
        x0: vec![x0],
        expected_denominator: bound.denominator,
        regime: bound.regime,
        conjectured: false,
    }
}

/// Convex class: Huber-type function below `gamma_bar_N(0)`, `L x^2/2` above.
pub fn wc_convex(l_upper: f64, gl: f64, n: usize, gap: f64) -> Result<WorstCaseInstance> {
    let cls = CurvatureClass::new(0.0, l_upper)?;
    convex_like(&cls, gl, n, gap)
}

/// Strongly convex class: `f_{1,tau}` below `gamma_bar_N(kappa)`, `L x^2/2` above.
pub fn wc_strongly_convex(cls: &CurvatureClass, gl: f64, n: usize, gap: f64) -> Result<WorstCaseInstance> {
    if !(cls.kappa() > 0.0) {
        return domain("strongly convex instance needs mu > 0");
    }
    convex_like(cls, gl, n, gap)
}

fn convex_like(cls: &CurvatureClass, gl: f64, n: usize, gap: f64) -> Result<WorstCaseInstance> {
    check_gap(gap)?;
    check_n(n)?;
    let bound = denom_const(gl, cls.kappa(), n)?;
    Ok(if bound.regime == Regime::LinearL {
        linear_quadratic(cls, gl, n, gap, bound)
    } else {
        huber(cls, gl, n, gap, bound)
    })
}

/// Constant-step bound when every step is equal, variable-step bound otherwise.
fn short_or_mid_bound(schedule: &[f64], kappa: f64) -> Result<RateBound> {
    let var = denom_variable(schedule, kappa)?;
    if schedule.iter().all(|&s| s == schedule[0]) {
        let c = denom_nonconvex_const(schedule[0], kappa, schedule.len())?;
        if (c.denominator - var.denominator).abs() <= 1e-12 * var.denominator {
            return Ok(c);
        }
    }
    Ok(var)
}

/// Nonconvex class, short steps `gl_i in (0, 1]`: piecewise quadratic with
/// gradient `U` at every iterate.
pub fn wc_nonconvex_short(cls: &CurvatureClass, schedule: &[f64], gap: f64) -> Result<WorstCaseInstance> {
    check_gap(gap)?;
    let (l, mu, kappa) = (cls.l_upper(), cls.mu(), cls.kappa());
    if !(kappa < 0.0) {
        return domain("short-step instance needs mu < 0");
    }
    if schedule.is_empty() || schedule.iter().any(|&s| !(s > 0.0 && s <= 1.0)) {
        return domain("short-step instance needs steps in (0, 1]");
    }
    let bound = short_or_mid_bound(schedule, kappa)?;
    let n = schedule.len();
    let u = (2.0 * l * gap / bound.denominator).sqrt();
    let mut x = vec![0.0; n + 1];
    for i in (0..n).rev() {
        x[i] = x[i + 1] + schedule[i] / l * u;
    }
    // pieces from the left; values follow from continuity starting at f_N = 0
    let mut breakpoints = Vec::with_capacity(2 * n);
    let mut segments = Vec::with_capacity(2 * n + 1);
    let mut cur = Segment { curvature: l, slope_at_ref: u, value_at_ref: 0.0, reference: x[n] };
    segments.push(cur);
    breakpoints.push(x[n]);
    cur = Segment { curvature: mu, ..cur };
    for i in (0..n).rev() {
        let xbar = x[i] + mu / (l - mu) * schedule[i] / l * u;
        segments.push(cur);
        breakpoints.push(xbar);
        let (fb, _) = cur.eval(xbar);
        let (dv, _) = Segment { curvature: l, slope_at_ref: u, value_at_ref: 0.0, reference: x[i] }.eval(xbar);
        let f_i = fb - dv;
        let lpiece = Segment { curvature: l, slope_at_ref: u, value_at_ref: f_i, reference: x[i] };
        if i > 0 {
            segments.push(lpiece);
            breakpoints.push(x[i]);
            cur = Segment { curvature: mu, ..lpiece };
        } else {
            segments.push(lpiece);
        }
    }
    let pw = Piecewise1D::new(breakpoints, segments)?;
    Ok(WorstCaseInstance {
        class: *cls,
        schedule: StepsizeSchedule::custom(schedule.to_vec()),
        gap,
        payload: Payload::Piecewise1d(pw),
        x0: vec![x[0]],
        expected_denominator: bound.denominator,
        regime: bound.regime,
        conjectured: false,
    })
}

fn triplets_from(xs: Vec<Vec<f64>>, gs: Vec<Vec<f64>>, fs: Vec<f64>) -> Result<TripletSet> {
    let items = xs
        .into_iter()
        .zip(gs)
        .zip(fs)
        .map(|((x, g), f)| Triplet::new(x, g, f))
        .collect::<Result<Vec<_>>>()?;
    TripletSet::new(items)
}

/// Points from gradients: `x_N = 0`, `x_i = x_{i+1} + gamma_i g_i`.
fn points_backward(gs: &[Vec<f64>], steps: &[f64], l: f64) -> Vec<Vec<f64>> {
    let n = steps.len();
    let dim = gs[0].len();
    let mut xs = vec![vec![0.0; dim]; n + 1];
    for i in (0..n).rev() {
        xs[i] = xs[i + 1].iter().zip(&gs[i]).map(|(x, g)| x + steps[i] / l * g).collect();
    }
    xs
}

fn check_nonconvex(cls: &CurvatureClass) -> Result<()> {
    if !(cls.kappa() < 0.0) {
        return domain("instance needs mu < 0");
    }
    Ok(())
}

fn check_mid_step(gl: f64, kappa: f64) -> Result<()> {
    if !(gl >= 1.0 && gl <= gamma_bar_1(kappa) * (1.0 + 1e-14)) {
        return domain(format!("step {gl} outside [1, gamma_bar_1]"));
    }
    Ok(())
}

/// `(1 + rho eta)/(eta + rho)`, the cosine between consecutive gradients.
fn mid_cosine(gl: f64, kappa: f64) -> f64 {
    let s = NormalizedStep::new(gl, kappa);
    (1.0 + s.rho * s.eta) / (s.eta + s.rho)
}

/// Nonconvex class, constant `gl in [1, gamma_bar_1]`: 2D triplets with
/// alternating second gradient component.
pub fn wc_nonconvex_mid(cls: &CurvatureClass, gl: f64, n: usize, gap: f64) -> Result<WorstCaseInstance> {
    check_gap(gap)?;
    check_n(n)?;
    check_nonconvex(cls)?;
    let kappa = cls.kappa();
    check_mid_step(gl, kappa)?;
    let steps = vec![gl; n];
    let bound = short_or_mid_bound(&steps, kappa)?;
    let l = cls.l_upper();
    let c = mid_cosine(gl, kappa).min(1.0);
    let u = (2.0 * l * gap / bound.denominator).sqrt();
    let (a, b) = (((1.0 + c) / 2.0).sqrt(), ((1.0 - c) / 2.0).sqrt());
    let gs: Vec<Vec<f64>> = (0..=n).map(|i| vec![u * a, if i % 2 == 0 { u * b } else { -u * b }]).collect();
    let xs = points_backward(&gs, &steps, l);
    let gn = gap_n(gap, bound.denominator);
    let fs = (0..=n).map(|i| gn * (1.0 - i as f64 / n as f64)).collect();
    Ok(WorstCaseInstance {
        class: *cls,
        schedule: StepsizeSchedule::constant(gl, n),
        gap,
        x0: xs[0].clone(),
        payload: Payload::Triplets { triplets: triplets_from(xs, gs, fs)? },
        expected_denominator: bound.denominator,
        regime: bound.regime,
        conjectured: false,
    })
}

fn rotate(g: &[f64], theta: f64) -> Vec<f64> {
    let (s, c) = theta.sin_cos();
    vec![c * g[0] - s * g[1], s * g[0] + c * g[1]]
}

/// Nonconvex class, variable steps in `[1, gamma_bar_1]`: gradients rotated
/// by alternating angles `arccos c_i`. Conjectured tight.
pub fn wc_nonconvex_mid_variable(cls: &CurvatureClass, schedule: &[f64], gap: f64) -> Result<WorstCaseInstance> {
    check_gap(gap)?;
    check_nonconvex(cls)?;
    if schedule.is_empty() {
        return domain("empty schedule");
    }
    let kappa = cls.kappa();
    for &s in schedule {
        check_mid_step(s, kappa)?;
    }
    let n = schedule.len();
    let l = cls.l_upper();
    let bound = denom_variable(schedule, kappa)?;
    let u = (2.0 * l * gap / bound.denominator).sqrt();
    let theta: Vec<f64> = schedule.iter().map(|&s| mid_cosine(s, kappa).min(1.0).acos()).collect();
    let mut gs = vec![vec![u * (theta[0] / 2.0).cos(), -u * (theta[0] / 2.0).sin()]];
    for i in 0..n {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let next = rotate(&gs[i], sign * theta[i]);
        gs.push(next);
    }
    let xs = points_backward(&gs, schedule, l);
    let mut fs = vec![0.0; n + 1];
    for i in (0..n).rev() {
        fs[i] = fs[i + 1] + step_gain(schedule[i], kappa * schedule[i])? * u * u / (2.0 * l);
    }
    Ok(WorstCaseInstance {
        class: *cls,
        schedule: StepsizeSchedule::custom(schedule.to_vec()),
        gap,
        x0: xs[0].clone(),
        payload: Payload::Triplets { triplets: triplets_from(xs, gs, fs)? },
        expected_denominator: bound.denominator,
        regime: bound.regime,
        conjectured: true,
    })
}

fn head_gradient(k: f64, rho: f64, eta: f64, i: usize, nb: usize) -> [f64; 2] {
    let e = i as i32 - nb as i32;
    [k * rho.powi(e) / (1.0 - rho * rho).sqrt(), k * eta.powi(e) / (eta * eta - 1.0).sqrt()]
}

/// `-l u/(l - u)` with `u = kappa l`.
fn c_prime(gl: f64, kappa: f64) -> f64 {
    let gm = kappa * gl;
    -gl * gm / (gl - gm)
}

/// Nonconvex class, `gl in [gamma_bar_{N-1}, gamma_bar_N)`: quadratic with
/// curvatures `(L, mu)` and `grad f(x_N) = g_N`.
pub fn wc_quadratic_2d(cls: &CurvatureClass, gl: f64, n: usize, gap: f64) -> Result<WorstCaseInstance> {
    check_gap(gap)?;
    check_n(n)?;
    check_nonconvex(cls)?;
    let kappa = cls.kappa();
    let lo = gamma_bar(n - 1, kappa, DEFAULT_TOL)?;
    let hi = gamma_bar(n, kappa, DEFAULT_TOL)?;
    if !(gl >= lo && gl < hi && gl > 1.0) {
        return domain(format!("step {gl} outside [gamma_bar_{}, gamma_bar_{n}) = [{lo}, {hi})", n - 1));
    }
    let (l, mu) = (cls.l_upper(), cls.mu());
    let s = NormalizedStep::new(gl, kappa);
    let bound = denom_nonconvex_const(gl, kappa, n)?;
    let u = (2.0 * l * gap / bound.denominator).sqrt();
    let nu = (s.eta * s.eta - 1.0) * (1.0 - s.rho * s.rho) / (s.eta * s.eta - s.rho * s.rho);
    let gn = head_gradient(u * nu.sqrt(), s.rho, s.eta, n, n - 1);
    let gamma = gl / l;
    let mut x = vec![0.0, 0.0];
    for _ in 0..n {
        x = vec![(x[0] + gamma * gn[0]) / s.rho, (x[1] + gamma * gn[1]) / s.eta];
    }
    Ok(WorstCaseInstance {
        class: *cls,
        schedule: StepsizeSchedule::constant(gl, n),
        gap,
        payload: Payload::Quadratic(Quadratic { hess_diag: vec![l, mu], linear: gn.to_vec(), offset: 0.0 }),
        x0: x,
        expected_denominator: bound.denominator,
        regime: bound.regime,
        conjectured: false,
    })
}

/// Linear regime `gl in [gamma_bar_N, 2)`: `L |x|^2/2` with `f(x_0) = gap`.
pub fn wc_linear_regime(cls: &CurvatureClass, gl: f64, n: usize, gap: f64) -> Result<WorstCaseInstance> {
    check_gap(gap)?;
    check_n(n)?;
    let bound = denom_const(gl, cls.kappa(), n)?;
    if bound.regime != Regime::LinearL {
        return domain(format!("step {gl} is below gamma_bar_{n}"));
    }
    Ok(linear_quadratic(cls, gl, n, gap, bound))
}

/// Sign of the off-diagonal entries of the rotation in the 3D construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RotationSign {
    Upper,
    Lower,
}

/// Nonconvex class, `gl in [gamma_bar_1, gamma_bar_{N-1})`: 3D triplets.
/// Conjectured tight.
pub fn wc_conjectured_3d(cls: &CurvatureClass, gl: f64, n: usize, gap: f64) -> Result<WorstCaseInstance> {
    wc_conjectured_3d_signed(cls, gl, n, gap, RotationSign::Upper)
}

pub fn wc_conjectured_3d_signed(
    cls: &CurvatureClass,
    gl: f64,
    n: usize,
    gap: f64,
    sign: RotationSign,
) -> Result<WorstCaseInstance> {
    check_gap(gap)?;
    check_nonconvex(cls)?;
    if n < 2 {
        return domain("3D construction needs N >= 2");
    }
    let kappa = cls.kappa();
    let lo = gamma_bar_1(kappa);
    let hi = gamma_bar(n - 1, kappa, DEFAULT_TOL)?;
    if !(gl >= lo && gl < hi) {
        return domain(format!("step {gl} outside [gamma_bar_1, gamma_bar_{}) = [{lo}, {hi})", n - 1));
    }
    let l = cls.l_upper();
    let s = NormalizedStep::new(gl, kappa);
    let (rho, eta) = (s.rho, s.eta);
    let nb = n_bar(gl, kappa, n)?;
    let bound = denom_nonconvex_const(gl, kappa, n)?;
    let u = (2.0 * l * gap / bound.denominator).sqrt();
    let nu = (eta * eta - 1.0) * (1.0 - rho * rho) / (eta * eta - rho * rho);
    let k = u * nu.sqrt();
    let mut gs: Vec<Vec<f64>> = (0..=nb + 1)
        .map(|i| {
            let [a, b] = head_gradient(k, rho, eta, i, nb);
            vec![a, b, 0.0]
        })
        .collect();
    let sgn = if sign == RotationSign::Upper { 1.0 } else { -1.0 };
    for i in nb + 1..n {
        let m = (i - nb) as i32;
        let alt = if (i - nb - 1) % 2 == 0 { 1.0 } else { -1.0 };
        let q = alt * ((eta * eta - 1.0) * (1.0 - rho.powi(2 * m)) / (1.0 - rho * rho)).sqrt();
        let g = &gs[i];
        let den = 1.0 + q * q;
        let r1 = (g[1] - sgn * q * g[2]) / den;
        let r2 = (sgn * q * g[1] + g[2]) / den;
        let next = vec![rho * g[0], rho * g[1] + (eta - rho) * r1, rho * g[2] + (eta - rho) * r2];
        gs.push(next);
    }
    let steps = vec![gl; n];
    let xs = points_backward(&gs, &steps, l);
    let cp = c_prime(gl, kappa);
    let ts: Vec<f64> = (0..=nb).map(|j| t_k(gl, kappa, j)).collect::<Result<_>>()?;
    let partial = |m: usize| ts[1..=m].iter().sum::<f64>();
    let den = n as f64 - cp * partial(nb);
    let gn = gap_n(gap, bound.denominator);
    let fs = (0..=n)
        .map(|i| gn * (n as f64 - i as f64 - cp * partial(nb.saturating_sub(i))) / den)
        .collect();
    Ok(WorstCaseInstance {
        class: *cls,
        schedule: StepsizeSchedule::constant(gl, n),
        gap,
        x0: xs[0].clone(),
        payload: Payload::Triplets { triplets: triplets_from(xs, gs, fs)? },
        expected_denominator: bound.denominator,
        regime: bound.regime,
        conjectured: true,
    })
}

/// Maximum deviations of the equality identities satisfied by a tight
/// constant-step nonconvex trajectory with `gl in (1, gamma_bar_N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NecCondsReport {
    pub n_bar: usize,
    pub head_norms: f64,
    pub tail_norms: f64,
    pub inner_products: f64,
    pub distance_two: f64,
    pub function_values: f64,
    /// Whether `N` attains `min_i f_i - |g_i|^2/(2L)`.
    pub argmin_at_n: bool,
    pub max_deviation: f64,
}

impl NecCondsReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.argmin_at_n && self.max_deviation < tol
    }
}

/// Checks the identities relative to `U^2 = |g_N|^2` and `f_0 - f_N`.
pub fn check_nec_conds_3d(set: &TripletSet, cls: &CurvatureClass, gl: f64, n: usize) -> Result<NecCondsReport> {
    if set.len() != n + 1 {
        return Err(Error::Input(format!("need {} triplets, got {}", n + 1, set.len())));
    }
    let kappa = cls.kappa();
    if !(kappa < 0.0 && gl > 1.0) {
        return domain("identities need mu < 0 and gl > 1");
    }
    let t = set.items();
    let s = NormalizedStep::new(gl, kappa);
    let (rho, eta) = (s.rho, s.eta);
    let nb = n_bar(gl, kappa, n)?;
    if nb >= n {
        return domain(format!("step {gl} is beyond gamma_bar_{n}"));
    }
    let u2 = norm2(&t[n].g);
    let nu = (eta * eta - 1.0) * (1.0 - rho * rho) / (eta * eta - rho * rho);
    let head = |e: i32| u2 * nu * (eta.powi(e) / (eta * eta - 1.0) + rho.powi(e) / (1.0 - rho * rho));
    let rel = |a: f64, b: f64| (a - b).abs() / u2;
    let mut rep = NecCondsReport {
        n_bar: nb,
        head_norms: 0.0,
        tail_norms: 0.0,
        inner_products: 0.0,
        distance_two: 0.0,
        function_values: 0.0,
        argmin_at_n: false,
        max_deviation: 0.0,
    };
    let tail_c = (1.0 + eta * rho) / (eta + rho);
    for i in 0..=n {
        let e = 2 * (i as i32 - nb as i32);
        let sq = norm2(&t[i].g);
        if i >= nb {
            rep.tail_norms = rep.tail_norms.max(rel(sq, u2));
        } else {
            rep.head_norms = rep.head_norms.max(rel(sq, head(e)));
        }
        if i < n {
            let ip = dot(&t[i].g, &t[i + 1].g);
            let want = if i >= nb { u2 * tail_c } else { head(e + 1) };
            rep.inner_products = rep.inner_products.max(rel(ip, want));
        }
        if i < nb && i + 2 <= n {
            let ip = dot(&t[i].g, &t[i + 2].g);
            rep.distance_two = rep.distance_two.max(rel(ip, norm2(&t[i + 1].g)));
        }
    }
    let cp = c_prime(gl, kappa);
    let ts: Vec<f64> = (0..=nb).map(|j| t_k(gl, kappa, j)).collect::<Result<_>>()?;
    let partial = |m: usize| ts[1..=m].iter().sum::<f64>();
    let den = n as f64 - cp * partial(nb);
    let total = t[0].f - t[n].f;
    for i in 0..=n {
        let want = (n as f64 - i as f64 - cp * partial(nb.saturating_sub(i))) / den;
        let dev = ((t[i].f - t[n].f) / total - want).abs();
        rep.function_values = rep.function_values.max(dev);
    }
    let l = cls.l_upper();
    let vals: Vec<f64> = t.iter().map(|x| x.f - norm2(&x.g) / (2.0 * l)).collect();
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    rep.argmin_at_n = vals[n] <= min + 1e-12 * (1.0 + min.abs());
    rep.max_deviation = [rep.head_norms, rep.tail_norms, rep.inner_products, rep.distance_two, rep.function_values]
        .into_iter()
        .fold(0.0, f64::max);
    Ok(rep)
}

/// Instance attaining the constant-step rate at `(kappa, gl, N)`.
pub fn select_worst_case(cls: &CurvatureClass, gl: f64, n: usize, gap: f64) -> Result<WorstCaseInstance> {
    check_n(n)?;
    let kappa = cls.kappa();
    if kappa >= 0.0 {
        return convex_like(cls, gl, n, gap);
    }
    if !(gl > 0.0 && gl < 2.0) {
        return domain(format!("gl = {gl} outside (0, 2)"));
    }
    if gl <= 1.0 {
        return wc_nonconvex_short(cls, &vec![gl; n], gap);
    }
    let g1 = gamma_bar_1(kappa);
    if gl < g1 {
        return wc_nonconvex_mid(cls, gl, n, gap);
    }
    if denom_const(gl, kappa, n)?.regime == Regime::LinearL {
        return wc_linear_regime(cls, gl, n, gap);
    }
    if n >= 2 && gl < gamma_bar(n - 1, kappa, DEFAULT_TOL)? {
        return wc_conjectured_3d(cls, gl, n, gap);
    }
    wc_quadratic_2d(cls, gl, n, gap)
}
