//! `F_{mu,L}`-interpolation conditions on triplet sets, the optimal value
//! implied by a set, and numeric residuals of the descent lemmas.

use serde::{Deserialize, Serialize};

use crate::curvature::{e_k, t_k, CurvatureClass, NormalizedStep};
use crate::error::{Error, Result};
use crate::thresholds::{gamma_bar_inf, n_bar};

/// Point, gradient and function value.
#[derive(Debug, Clone, PartialEq)]
pub struct Triplet {
    pub x: Vec<f64>,
    pub g: Vec<f64>,
    pub f: f64,
}

impl Triplet {
    pub fn new(x: Vec<f64>, g: Vec<f64>, f: f64) -> Result<Self> {
        if x.is_empty() || x.len() != g.len() {
            return Err(Error::Input(format!(
                "point and gradient dimensions differ or are zero: {} vs {}",
                x.len(),
                g.len()
            )));
        }
        Ok(Self { x, g, f })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TripletRecord {
    index: usize,
    x: Vec<f64>,
    g: Vec<f64>,
    f: f64,
}

/// Indexed triplets of a common dimension, serialized as a list of
/// `{index, x, g, f}` records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<TripletRecord>", into = "Vec<TripletRecord>")]
pub struct TripletSet {
    items: Vec<Triplet>,
    dimension: usize,
}

impl TryFrom<Vec<TripletRecord>> for TripletSet {
    type Error = Error;
    fn try_from(mut recs: Vec<TripletRecord>) -> Result<Self> {
        recs.sort_by_key(|r| r.index);
        for (k, r) in recs.iter().enumerate() {
            if r.index != k {
                return Err(Error::Input(format!("indices must be 0..{}, found {}", recs.len(), r.index)));
            }
        }
        let items = recs
            .into_iter()
            .map(|r| Triplet::new(r.x, r.g, r.f))
            .collect::<Result<Vec<_>>>()?;
        TripletSet::new(items)
    }
}

impl From<TripletSet> for Vec<TripletRecord> {
    fn from(s: TripletSet) -> Self {
        s.items
            .into_iter()
            .enumerate()
            .map(|(index, t)| TripletRecord { index, x: t.x, g: t.g, f: t.f })
            .collect()
    }
}

impl TripletSet {
    pub fn new(items: Vec<Triplet>) -> Result<Self> {
        let dimension = items.first().map(Triplet::dim).ok_or_else(|| Error::Input("empty triplet set".into()))?;
        if let Some((i, _)) = items.iter().enumerate().find(|(_, t)| t.dim() != dimension) {
            return Err(Error::Input(format!("triplet {i} has dimension != {dimension}")));
        }
        Ok(Self { items, dimension })
    }

    pub fn items(&self) -> &[Triplet] {
        &self.items
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: Triplet) -> Result<()> {
        if t.dim() != self.dimension {
            return Err(Error::Input(format!("triplet dimension {} != {}", t.dim(), self.dimension)));
        }
        self.items.push(t);
        Ok(())
    }

    /// Mutable view used for perturbation tests.
    pub fn items_mut(&mut self) -> &mut [Triplet] {
        &mut self.items
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a)
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn check_pair(a: &Triplet, b: &Triplet) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::Input(format!("dimension mismatch: {} vs {}", a.dim(), b.dim())));
    }
    Ok(())
}

/// `f_a - f_b - <g_b, x_a - x_b> - |g_a - g_b|^2/(2L)
///  - mu/(2L(L-mu)) |g_a - g_b - L(x_a - x_b)|^2`.
pub fn interp_residual(a: &Triplet, b: &Triplet, cls: &CurvatureClass) -> Result<f64> {
    check_pair(a, b)?;
    let (l, mu) = (cls.l_upper(), cls.mu());
    let dx = diff(&a.x, &b.x);
    let dg = diff(&a.g, &b.g);
    let w: Vec<f64> = dg.iter().zip(&dx).map(|(g, x)| g - l * x).collect();
    Ok(a.f - b.f - dot(&b.g, &dx) - norm2(&dg) / (2.0 * l) - mu / (2.0 * l * (l - mu)) * norm2(&w))
}

/// `-<g_a - g_b - L dx, g_a - g_b - mu dx>`; equals `(L - mu)` times the
/// sum of both interpolation residuals of the pair.
pub fn cocoercivity_residual(a: &Triplet, b: &Triplet, cls: &CurvatureClass) -> Result<f64> {
    check_pair(a, b)?;
    let (l, mu) = (cls.l_upper(), cls.mu());
    let dx = diff(&a.x, &b.x);
    let dg = diff(&a.g, &b.g);
    let wl: Vec<f64> = dg.iter().zip(&dx).map(|(g, x)| g - l * x).collect();
    let wm: Vec<f64> = dg.iter().zip(&dx).map(|(g, x)| g - mu * x).collect();
    Ok(-dot(&wl, &wm))
}

/// Scale used by the relative interpolation tolerance.
fn pair_scale(a: &Triplet, b: &Triplet, l: f64) -> f64 {
    1.0 + a.f.abs() + b.f.abs() + norm2(&a.g).max(norm2(&b.g)) / l
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorstPair {
    pub i: usize,
    pub j: usize,
    pub residual: f64,
    /// Residual divided by the pair's tolerance scale.
    pub scaled: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpolationReport {
    pub interpolable: bool,
    pub worst: Option<WorstPair>,
}

/// Checks every ordered pair; a pair passes when
/// `residual >= -tol (1 + |f_a| + |f_b| + max(|g_a|^2, |g_b|^2)/L)`.
pub fn is_interpolable(set: &TripletSet, cls: &CurvatureClass, tol: f64) -> Result<InterpolationReport> {
    let items = set.items();
    let l = cls.l_upper();
    let mut worst: Option<WorstPair> = None;
    for (i, a) in items.iter().enumerate() {
        for (j, b) in items.iter().enumerate() {
            if i == j {
                continue;
            }
            let residual = interp_residual(a, b, cls)?;
            let scaled = residual / pair_scale(a, b, l);
            if worst.is_none_or(|w| scaled < w.scaled) {
                worst = Some(WorstPair { i, j, residual, scaled });
            }
        }
    }
    let interpolable = worst.is_none_or(|w| w.scaled >= -tol);
    Ok(InterpolationReport { interpolable, worst })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FStar {
    pub f_star: f64,
    pub x_star: Vec<f64>,
    pub i_star: usize,
}

/// `f* = min_i f_i - |g_i|^2/(2L)`, attained at `x* = x_{i*} - g_{i*}/L`;
/// ties go to the lowest index.
pub fn f_star_of(set: &TripletSet, cls: &CurvatureClass) -> FStar {
    let l = cls.l_upper();
    let (i_star, f_star) = set
        .items()
        .iter()
        .map(|t| t.f - norm2(&t.g) / (2.0 * l))
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, v)| if v < best.1 { (i, v) } else { best });
    let t = &set.items()[i_star];
    let x_star = t.x.iter().zip(&t.g).map(|(x, g)| x - g / l).collect();
    FStar { f_star, x_star, i_star }
}

/// `|g_a|^2 - |g_b|^2 - ((2 - gl)/gl) |g_a - g_b|^2` for one convex GD step.
pub fn grad_norm_monotonicity_residual(a: &Triplet, b: &Triplet, gl: f64) -> Result<f64> {
    check_pair(a, b)?;
    if !(gl > 0.0 && gl < 2.0) {
        return Err(Error::Domain(format!("gl = {gl} outside (0, 2)")));
    }
    let dg = diff(&a.g, &b.g);
    Ok(norm2(&a.g) - norm2(&b.g) - (2.0 - gl) / gl * norm2(&dg))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Lemma {
    N2SD,
    N4SD,
    TwoSD,
    FourSD,
    GN4SD,
    G4SD,
    D2,
    ScL,
    ScMu,
}

impl Lemma {
    pub const ALL: [Lemma; 9] = [
        Lemma::N2SD,
        Lemma::N4SD,
        Lemma::TwoSD,
        Lemma::FourSD,
        Lemma::GN4SD,
        Lemma::G4SD,
        Lemma::D2,
        Lemma::ScL,
        Lemma::ScMu,
    ];
}

/// One application of a lemma on iterates `start..=end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaResidual {
    pub start: usize,
    pub end: usize,
    /// Left side minus right side.
    pub value: f64,
    /// Sum of absolute values of all terms, for relative comparisons.
    pub scale: f64,
}

impl LemmaResidual {
    pub fn holds(&self, tol: f64) -> bool {
        self.value >= -tol * self.scale.max(1.0)
    }
}

fn precondition<T>(lemma: Lemma, msg: String) -> Result<T> {
    Err(Error::Precondition(format!("{lemma:?}: {msg}")))
}

/// Validates the stepsize and curvature range of a lemma.
fn check_lemma_range(lemma: Lemma, cls: &CurvatureClass, gl: f64) -> Result<()> {
    let kappa = cls.kappa();
    let inf = gamma_bar_inf(kappa);
    let ok = match lemma {
        Lemma::N2SD => kappa <= 0.0 && gl > 0.0 && gl <= 1.0,
        Lemma::TwoSD => kappa >= 0.0 && gl > 0.0 && gl <= 1.0,
        Lemma::FourSD => kappa >= 0.0 && (1.0..2.0).contains(&gl),
        Lemma::G4SD => kappa >= 0.0 && (1.0..2.0).contains(&gl),
        Lemma::N4SD => gl >= 1.0 && gl < inf,
        Lemma::GN4SD => gl > 1.0 && gl < inf,
        Lemma::D2 => gl > 1.0 && gl < inf,
        Lemma::ScL => gl > 1.0 && gl < 2.0,
        Lemma::ScMu => gl > 0.0 && gl < inf,
    };
    if ok {
        Ok(())
    } else {
        precondition(lemma, format!("gl = {gl} outside the valid range for kappa = {kappa}"))
    }
}

/// Residuals of `lemma` on every admissible application along a constant-step
/// trajectory, after checking the lemma's stepsize range.
pub fn descent_lemma_residuals(
    traj: &TripletSet,
    cls: &CurvatureClass,
    gl: f64,
    lemma: Lemma,
) -> Result<Vec<LemmaResidual>> {
    check_lemma_range(lemma, cls, gl)?;
    lemma_residuals_unchecked(traj, cls, gl, lemma)
}

/// Same as [`descent_lemma_residuals`] without the range check; the values
/// may be negative outside a lemma's range.
pub fn lemma_residuals_unchecked(
    traj: &TripletSet,
    cls: &CurvatureClass,
    gl: f64,
    lemma: Lemma,
) -> Result<Vec<LemmaResidual>> {
    if !(gl > 0.0 && gl < 2.0) {
        return Err(Error::Domain(format!("gl = {gl} outside (0, 2)")));
    }
    let n = traj.len();
    if n < 2 {
        return Err(Error::Input("need at least two iterates".into()));
    }
    let st = NormalizedStep::new(gl, cls.kappa());
    let gamma = gl / cls.l_upper();
    let ctx = Ctx { t: traj.items(), cls, st, gamma };
    let mut out = Vec::new();
    match lemma {
        Lemma::N2SD | Lemma::N4SD | Lemma::TwoSD | Lemma::FourSD | Lemma::ScL | Lemma::ScMu => {
            for i in 0..n - 1 {
                out.push(ctx.one_step(lemma, i)?);
            }
        }
        Lemma::GN4SD | Lemma::D2 | Lemma::G4SD => {
            let kappa = if lemma == Lemma::G4SD { 0.0 } else { cls.kappa() };
            let kmax = if gl <= 1.0 { 0 } else { n_bar(gl, kappa, n - 2)? };
            let kmin = usize::from(lemma == Lemma::D2);
            for k in kmin..=kmax {
                for s in 0..n - 1 - k {
                    out.push(match lemma {
                        Lemma::GN4SD => ctx.gn4sd(s, k)?,
                        Lemma::D2 => ctx.d2(s, k)?,
                        _ => ctx.g4sd(s, k)?,
                    });
                }
            }
        }
    }
    Ok(out)
}

struct Ctx<'a> {
    t: &'a [Triplet],
    cls: &'a CurvatureClass,
    st: NormalizedStep,
    gamma: f64,
}

/// Accumulates `lhs - sum(rhs)` and the absolute scale.
struct Acc {
    start: usize,
    end: usize,
    value: f64,
    scale: f64,
}

impl Acc {
    fn new(start: usize, end: usize) -> Self {
        Self { start, end, value: 0.0, scale: 0.0 }
    }
    fn lhs(&mut self, v: f64) -> &mut Self {
        self.value += v;
        self.scale += v.abs();
        self
    }
    fn rhs(&mut self, v: f64) -> &mut Self {
        self.value -= v;
        self.scale += v.abs();
        self
    }
    fn done(&self) -> LemmaResidual {
        LemmaResidual { start: self.start, end: self.end, value: self.value, scale: self.scale }
    }
}

impl Ctx<'_> {
    fn sq(&self, i: usize) -> f64 {
        norm2(&self.t[i].g)
    }

    fn inner(&self, i: usize, j: usize) -> f64 {
        dot(&self.t[i].g, &self.t[j].g)
    }

    /// `|g_j - c g_i|^2`.
    fn comb(&self, j: usize, c: f64, i: usize) -> f64 {
        self.t[j].g.iter().zip(&self.t[i].g).map(|(a, b)| (a - c * b).powi(2)).sum()
    }

    fn df(&self, i: usize, j: usize) -> f64 {
        self.t[i].f - self.t[j].f
    }

    fn one_step(&self, lemma: Lemma, i: usize) -> Result<LemmaResidual> {
        let (l, mu) = (self.cls.l_upper(), self.cls.mu());
        let NormalizedStep { gl, gm, rho, eta } = self.st;
        let g = self.gamma;
        let (a, b) = (self.sq(i), self.sq(i + 1));
        let mut acc = Acc::new(i, i + 1);
        match lemma {
            Lemma::N2SD => {
                acc.lhs(self.df(i, i + 1))
                    .rhs((gl * gm - 2.0 * gm + gl) / (l - mu) * a / 2.0)
                    .rhs(gl / (l - mu) * b / 2.0);
            }
            Lemma::N4SD => {
                let den = 2.0 - gl - gm;
                acc.lhs(self.df(i, i + 1))
                    .rhs(g * ((2.0 - gl) * (2.0 - gm) - 1.0) / den * a / 2.0)
                    .rhs(g / den * b / 2.0);
            }
            Lemma::TwoSD => {
                acc.lhs(self.df(i, i + 1)).rhs(g * a / 2.0).rhs(g * b / 2.0);
            }
            Lemma::FourSD => {
                acc.lhs(self.df(i, i + 1))
                    .rhs(g * (3.0 - 2.0 * gl) / (2.0 - gl) * a / 2.0)
                    .rhs(g / (2.0 - gl) * b / 2.0);
            }
            Lemma::ScL => {
                let e0 = e_k(rho, i)?;
                let e1 = e_k(rho, i + 1)?;
                acc.lhs(self.df(i, i + 1) / g)
                    .rhs(-e0 * a / 2.0)
                    .rhs(e1 * b / 2.0)
                    .rhs((1.0 - (eta + rho) * e1) / (eta - rho) * self.comb(i + 1, rho, i) / 2.0);
            }
            Lemma::ScMu => {
                let e0 = e_k(eta, i)?;
                let e1 = e_k(eta, i + 1)?;
                acc.lhs(self.df(i, i + 1) / g)
                    .rhs(-e0 * a / 2.0)
                    .rhs(e1 * b / 2.0)
                    .rhs((-1.0 + (eta + rho) * e1) / (eta - rho) * self.comb(i + 1, eta, i) / 2.0);
            }
            _ => unreachable!("multistep lemma in one_step"),
        }
        Ok(acc.done())
    }

    /// Window `s..=s+k+1` of the multistep descent inequality.
    fn gn4sd(&self, s: usize, k: usize) -> Result<LemmaResidual> {
        let NormalizedStep { gl, rho, eta, .. } = self.st;
        let kappa = self.cls.kappa();
        let tk = t_k(gl, kappa, k)?;
        let tk1 = t_k(gl, kappa, k + 1)?;
        let d = eta * eta - rho * rho;
        let mut acc = Acc::new(s, s + k + 1);
        acc.lhs(self.df(s, s + k + 1) / self.gamma)
            .rhs(-eta * eta * rho * rho * tk1 / d * self.sq(s + k) / 2.0)
            .rhs((tk + (eta - rho)) / d * self.sq(s + k + 1) / 2.0);
        Ok(acc.done())
    }

    /// Window `s..=s+k+1` of the central distance-2 inequality, `k >= 1`.
    fn d2(&self, s: usize, k: usize) -> Result<LemmaResidual> {
        let NormalizedStep { gl, rho, eta, .. } = self.st;
        let kappa = self.cls.kappa();
        let tk = t_k(gl, kappa, k)?;
        let w = tk / (2.0 * (eta - rho));
        let (gk, gk1) = (self.sq(s + k), self.sq(s + k + 1));
        let mut acc = Acc::new(s, s + k + 1);
        acc.lhs(self.df(s, s + k) / self.gamma)
            .lhs((eta + rho) * w * self.df(s + k, s + k + 1) / self.gamma)
            .rhs((e_k(eta, k)? + e_k(rho, k)?) * gk / 4.0)
            .rhs(w * (eta * rho * gk / 2.0 + self.inner(s + k, s + k + 1) + gk1 / 2.0));
        Ok(acc.done())
    }

    /// Convex multistep descent on window `s..=s+k+1`.
    fn g4sd(&self, s: usize, k: usize) -> Result<LemmaResidual> {
        let gl = self.st.gl;
        let rho = 1.0 - gl;
        let l = self.cls.l_upper();
        let geo: f64 = (0..=k).map(|i| if i == 0 { 1.0 } else { crate::curvature::pow_neg(rho, 2 * i) }).sum();
        let m = 2.0 * (k + 1) as f64;
        let mut acc = Acc::new(s, s + k + 1);
        acc.lhs(self.df(s, s + k + 1))
            .rhs((m * -(rho * rho) / (2.0 - gl) + geo) * self.sq(s + k) / (2.0 * l))
            .rhs((m / (2.0 - gl) - geo) * self.sq(s + k + 1) / (2.0 * l));
        Ok(acc.done())
    }
}
