//! Gradient descent runs, triplet replay and tightness reports.

use serde::{Deserialize, Serialize};

use crate::curvature::CurvatureClass;
use crate::error::{domain, Error, Result};
use crate::interpolation::{f_star_of, is_interpolable, norm2, Triplet, TripletSet, WorstPair};
use crate::rates::{RateBound, Regime};
use crate::schedules::StepsizeSchedule;
use crate::worstcase::{eval_value_and_grad, select_worst_case, Payload, WorstCaseInstance};

/// Interpolability tolerance used by tightness reports.
pub const INTERP_TOL: f64 = 1e-8;
const REPLAY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub triplets: TripletSet,
    pub schedule: StepsizeSchedule,
    pub class: CurvatureClass,
}

fn check_schedule(schedule: &StepsizeSchedule) -> Result<()> {
    if schedule.is_empty() {
        return domain("empty schedule");
    }
    if let Some(&s) = schedule.entries.iter().find(|&&s| !(s > 0.0 && s < 2.0)) {
        return domain(format!("normalized step {s} outside (0, 2)"));
    }
    Ok(())
}

/// `x_{i+1} = x_i - (gl_i / L) grad f(x_i)`, recording `N + 1` triplets.
pub fn run_gd<F>(oracle: F, x0: &[f64], schedule: &StepsizeSchedule, cls: &CurvatureClass) -> Result<Trajectory>
where
    F: Fn(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    check_schedule(schedule)?;
    let l = cls.l_upper();
    let mut x = x0.to_vec();
    let mut items = Vec::with_capacity(schedule.len() + 1);
    for i in 0..=schedule.len() {
        let (f, g) = oracle(&x)?;
        let next = if i < schedule.len() {
            let h = schedule.entries[i] / l;
            Some(x.iter().zip(&g).map(|(x, g)| x - h * g).collect::<Vec<_>>())
        } else {
            None
        };
        let cur = std::mem::replace(&mut x, next.unwrap_or_default());
        items.push(Triplet::new(cur, g, f)?);
    }
    Ok(Trajectory { triplets: TripletSet::new(items)?, schedule: schedule.clone(), class: *cls })
}

/// Wraps a stored triplet set after checking the GD recursion on its points.
pub fn replay(set: &TripletSet, schedule: &StepsizeSchedule, cls: &CurvatureClass) -> Result<Trajectory> {
    check_schedule(schedule)?;
    if set.len() != schedule.len() + 1 {
        return Err(Error::Input(format!("{} triplets for {} steps", set.len(), schedule.len())));
    }
    let l = cls.l_upper();
    let t = set.items();
    for i in 0..schedule.len() {
        let h = schedule.entries[i] / l;
        for ((a, g), b) in t[i].x.iter().zip(&t[i].g).zip(&t[i + 1].x) {
            let want = a - h * g;
            let scale = 1.0 + a.abs().max((h * g).abs());
            if (want - b).abs() > REPLAY_TOL * scale {
                return Err(Error::Input(format!("point {} does not follow from point {i} by a GD step", i + 1)));
            }
        }
    }
    Ok(Trajectory { triplets: set.clone(), schedule: schedule.clone(), class: *cls })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Performance {
    /// `min_i |g_i|^2 / (2L)`.
    pub metric: f64,
    pub argmin: usize,
    pub f0: f64,
    pub f_star: f64,
}

impl Performance {
    /// `metric * D / (f_0 - f*)`; at most one when the bound holds.
    pub fn ratio_to_bound(&self, bound: &RateBound) -> f64 {
        self.metric * bound.denominator / (self.f0 - self.f_star)
    }
}

pub fn performance(traj: &Trajectory, f_star: f64) -> Performance {
    let l = traj.class.l_upper();
    let (argmin, metric) = traj
        .triplets
        .items()
        .iter()
        .map(|t| norm2(&t.g) / (2.0 * l))
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, v)| if v < best.1 { (i, v) } else { best });
    Performance { metric, argmin, f0: traj.triplets.items()[0].f, f_star }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightnessReport {
    pub kappa: f64,
    pub gl: Option<f64>,
    pub n: usize,
    pub gap: f64,
    pub regime: Regime,
    pub denominator: f64,
    pub bound: f64,
    pub achieved: f64,
    pub ratio: f64,
    pub f_star: f64,
    pub interpolable: bool,
    pub worst_pair: Option<WorstPair>,
    pub conjectured: bool,
}

impl TightnessReport {
    /// Ratio within `[1 - lo, 1 + hi]` and interpolable.
    pub fn is_tight(&self, lo: f64, hi: f64) -> bool {
        self.interpolable && self.ratio >= 1.0 - lo && self.ratio <= 1.0 + hi
    }
}

/// Trajectory of an instance: GD on analytic payloads, replay of stored triplets.
pub fn trajectory_of(inst: &WorstCaseInstance) -> Result<Trajectory> {
    match &inst.payload {
        Payload::Triplets { triplets } => replay(triplets, &inst.schedule, &inst.class),
        p => run_gd(|x| eval_value_and_grad(p, x), &inst.x0, &inst.schedule, &inst.class),
    }
}

/// Runs an instance and compares the achieved metric with its bound.
///
/// `f*` is the value implied by the trajectory, and the interpolation check
/// covers the trajectory together with the optimal triplet `(x*, 0, f*)`.
pub fn simulate(inst: &WorstCaseInstance) -> Result<TightnessReport> {
    let traj = trajectory_of(inst)?;
    let fs = f_star_of(&traj.triplets, &inst.class);
    let perf = performance(&traj, fs.f_star);
    let bound = inst.bound();
    let mut with_opt = traj.triplets.clone();
    with_opt.push(Triplet::new(fs.x_star.clone(), vec![0.0; fs.x_star.len()], fs.f_star)?)?;
    let interp = is_interpolable(&with_opt, &inst.class, INTERP_TOL)?;
    Ok(TightnessReport {
        kappa: inst.class.kappa(),
        gl: inst.schedule.as_constant(),
        n: inst.n(),
        gap: inst.gap,
        regime: bound.regime,
        denominator: bound.denominator,
        bound: bound.bound(perf.f0 - perf.f_star),
        achieved: perf.metric,
        ratio: perf.ratio_to_bound(&bound),
        f_star: perf.f_star,
        interpolable: interp.interpolable,
        worst_pair: interp.worst,
        conjectured: inst.conjectured,
    })
}

pub fn tightness_report(cls: &CurvatureClass, gl: f64, n: usize, gap: f64) -> Result<TightnessReport> {
    simulate(&select_worst_case(cls, gl, n, gap)?)
}
