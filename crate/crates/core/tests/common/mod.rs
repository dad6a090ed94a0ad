//! Random smooth functions with curvature in `[mu, L]` for property checks.

#![allow(dead_code)]

use gdtight::gd::{run_gd, Trajectory};
use gdtight::schedules::StepsizeSchedule;
use gdtight::{CurvatureClass, Result};
use rand::rngs::StdRng;
use rand::Rng;

/// `x^T diag(lam) x / 2 + sum_j c_j logcosh(a_j . x - b_j)`.
///
/// The Hessian is `diag(lam) + sum_j c_j sech^2(.) a_j a_j^T`, so with
/// `lam` in `[mu + s_neg, L - s_pos]` every curvature lies in `[mu, L]`.
#[derive(Debug, Clone)]
pub struct LogCoshFn {
    pub lam: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

fn logcosh(t: f64) -> f64 {
    let a = t.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

impl LogCoshFn {
    pub fn eval(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let mut f = 0.0;
        let mut g: Vec<f64> = x.iter().zip(&self.lam).map(|(x, l)| l * x).collect();
        for (xi, l) in x.iter().zip(&self.lam) {
            f += 0.5 * l * xi * xi;
        }
        for ((a, b), c) in self.a.iter().zip(&self.b).zip(&self.c) {
            let t: f64 = a.iter().zip(x).map(|(a, x)| a * x).sum::<f64>() - b;
            f += c * logcosh(t);
            let th = t.tanh();
            for (gi, ai) in g.iter_mut().zip(a) {
                *gi += c * th * ai;
            }
        }
        (f, g)
    }
}

pub fn random_function(rng: &mut StdRng, cls: &CurvatureClass, dim: usize) -> LogCoshFn {
    let (mu, l) = (cls.mu(), cls.l_upper());
    let width = l - mu;
    let terms = rng.gen_range(1..=3);
    let budget = 0.4 * width;
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut c = Vec::new();
    let (mut s_pos, mut s_neg) = (0.0, 0.0);
    for _ in 0..terms {
        let dir: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n2: f64 = dir.iter().map(|v| v * v).sum::<f64>().max(1e-12);
        let weight = rng.gen_range(0.0..budget / terms as f64);
        let positive = rng.gen_bool(0.5);
        let ci = if positive { weight / n2 } else { -weight / n2 };
        if positive {
            s_pos += weight;
        } else {
            s_neg += weight;
        }
        a.push(dir);
        b.push(rng.gen_range(-1.0..1.0));
        c.push(ci);
    }
    let lo = mu + s_neg;
    let hi = l - s_pos;
    let lam = (0..dim)
        .map(|i| match (i, rng.gen_range(0..4)) {
            (0, _) => lo,
            (1, _) => hi,
            (_, 0) => lo,
            (_, 1) => hi,
            _ => rng.gen_range(lo..=hi),
        })
        .collect();
    LogCoshFn { lam, a, b, c }
}

pub fn random_point(rng: &mut StdRng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-scale..scale)).collect()
}

/// GD trajectory of a random function of the class.
pub fn random_trajectory(rng: &mut StdRng, cls: &CurvatureClass, gl: f64, n: usize) -> Result<Trajectory> {
    let dim = rng.gen_range(1..=3);
    let f = random_function(rng, cls, dim);
    let x0 = random_point(rng, dim, 2.0);
    run_gd(|x| Ok(f.eval(x)), &x0, &StepsizeSchedule::constant(gl, n), cls)
}

/// Convex quadratic `(x - z)^T diag(lam) (x - z)/2` with `lam` in `[max(mu, 0), L]`;
/// its minimum value is 0.
#[derive(Debug, Clone)]
pub struct CenteredQuadratic {
    pub lam: Vec<f64>,
    pub z: Vec<f64>,
}

impl CenteredQuadratic {
    pub fn eval(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let d: Vec<f64> = x.iter().zip(&self.z).map(|(x, z)| x - z).collect();
        let g: Vec<f64> = d.iter().zip(&self.lam).map(|(d, l)| l * d).collect();
        let f = d.iter().zip(&g).map(|(d, g)| 0.5 * d * g).sum();
        (f, g)
    }
}

pub fn random_quadratic(rng: &mut StdRng, cls: &CurvatureClass, dim: usize) -> CenteredQuadratic {
    let lo = cls.mu().max(0.0);
    let hi = cls.l_upper();
    let lam = (0..dim)
        .map(|_| match rng.gen_range(0..4) {
            0 => lo,
            1 => hi,
            _ => rng.gen_range(lo..=hi),
        })
        .collect();
    CenteredQuadratic { lam, z: random_point(rng, dim, 1.0) }
}
