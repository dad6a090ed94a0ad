//! Denominator comparison tables and plot-ready figure data.

use serde::Serialize;

use crate::curvature::{step_gain, t_k};
use crate::error::{domain, Result};
use crate::rates::{denom_dynamic_nonconvex, denom_dynamic_strongly_convex, denom_nonconvex_const};
use crate::schedules::{
    dynamic_sequence, opt_const_nonconvex_asymptotic, opt_const_nonconvex_numeric_with_value, truncated_schedule,
};
use crate::thresholds::{gamma_bar, gamma_bar_1, DEFAULT_TOL};

pub const TABLE1_N: [usize; 9] = [1, 2, 5, 10, 20, 30, 40, 50, 100];
pub const TABLE2_N: [usize; 9] = [1, 2, 5, 10, 20, 30, 40, 50, 70];
pub const TABLE2_KAPPA: [f64; 2] = [1e-3, 1e-4];
pub const TABLE3_N: [usize; 11] = [1, 2, 5, 8, 9, 10, 20, 30, 40, 50, 100];
pub const TABLE3_KAPPA: f64 = -1e-3;

/// Convex class: `gl = 1`, optimal constant step, dynamic schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Table1Row {
    pub n: usize,
    pub standard_denom: f64,
    pub gamma_bar: f64,
    pub opt_denom: f64,
    pub s_last: f64,
    pub dyn_denom: f64,
    /// `100 * dyn_denom / opt_denom`.
    pub ratio: f64,
}

/// Strongly convex class: `gl = 2/(1+kappa)`, optimal constant step, dynamic schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Table2Row {
    pub kappa: f64,
    pub n: usize,
    pub standard_step: f64,
    pub standard_denom: f64,
    pub gamma_bar: f64,
    pub opt_denom: f64,
    pub s_last: f64,
    pub dyn_denom: f64,
    pub ratio: f64,
}

/// Nonconvex class: asymptotic optimal step, numeric optimum for `N`,
/// truncated dynamic schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Table3Row {
    pub n: usize,
    pub gamma_star: f64,
    pub p_asymptotic: f64,
    pub opt_step: f64,
    pub p_opt: f64,
    pub step_last: f64,
    pub dyn_denom: f64,
    /// `100 * dyn_denom / p_opt`.
    pub ratio: f64,
}

pub fn table1_row(n: usize) -> Result<Table1Row> {
    let g = gamma_bar(n, 0.0, DEFAULT_TOL)?;
    let opt = 1.0 + 2.0 * n as f64 * g;
    let s = dynamic_sequence(0.0, n)?;
    let dyn_denom = denom_dynamic_strongly_convex(0.0, n)?.denominator;
    Ok(Table1Row {
        n,
        standard_denom: 1.0 + 2.0 * n as f64,
        gamma_bar: g,
        opt_denom: opt,
        s_last: *s.entries.last().expect("n >= 1"),
        dyn_denom,
        ratio: 100.0 * dyn_denom / opt,
    })
}

pub fn table2_row(kappa: f64, n: usize) -> Result<Table2Row> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return domain(format!("kappa must lie in (0, 1), got {kappa}"));
    }
    let std_step = 2.0 / (1.0 + kappa);
    let g = gamma_bar(n, kappa, DEFAULT_TOL)?;
    let opt = (1.0 - g).powi(-2 * n as i32);
    let s = dynamic_sequence(kappa, n)?;
    let dyn_denom = denom_dynamic_strongly_convex(kappa, n)?.denominator;
    Ok(Table2Row {
        kappa,
        n,
        standard_step: std_step,
        standard_denom: ((1.0 - kappa) / (1.0 + kappa)).powi(-2 * n as i32),
        gamma_bar: g,
        opt_denom: opt,
        s_last: *s.entries.last().expect("n >= 1"),
        dyn_denom,
        ratio: 100.0 * dyn_denom / opt,
    })
}

pub fn table3_row(kappa: f64, n: usize) -> Result<Table3Row> {
    let gs = opt_const_nonconvex_asymptotic(kappa)?;
    let pa = denom_nonconvex_const(gs, kappa, n)?.denominator;
    let (opt_step, p_opt) = opt_const_nonconvex_numeric_with_value(kappa, n)?;
    let t = truncated_schedule(kappa, n)?;
    let dyn_denom = denom_dynamic_nonconvex(kappa, n)?.denominator;
    Ok(Table3Row {
        n,
        gamma_star: gs,
        p_asymptotic: pa,
        opt_step,
        p_opt,
        step_last: *t.entries.last().expect("n >= 1"),
        dyn_denom,
        ratio: 100.0 * dyn_denom / p_opt,
    })
}

pub fn table1() -> Result<Vec<Table1Row>> {
    TABLE1_N.iter().map(|&n| table1_row(n)).collect()
}

pub fn table2() -> Result<Vec<Table2Row>> {
    TABLE2_KAPPA
        .iter()
        .flat_map(|&k| TABLE2_N.iter().map(move |&n| table2_row(k, n)))
        .collect()
}

pub fn table3() -> Result<Vec<Table3Row>> {
    TABLE3_N.iter().map(|&n| table3_row(TABLE3_KAPPA, n)).collect()
}

/// Named numeric columns for plotting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FigData {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// One-step gain `gl p(gl, kappa gl)` over `gl` for several `kappa`.
    PTerm,
    /// `gamma_bar_k` over `k` for several `kappa`.
    Thresholds,
    /// `T_k` over `gl` at fixed `kappa`.
    TCurves,
    /// Gains of `gamma_star`, `2/sqrt 3` and `1` over `kappa < 0`.
    OptCompare,
}

fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (1..n).map(move |i| lo + (hi - lo) * i as f64 / n as f64)
}

pub const P_TERM_KAPPAS: [f64; 6] = [-0.01, -0.1, -0.5, -1.0, -4.0, -100.0];
pub const THRESHOLD_KAPPAS: [f64; 6] = [0.1, 0.01, 0.0, -0.1, -1.0, -10.0];

pub fn figdata(which: Figure, kappa: f64, points: usize) -> Result<FigData> {
    let points = points.max(2);
    let mut rows = Vec::new();
    let columns = match which {
        Figure::PTerm => {
            for &k in &P_TERM_KAPPAS {
                let g1 = gamma_bar_1(k);
                for gl in grid(0.0, 2.0, points) {
                    rows.push(vec![k, gl, step_gain(gl, k * gl)?, g1]);
                }
            }
            vec!["kappa", "gl", "gain", "gamma_bar_1"]
        }
        Figure::Thresholds => {
            for &k in &THRESHOLD_KAPPAS {
                for j in 1..=points {
                    rows.push(vec![k, j as f64, gamma_bar(j, k, DEFAULT_TOL)?]);
                }
            }
            vec!["kappa", "k", "gamma_bar"]
        }
        Figure::TCurves => {
            for j in 1..=6 {
                for gl in grid(1.0, 2.0, points) {
                    rows.push(vec![kappa, j as f64, gl, t_k(gl, kappa, j)?]);
                }
            }
            vec!["kappa", "k", "gl", "t_k"]
        }
        Figure::OptCompare => {
            let s3 = 2.0 / 3f64.sqrt();
            for i in 0..points {
                let k = -(10f64.powf(-3.0 + 5.0 * i as f64 / (points - 1) as f64));
                let gs = opt_const_nonconvex_asymptotic(k)?;
                rows.push(vec![k, gs, step_gain(gs, k * gs)?, step_gain(s3, k * s3)?, step_gain(1.0, k)?]);
            }
            vec!["kappa", "gamma_star", "gain_star", "gain_two_over_sqrt3", "gain_one"]
        }
    };
    Ok(FigData { columns, rows })
}
