mod common;

use gdtight::curvature::t_k;
use gdtight::gd::{replay, simulate, trajectory_of, INTERP_TOL};
use gdtight::interpolation::{
    cocoercivity_residual, descent_lemma_residuals, f_star_of, grad_norm_monotonicity_residual, interp_residual,
    is_interpolable, lemma_residuals_unchecked, Lemma, TripletSet,
};
use gdtight::rates::{denom_const, p_n_min, p_n_piecewise, p_n_sum};
use gdtight::schedules::{dynamic_sequence, truncated_schedule};
use gdtight::thresholds::{gamma_bar, gamma_bar_inf, n_bar, DEFAULT_TOL};
use gdtight::worstcase::{
    check_nec_conds_3d, eval_value_and_grad, select_worst_case, wc_conjectured_3d_signed, wc_nonconvex_mid,
    wc_nonconvex_mid_variable, wc_nonconvex_short, wc_quadratic_2d, Payload, RotationSign, WorstCaseInstance,
};
use gdtight::CurvatureClass;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn triplets(inst: &WorstCaseInstance) -> TripletSet {
    trajectory_of(inst).unwrap().triplets
}

/// Gram matrix of all points and gradients, in iterate order.
fn gram(set: &TripletSet) -> Vec<f64> {
    let vecs: Vec<&Vec<f64>> = set.items().iter().flat_map(|t| [&t.x, &t.g]).collect();
    let mut out = Vec::new();
    for a in &vecs {
        for b in &vecs {
            out.push(a.iter().zip(b.iter()).map(|(x, y)| x * y).sum());
        }
    }
    out
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn class(kappa: f64, l: f64) -> CurvatureClass {
    CurvatureClass::new(kappa * l, l).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn t_k_increases_in_gl(kappa in -5.0..0.9f64, k in 1usize..25, u in 0.01..0.98f64, du in 0.001..0.02f64) {
        let inf = gamma_bar_inf(kappa);
        let a = 1.0 + (inf - 1.0) * u;
        let b = 1.0 + (inf - 1.0) * (u + du);
        prop_assert!(t_k(a, kappa, k).unwrap() < t_k(b, kappa, k).unwrap());
    }

    #[test]
    fn n_bar_matches_threshold_cell(kappa in -5.0..0.9f64, k in 1usize..15, u in 0.0..1.0f64) {
        let lo = gamma_bar(k, kappa, DEFAULT_TOL).unwrap();
        let hi = gamma_bar(k + 1, kappa, DEFAULT_TOL).unwrap();
        prop_assert!(lo < hi && hi < gamma_bar_inf(kappa));
        let gl = lo + (hi - lo) * u;
        prop_assume!(gl > lo * (1.0 + 1e-9) && gl < hi * (1.0 - 1e-9));
        prop_assert_eq!(n_bar(gl, kappa, 100).unwrap(), k);
        for i in 1..=k {
            prop_assert!(t_k(gl, kappa, i).unwrap() >= 0.0);
        }
        for i in k + 1..k + 20 {
            prop_assert!(t_k(gl, kappa, i).unwrap() < 0.0);
        }
    }

    #[test]
    fn p_n_forms_agree(kappa in -20.0..-1e-6f64, gl in 1e-3..1.999f64, n in 1usize..200) {
        let gm = kappa * gl;
        let s = p_n_sum(gl, gm, n).unwrap();
        let scale = s.abs().max(1.0);
        prop_assert!((s - p_n_min(gl, gm, n).unwrap()).abs() <= 1e-10 * scale);
        prop_assert!((s - p_n_piecewise(gl, gm, n).unwrap()).abs() <= 1e-10 * scale);
    }

    #[test]
    fn denominator_grows_with_n(kappa in -4.0..0.9f64, gl in 0.05..1.95f64, n in 1usize..40) {
        let a = denom_const(gl, kappa, n).unwrap().denominator;
        let b = denom_const(gl, kappa, n + 1).unwrap().denominator;
        prop_assert!(b >= a * (1.0 - 1e-12));
    }

    #[test]
    fn dynamic_sequence_increases_to_limit(kappa in -4.0..0.9f64, n in 2usize..60) {
        let s = dynamic_sequence(kappa, n).unwrap();
        let lim = 2.0 / (1.0 + kappa.max(0.0));
        prop_assert!(s.entries.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(s.entries.iter().all(|&x| x >= 1.0 && x <= lim));
    }

    #[test]
    fn pairwise_sum_is_cocoercivity(seed in any::<u64>(), kappa in -4.0..0.9f64, l in 0.2..5.0f64, gl in 0.1..1.9f64) {
        let cls = class(kappa, l);
        let mut rng = StdRng::seed_from_u64(seed);
        let traj = common::random_trajectory(&mut rng, &cls, gl, 3).unwrap();
        let t = traj.triplets.items();
        for a in t {
            for b in t {
                let s = interp_residual(a, b, &cls).unwrap() + interp_residual(b, a, &cls).unwrap();
                let c = cocoercivity_residual(a, b, &cls).unwrap() / (cls.l_upper() - cls.mu());
                prop_assert!((s - c).abs() <= 1e-12 * (1.0 + a.f.abs() + b.f.abs() + c.abs()));
            }
        }
    }

    #[test]
    fn random_trajectories_interpolate(seed in any::<u64>(), kappa in -4.0..0.9f64, gl in 0.1..1.9f64, n in 1usize..8) {
        let cls = class(kappa, 1.0);
        let mut rng = StdRng::seed_from_u64(seed);
        let traj = common::random_trajectory(&mut rng, &cls, gl, n).unwrap();
        prop_assert!(is_interpolable(&traj.triplets, &cls, 1e-10).unwrap().interpolable);
    }

    #[test]
    fn gradient_norms_decrease_on_convex(seed in any::<u64>(), kappa in 0.0..0.9f64, gl in 0.05..1.95f64) {
        let cls = class(kappa, 1.5);
        let mut rng = StdRng::seed_from_u64(seed);
        let traj = common::random_trajectory(&mut rng, &cls, gl, 6).unwrap();
        let t = traj.triplets.items();
        for w in t.windows(2) {
            let r = grad_norm_monotonicity_residual(&w[0], &w[1], gl).unwrap();
            prop_assert!(r >= -1e-12 * (1.0 + w[0].g.iter().map(|g| g * g).sum::<f64>()));
        }
    }

    #[test]
    fn values_exceed_gradient_bound(seed in any::<u64>(), kappa in -4.0..0.9f64, gl in 0.05..1.95f64) {
        let cls = class(kappa, 2.0);
        let mut rng = StdRng::seed_from_u64(seed);
        let q = common::random_quadratic(&mut rng, &cls, 3);
        let x0 = common::random_point(&mut rng, 3, 2.0);
        let traj = gdtight::gd::run_gd(|x| Ok(q.eval(x)), &x0, &gdtight::schedules::StepsizeSchedule::constant(gl, 5), &cls).unwrap();
        for t in traj.triplets.items() {
            let g2: f64 = t.g.iter().map(|g| g * g).sum();
            prop_assert!(t.f - g2 / (2.0 * cls.l_upper()) >= -1e-12);
        }
        let fs = f_star_of(&traj.triplets, &cls);
        prop_assert!(fs.f_star >= -1e-12);
    }

    #[test]
    fn descent_lemmas_hold(seed in any::<u64>(), which in 0usize..9, u in 0.001..0.999f64, kv in 0.0..1.0f64) {
        let lemma = Lemma::ALL[which];
        let kappa = match lemma {
            Lemma::TwoSD | Lemma::FourSD | Lemma::G4SD => 0.9 * kv,
            Lemma::N2SD => -4.0 * kv,
            _ => -4.0 + 4.9 * kv,
        };
        let inf = gamma_bar_inf(kappa);
        let (lo, hi) = match lemma {
            Lemma::N2SD | Lemma::TwoSD => (0.0, 1.0),
            Lemma::FourSD | Lemma::G4SD | Lemma::ScL => (1.0, 2.0),
            Lemma::N4SD | Lemma::GN4SD | Lemma::D2 => (1.0, inf),
            Lemma::ScMu => (0.0, inf),
        };
        let gl = lo + (hi - lo) * u;
        let cls = class(kappa, 1.3);
        let mut rng = StdRng::seed_from_u64(seed);
        let traj = common::random_trajectory(&mut rng, &cls, gl, 7).unwrap();
        for r in descent_lemma_residuals(&traj.triplets, &cls, gl, lemma).unwrap() {
            prop_assert!(r.holds(1e-10), "{:?} {:?}", lemma, r);
        }
    }

    #[test]
    fn worst_cases_tight_off_grid(kappa in -4.0..0.9f64, gl in 0.05..1.97f64, n in 1usize..7) {
        let cls = class(kappa, 1.0);
        let inst = select_worst_case(&cls, gl, n, 1.0).unwrap();
        let r = simulate(&inst).unwrap();
        prop_assert!(r.interpolable, "{:?}", r);
        if !inst.conjectured {
            prop_assert!(r.is_tight(1e-6, 1e-9), "{:?}", r);
        }
    }

    #[test]
    fn instances_are_c1(kappa in -4.0..0.9f64, gl in 0.05..1.97f64, n in 1usize..7) {
        let cls = class(kappa, 1.0);
        let inst = select_worst_case(&cls, gl, n, 1.0).unwrap();
        if let Payload::Piecewise1d(p) = &inst.payload {
            prop_assert!(p.continuity_defect() < 1e-10);
        }
        if !matches!(inst.payload, Payload::Triplets { .. }) {
            let traj = trajectory_of(&inst).unwrap();
            for t in traj.triplets.items() {
                let (f, g) = eval_value_and_grad(&inst.payload, &t.x).unwrap();
                prop_assert_eq!(f, t.f);
                prop_assert_eq!(&g, &t.g);
            }
        }
    }
}

#[test]
fn quadratic_instance_gradient_map() {
    let cls = class(-0.5, 2.0);
    let n = 4;
    let gl = 0.5 * (gamma_bar(n - 1, -0.5, DEFAULT_TOL).unwrap() + gamma_bar(n, -0.5, DEFAULT_TOL).unwrap());
    let inst = wc_quadratic_2d(&cls, gl, n, 1.0).unwrap();
    let (rho, eta) = (1.0 - gl, 1.0 + 0.5 * gl);
    let t = triplets(&inst);
    for w in t.items().windows(2) {
        assert!((w[1].g[0] - rho * w[0].g[0]).abs() < 1e-12 * (1.0 + w[0].g[0].abs()));
        assert!((w[1].g[1] - eta * w[0].g[1]).abs() < 1e-12 * (1.0 + w[0].g[1].abs()));
    }
    let rep = check_nec_conds_3d(&t, &cls, gl, n).unwrap();
    assert!(rep.passes(1e-9), "{rep:?}");
}

#[test]
fn lowering_a_value_breaks_interpolation() {
    let cls = class(-0.5, 1.0);
    let inst = wc_nonconvex_mid(&cls, 1.3, 5, 1.0).unwrap();
    let Payload::Triplets { triplets } = &inst.payload else { panic!("mid instance stores triplets") };
    assert!(is_interpolable(triplets, &cls, INTERP_TOL).unwrap().interpolable);
    for i in 0..triplets.len() - 1 {
        let mut broken = triplets.clone();
        broken.items_mut()[i].f -= 1e-3;
        let rep = is_interpolable(&broken, &cls, INTERP_TOL).unwrap();
        assert!(!rep.interpolable, "lowering f_{i} kept the set interpolable");
    }
}

#[test]
fn corrupted_nec_conds_fail() {
    let cls = class(-1.0, 1.0);
    let n = 5;
    let gl = 0.5 * (gamma_bar(2, -1.0, DEFAULT_TOL).unwrap() + gamma_bar(3, -1.0, DEFAULT_TOL).unwrap());
    let inst = wc_conjectured_3d_signed(&cls, gl, n, 1.0, RotationSign::Upper).unwrap();
    let mut t = triplets(&inst);
    assert!(check_nec_conds_3d(&t, &cls, gl, n).unwrap().passes(1e-9));
    t.items_mut()[1].g[0] *= 1.0 + 1e-4;
    assert!(!check_nec_conds_3d(&t, &cls, gl, n).unwrap().passes(1e-9));
}

#[test]
fn rotation_signs_share_gram_matrix() {
    for kappa in [-0.5, -1.0, -3.0] {
        let cls = class(kappa, 1.0);
        for n in 3..=6 {
            let gl = 0.5 * (gamma_bar(1, kappa, DEFAULT_TOL).unwrap() + gamma_bar(n - 1, kappa, DEFAULT_TOL).unwrap());
            let up = wc_conjectured_3d_signed(&cls, gl, n, 1.0, RotationSign::Upper).unwrap();
            let down = wc_conjectured_3d_signed(&cls, gl, n, 1.0, RotationSign::Lower).unwrap();
            let (a, b) = (triplets(&up), triplets(&down));
            assert!(max_abs_diff(&gram(&a), &gram(&b)) < 1e-12);
            let fa: Vec<f64> = a.items().iter().map(|t| t.f).collect();
            let fb: Vec<f64> = b.items().iter().map(|t| t.f).collect();
            assert!(max_abs_diff(&fa, &fb) < 1e-12);
            assert!(is_interpolable(&b, &cls, INTERP_TOL).unwrap().interpolable);
        }
    }
}

#[test]
fn variable_mid_instance_reduces_to_constant() {
    let cls = class(-0.7, 1.0);
    for (gl, n) in [(1.1, 3), (1.35, 6)] {
        let a = wc_nonconvex_mid(&cls, gl, n, 2.0).unwrap();
        let b = wc_nonconvex_mid_variable(&cls, &vec![gl; n], 2.0).unwrap();
        assert!(max_abs_diff(&gram(&triplets(&a)), &gram(&triplets(&b))) < 1e-12);
        assert!((a.expected_denominator - b.expected_denominator).abs() < 1e-12);
    }
}

#[test]
fn variable_instances_are_tight() {
    let cls = class(-0.5, 1.0);
    let g1 = gdtight::thresholds::gamma_bar_1(-0.5);
    let inst = wc_nonconvex_mid_variable(&cls, &[1.05, 1.4, g1, 1.2], 1.0).unwrap();
    let r = simulate(&inst).unwrap();
    assert!(r.conjectured && r.interpolable && (r.ratio - 1.0).abs() < 1e-6, "{r:?}");
    let inst = wc_nonconvex_short(&cls, &[0.3, 1.0, 0.7], 1.0).unwrap();
    assert!(simulate(&inst).unwrap().is_tight(1e-6, 1e-9));
    let t = truncated_schedule(-0.5, 4).unwrap();
    assert!(t.entries.iter().all(|&s| s <= gdtight::schedules::opt_const_nonconvex_asymptotic(-0.5).unwrap()));
}

#[test]
fn lemmas_are_equalities_on_their_worst_cases() {
    let cls = class(-0.5, 1.0);
    let short = wc_nonconvex_short(&cls, &[0.8; 4], 1.0).unwrap();
    for r in descent_lemma_residuals(&triplets(&short), &cls, 0.8, Lemma::N2SD).unwrap() {
        assert!(r.value.abs() < 1e-12 * r.scale.max(1.0), "{r:?}");
    }
    let mid = wc_nonconvex_mid(&cls, 1.3, 4, 1.0).unwrap();
    for r in descent_lemma_residuals(&triplets(&mid), &cls, 1.3, Lemma::N4SD).unwrap() {
        assert!(r.value.abs() < 1e-12 * r.scale.max(1.0), "{r:?}");
    }
}

#[test]
fn short_step_lemma_fails_beyond_its_range() {
    let cls = class(-0.5, 1.0);
    let mid = wc_nonconvex_mid(&cls, 1.4, 4, 1.0).unwrap();
    let t = triplets(&mid);
    assert!(descent_lemma_residuals(&t, &cls, 1.4, Lemma::N2SD).is_err());
    let res = lemma_residuals_unchecked(&t, &cls, 1.4, Lemma::N2SD).unwrap();
    assert!(res.iter().any(|r| !r.holds(1e-6)), "{res:?}");
}

#[test]
fn instances_round_trip_through_json() {
    for (kappa, gl, n) in [(0.2, 1.2, 3), (0.0, 0.9, 2), (-0.5, 0.7, 3), (-0.5, 1.2, 4), (-1.0, 1.5, 4), (-0.5, 1.95, 3)] {
        let cls = class(kappa, 1.0);
        let inst = select_worst_case(&cls, gl, n, 1.5).unwrap();
        let text = serde_json::to_string(&inst).unwrap();
        let back: WorstCaseInstance = serde_json::from_str(&text).unwrap();
        assert_eq!(back, inst);
        assert_eq!(simulate(&back).unwrap(), simulate(&inst).unwrap());
        let t = triplets(&inst);
        let set: TripletSet = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert!(replay(&set, &inst.schedule, &cls).is_ok());
    }
}
