use std::path::Path;

use proptest::prelude::*;

use ppsel::al::{al_kkt_residual, fit_al, AlOptions};
use ppsel::alds::{fit_alds, solve_alds, AldsProblem};
use ppsel::geometry::{integrate_intensity, Design, ModelSpec, Point, PointPattern, Window};
use ppsel::harness::{rmse, tpr_fpr};
use ppsel::io::{parse_pattern, pattern_to_string};
use ppsel::likelihood::{loglik, mle, sensitivity, NewtonOptions};
use ppsel::lp::{solve_lp, LinearProgram, LpStatus};
use ppsel::quadrature::{build_scheme, QuadGrid};
use ppsel::simulate::{sim_poisson, tune_intercept, RngSpec};
use ppsel::synthetic::{bundled_covariates, random_scheme};
use ppsel::tuning::adaptive_weights;

fn window() -> impl Strategy<Value = Window> {
    (-50.0..50.0f64, 0.5..400.0f64, -50.0..50.0f64, 0.5..400.0f64)
        .prop_map(|(x0, w, y0, h)| Window::new(x0, x0 + w, y0, y0 + h).unwrap())
}

fn pattern() -> impl Strategy<Value = PointPattern> {
    window().prop_flat_map(|w| {
        prop::collection::vec((0.0..1.0f64, 0.0..1.0f64), 0..150).prop_map(move |uv| {
            let pts = uv
                .into_iter()
                .map(|(u, v)| Point::new(w.x_min() + u * w.width(), w.y_min() + v * w.height()))
                .filter(|p| w.contains(*p))
                .collect();
            PointPattern::new(pts, w).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weights_sum_to_area(pat in pattern(), nx in 1usize..60, ny in 1usize..60) {
        let s = build_scheme(&pat, &ModelSpec::intercept_only(), &[], QuadGrid::new(nx, ny)).unwrap();
        let sum: f64 = s.weights().iter().sum();
        prop_assert!((sum - pat.window().area()).abs() <= 1e-10 * pat.window().area());
        prop_assert_eq!(s.n_data(), pat.len());
        prop_assert!(s.weights().iter().all(|w| *w > 0.0));
    }

    #[test]
    fn pattern_text_round_trips(pat in pattern()) {
        let text = pattern_to_string(&pat, &[("seed".into(), "1".into())]);
        let back = parse_pattern(&text, Path::new("p.csv")).unwrap();
        prop_assert_eq!(back, pat);
    }

    #[test]
    fn loglik_is_concave_and_sensitivity_psd(
        seed in 0u64..10_000,
        b1 in prop::collection::vec(-1.0..1.0f64, 4),
        b2 in prop::collection::vec(-1.0..1.0f64, 4),
        t in 0.0..1.0f64,
    ) {
        let s = random_scheme(seed, 60, 4, 10.0);
        let mid: Vec<f64> = b1.iter().zip(&b2).map(|(a, b)| t * a + (1.0 - t) * b).collect();
        let (l1, l2, lm) = (loglik(&s, &b1).unwrap(), loglik(&s, &b2).unwrap(), loglik(&s, &mid).unwrap());
        let chord = t * l1 + (1.0 - t) * l2;
        prop_assert!(lm >= chord - 1e-9 * (1.0 + chord.abs()));
        let a = sensitivity(&s, &mid).unwrap();
        prop_assert_eq!(a.clone(), a.transpose());
        let eig = a.symmetric_eigenvalues();
        prop_assert!(eig.iter().all(|e| *e >= -1e-9 * eig.amax()));
    }

    #[test]
    fn adaptive_weights_follow_the_pilot(
        pilot in prop::collection::vec(-3.0..3.0f64, 2..8),
        lambda in 1e-4..10.0f64,
    ) {
        let w = adaptive_weights(&pilot, 1.0, lambda, Some(0)).unwrap();
        prop_assert_eq!(w.get(0), 0.0);
        for j in 1..pilot.len() {
            if pilot[j] == 0.0 {
                prop_assert!(w.is_frozen(j));
            } else {
                prop_assert!((w.get(j) - lambda / pilot[j].abs()).abs() <= 1e-12 * w.get(j));
            }
        }
    }

    #[test]
    fn rates_and_rmse_are_bounded(
        sel in prop::collection::btree_set(1usize..12, 0..11),
        truth in prop::collection::btree_set(1usize..12, 1..6),
        est in prop::collection::vec(prop::collection::vec(-2.0..2.0f64, 12), 1..6),
    ) {
        let sel: Vec<usize> = sel.into_iter().collect();
        let truth_idx: Vec<usize> = truth.into_iter().collect();
        let (tpr, fpr) = tpr_fpr(&sel, &truth_idx, 12, Some(0)).unwrap();
        prop_assert!((0.0..=100.0).contains(&tpr) && (0.0..=100.0).contains(&fpr));
        let beta: Vec<f64> = (0..12).map(|j| if truth_idx.contains(&j) { 1.0 } else { 0.0 }).collect();
        let r = rmse(&est, &beta, Some(0)).unwrap();
        prop_assert!(r >= 0.0);
        let mut rev = est.clone();
        rev.reverse();
        prop_assert_eq!(rmse(&rev, &beta, Some(0)).unwrap(), r);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn al_fits_satisfy_kkt(seed in 0u64..10_000, log_lambda in -4.0..0.5f64) {
        let s = random_scheme(seed, 80, 5, 20.0);
        let pilot = mle(&s, None, NewtonOptions::default()).unwrap().beta;
        let w = adaptive_weights(&pilot, 1.0, 10f64.powf(log_lambda), Some(0)).unwrap();
        let fit = fit_al(&s, &w, None, AlOptions::default()).unwrap();
        prop_assert!(al_kkt_residual(&s, fit.beta(), &w).unwrap() < 1e-6);
        prop_assert_eq!(fit.support.clone(), (0..5).filter(|&j| fit.beta()[j] != 0.0).collect::<Vec<_>>());
    }

    #[test]
    fn alds_solutions_are_certified(seed in 0u64..10_000, log_lambda in -8.0..2.0f64) {
        let s = random_scheme(seed, 100, 5, 20.0);
        let pilot = mle(&s, None, NewtonOptions::default()).unwrap().beta;
        let w = adaptive_weights(&pilot, 1.0, 10f64.powf(log_lambda), Some(0)).unwrap();
        let problem = AldsProblem::from_scheme(&s, w.clone(), &pilot).unwrap();
        let sol = solve_alds(&problem).unwrap();
        prop_assert!(sol.report.max() < 1e-8, "{:?}", sol.report);
        let fit = fit_alds(&s, &w, Some(&pilot)).unwrap();
        prop_assert_eq!(fit.beta(), &sol.beta[..]);
    }

    #[test]
    fn bounded_lps_satisfy_duality(
        c in prop::collection::vec(-5.0..5.0f64, 3),
        g in prop::collection::vec(-5.0..5.0f64, 6),
        h in prop::collection::vec(-5.0..10.0f64, 2),
    ) {
        let g = nalgebra::DMatrix::from_row_slice(2, 3, &g);
        let lp = LinearProgram::new(c)
            .with_inequalities(g, h)
            .with_bounds(vec![-4.0; 3], vec![4.0; 3]);
        let sol = solve_lp(&lp).unwrap();
        if sol.status == LpStatus::Optimal {
            prop_assert!(lp.primal_residual(&sol.x) < 1e-9);
            prop_assert!(sol.gap.abs() < 1e-8);
            prop_assert!(sol.dual_ineq.iter().all(|y| *y >= -1e-9));
            prop_assert!(sol.complementary_slackness(&lp) < 1e-8);
        } else {
            prop_assert_eq!(sol.status, LpStatus::Infeasible);
        }
    }

    #[test]
    fn simulation_is_reproducible_and_tuned(seed in 0u64..1_000, mu in 10.0..500.0f64) {
        let w = Window::new(0.0, 200.0, 0.0, 100.0).unwrap();
        let fields = bundled_covariates(3, &Window::new(0.0, 1000.0, 0.0, 500.0).unwrap())
            .unwrap()
            .iter()
            .map(|f| f.rescaled_to(&w))
            .collect::<Vec<_>>();
        let spec = ModelSpec::new(["z01", "z02"]);
        let mut beta = vec![0.0, 0.7, -0.4];
        beta[0] = tune_intercept(&w, &spec, &fields, &beta, mu).unwrap();
        let design = Design::resolve(&spec, &fields).unwrap();
        prop_assert!((integrate_intensity(&design, &beta, &w).unwrap() - mu).abs() < 1e-9 * mu);
        let a = sim_poisson(&w, &spec, &fields, &beta, RngSpec::new(seed)).unwrap();
        let b = sim_poisson(&w, &spec, &fields, &beta, RngSpec::new(seed)).unwrap();
        prop_assert_eq!(a, b);
    }
}
