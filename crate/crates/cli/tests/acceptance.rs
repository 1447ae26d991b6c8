//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p ppsel-cli --test acceptance`; pass criterion
//! numbers (e.g. `-- 5 7`) to run a subset.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ppsel::al::{fit_al, AlOptions, PenaltyWeights};
use ppsel::alds::{fit_alds, solve_alds, AldsProblem};
use ppsel::geometry::{integrate_intensity, CovariateField, Design, ModelSpec, Point, PointPattern, Window};
use ppsel::harness::{run_study, simulate_replicate, study_truth, Process, StudyConfig, StudyResult};
use ppsel::likelihood::{mle, NewtonOptions};
use ppsel::lp::{solve_lp, LinearProgram, LpStatus};
use ppsel::quadrature::{build_scheme, integral_approx, QuadGrid, QuadratureScheme};
use ppsel::simulate::ThomasParams;
use ppsel::synthetic::random_scheme;
use ppsel::tuning::adaptive_weights;
use ppsel::Method;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// Independent evaluation of the discretized log-likelihood and its derivatives.

fn eta(s: &QuadratureScheme, beta: &[f64]) -> Vec<f64> {
    let z = s.design();
    (0..s.len())
        .map(|i| (0..beta.len()).map(|j| z[(i, j)] * beta[j]).sum())
        .collect()
}

fn oracle_loglik(s: &QuadratureScheme, beta: &[f64]) -> f64 {
    let e = eta(s, beta);
    (0..s.len())
        .map(|i| s.weights()[i] * (s.response(i) * e[i] - e[i].exp()))
        .sum()
}

fn oracle_score(s: &QuadratureScheme, beta: &[f64]) -> Vec<f64> {
    let e = eta(s, beta);
    let z = s.design();
    let mut u = vec![0.0; beta.len()];
    for i in 0..s.len() {
        let r = s.weights()[i] * (s.response(i) - e[i].exp());
        for (j, uj) in u.iter_mut().enumerate() {
            *uj += r * z[(i, j)];
        }
    }
    u
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |a, b| a.max(b.abs()))
}

fn random_beta(rng: &mut ChaCha8Rng, s: &QuadratureScheme) -> Vec<f64> {
    let mut b: Vec<f64> = (0..s.dim()).map(|_| rng.random_range(-0.8..0.8)).collect();
    b[0] = (s.n_data() as f64 / s.area()).ln() + rng.random_range(-0.5..0.5);
    b
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut worst_u, mut worst_a) = (0.0f64, 0.0f64);
    for k in 0..20 {
        let m = rng.random_range(20..200);
        let p = rng.random_range(2..7);
        let s = random_scheme(1000 + k, m, p, rng.random_range(1.0..100.0));
        let beta = random_beta(&mut rng, &s);
        let u = ppsel::likelihood::score(&s, &beta).map_err(|e| e.to_string())?;
        let a = ppsel::likelihood::sensitivity(&s, &beta).map_err(|e| e.to_string())?;
        let h = 1e-5;
        let mut fd_u = vec![0.0; p];
        let mut fd_a = DMatrix::zeros(p, p);
        for j in 0..p {
            let (mut bp, mut bm) = (beta.clone(), beta.clone());
            bp[j] += h;
            bm[j] -= h;
            fd_u[j] = (oracle_loglik(&s, &bp) - oracle_loglik(&s, &bm)) / (2.0 * h);
            let (sp, sm) = (oracle_score(&s, &bp), oracle_score(&s, &bm));
            for i in 0..p {
                fd_a[(i, j)] = -(sp[i] - sm[i]) / (2.0 * h);
            }
        }
        let err_u = max_abs((0..p).map(|j| u[j] - fd_u[j])) / max_abs(fd_u.iter().copied()).max(1.0);
        let err_a = max_abs((&a - &fd_a).iter().copied()) / max_abs(fd_a.iter().copied()).max(1.0);
        worst_u = worst_u.max(err_u);
        worst_a = worst_a.max(err_a);
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst_u < 1e-6 && worst_a < 1e-5 && secs < 10.0,
        format!("max rel err score {worst_u:.2e}, sensitivity {worst_a:.2e}, {secs:.2}s"),
    )
}

fn random_window(rng: &mut ChaCha8Rng) -> Window {
    let x0 = rng.random_range(-100.0..100.0);
    let y0 = rng.random_range(-100.0..100.0);
    Window::new(
        x0,
        x0 + rng.random_range(1.0..1000.0),
        y0,
        y0 + rng.random_range(1.0..500.0),
    )
    .unwrap()
}

fn uniform_pattern(rng: &mut ChaCha8Rng, w: &Window, m: usize) -> PointPattern {
    let pts = (0..m)
        .map(|_| {
            Point::new(
                rng.random_range(w.x_min()..w.x_max()),
                rng.random_range(w.y_min()..w.y_max()),
            )
        })
        .collect();
    PointPattern::new(pts, *w).unwrap()
}

/// Plain gradient ascent with backtracking, from the intercept-only start.
fn gradient_ascent(s: &QuadratureScheme) -> Vec<f64> {
    let p = s.dim();
    let mut beta = vec![0.0; p];
    beta[0] = (s.n_data() as f64 / s.area()).ln();
    let mut step = 1.0 / s.n_data() as f64;
    for _ in 0..200_000 {
        let g = oracle_score(s, &beta);
        if max_abs(g.iter().copied()) < 1e-10 * s.n_data() as f64 {
            break;
        }
        let f0 = oracle_loglik(s, &beta);
        let gg: f64 = g.iter().map(|x| x * x).sum();
        step *= 2.0;
        loop {
            let cand: Vec<f64> = beta.iter().zip(&g).map(|(b, gi)| b + step * gi).collect();
            if oracle_loglik(s, &cand) >= f0 + 0.25 * step * gg {
                beta = cand;
                break;
            }
            step *= 0.5;
        }
    }
    beta
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst0 = 0.0f64;
    for _ in 0..10 {
        let w = random_window(&mut rng);
        let m = rng.random_range(1..400);
        let pat = uniform_pattern(&mut rng, &w, m);
        let grid = QuadGrid::new(rng.random_range(1..40), rng.random_range(1..40));
        let s = build_scheme(&pat, &ModelSpec::intercept_only(), &[], grid).map_err(|e| e.to_string())?;
        let fit = mle(&s, None, NewtonOptions::default()).map_err(|e| e.to_string())?;
        worst0 = worst0.max((fit.beta[0] - (m as f64 / w.area()).ln()).abs());
    }
    let mut worst3 = 0.0f64;
    for k in 0..5 {
        let s = random_scheme(2000 + k, 150, 3, 40.0);
        let fit = mle(&s, None, NewtonOptions::default()).map_err(|e| e.to_string())?;
        let oracle = gradient_ascent(&s);
        worst3 = worst3.max(max_abs(fit.beta.iter().zip(&oracle).map(|(a, b)| a - b)));
    }
    check(
        worst0 < 1e-8 && worst3 < 1e-6,
        format!("intercept-only max err {worst0:.2e}; p=3 vs gradient ascent {worst3:.2e}"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let (mut worst, mut converged) = (0.0f64, 0);
    for k in 0..50 {
        let m = rng.random_range(40..300);
        let p = rng.random_range(3..9);
        let s = random_scheme(3000 + k, m, p, rng.random_range(1.0..50.0));
        let pilot = mle(&s, None, NewtonOptions::default()).map_err(|e| e.to_string())?.beta;
        let lambda = 10f64.powf(rng.random_range(-4.0..0.0));
        let w = adaptive_weights(&pilot, 1.0, lambda, Some(0)).map_err(|e| e.to_string())?;
        let Ok(fit) = fit_al(&s, &w, None, AlOptions::default()) else {
            continue;
        };
        converged += 1;
        let u = oracle_score(&s, fit.beta());
        for j in 0..p {
            if w.is_frozen(j) {
                continue;
            }
            let g = u[j] / m as f64;
            let (b, l) = (fit.beta()[j], w.get(j));
            let r = if b != 0.0 { (g - l * b.signum()).abs() } else { (g.abs() - l).max(0.0) };
            worst = worst.max(r);
        }
    }
    check(
        converged > 0 && worst < 1e-6,
        format!("{converged}/50 converged, max stationarity/subgradient residual {worst:.2e}"),
    )
}

fn criterion_4() -> Outcome {
    let mut worst = 0.0f64;
    for k in 0..10 {
        let s = random_scheme(4000 + k, 100 + 20 * k as usize, 5, 25.0);
        let m = mle(&s, None, NewtonOptions::default()).map_err(|e| e.to_string())?.beta;
        let al = fit_al(&s, &PenaltyWeights::zeros(5), None, AlOptions::default()).map_err(|e| e.to_string())?;
        worst = worst.max(max_abs(al.beta().iter().zip(&m).map(|(a, b)| a - b)));
    }
    check(worst < 1e-6, format!("max |AL(lambda=0) - MLE| = {worst:.2e} over 10 instances"))
}

/// Brute-force LP optimum by enumerating vertices of the region clipped to
/// the box `[-big, big]^n`.
fn brute_force(lp: &LinearProgram, big: f64) -> Option<f64> {
    let n = lp.n_vars();
    // rows a'x <= b, plus equality rows a'x = b
    let mut rows: Vec<(Vec<f64>, f64)> = (0..lp.n_inequalities())
        .map(|i| ((0..n).map(|j| lp.g[(i, j)]).collect(), lp.h[i]))
        .collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        rows.push((e.clone(), lp.upper[j].min(big)));
        rows.push((e.iter().map(|v| -v).collect(), -lp.lower[j].max(-big)));
    }
    let eqs: Vec<(Vec<f64>, f64)> = (0..lp.n_equalities())
        .map(|i| ((0..n).map(|j| lp.e[(i, j)]).collect(), lp.f[i]))
        .collect();
    let k = n - eqs.len();
    let feasible = |x: &[f64]| {
        rows.iter()
            .all(|(a, b)| a.iter().zip(x).map(|(u, v)| u * v).sum::<f64>() <= b + 1e-9 * (1.0 + b.abs()))
            && eqs
                .iter()
                .all(|(a, b)| (a.iter().zip(x).map(|(u, v)| u * v).sum::<f64>() - b).abs() <= 1e-9 * (1.0 + b.abs()))
    };
    let mut best: Option<f64> = None;
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let mut a = DMatrix::zeros(n, n);
        let mut b = DVector::zeros(n);
        for (r, (row, rhs)) in eqs.iter().chain(idx.iter().map(|&i| &rows[i])).enumerate() {
            for j in 0..n {
                a[(r, j)] = row[j];
            }
            b[r] = *rhs;
        }
        if a.determinant().abs() > 1e-10 {
            if let Some(x) = a.lu().solve(&b) {
                if feasible(x.as_slice()) {
                    let v = lp.objective(x.as_slice());
                    best = Some(best.map_or(v, |c| c.min(v)));
                }
            }
        }
        // next k-combination of rows
        let mut i = k;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] < rows.len() - k + i {
                idx[i] += 1;
                for t in i + 1..k {
                    idx[t] = idx[t - 1] + 1;
                }
                break;
            }
        }
        if k == 0 {
            return best;
        }
    }
}

fn random_lp(rng: &mut ChaCha8Rng) -> LinearProgram {
    let n = rng.random_range(1..=3);
    let mut int = |lo: i32, hi: i32| rng.random_range(lo..=hi) as f64;
    let c: Vec<f64> = (0..n).map(|_| int(-5, 5)).collect();
    let mi = int(0, 4) as usize;
    let g = DMatrix::from_fn(mi, n, |_, _| int(-5, 5));
    let h: Vec<f64> = (0..mi).map(|_| int(-10, 10)).collect();
    let mut lp = LinearProgram::new(c).with_inequalities(g, h);
    if n > 1 && int(0, 3) == 0.0 {
        let mut e = DMatrix::from_fn(1, n, |_, _| int(-3, 3));
        e[(0, 0)] = int(1, 3);
        lp = lp.with_equalities(e, vec![int(-5, 5)]);
    }
    let mut lower = vec![f64::NEG_INFINITY; n];
    let mut upper = vec![f64::INFINITY; n];
    for j in 0..n {
        match int(0, 4) as u8 {
            0 => {}
            1 => lower[j] = int(-5, 5),
            2 => upper[j] = int(-5, 5),
            _ => {
                let a = int(-6, 6);
                lower[j] = a;
                upper[j] = a + int(0, 6);
            }
        }
    }
    lp.with_bounds(lower, upper)
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let (mut mismatches, mut worst_obj, mut worst_gap) = (0, 0.0f64, 0.0f64);
    let mut counts = [0usize; 3];
    for _ in 0..200 {
        let lp = random_lp(&mut rng);
        // integer data in [-10, 10] keep every vertex within |x| < 1e3
        let (b1, b2) = (brute_force(&lp, 1e5), brute_force(&lp, 2e5));
        let expected = match (b1, b2) {
            (None, _) => LpStatus::Infeasible,
            (Some(v1), Some(v2)) if (v1 - v2).abs() > 1e-6 * (1.0 + v1.abs()) => LpStatus::Unbounded,
            _ => LpStatus::Optimal,
        };
        let got = match solve_lp(&lp) {
            Ok(s) => s,
            Err(e) => return Err(format!("solver error {e} on\n{}", lp.dump())),
        };
        counts[expected as usize] += 1;
        if got.status != expected {
            mismatches += 1;
            continue;
        }
        if expected == LpStatus::Optimal {
            let v = b1.unwrap();
            worst_obj = worst_obj.max((got.primal_objective - v).abs() / v.abs().max(1.0));
            worst_gap = worst_gap.max(got.gap);
        }
    }
    check(
        mismatches == 0 && worst_obj < 1e-9 && worst_gap < 1e-8,
        format!(
            "200 LPs ({} optimal, {} infeasible, {} unbounded): {mismatches} status mismatches, max obj err {worst_obj:.1e}, max gap {worst_gap:.1e}",
            counts[LpStatus::Optimal as usize],
            counts[LpStatus::Infeasible as usize],
            counts[LpStatus::Unbounded as usize]
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let (mut worst_newton, mut worst_zero, mut worst_kkt) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..10 {
        let p = rng.random_range(3..7);
        let s = random_scheme(6000 + k, rng.random_range(80..300), p, 30.0);
        let mut tilde = mle(&s, None, NewtonOptions::default()).map_err(|e| e.to_string())?.beta;
        // move off the MLE so the Newton step is not trivial
        for b in tilde.iter_mut().skip(1) {
            *b += rng.random_range(-0.1..0.1);
        }
        for lambda in [1e-10, 1e-6, 1e-3, 1e-2, 0.1, 1.0, 1e6] {
            let w = adaptive_weights(&tilde, 1.0, lambda, Some(0)).map_err(|e| e.to_string())?;
            let problem = AldsProblem::from_scheme(&s, w.clone(), &tilde).map_err(|e| e.to_string())?;
            let sol = solve_alds(&problem).map_err(|e| format!("lambda {lambda}: {e}"))?;
            worst_kkt = worst_kkt.max(sol.report.max());
            let fit = fit_alds(&s, &w, Some(&tilde)).map_err(|e| e.to_string())?;
            if lambda == 1e-10 {
                let newton = problem.newton_point().map_err(|e| e.to_string())?;
                worst_newton = worst_newton.max(max_abs(fit.beta().iter().zip(&newton).map(|(a, b)| a - b)));
            }
            if lambda == 1e6 {
                worst_zero = worst_zero.max(max_abs(fit.beta()[1..].iter().copied()));
            }
        }
    }
    check(
        worst_newton < 1e-5 && worst_zero == 0.0 && worst_kkt < 1e-8,
        format!(
            "lambda=1e-10 vs Newton point {worst_newton:.2e}; lambda=1e6 max |beta_j| {worst_zero:.1e}; max KKT residual {worst_kkt:.2e}"
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut worst_w = 0.0f64;
    for _ in 0..100 {
        let w = random_window(&mut rng);
        let m = rng.random_range(0..500);
        let pat = uniform_pattern(&mut rng, &w, m);
        let grid = QuadGrid::new(rng.random_range(1..80), rng.random_range(1..80));
        let s = build_scheme(&pat, &ModelSpec::intercept_only(), &[], grid).map_err(|e| e.to_string())?;
        let sum: f64 = s.weights().iter().sum();
        worst_w = worst_w.max((sum - w.area()).abs() / w.area());
    }
    // piecewise-constant intensity on a raster whose cells are unions of quadrature cells
    let mut worst_i = 0.0f64;
    for k in 0..20 {
        let w = random_window(&mut rng);
        let (nc, nr) = (rng.random_range(1..12), rng.random_range(1..12));
        let values: Vec<f64> = (0..nc * nr).map(|_| rng.random_range(-2.0..2.0)).collect();
        let (dx, dy) = (w.width() / nc as f64, w.height() / nr as f64);
        let field = CovariateField::new("z", nr, nc, (w.x_min(), w.y_min()), (dx, dy), values.clone())
            .map_err(|e| e.to_string())?;
        let m = rng.random_range(0..200);
        let pat = uniform_pattern(&mut rng, &w, m);
        let refine = 1 + k % 3;
        let grid = QuadGrid::new(nc * refine, nr * refine);
        let s = build_scheme(&pat, &ModelSpec::new(["z"]), std::slice::from_ref(&field), grid)
            .map_err(|e| e.to_string())?;
        let beta = [rng.random_range(-3.0..0.0), rng.random_range(-1.0..1.0)];
        let f: Vec<f64> = eta(&s, &beta).iter().map(|e| e.exp()).collect();
        let approx = integral_approx(&s, &f).map_err(|e| e.to_string())?;
        let exact: f64 = values.iter().map(|v| dx * dy * (beta[0] + beta[1] * v).exp()).sum();
        worst_i = worst_i.max((approx - exact).abs() / exact);
    }
    check(
        worst_w < 1e-10 && worst_i < 1e-9,
        format!("max rel |sum w - |D|| {worst_w:.1e} (100 schemes); max rel integral err {worst_i:.1e} (20 rasters)"),
    )
}

fn first_moment(config: &StudyConfig, n: usize) -> Result<(f64, f64, f64, f64), String> {
    let start = Instant::now();
    let (fields, spec, truth) = study_truth(config).map_err(|e| e.to_string())?;
    let design = Design::resolve(&spec, &fields).map_err(|e| e.to_string())?;
    let target = integrate_intensity(&design, &truth, &config.window).map_err(|e| e.to_string())?;
    let counts: Vec<f64> = (0..n as u64)
        .map(|r| simulate_replicate(config, &spec, &fields, &truth, r).map(|p| p.len() as f64))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let mean = counts.iter().sum::<f64>() / n as f64;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok((target, mean, (var / n as f64).sqrt(), start.elapsed().as_secs_f64()))
}

fn criterion_8() -> Outcome {
    let poisson = StudyConfig {
        window: Window::new(0.0, 250.0, 0.0, 125.0).unwrap(),
        mu: 100.0,
        p: 6,
        seed: 808,
        ..StudyConfig::default()
    };
    let thomas = StudyConfig {
        process: Process::Thomas(ThomasParams::new(4e-4, 15.0).unwrap()),
        window: Window::new(0.0, 500.0, 0.0, 250.0).unwrap(),
        mu: 600.0,
        p: 6,
        seed: 809,
        ..StudyConfig::default()
    };
    let (tp, mp, sp, secs) = first_moment(&poisson, 500)?;
    let (tt, mt, st, _) = first_moment(&thomas, 500)?;
    check(
        (mp - tp).abs() < 3.0 * sp && (mt - tt).abs() < 3.0 * st && secs < 60.0 && (tp - 100.0).abs() < 0.1,
        format!(
            "Poisson mean {mp:.2} vs {tp:.2} (SE {sp:.2}, {secs:.2}s); Thomas mean {mt:.1} vs {tt:.1} (SE {st:.1})"
        ),
    )
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn study(name: &str) -> Result<StudyResult, String> {
    let cfg = StudyConfig::read(configs_dir().join(name)).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let res = run_study(&cfg).map_err(|e| format!("{name}: {e}"))?;
    eprintln!(
        "  {name}: {:.0}s\n  {}",
        start.elapsed().as_secs_f64(),
        res.to_table().to_csv().lines().nth(1).unwrap_or("")
    );
    Ok(res)
}

fn criteria_9_10() -> (Outcome, Outcome) {
    let run = || -> Result<[StudyResult; 3], String> {
        Ok([
            study("poisson_d3_p20.txt")?,
            study("thomas_g15_d3_p20.txt")?,
            study("thomas_g5_d3_p20.txt")?,
        ])
    };
    let [poisson, g15, g5] = match run() {
        Ok(r) => r,
        Err(e) => return (Err(e.clone()), Err(e)),
    };
    let mut ok9 = true;
    let mut detail = Vec::new();
    for m in [Method::Al, Method::Alds] {
        let (p, a, b) = (
            poisson.summary(m).unwrap(),
            g15.summary(m).unwrap(),
            g5.summary(m).unwrap(),
        );
        ok9 &= p.tpr >= 95.0 && p.fpr <= 5.0 && p.rmse <= 0.3;
        ok9 &= b.fpr >= a.fpr && a.fpr >= p.fpr;
        detail.push(format!(
            "{m}: TPR {:.1} FPR {:.2} RMSE {:.3}; FPR g5 {:.2} >= g15 {:.2} >= Poisson {:.2}",
            p.tpr, p.fpr, p.rmse, b.fpr, a.fpr, p.fpr
        ));
    }
    let c9 = check(ok9, detail.join("; "));
    let c10 = match poisson.support_agreement() {
        Some(a) => check(a >= 0.9, format!("identical supports in {:.0}% of replicates", 100.0 * a)),
        None => Err("no replicate with both fits".into()),
    };
    (c9, c10)
}

fn criterion_11() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = dir.path().join("study.txt");
    std::fs::write(&cfg, "window = D2\nmu = 600\np = 10\nreplicates = 12\ngrid_n = 25\nseed = 1111\n")
        .map_err(|e| e.to_string())?;
    let run = |threads: &str| -> Result<(Vec<u8>, Vec<u8>), String> {
        let records = dir.path().join(format!("records_{threads}.csv"));
        let out = Command::new(env!("CARGO_BIN_EXE_ppsel"))
            .args(["benchmark", cfg.to_str().unwrap(), "--no-timing", "--threads", threads, "--records"])
            .arg(&records)
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(String::from_utf8_lossy(&out.stderr).into_owned());
        }
        Ok((out.stdout, std::fs::read(&records).map_err(|e| e.to_string())?))
    };
    let a = run("1")?;
    let b = run("1")?;
    let c = run("4")?;
    check(
        a == b && a == c,
        format!(
            "summary and {}-byte records identical across 2 runs and 1 vs 4 threads: {}",
            a.1.len(),
            a == b && a == c
        ),
    )
}

fn main() -> ExitCode {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let want = |k: u32| wanted.is_empty() || wanted.contains(&k);
    let mut results: Vec<(u32, Outcome)> = Vec::new();
    let single: [(u32, fn() -> Outcome); 8] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
    ];
    for (k, f) in single {
        if want(k) {
            let r = f();
            print_line(k, &r);
            results.push((k, r));
        }
    }
    if want(9) || want(10) {
        let (c9, c10) = criteria_9_10();
        for (k, r) in [(9, c9), (10, c10)] {
            if want(k) {
                print_line(k, &r);
                results.push((k, r));
            }
        }
    }
    if want(11) {
        let r = criterion_11();
        print_line(11, &r);
        results.push((11, r));
    }
    let failed = results.iter().filter(|(_, r)| r.is_err()).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn print_line(k: u32, r: &Outcome) {
    match r {
        Ok(d) => println!("criterion {k}: PASS - {d}"),
        Err(d) => println!("criterion {k}: FAIL - {d}"),
    }
}
