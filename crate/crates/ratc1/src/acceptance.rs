//! End-to-end verification suite. Each criterion pins its tolerances in
//! code and reports one pass/fail outcome; the CLI `selftest` subcommand
//! prints one line per criterion and `tests/acceptance.rs` asserts them.

use crate::bspline::{fit_spline, Activation, BSplineBasis, FitOptions, KnotVector, QuadBSpline};
use crate::harness::{c1_error, fit_rate, AbscissaMode, C1Map, GridSpec, TargetFunction};
use crate::newman::{requ_prime, NewmanBasis};
use crate::ratnet::{
    build_spline_net, collapse_to_rational, BuildConfig, COLLAPSE_DEGREE_SLACK,
    DEFAULT_COLLAPSE_TERM_CAP,
};
use crate::symreg::{build_cancellation_net, convergence_scan, BaseActivation, CancellationConfig};

#[derive(Clone, Debug)]
pub struct CriterionOutcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:2}. {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.details
        )
    }
}

/// Grid sizes shrink in quick mode; every tolerance stays identical.
#[derive(Clone, Copy, Debug, Default)]
pub struct AcceptanceConfig {
    pub quick: bool,
}

impl AcceptanceConfig {
    fn dense_grid(&self) -> usize {
        if self.quick {
            20_001
        } else {
            100_000
        }
    }

    fn medium_grid(&self) -> usize {
        if self.quick {
            2_001
        } else {
            10_001
        }
    }

    fn square_grid(&self) -> usize {
        if self.quick {
            61
        } else {
            200
        }
    }

    fn scan_grid(&self) -> usize {
        if self.quick {
            1_001
        } else {
            10_001
        }
    }
}

pub const CRITERIA: [(usize, &str); 12] = [
    (1, "Newman C0 bound (certified)"),
    (2, "Newman C0 rate"),
    (3, "ReQU C1 decay"),
    (4, "Exact values at the endpoints"),
    (5, "B-spline sup bounds"),
    (6, "Oracle equivalence"),
    (7, "Spline C1 rate"),
    (8, "End-to-end network C1 rate"),
    (9, "Bookkeeping exactness"),
    (10, "Polynomial reproduction"),
    (11, "Symbolic-regression cancellation"),
    (12, "Gradient consistency"),
];

pub fn run_all(cfg: &AcceptanceConfig) -> Vec<CriterionOutcome> {
    CRITERIA.iter().map(|&(id, _)| run_criterion(id, cfg)).collect()
}

pub fn run_criterion(id: usize, cfg: &AcceptanceConfig) -> CriterionOutcome {
    let (name, result) = match id {
        1 => ("Newman C0 bound (certified)", newman_c0_bound(cfg)),
        2 => ("Newman C0 rate", newman_c0_rate(cfg)),
        3 => ("ReQU C1 decay", requ_c1_decay(cfg)),
        4 => ("Exact values at the endpoints", exact_values(cfg)),
        5 => ("B-spline sup bounds", bspline_sup_bounds(cfg)),
        6 => ("Oracle equivalence", oracle_equivalence(cfg)),
        7 => ("Spline C1 rate", spline_c1_rate(cfg)),
        8 => ("End-to-end network C1 rate", net_c1_rate(cfg)),
        9 => ("Bookkeeping exactness", bookkeeping(cfg)),
        10 => ("Polynomial reproduction", polynomial_reproduction(cfg)),
        11 => ("Symbolic-regression cancellation", symreg_cancellation(cfg)),
        12 => ("Gradient consistency", gradient_consistency(cfg)),
        _ => (
            "unknown",
            (false, format!("no criterion with id {id}")),
        ),
    };
    CriterionOutcome {
        id,
        name,
        passed: result.0,
        details: result.1,
    }
}

fn newman_c0_sup(basis: &NewmanBasis, uniform: usize) -> f64 {
    let mut sup: f64 = 0.0;
    for x in basis.certification_grid(uniform) {
        let r = basis.eval_r(x).expect("grid point inside domain");
        sup = sup.max((x.abs() - x * r).abs());
    }
    sup
}

/// 1: sup | |x| - x r_n(x) | <= 3 exp(-sqrt(n)) for n in {4,...,64}.
fn newman_c0_bound(cfg: &AcceptanceConfig) -> (bool, String) {
    let mut pass = true;
    let mut worst_ratio: f64 = 0.0;
    for n in [4usize, 9, 16, 25, 36, 49, 64] {
        let basis = NewmanBasis::new(n).unwrap();
        let sup = newman_c0_sup(&basis, cfg.dense_grid());
        let bound = 3.0 * (-(n as f64).sqrt()).exp();
        pass &= sup <= bound;
        worst_ratio = worst_ratio.max(sup / bound);
    }
    (pass, format!("worst measured/bound ratio {worst_ratio:.3}"))
}

/// 2: slope of log error against sqrt(n) within [-1.3, -0.8].
fn newman_c0_rate(cfg: &AcceptanceConfig) -> (bool, String) {
    let series: Vec<(f64, f64)> = [4usize, 9, 16, 25, 36, 49, 64]
        .iter()
        .map(|&n| {
            let basis = NewmanBasis::new(n).unwrap();
            (n as f64, newman_c0_sup(&basis, cfg.dense_grid()))
        })
        .collect();
    let fit = fit_rate(&series, AbscissaMode::SqrtAbscissa).unwrap();
    let pass = (-1.3..=-0.8).contains(&fit.slope);
    (pass, format!("slope {:.4} (window [-1.3, -0.8])", fit.slope))
}

/// 3: sup |ReQU' - R~_n'| strictly decreasing on {16..256}, log-log slope <= -1.
fn requ_c1_decay(cfg: &AcceptanceConfig) -> (bool, String) {
    let mut series = Vec::new();
    for n in [16usize, 32, 64, 128, 256] {
        let basis = NewmanBasis::new(n).unwrap();
        let mut sup: f64 = 0.0;
        for x in basis.certification_grid(cfg.dense_grid()) {
            let d = basis.eval_requ_prime(x).expect("inside domain");
            sup = sup.max((requ_prime(x) - d).abs());
        }
        series.push((n as f64, sup));
    }
    let decreasing = series.windows(2).all(|w| w[1].1 < w[0].1);
    let fit = fit_rate(&series, AbscissaMode::LogLog).unwrap();
    let pass = decreasing && fit.slope <= -1.0;
    (
        pass,
        format!(
            "strictly decreasing: {decreasing}, slope {:.2} (<= -1.0), final sup {:.2e}",
            fit.slope,
            series.last().unwrap().1
        ),
    )
}

/// 4: r_n(±1) = ±1 to 1e-12 for n <= 64; r_1 is the identity to 1e-14.
fn exact_values(cfg: &AcceptanceConfig) -> (bool, String) {
    let mut pass = true;
    let mut worst: f64 = 0.0;
    for n in 1..=64usize {
        let basis = NewmanBasis::new(n).unwrap();
        let e1 = (basis.eval_r(1.0).unwrap() - 1.0).abs();
        let e2 = (basis.eval_r(-1.0).unwrap() + 1.0).abs();
        worst = worst.max(e1).max(e2);
        pass &= e1 <= 1e-12 && e2 <= 1e-12;
    }
    let b1 = NewmanBasis::new(1).unwrap();
    let mut id_err: f64 = 0.0;
    for x in b1.certification_grid(cfg.dense_grid()) {
        id_err = id_err.max((b1.eval_r(x).unwrap() - x).abs());
    }
    pass &= id_err <= 1e-14;
    (
        pass,
        format!("worst endpoint error {worst:.2e}, r_1 identity error {id_err:.2e}"),
    )
}

/// 5: ||B^2|| <= N, ||B^2||_C1 <= 5N^2, ||B^q|| <= 2^(q-2) N, for
/// N in {4,8,16} and q in {3,4}.
fn bspline_sup_bounds(cfg: &AcceptanceConfig) -> (bool, String) {
    let pts = if cfg.quick { 2_001 } else { 10_001 };
    let slack = 1.0 + 1e-12;
    let mut pass = true;
    let mut detail = String::new();
    for q in [3usize, 4] {
        for n in [4usize, 8, 16] {
            let knots = KnotVector::new(q, n).unwrap();
            let basis = BSplineBasis::new(knots.clone(), Activation::Exact).unwrap();
            let nf = n as f64;
            let mut sup2 = vec![0.0f64; knots.basis_count(2)];
            let mut supd2 = vec![0.0f64; knots.basis_count(2)];
            let mut supq: f64 = 0.0;
            for k in 0..pts {
                let z = k as f64 / (pts - 1) as f64;
                for j in 1..=knots.basis_count(2) {
                    let quad = QuadBSpline::for_index(&knots, j).unwrap();
                    let (v, d) = quad.eval_with_prime(z, &Activation::Exact).unwrap();
                    sup2[j - 1] = sup2[j - 1].max(v.abs());
                    supd2[j - 1] = supd2[j - 1].max(d.abs());
                }
                for (v, _) in basis.eval_all(q, z).unwrap() {
                    supq = supq.max(v.abs());
                }
            }
            let b2_ok = sup2.iter().all(|&s| s <= nf * slack);
            let c1_ok = sup2
                .iter()
                .zip(supd2.iter())
                .all(|(&s, &d)| s + d <= 5.0 * nf * nf * slack);
            let bq_ok = supq <= 2f64.powi(q as i32 - 2) * nf * slack;
            pass &= b2_ok && c1_ok && bq_ok;
            if !(b2_ok && c1_ok && bq_ok) {
                detail.push_str(&format!("(q={q},N={n}) violated "));
            }
        }
    }
    if detail.is_empty() {
        detail = "all bounds hold on 10^4-point grids".into();
    }
    (pass, detail)
}

/// 6: exact-ReQU network equals the tensor spline to 1e-9 sup for
/// beta = 3, d in {1,2}, N <= 8.
fn oracle_equivalence(cfg: &AcceptanceConfig) -> (bool, String) {
    let mut worst: f64 = 0.0;
    for (d, n) in [(1usize, 4usize), (1, 8), (2, 4), (2, 8)] {
        let t = TargetFunction::lookup("sin2pi", d).unwrap();
        let spline = fit_spline(&|x: &[f64]| t.value(x), 3, n, d, 1, &FitOptions::default())
            .expect("fit");
        let build = BuildConfig::new(3.0, n, d, 1).unwrap();
        let net = build_spline_net(&build, &spline, true).expect("oracle build");
        let pts = if d == 1 { cfg.medium_grid() } else { cfg.square_grid() };
        let grid = GridSpec::unit(d, pts);
        for flat in 0..grid.total_points() {
            let x = grid.point(flat);
            let a = spline.eval(&x).unwrap()[0];
            let b = net.eval(&x).unwrap()[0];
            worst = worst.max((a - b).abs());
        }
    }
    (worst <= 1e-9, format!("worst sup difference {worst:.2e} (<= 1e-9)"))
}

fn c1_error_on_unit(f: &TargetFunction, g: &dyn C1Map, pts: usize) -> f64 {
    let grid = GridSpec::unit(f.d, pts);
    c1_error(f, g, &grid).expect("error scan").c1_error
}

/// 7: C1 rate of the exact spline fit of sin2pi, slope <= -1.5 over
/// N in {4,8,16,32}.
fn spline_c1_rate(cfg: &AcceptanceConfig) -> (bool, String) {
    let t = TargetFunction::lookup("sin2pi", 1).unwrap();
    let series: Vec<(f64, f64)> = [4usize, 8, 16, 32]
        .iter()
        .map(|&n| {
            let spline =
                fit_spline(&|x: &[f64]| t.value(x), 3, n, 1, 1, &FitOptions::default()).unwrap();
            (n as f64, c1_error_on_unit(&t, &spline, cfg.medium_grid()))
        })
        .collect();
    let fit = fit_rate(&series, AbscissaMode::LogLog).unwrap();
    (
        fit.slope <= -1.5,
        format!("slope {:.3} (<= -1.5)", fit.slope),
    )
}

/// 8: end-to-end network rate with M = N, slope <= -1.5; and error vs M
/// nonincreasing at N = 8 over M in {8,16,32,64}.
fn net_c1_rate(cfg: &AcceptanceConfig) -> (bool, String) {
    let t = TargetFunction::lookup("sin2pi", 1).unwrap();
    let built = |n: usize, m: usize| {
        let spline =
            fit_spline(&|x: &[f64]| t.value(x), 3, n, 1, 1, &FitOptions::default()).unwrap();
        let build = BuildConfig::new(3.0, n, 1, 1).unwrap().with_activation_degree(m);
        build_spline_net(&build, &spline, false).unwrap()
    };
    let series: Vec<(f64, f64)> = [4usize, 8, 16, 32]
        .iter()
        .map(|&n| (n as f64, c1_error_on_unit(&t, &built(n, n), cfg.medium_grid())))
        .collect();
    let fit = fit_rate(&series, AbscissaMode::LogLog).unwrap();
    let slope_ok = fit.slope <= -1.5;

    let mut prev = f64::INFINITY;
    let mut mono = true;
    for m in [8usize, 16, 32, 64] {
        let err = c1_error_on_unit(&t, &built(8, m), cfg.medium_grid());
        mono &= err <= prev;
        prev = err;
    }
    (
        slope_ok && mono,
        format!("slope {:.3} (<= -1.5), M-scan nonincreasing: {mono}", fit.slope),
    )
}

/// 9: depth = q+2, width = (N+max(4,q)+1) d, max degree = M+1 for all
/// built configs; collapsed degree bound <= slack * d (N+q)^d (M+1).
fn bookkeeping(_cfg: &AcceptanceConfig) -> (bool, String) {
    let mut pass = true;
    let mut detail = String::new();
    for (beta, n, m, d) in [
        (3.0f64, 8usize, 9usize, 2usize),
        (3.0, 4, 16, 1),
        (3.0, 2, 2, 1),
        (4.5, 4, 6, 1),
    ] {
        let q = beta.floor() as usize;
        let t = TargetFunction::lookup("sin2pi", d).unwrap();
        let spline =
            fit_spline(&|x: &[f64]| t.value(x), q, n, d, 1, &FitOptions::default()).unwrap();
        let build = BuildConfig::new(beta, n, d, 1).unwrap().with_activation_degree(m);
        let net = build_spline_net(&build, &spline, false).unwrap();
        let report = net.degree_report();
        let ok = report.depth == q + 2
            && report.width == (n + q.max(4) + 1) * d
            && report.max_degree_bound == m + 1;
        pass &= ok;
        if !ok {
            detail.push_str(&format!(
                "(beta={beta},N={n},M={m},d={d}): got depth {}, width {}, degree {}; ",
                report.depth, report.width, report.max_degree_bound
            ));
        }
    }
    let t = TargetFunction::lookup("sin2pi", 1).unwrap();
    let mut worst_ratio: f64 = 0.0;
    for n in [2usize, 3, 4] {
        for m in [2usize, 3, 4] {
            let spline =
                fit_spline(&|x: &[f64]| t.value(x), 3, n, 1, 1, &FitOptions::default()).unwrap();
            let build = BuildConfig::new(3.0, n, 1, 1).unwrap().with_activation_degree(m);
            let net = build_spline_net(&build, &spline, false).unwrap();
            let rats = collapse_to_rational(&net, DEFAULT_COLLAPSE_TERM_CAP).unwrap();
            let bound = rats[0].degree_bound() as f64;
            let target = COLLAPSE_DEGREE_SLACK * ((n + 3) * (m + 1)) as f64;
            worst_ratio = worst_ratio.max(bound / target);
            pass &= bound <= target;
        }
    }
    if detail.is_empty() {
        detail = format!(
            "formulas exact; collapsed degree within {} of d(N+q)^d(M+1), worst ratio {:.2}",
            COLLAPSE_DEGREE_SLACK, worst_ratio
        );
    }
    (pass, detail)
}

/// 10: spline fit of x^2 with q = 3 reproduces it to 1e-8.
fn polynomial_reproduction(cfg: &AcceptanceConfig) -> (bool, String) {
    let spline = fit_spline(
        &|x: &[f64]| vec![x[0] * x[0]],
        3,
        4,
        1,
        1,
        &FitOptions::default(),
    )
    .unwrap();
    let mut sup: f64 = 0.0;
    let pts = cfg.medium_grid();
    for k in 0..pts {
        let x = k as f64 / (pts - 1) as f64;
        sup = sup.max((spline.eval(&[x]).unwrap()[0] - x * x).abs());
    }
    (sup <= 1e-8, format!("sup error {sup:.2e} (<= 1e-8)"))
}

/// 11: L = 1 cancellation with sigma = exp(x)-1 on sin2pi: C0 and C1 sups
/// decrease monotonically along {4,8,16,32}; final C0 <= 1e-2; top-entry
/// cancellation block within 5e-2 of the identity.
fn symreg_cancellation(cfg: &AcceptanceConfig) -> (bool, String) {
    let t = TargetFunction::lookup("sin2pi", 1).unwrap();
    let config = CancellationConfig::default();
    let acts = vec![BaseActivation::exp1()];
    let builder = |n: usize| build_cancellation_net(&t, &acts, n, &config);
    let rows = match convergence_scan(&builder, &[4, 8, 16, 32], cfg.scan_grid(), &t) {
        Ok(rows) => rows,
        Err(e) => return (false, format!("scan failed: {e}")),
    };
    let c0_mono = rows.windows(2).all(|w| w[1].report.c0_error < w[0].report.c0_error);
    let c1_mono = rows.windows(2).all(|w| w[1].report.c1_error < w[0].report.c1_error);
    let last = rows.last().unwrap();
    let c0_final = last.report.c0_error;
    let cancel_final = last.cancel_err[0];
    let pass = c0_mono && c1_mono && c0_final <= 1e-2 && cancel_final <= 5e-2;
    (
        pass,
        format!(
            "C0 monotone: {c0_mono}, C1 monotone: {c1_mono}, final C0 {c0_final:.2e} (<= 1e-2), \
             final cancellation {cancel_final:.2e} (<= 5e-2)"
        ),
    )
}

/// 12: analytic / forward-mode derivatives match finite differences at the
/// per-module tolerances.
fn gradient_consistency(cfg: &AcceptanceConfig) -> (bool, String) {
    use rand::{Rng, SeedableRng};
    let mut failures = Vec::new();

    // Registry gradients: 100 seeded points, 1e-6.
    for t in TargetFunction::all() {
        if let Err(e) = t.validate_gradient(100, 42) {
            failures.push(format!("registry {}: {e}", t.name));
        }
    }

    // Newman r': step 1e-6 central differences to 1e-5 away from ±1.
    let h = 1e-6;
    for n in [2usize, 5, 9, 16] {
        let basis = NewmanBasis::new(n).unwrap();
        for k in 0..=400 {
            let x = -0.999 + 1.998 * k as f64 / 400.0;
            let fd = (basis.eval_r(x + h).unwrap() - basis.eval_r(x - h).unwrap()) / (2.0 * h);
            let an = basis.eval_r_prime(x).unwrap();
            if (fd - an).abs() > 1e-5 {
                failures.push(format!("newman n={n} x={x}: |fd-an| = {:.2e}", (fd - an).abs()));
                break;
            }
        }
    }

    // B-spline derivatives away from knots (distance > 1e-3) to 1e-5.
    let knots = KnotVector::new(4, 8).unwrap();
    let basis = BSplineBasis::new(knots, Activation::Exact).unwrap();
    'outer: for k in 0..300 {
        let z = 0.002 + 0.996 * k as f64 / 299.0;
        if (0..=8).any(|i| (z - i as f64 / 8.0).abs() <= 1e-3) {
            continue;
        }
        for m in 2..=4usize {
            let lo = basis.eval_all(m, z - h).unwrap();
            let hi = basis.eval_all(m, z + h).unwrap();
            let at = basis.eval_all(m, z).unwrap();
            for j in 0..at.len() {
                let fd = (hi[j].0 - lo[j].0) / (2.0 * h);
                if (fd - at[j].1).abs() > 1e-5 * at[j].1.abs().max(1.0) {
                    failures.push(format!("bspline m={m} j={} z={z}", j + 1));
                    break 'outer;
                }
            }
        }
    }

    // Tensor spline gradient: 50 seeded interior points to 1e-5.
    let t2 = TargetFunction::lookup("sin2pi", 2).unwrap();
    let spline =
        fit_spline(&|x: &[f64]| t2.value(x), 3, 6, 2, 1, &FitOptions::default()).unwrap();
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    let fd_step = 1e-5;
    for _ in 0..50 {
        let x = [rng.random_range(0.01..0.99), rng.random_range(0.01..0.99)];
        let (_, jac) = spline.eval_with_jacobian(&x).unwrap();
        for l in 0..2 {
            let mut hi = x;
            hi[l] += fd_step;
            let mut lo = x;
            lo[l] -= fd_step;
            let fd = (spline.eval(&hi).unwrap()[0] - spline.eval(&lo).unwrap()[0]) / (2.0 * fd_step);
            if (fd - jac[0][l]).abs() > 1e-5 * jac[0][l].abs().max(1.0) {
                failures.push(format!("tensor gradient at {x:?} axis {l}"));
            }
        }
    }

    // Network gradient: 50 seeded points to 1e-4.
    let t1 = TargetFunction::lookup("sin2pi", 1).unwrap();
    let spline1 =
        fit_spline(&|x: &[f64]| t1.value(x), 3, 8, 1, 1, &FitOptions::default()).unwrap();
    let build = BuildConfig::new(3.0, 8, 1, 1).unwrap().with_activation_degree(16);
    let net = build_spline_net(&build, &spline1, false).unwrap();
    let mut rng = rand::rngs::StdRng::seed_from_u64(11);
    for _ in 0..50 {
        let x = [rng.random_range(0.01..0.99)];
        let (_, jac) = net.eval_with_jacobian(&x).unwrap();
        let fd = (net.eval(&[x[0] + fd_step]).unwrap()[0] - net.eval(&[x[0] - fd_step]).unwrap()[0])
            / (2.0 * fd_step);
        if (fd - jac[0][0]).abs() > 1e-4 * jac[0][0].abs().max(1.0) {
            failures.push(format!("network gradient at {x:?}"));
        }
    }

    // Symbolic net gradient: 25 seeded points to 1e-4.
    let sym = build_cancellation_net(
        &t1,
        &[BaseActivation::exp1()],
        8,
        &CancellationConfig::default(),
    )
    .unwrap();
    let mut rng = rand::rngs::StdRng::seed_from_u64(23);
    for _ in 0..25 {
        let x = [rng.random_range(0.01..0.99)];
        let (_, jac) = sym.eval_with_jacobian(&x).unwrap();
        let fd = (sym.eval(&[x[0] + fd_step]).unwrap()[0] - sym.eval(&[x[0] - fd_step]).unwrap()[0])
            / (2.0 * fd_step);
        if (fd - jac[0][0]).abs() > 1e-4 * jac[0][0].abs().max(1.0) {
            failures.push(format!("symbolic gradient at {x:?}"));
        }
    }

    let _ = cfg;
    if failures.is_empty() {
        (true, "registry, newman, bspline, tensor, network and symbolic gradients all match".into())
    } else {
        (false, failures.join("; "))
    }
}
