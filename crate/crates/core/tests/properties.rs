use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use proptest::prelude::*;

use nsbf::coefficients::{apply_cut, TRIM_FRACTION};
use nsbf::grid::{cumulative_integral, differentiate, integral, Grid, SampledFn};
use nsbf::liouville::{build_liouville, transformed_potential};
use nsbf::oracles::{catalog, reference_eigenvalues_with, EIGEN_TOLERANCE};
use nsbf::seed::{compute_seed, formal_powers};
use nsbf::solver::SolutionEvaluator;
use nsbf::SLProblem;

fn kamke_evaluator() -> &'static SolutionEvaluator {
    static EV: OnceLock<SolutionEvaluator> = OnceLock::new();
    EV.get_or_init(|| SolutionEvaluator::build(&catalog::kamke(), 2001, 50).unwrap())
}

fn trig(grid: &Arc<Grid>, a: f64, b: f64, c: f64) -> SampledFn {
    SampledFn::from_fn(grid, |y| Complex64::new((a * y).sin() + b * y * y, c * (b * y).cos()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn quadrature_is_linear(
        a in -3.0f64..3.0, b in -3.0f64..3.0, c in -2.0f64..2.0,
        s in -5.0f64..5.0, t in -5.0f64..5.0,
    ) {
        let grid = Grid::shared(0.0, 2.0, 401).unwrap();
        let f = trig(&grid, a, b, c);
        let g = trig(&grid, b, c, a);
        let combined = cumulative_integral(&(&f.scale(s.into()) + &g.scale(t.into()))).unwrap();
        let separate = &cumulative_integral(&f).unwrap().scale(s.into())
            + &cumulative_integral(&g).unwrap().scale(t.into());
        let scale = combined.max_abs().max(1.0);
        for (x, y) in combined.values().iter().zip(separate.values()) {
            prop_assert!((x - y).norm() <= 1e-13 * scale);
        }
    }

    #[test]
    fn reversed_samples_integrate_alike(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -2.0f64..2.0) {
        let grid = Grid::shared(-1.0, 1.5, 501).unwrap();
        let f = trig(&grid, a, b, c);
        let mut reversed = f.values().to_vec();
        reversed.reverse();
        let r = SampledFn::new(Arc::clone(&grid), reversed).unwrap();
        let (x, y) = (integral(&f).unwrap(), integral(&r).unwrap());
        prop_assert!((x - y).norm() <= 1e-13 * x.norm().max(1.0));
    }

    #[test]
    fn transformed_length_is_increasing(seed in 0u64..1000) {
        let problem = catalog::random_smooth(seed);
        let grid = Grid::shared(problem.a, problem.b, 401).unwrap();
        let data = build_liouville(&problem, &grid).unwrap();
        for w in data.l.values().windows(2) {
            prop_assert!(w[1].re > w[0].re);
        }
    }

    #[test]
    fn unit_coefficients_keep_the_potential(c in -5.0f64..5.0, k in 0.1f64..3.0) {
        let q = format!("{c} + sin({k}*y)");
        let problem = SLProblem::from_expressions("1", &q, "1", 0.0, 1.0).unwrap();
        let grid = Grid::shared(0.0, 1.0, 201).unwrap();
        let data = build_liouville(&problem, &grid).unwrap();
        let potential = transformed_potential(&problem, &data).unwrap();
        for (v, &y) in potential.values().iter().zip(grid.points()) {
            prop_assert!((v - (c + (k * y).sin())).norm() <= 1e-13 * (1.0 + c.abs()));
        }
    }

    #[test]
    fn formal_powers_satisfy_their_relation(seed in 0u64..1000) {
        let problem = catalog::random_smooth(seed);
        let grid = Grid::shared(problem.a, problem.b, 2001).unwrap();
        let data = build_liouville(&problem, &grid).unwrap();
        let s = compute_seed(&data).unwrap();
        let powers = formal_powers(&s, &data, 4).unwrap();
        for k in 1..=4 {
            prop_assert!(powers.phi(k).first().norm() < 1e-15);
            prop_assert!(powers.psi(k).first().norm() < 1e-15);
        }
        let p = SampledFn::from_real_fn(&grid, |y| problem.p.value(y));
        let q = SampledFn::from_real_fn(&grid, |y| problem.q.value(y));
        let r = SampledFn::from_real_fn(&grid, |y| problem.r.value(y));
        for k in 2..=4 {
            let phi = powers.phi(k);
            let flux = &p * &differentiate(&phi).unwrap();
            let lhs = &differentiate(&flux).unwrap() - &(&q * &phi);
            let rhs = (&r * &powers.phi(k - 2)).scale(((k * (k - 1)) as f64).into());
            let scale = rhs.max_abs().max(1.0);
            // one-sided stencils at the ends are less accurate
            for i in 10..grid.len() - 10 {
                prop_assert!((lhs.values()[i] - rhs.values()[i]).norm() <= 1e-6 * scale,
                    "k = {}, node {}", k, i);
            }
        }
    }

    #[test]
    fn cleanup_only_zeroes_and_is_idempotent(cut in 0.0f64..2.0, a in -3.0f64..3.0) {
        let grid = Grid::shared(0.0, 2.0, 201).unwrap();
        let f = trig(&grid, a, 1.0, 0.5);
        let once = apply_cut(&f, cut);
        let twice = apply_cut(&once, cut);
        prop_assert_eq!(once.values(), twice.values());
        for (x, y) in once.values().iter().zip(f.values()) {
            prop_assert!(*x == *y || x.norm() == 0.0);
        }
    }

    #[test]
    fn basis_parity(w in 0.5f64..150.0, im in -0.5f64..0.5) {
        let ev = kamke_evaluator();
        let omega = Complex64::new(w, im);
        for i in [1usize, 300, 1000, 2000] {
            let plus = ev.basis_at_node(omega, i).unwrap();
            let minus = ev.basis_at_node(-omega, i).unwrap();
            prop_assert!((plus.v1 - minus.v1).norm() <= 1e-12 * plus.v1.norm().max(1.0));
            prop_assert!((plus.v2 + minus.v2).norm() <= 1e-12 * plus.v2.norm().max(1.0));
        }
    }

    #[test]
    fn basis_initial_values(w in 0.1f64..200.0, im in -1.0f64..1.0) {
        let ev = kamke_evaluator();
        let omega = Complex64::new(w, im);
        let b = ev.basis_at_node(omega, 0).unwrap();
        let rho = ev.data.rho_at_a();
        let ratio = ev.data.sqrt_r_over_p.first();
        prop_assert!((b.v1 - 1.0 / rho).norm() <= 1e-10);
        prop_assert!(b.v2.norm() <= 1e-10);
        prop_assert!((b.v1_prime - ev.seed.g_prime.first()).norm() <= 1e-10);
        prop_assert!((b.v2_prime - omega / rho * ratio).norm() <= 1e-10 * omega.norm());
    }

    #[test]
    fn wronskian_is_constant(w in 1.0f64..150.0) {
        let ev = kamke_evaluator();
        let b = ev.eval_basis(Complex64::new(w, 0.0)).unwrap();
        let p = ev.data.p.values();
        let wr: Vec<Complex64> = (0..p.len())
            .map(|i| p[i] * (b.v1.values()[i] * b.v2_prime.values()[i]
                - b.v1_prime.values()[i] * b.v2.values()[i]))
            .collect();
        for v in &wr {
            prop_assert!((v - wr[0]).norm() <= 1e-6 * wr[0].norm());
        }
    }
}

#[test]
fn identity_residuals_settle_monotonically() {
    let report = &kamke_evaluator().coeffs.report;
    let mut best = f64::INFINITY;
    for m in 0..=report.n_opt {
        let worst = report.max_at(m);
        assert!(worst <= 2.0 * best, "M = {m}: {worst:e} after {best:e}");
        best = best.min(worst);
    }
}

#[test]
fn decay_away_from_the_left_end() {
    let ev = kamke_evaluator();
    let grid = ev.grid();
    let start = grid
        .points()
        .iter()
        .position(|&y| y >= grid.a() + TRIM_FRACTION * (grid.b() - grid.a()))
        .unwrap();
    let sups: Vec<f64> = ev
        .coeffs
        .alpha
        .iter()
        .map(|f| f.values()[start..].iter().map(|v| v.norm()).fold(0.0, f64::max))
        .collect();
    for n in 5..sups.len() - 1 {
        assert!(sups[n + 1] <= 3.0 * sups[n], "n = {n}");
    }
}

#[test]
fn reference_eigenvalues_are_stable_under_tolerance_halving() {
    let problem = catalog::kamke();
    let bc = catalog::kamke_boundary();
    let a = reference_eigenvalues_with(&problem, &bc, 30, 2.0 * EIGEN_TOLERANCE, 10.0).unwrap();
    let b = reference_eigenvalues_with(&problem, &bc, 30, EIGEN_TOLERANCE, 10.0).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() <= 1e-11 * y.abs(), "{x} vs {y}");
    }
}

#[test]
fn characteristic_is_real_for_real_omega() {
    let ev = kamke_evaluator();
    let bc = catalog::kamke_boundary();
    for w in [3.3, 27.1, 80.0, 140.5] {
        let d = ev.characteristic(Complex64::new(w, 0.0), &bc).unwrap();
        assert!(d.im.abs() <= 1e-9 * d.norm(), "omega = {w}: {d}");
    }
}
