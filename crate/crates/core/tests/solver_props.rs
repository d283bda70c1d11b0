use ndarray::{Array1, Array2};
use pdal::kkt::{assemble, assemble_at, InertiaCorrection};
use pdal::merit::{first_order_multipliers, pdal_gradient, pdal_gradient_at, Multipliers};
use pdal::nlp::{AffineConstraint, ConstraintKind, HessianMode, QuadraticCost};
use pdal::probset::{self, random_instance, CATALOG};
use pdal::solver::{solve, Solver, SolverSettings, Status};
use pdal::{Manifold, Problem};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn inf(v: &Array1<f64>) -> f64 {
    v.iter().fold(0.0, |m, c| m.max(c.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn dual_blocks_vanish_at_first_order_estimates(seed in any::<u64>()) {
        let r = random_instance::<f64>(seed);
        let fo = first_order_multipliers(&r.problem, &r.x, &r.est, r.mu).unwrap();
        let g = pdal_gradient(&r.problem, &r.x, &fo, &r.est, r.mu).unwrap();
        prop_assert!(inf(&g.gy) <= 1e-12, "gy = {:?}", g.gy);
        prop_assert!(inf(&g.gz) <= 1e-12, "gz = {:?}", g.gz);
    }

    #[test]
    fn newton_step_is_a_descent_direction(seed in any::<u64>()) {
        let r = random_instance::<f64>(seed);
        let ev = r.problem.evaluate(&r.x).unwrap();
        let grad = pdal_gradient_at(&ev, &r.mult, &r.est, r.mu);
        prop_assume!(grad.inf_norm() > 1e-10);
        let h = r.problem.lagrangian_hessian(&r.x, &r.mult, HessianMode::Exact).unwrap();
        let mut sys = assemble_at(&ev, &r.mult, &r.est, r.mu, &h).unwrap();
        let sol = sys.solve_with(&mut InertiaCorrection::new()).unwrap();
        prop_assert_eq!(sol.inertia, sys.target_inertia());
        let d = grad.directional(&sol.step.dx, &sol.step.dy, &sol.step.dz);
        prop_assert!(d < 0.0, "slope {d}");
    }

    #[test]
    fn one_step_is_exact_on_equality_qps(seed in any::<u64>(), mu_exp in 0usize..3) {
        let mu = [1.0, 1e-2, 1e-4][mu_exp];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..6);
        let ne = rng.random_range(1..n);
        let mut rnd = |r: usize, c: usize| Array2::from_shape_fn((r, c), |_| rng.random_range(-1.0..1.0));
        let m = rnd(n, n);
        let q = m.t().dot(&m) + Array2::<f64>::eye(n);
        let c = rnd(n, 1).column(0).to_owned();
        let a = rnd(ne, n);
        let b = rnd(ne, 1).column(0).to_owned();
        let x = rnd(n, 1).column(0).to_owned();
        let mult = Multipliers::new(rnd(ne, 1).column(0).to_owned(), Array1::zeros(0));
        let est = Multipliers::new(rnd(ne, 1).column(0).to_owned(), Array1::zeros(0));
        let p = Problem::new(Manifold::Euclidean(n), QuadraticCost::new(q.clone(), c.clone()))
            .with_constraint(AffineConstraint::new(ConstraintKind::Equality, a.clone(), b.clone()));
        let sol = assemble(&p, &x, &mult, &est, mu, &q).unwrap().solve().unwrap();
        let xp = &x + &sol.step.dx;
        let yp = &mult.y + &sol.step.dy;
        // g(x⁺) − μ (y⁺ − y_e) = 0 and stationarity of the Lagrangian
        let feas = a.dot(&xp) - &b - (&yp - &est.y) * mu;
        let stat = q.dot(&xp) + &c + a.t().dot(&yp);
        prop_assert!(inf(&feas) <= 1e-9, "{feas:?}");
        prop_assert!(inf(&stat) <= 1e-9, "{stat:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn penalty_never_increases(seed in 0u64..1000, idx in 0usize..7) {
        let p = probset::build::<f64>(CATALOG[idx]).unwrap();
        let x0 = p.jittered_start(seed, 0.1);
        let s = SolverSettings::default();
        let r = solve(&p.problem, &x0, None, &s).unwrap();
        prop_assert!(r.trace.windows(2).all(|w| w[1].mu <= w[0].mu));
        prop_assert!(r.trace.iter().all(|t| t.mu >= s.mu_min && t.mu <= s.mu_init));
        prop_assert!(r.mu >= s.mu_min);
    }
}

#[test]
fn catalog_converges_at_both_tolerances() {
    for name in CATALOG {
        let p = probset::build::<f64>(name).unwrap();
        let mut tols = vec![1e-4];
        if name != "rosenbrock-ball" {
            tols.push(1e-6);
        }
        for tol in tols {
            let s = SolverSettings {
                tol_abs: tol,
                ..Default::default()
            };
            let r = solve(&p.problem, &p.x0, None, &s).unwrap();
            assert_eq!(r.status, Status::Converged, "{name} at {tol}");
            assert!(r.residuals.max() <= tol, "{name}: {:?}", r.residuals);
            assert_eq!(r.outer_iters, r.trace.len());
        }
    }
}

#[test]
fn warm_start_reconverges_quickly() {
    for name in CATALOG {
        let p = probset::build::<f64>(name).unwrap();
        let s = SolverSettings::default();
        let cold = solve(&p.problem, &p.x0, None, &s).unwrap();
        let warm = solve(&p.problem, &cold.x, Some(&cold.mult), &s).unwrap();
        assert_eq!(warm.status, Status::Converged, "{name}");
        assert!(warm.outer_iters <= 2, "{name}: {} outer iterations", warm.outer_iters);
    }
}

#[test]
fn accepted_primal_residuals_do_not_increase_on_convex_entries() {
    for name in ["eq-qp-2", "ineq-qp-1", "ineq-qp-degenerate", "double-integrator-oc"] {
        let p = probset::build::<f64>(name).unwrap();
        for seed in 0..5u64 {
            let n = p.problem.nt();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x0: Array1<f64> = (0..n).map(|i| p.x0[i] + rng.random_range(-1.0..1.0)).collect();
            let s = SolverSettings {
                tol_abs: 1e-8,
                ..Default::default()
            };
            let r = solve(&p.problem, &x0, None, &s).unwrap();
            assert_eq!(r.status, Status::Converged, "{name}/{seed}");
            let accepted: Vec<f64> = r
                .trace
                .iter()
                .skip_while(|t| !t.accepted)
                .filter(|t| t.accepted)
                .map(|t| t.prim)
                .collect();
            assert!(
                accepted.windows(2).all(|w| w[1] <= w[0]),
                "{name}/{seed}: {accepted:?}"
            );
        }
    }
}

#[test]
fn hessian_modes_all_reach_the_solution() {
    let p = probset::build::<f64>("rosenbrock-ball").unwrap();
    let o = p.oracle.as_ref().unwrap();
    for mode in [HessianMode::Exact, HessianMode::GaussNewton, HessianMode::Identity] {
        let s = SolverSettings {
            hessian_mode: mode,
            max_inner_total: 20_000,
            ..Default::default()
        };
        let r = solve(&p.problem, &p.x0, None, &s).unwrap();
        assert_eq!(r.status, Status::Converged, "{mode:?}");
        assert!(inf(&(&r.x - &o.x)) < 1e-3, "{mode:?}: {:?}", r.x);
    }
}

#[test]
fn iteration_budget_is_respected() {
    let p = probset::build::<f64>("double-integrator-oc").unwrap();
    let s = SolverSettings {
        max_inner_total: 3,
        ..Default::default()
    };
    let r = solve(&p.problem, &p.x0, None, &s).unwrap();
    assert_eq!(r.status, Status::MaxIters);
    assert!(r.inner_iters <= 3);
    let s = SolverSettings {
        max_outer: 1,
        ..Default::default()
    };
    let r = Solver::new(s).solve(&p.problem, &p.x0, None).unwrap();
    assert_eq!(r.outer_iters, 1);
}

#[test]
fn single_precision_solves() {
    for name in ["eq-qp-2", "ineq-qp-1", "se2-barycenter-3", "so3-barycenter-3"] {
        let p = probset::build::<f32>(name).unwrap();
        let s = SolverSettings {
            tol_abs: 1e-3f32,
            ..Default::default()
        };
        let r = solve(&p.problem, &p.x0, None, &s).unwrap();
        assert_eq!(r.status, Status::Converged, "{name}");
        let o = p.oracle.as_ref().unwrap();
        let err = (&r.x - &o.x).iter().fold(0.0f32, |m, v| m.max(v.abs()));
        assert!(err < 1e-2, "{name}: {err}");
    }
}
