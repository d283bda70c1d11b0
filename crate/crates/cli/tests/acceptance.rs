//! Acceptance criteria, one line each. Exits non-zero if any fails.

use std::time::Instant;

use ndarray::{Array1, Array2};
use pdal::kkt::{assemble, assemble_at, InertiaCorrection};
use pdal::manifold::{DiffArg, Manifold};
use pdal::merit::{first_order_multipliers, pdal_gradient, pdal_gradient_at, Multipliers};
use pdal::nlp::{AffineConstraint, ConstraintKind, HessianMode, QuadraticCost};
use pdal::probset::{self, random_instance, DoubleIntegrator, SE2_POSES, CATALOG};
use pdal::solver::{solve, SolverSettings, Status};
use pdal::Problem;
use pdal_cli::{cmd_run, RunConfig};
use pdal_oracles as oracle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

struct Outcome {
    pass: bool,
    detail: String,
}

fn inf(v: &Array1<f64>) -> f64 {
    v.iter().fold(0.0, |m, c| m.max(c.abs()))
}

fn inf2(m: &Array2<f64>) -> f64 {
    m.iter().fold(0.0, |a, c| a.max(c.abs()))
}

fn defaults() -> SolverSettings<f64> {
    SolverSettings::default()
}

fn with_tol(tol: f64) -> SolverSettings<f64> {
    SolverSettings {
        tol_abs: tol,
        ..Default::default()
    }
}

fn manifold_suite() -> Outcome {
    let start = Instant::now();
    let spaces = [
        Manifold::Euclidean(4),
        Manifold::SO2,
        Manifold::SE2,
        Manifold::SO3,
        Manifold::SE3,
        Manifold::Product(vec![Manifold::SE2, Manifold::Euclidean(3), Manifold::SO3, Manifold::SE3, Manifold::SO2]),
    ];
    let h = 1e-6;
    let (mut round, mut jac) = (0.0f64, 0.0f64);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for m in &spaces {
        let nt = m.nt();
        for _ in 0..100 {
            let x = m.sample_point::<f64, _>(&mut rng);
            let y = m.sample_point::<f64, _>(&mut rng);
            let dir: Array1<f64> = (0..nt).map(|_| rng.random_range(-1.0..1.0)).collect();
            let v = &dir / inf(&dir).max(1e-300) * rng.random_range(0.0..1.0) / (nt as f64).sqrt();
            let back = m.difference(&x, &m.integrate(&x, &v).unwrap()).unwrap();
            round = round.max(inf(&(&back - &v)));

            for arg in [DiffArg::First, DiffArg::Second] {
                let an = m.jacobian_difference(&x, &y, arg).unwrap();
                let mut fd = Array2::zeros((nt, nt));
                for j in 0..nt {
                    let mut e = Array1::zeros(nt);
                    e[j] = h;
                    let (p, q) = match arg {
                        DiffArg::First => (
                            m.difference(&m.integrate(&x, &e).unwrap(), &y).unwrap(),
                            m.difference(&m.integrate(&x, &(-&e)).unwrap(), &y).unwrap(),
                        ),
                        DiffArg::Second => (
                            m.difference(&x, &m.integrate(&y, &e).unwrap()).unwrap(),
                            m.difference(&x, &m.integrate(&y, &(-&e)).unwrap()).unwrap(),
                        ),
                    };
                    fd.column_mut(j).assign(&((p - q) / (2.0 * h)));
                }
                jac = jac.max(inf2(&(&fd - &an)) / inf2(&an).max(1.0));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: round <= 1e-9 && jac <= 1e-5 && secs < 5.0,
        detail: format!("round trip {round:.1e} (≤ 1e-9), jacobian rel {jac:.1e} (≤ 1e-5), {secs:.2} s (< 5 s)"),
    }
}

fn dual_stationarity() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for seed in 0..1000 {
        let r = random_instance::<f64>(seed);
        let fo = first_order_multipliers(&r.problem, &r.x, &r.est, r.mu).unwrap();
        let g = pdal_gradient(&r.problem, &r.x, &fo, &r.est, r.mu).unwrap();
        worst = worst.max(inf(&g.gy)).max(inf(&g.gz));
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: worst <= 1e-12 && secs < 5.0,
        detail: format!("1000 instances, max dual block {worst:.1e} (≤ 1e-12), {secs:.2} s (< 5 s)"),
    }
}

fn descent() -> Outcome {
    let start = Instant::now();
    let (mut n, mut bad, mut worst, mut seed) = (0, 0, f64::NEG_INFINITY, 0u64);
    while n < 500 {
        let r = random_instance::<f64>(seed);
        seed += 1;
        let ev = r.problem.evaluate(&r.x).unwrap();
        let grad = pdal_gradient_at(&ev, &r.mult, &r.est, r.mu);
        if grad.inf_norm() == 0.0 {
            continue;
        }
        let h = r.problem.lagrangian_hessian(&r.x, &r.mult, HessianMode::Exact).unwrap();
        let mut sys = assemble_at(&ev, &r.mult, &r.est, r.mu, &h).unwrap();
        let sol = sys.solve_with(&mut InertiaCorrection::new()).unwrap();
        let d = grad.directional(&sol.step.dx, &sol.step.dy, &sol.step.dz);
        if !(d < 0.0) {
            bad += 1;
        }
        worst = worst.max(d);
        n += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: bad == 0 && secs < 10.0,
        detail: format!("500 systems, {bad} non-descent, largest slope {worst:.1e}, {secs:.2} s (< 10 s)"),
    }
}

/// Checks `g(x⁺) − μ(y⁺ − y_e) = 0`, the equality row of the Newton system.
fn one_step_qp() -> Outcome {
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for mu in [1.0, 1e-2, 1e-4] {
        for _ in 0..50 {
            let n = rng.random_range(2..7);
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
            let p = Problem::new(pdal::Manifold::Euclidean(n), QuadraticCost::new(q.clone(), c))
                .with_constraint(AffineConstraint::new(ConstraintKind::Equality, a.clone(), b.clone()));
            let sol = assemble(&p, &x, &mult, &est, mu, &q).unwrap().solve().unwrap();
            let xp = &x + &sol.step.dx;
            let yp = &mult.y + &sol.step.dy;
            worst = worst.max(inf(&(a.dot(&xp) - &b - (&yp - &est.y) * mu)));
        }
    }
    Outcome {
        pass: worst <= 1e-9,
        detail: format!("150 QPs over μ ∈ {{1, 1e-2, 1e-4}}, max |g(x⁺) − μ(y⁺ − y_e)| {worst:.1e} (≤ 1e-9)"),
    }
}

fn oracle_convergence() -> Outcome {
    let (xq, yq) = oracle::eq_qp_2([[2.0, 0.5], [0.5, 1.0]], [-1.0, -1.0], [1.0, 1.0], 1.0);
    let analytic: [(&str, Vec<f64>, Vec<f64>, Vec<f64>); 3] = [
        ("eq-qp-2", xq.to_vec(), vec![yq], vec![]),
        ("ineq-qp-1", vec![1.0], vec![], vec![1.0]),
        ("ineq-qp-degenerate", vec![0.0], vec![], vec![0.0]),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    let mut loose = Vec::new();
    let mut slowest = 0.0f64;
    for (name, x, y, z) in &analytic {
        let p = probset::build::<f64>(name).unwrap();
        let err = |s: &SolverSettings<f64>| {
            let t = Instant::now();
            let r = solve(&p.problem, &p.x0, None, s).unwrap();
            let e = inf(&(&r.x - &Array1::from(x.clone())))
                .max(inf(&(&r.mult.y - &Array1::from(y.clone()))))
                .max(inf(&(&r.mult.z - &Array1::from(z.clone()))));
            (r.status, e, t.elapsed().as_secs_f64())
        };
        let (status, e, secs) = err(&with_tol(1e-6));
        slowest = slowest.max(secs);
        pass &= status == Status::Converged && e <= 1e-6 && secs < 1.0;
        parts.push(format!("{name} {e:.1e}"));
        loose.push(format!("{:.1e}", err(&defaults()).1));
    }
    let grid = oracle::rosenbrock_disk_grid(1e-3);
    let fine = oracle::polish_on_circle(grid, 4e-3);
    let p = probset::build::<f64>("rosenbrock-ball").unwrap();
    let t = Instant::now();
    let r = solve(&p.problem, &p.x0, None, &defaults()).unwrap();
    let secs = t.elapsed().as_secs_f64();
    slowest = slowest.max(secs);
    let e = (r.x[0] - fine[0]).abs().max((r.x[1] - fine[1]).abs());
    pass &= r.status == Status::Converged && e <= 1e-3 && secs < 1.0;
    Outcome {
        pass,
        detail: format!(
            "{} (≤ 1e-6, tol_abs 1e-6; at tol_abs 1e-4: {}), rosenbrock-ball {e:.1e} (≤ 1e-3), slowest {:.1} ms",
            parts.join(", "),
            loose.join("/"),
            slowest * 1e3
        ),
    }
}

fn se2_barycenter() -> Outcome {
    let p = probset::build::<f64>("se2-barycenter-3").unwrap();
    let r = solve(&p.problem, &p.x0, None, &with_tol(1e-6)).unwrap();
    let m = p.problem.manifold();
    let mut sum = Array1::zeros(3);
    for pose in probset::se2_poses::<f64>() {
        sum = sum + m.difference(&r.x, &pose).unwrap();
    }
    let stat = inf(&sum);
    let oracle_gap = {
        let b = oracle::se2_group_barycenter(&SE2_POSES);
        inf(&(&r.x - &Array1::from(vec![b[0], b[1], b[2].cos(), b[2].sin()])))
    };
    Outcome {
        pass: r.status == Status::Converged && stat <= 1e-6 && r.inner_iters <= 20,
        detail: format!(
            "{}, ‖Σ x ⊖ pᵢ‖∞ {stat:.1e} (≤ 1e-6), {} inner iterations (≤ 20), gap to matrix fixed point {oracle_gap:.1e}",
            r.status, r.inner_iters
        ),
    }
}

fn saturation() -> Outcome {
    let di = DoubleIntegrator::default();
    let p = probset::build::<f64>("double-integrator-oc").unwrap();
    let r = solve(&p.problem, &p.x0, None, &with_tol(1e-8)).unwrap();
    let u = di.controls(&r.x);
    let sat: Vec<usize> = (0..di.n).filter(|&k| (u[k].abs() - di.u_max).abs() <= 1e-6).collect();
    let (_, h) = p.problem.eval_residuals(&r.x).unwrap();
    let comp = sat
        .iter()
        .flat_map(|&k| [k, di.n + k])
        .map(|i| r.mult.z[i].min(-h[i]).abs())
        .fold(0.0, f64::max);
    let sys = oracle::Integrator {
        n: di.n,
        dt: di.dt,
        u_max: di.u_max,
        target: di.target,
        w_track: di.w_track,
        w_terminal: di.w_terminal,
        w_control: di.w_control,
    };
    let dp = oracle::integrator_dp(
        &sys,
        oracle::Grid { lo: -0.2, hi: 1.2, n: 141 },
        oracle::Grid { lo: -0.6, hi: 1.4, n: 201 },
        17,
    );
    let dp_sat: Vec<usize> = (0..di.n).filter(|&k| dp[k].abs() == di.u_max).collect();
    Outcome {
        pass: r.status == Status::Converged && !sat.is_empty() && comp <= 1e-6 && sat == dp_sat,
        detail: format!("saturated steps {sat:?}, DP {dp_sat:?}, complementarity {comp:.1e} (≤ 1e-6)"),
    }
}

fn default_tolerance() -> Outcome {
    let start = Instant::now();
    let mut failed = Vec::new();
    for name in CATALOG {
        let p = probset::build::<f64>(name).unwrap();
        let r = solve(&p.problem, &p.x0, None, &defaults()).unwrap();
        if r.status != Status::Converged || r.residuals.max() > 1e-4 {
            failed.push(format!("{name}: {}", r.status));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: failed.is_empty() && secs < 30.0,
        detail: format!("{} of {} Converged at 1e-4 {failed:?}, {secs:.2} s (< 30 s)", CATALOG.len() - failed.len(), CATALOG.len()),
    }
}

fn cli_determinism() -> Outcome {
    let mut mismatched = Vec::new();
    for name in CATALOG {
        let cfg = RunConfig {
            seed: Some(42),
            ..RunConfig::new(name)
        };
        let doc = || -> Value {
            let mut v: Value = serde_json::from_str(&cmd_run(&cfg).unwrap().document).unwrap();
            v.as_object_mut().unwrap().remove("time_ms");
            v
        };
        if doc() != doc() {
            mismatched.push(name);
        }
    }
    Outcome {
        pass: mismatched.is_empty(),
        detail: format!("{} catalog runs with seed 42, mismatches {mismatched:?}", CATALOG.len()),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("manifold calculus", manifold_suite),
        ("dual stationarity", dual_stationarity),
        ("descent direction", descent),
        ("one-step equality QP", one_step_qp),
        ("oracle convergence", oracle_convergence),
        ("SE(2) barycenter", se2_barycenter),
        ("control saturation", saturation),
        ("default tolerance", default_tolerance),
        ("CLI determinism", cli_determinism),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failures += 1;
        }
        println!("[{}] {}. {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
