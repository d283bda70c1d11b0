//! Built-in test problems with known solutions.

use ndarray::{array, Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::manifold::{DiffArg, Manifold, Point};
use crate::merit::Multipliers;
use crate::nlp::{
    AffineConstraint, Constraint, ConstraintKind, CostFunction, EvalResult, Problem, QuadraticCost,
};
use crate::scalar::Scalar;

pub const CATALOG: [&str; 7] = [
    "se2-barycenter-3",
    "eq-qp-2",
    "ineq-qp-1",
    "ineq-qp-degenerate",
    "rosenbrock-ball",
    "double-integrator-oc",
    "so3-barycenter-3",
];

/// Known primal-dual solution.
#[derive(Debug, Clone)]
pub struct Oracle<T> {
    pub x: Point<T>,
    pub mult: Multipliers<T>,
    /// How the values were obtained.
    pub provenance: &'static str,
}

#[derive(Debug)]
pub struct NamedProblem<T: Scalar> {
    pub name: &'static str,
    pub problem: Problem<T>,
    pub x0: Point<T>,
    pub oracle: Option<Oracle<T>>,
}

impl<T: Scalar> NamedProblem<T> {
    /// `x0 ⊕ scale·(e ⊖ r)` for a random point `r` drawn from `seed`.
    pub fn jittered_start(&self, seed: u64, scale: T) -> Point<T> {
        let m = self.problem.manifold();
        let r = m.random_point::<T>(seed);
        let d = m.difference(&m.neutral::<T>(), &r).expect("same manifold") * scale;
        m.integrate(&self.x0, &d).expect("same manifold")
    }
}

fn lit<T: Scalar>(v: &[f64]) -> Array1<T> {
    v.iter().map(|&c| T::lit(c)).collect()
}

fn lit2<T: Scalar>(rows: usize, cols: usize, v: &[f64]) -> Array2<T> {
    Array2::from_shape_fn((rows, cols), |(i, j)| T::lit(v[i * cols + j]))
}

pub fn build<T: Scalar>(name: &str) -> Result<NamedProblem<T>> {
    let p = match name {
        "se2-barycenter-3" => se2_barycenter(),
        "eq-qp-2" => eq_qp_2(),
        "ineq-qp-1" => ineq_qp_1(),
        "ineq-qp-degenerate" => ineq_qp_degenerate(),
        "rosenbrock-ball" => rosenbrock_ball(),
        "double-integrator-oc" => double_integrator(),
        "so3-barycenter-3" => so3_barycenter(),
        _ => {
            return Err(Error::UnknownProblem {
                name: name.to_string(),
                catalog: CATALOG.to_vec(),
            })
        }
    };
    Ok(p)
}

pub fn build_all<T: Scalar>() -> Vec<NamedProblem<T>> {
    CATALOG.iter().map(|n| build(n).expect("catalog entry")).collect()
}

// ---------------------------------------------------------------------------
// barycenters

/// Poses `(x, y, θ)`, picked by hand rather than drawn from a seed.
pub const SE2_POSES: [[f64; 3]; 3] = [[0.0, 0.0, 0.0], [1.0, 0.5, 0.6], [0.3, 1.2, -0.4]];

/// Rotation vectors of the three SO(3) samples.
pub const SO3_ROTVECS: [[f64; 3]; 3] = [[0.3, 0.0, 0.0], [0.0, 0.5, 0.2], [-0.2, 0.1, 0.6]];

/// Group barycenter: `½‖Σᵢ x ⊖ pᵢ‖²`, zero exactly where `Σᵢ x ⊖ pᵢ = 0`.
///
/// On SE(2) this differs from the minimizer of `Σᵢ ½‖x ⊖ pᵢ‖²` because the
/// metric is only left-invariant.
#[derive(Debug, Clone)]
pub struct GroupBarycenter<T> {
    pub manifold: Manifold,
    pub points: Vec<Point<T>>,
}

impl<T: Scalar> GroupBarycenter<T> {
    fn residual(&self, x: ArrayView1<T>) -> (Array1<T>, Array2<T>) {
        let nt = self.manifold.nt();
        let mut r = Array1::zeros(nt);
        let mut j = Array2::zeros((nt, nt));
        for p in &self.points {
            r = r + self.manifold.difference(x, p).expect("barycenter point");
            j = j + self
                .manifold
                .jacobian_difference(x, p, DiffArg::First)
                .expect("barycenter point");
        }
        (r, j)
    }
}

impl<T: Scalar> CostFunction<T> for GroupBarycenter<T> {
    fn value(&self, x: ArrayView1<T>) -> EvalResult<T> {
        let (r, _) = self.residual(x);
        Ok(r.dot(&r) * T::lit(0.5))
    }

    fn gradient(&self, x: ArrayView1<T>) -> EvalResult<Array1<T>> {
        let (r, j) = self.residual(x);
        Ok(j.t().dot(&r))
    }

    fn gauss_newton(&self, x: ArrayView1<T>) -> Option<EvalResult<Array2<T>>> {
        let (_, j) = self.residual(x);
        Some(Ok(j.t().dot(&j)))
    }
}

/// Sum of squared geodesic distances `Σᵢ ½‖x ⊖ pᵢ‖²`.
#[derive(Debug, Clone)]
pub struct SquaredDistances<T> {
    pub manifold: Manifold,
    pub points: Vec<Point<T>>,
}

impl<T: Scalar> SquaredDistances<T> {
    fn terms(&self, x: ArrayView1<T>) -> impl Iterator<Item = (Array1<T>, Array2<T>)> + '_ {
        let x = x.to_owned();
        self.points.iter().map(move |p| {
            let r = self.manifold.difference(&x, p).expect("barycenter point");
            let j = self
                .manifold
                .jacobian_difference(&x, p, DiffArg::First)
                .expect("barycenter point");
            (r, j)
        })
    }
}

impl<T: Scalar> CostFunction<T> for SquaredDistances<T> {
    fn value(&self, x: ArrayView1<T>) -> EvalResult<T> {
        Ok(self.terms(x).fold(T::zero(), |s, (r, _)| s + r.dot(&r) * T::lit(0.5)))
    }

    fn gradient(&self, x: ArrayView1<T>) -> EvalResult<Array1<T>> {
        let nt = self.manifold.nt();
        Ok(self.terms(x).fold(Array1::zeros(nt), |g, (r, j)| g + j.t().dot(&r)))
    }

    fn gauss_newton(&self, x: ArrayView1<T>) -> Option<EvalResult<Array2<T>>> {
        let nt = self.manifold.nt();
        Some(Ok(self
            .terms(x)
            .fold(Array2::zeros((nt, nt)), |h, (_, j)| h + j.t().dot(&j))))
    }
}

pub fn se2_poses<T: Scalar>() -> Vec<Point<T>> {
    SE2_POSES
        .iter()
        .map(|&[x, y, th]| lit(&[x, y, th.cos(), th.sin()]))
        .collect()
}

pub fn so3_points<T: Scalar>() -> Vec<Point<T>> {
    let m = Manifold::SO3;
    SO3_ROTVECS
        .iter()
        .map(|v| m.integrate(&m.neutral::<T>(), &lit::<T>(v)).expect("rotation vector"))
        .collect()
}

fn se2_barycenter<T: Scalar>() -> NamedProblem<T> {
    let m = Manifold::SE2;
    NamedProblem {
        name: "se2-barycenter-3",
        x0: m.neutral(),
        oracle: Some(Oracle {
            x: lit(&[
                0.380_055_717_725_626_24,
                0.496_878_710_235_365_1,
                0.997_778_600_701_122_3,
                0.066_617_294_923_392_98,
            ]),
            mult: Multipliers::zeros(0, 0),
            provenance: "fixed point of x ← x·exp(mean log(x⁻¹pᵢ)) with 3×3 homogeneous matrices",
        }),
        problem: Problem::new(
            m.clone(),
            GroupBarycenter {
                manifold: m,
                points: se2_poses(),
            },
        ),
    }
}

fn so3_barycenter<T: Scalar>() -> NamedProblem<T> {
    let m = Manifold::SO3;
    NamedProblem {
        name: "so3-barycenter-3",
        x0: m.neutral(),
        oracle: Some(Oracle {
            x: lit(&[
                0.017_406_110_034_558_21,
                0.100_416_187_988_347_13,
                0.133_755_776_669_330_4,
                0.985_760_117_234_886_9,
            ]),
            mult: Multipliers::zeros(0, 0),
            provenance: "Karcher fixed point with rotation matrices, quaternion xyzw, w > 0",
        }),
        problem: Problem::new(
            m.clone(),
            SquaredDistances {
                manifold: m,
                points: so3_points(),
            },
        ),
    }
}

// ---------------------------------------------------------------------------
// quadratic programs

fn eq_qp_2<T: Scalar>() -> NamedProblem<T> {
    // Q x + q + Aᵀy = 0, A x = b
    NamedProblem {
        name: "eq-qp-2",
        x0: Array1::zeros(2),
        oracle: Some(Oracle {
            x: lit(&[0.25, 0.75]),
            mult: Multipliers::new(lit(&[0.125]), Array1::zeros(0)),
            provenance: "analytic 3×3 KKT solve",
        }),
        problem: Problem::new(
            Manifold::Euclidean(2),
            QuadraticCost::new(lit2(2, 2, &[2.0, 0.5, 0.5, 1.0]), lit(&[-1.0, -1.0])),
        )
        .with_constraint(AffineConstraint::new(
            ConstraintKind::Equality,
            lit2(1, 2, &[1.0, 1.0]),
            lit(&[1.0]),
        )),
    }
}

fn ineq_qp_1<T: Scalar>() -> NamedProblem<T> {
    NamedProblem {
        name: "ineq-qp-1",
        x0: Array1::zeros(1),
        oracle: Some(Oracle {
            x: lit(&[1.0]),
            mult: Multipliers::new(Array1::zeros(0), lit(&[1.0])),
            provenance: "analytic KKT: x − 2 + z = 0 with x = 1",
        }),
        problem: Problem::new(
            Manifold::Euclidean(1),
            QuadraticCost {
                q: lit2(1, 1, &[1.0]),
                c: lit(&[-2.0]),
                c0: T::lit(2.0),
            },
        )
        .with_constraint(AffineConstraint::new(
            ConstraintKind::Inequality,
            lit2(1, 1, &[1.0]),
            lit(&[1.0]),
        )),
    }
}

fn ineq_qp_degenerate<T: Scalar>() -> NamedProblem<T> {
    NamedProblem {
        name: "ineq-qp-degenerate",
        x0: lit(&[1.0]),
        oracle: Some(Oracle {
            x: lit(&[0.0]),
            mult: Multipliers::new(Array1::zeros(0), lit(&[0.0])),
            provenance: "unconstrained minimizer lies on the boundary",
        }),
        problem: Problem::new(
            Manifold::Euclidean(1),
            QuadraticCost::new(lit2(1, 1, &[1.0]), lit(&[0.0])),
        )
        .with_constraint(AffineConstraint::new(
            ConstraintKind::Inequality,
            lit2(1, 1, &[1.0]),
            lit(&[0.0]),
        )),
    }
}

// ---------------------------------------------------------------------------
// rosenbrock

/// `(1 − a)² + 100 (b − a²)²`
#[derive(Debug, Clone, Copy, Default)]
pub struct Rosenbrock;

impl<T: Scalar> CostFunction<T> for Rosenbrock {
    fn value(&self, x: ArrayView1<T>) -> EvalResult<T> {
        let (a, b) = (x[0], x[1]);
        let (u, v) = (T::one() - a, b - a * a);
        Ok(u * u + T::lit(100.0) * v * v)
    }

    fn gradient(&self, x: ArrayView1<T>) -> EvalResult<Array1<T>> {
        let (a, b) = (x[0], x[1]);
        let v = b - a * a;
        Ok(array![
            T::lit(-2.0) * (T::one() - a) - T::lit(400.0) * a * v,
            T::lit(200.0) * v
        ])
    }

    fn hessian(&self, x: ArrayView1<T>) -> Option<EvalResult<Array2<T>>> {
        let (a, b) = (x[0], x[1]);
        let haa = T::lit(2.0) - T::lit(400.0) * (b - a * a) + T::lit(800.0) * a * a;
        let hab = T::lit(-400.0) * a;
        Some(Ok(array![[haa, hab], [hab, T::lit(200.0)]]))
    }
}

/// `‖x‖² − r² ≤ 0`
#[derive(Debug, Clone, Copy)]
pub struct Ball<T> {
    pub radius: T,
}

impl<T: Scalar> Constraint<T> for Ball<T> {
    fn kind(&self) -> ConstraintKind {
        ConstraintKind::Inequality
    }

    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: ArrayView1<T>) -> EvalResult<Array1<T>> {
        Ok(array![x.dot(&x) - self.radius * self.radius])
    }

    fn jacobian(&self, x: ArrayView1<T>) -> EvalResult<Array2<T>> {
        Ok((&x * T::lit(2.0)).insert_axis(ndarray::Axis(0)))
    }

    fn weighted_hessian(&self, x: ArrayView1<T>, lambda: ArrayView1<T>) -> Option<EvalResult<Array2<T>>> {
        Some(Ok(Array2::eye(x.len()) * (lambda[0] * T::lit(2.0))))
    }
}

fn rosenbrock_ball<T: Scalar>() -> NamedProblem<T> {
    NamedProblem {
        name: "rosenbrock-ball",
        x0: Array1::zeros(2),
        oracle: Some(Oracle {
            x: lit(&[0.786_415_154_168_427_8, 0.617_698_312_523_393_5]),
            mult: Multipliers::new(Array1::zeros(0), lit(&[0.121_496_556_999_288_4])),
            provenance: "40-digit Newton root of the boundary KKT system, seeded from a grid search",
        }),
        problem: Problem::new(Manifold::Euclidean(2), Rosenbrock).with_constraint(Ball {
            radius: T::one(),
        }),
    }
}

// ---------------------------------------------------------------------------
// optimal control

/// Direct transcription of a double integrator driven towards `p = 1`.
///
/// Variables are `(p₁…p_N, v₁…v_N, u₀…u_{N−1})` with `p₀ = v₀ = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleIntegrator {
    pub n: usize,
    pub dt: f64,
    pub u_max: f64,
    pub target: f64,
    pub w_track: f64,
    pub w_terminal: f64,
    pub w_control: f64,
}

impl Default for DoubleIntegrator {
    fn default() -> Self {
        Self {
            n: 20,
            dt: 0.03,
            u_max: 2.0,
            target: 1.0,
            w_track: 10.0,
            w_terminal: 10.0,
            w_control: 0.1,
        }
    }
}

impl DoubleIntegrator {
    pub fn nx(&self) -> usize {
        3 * self.n
    }

    /// Index of `p_k`, `k ≥ 1`.
    pub fn ip(&self, k: usize) -> usize {
        k - 1
    }

    /// Index of `v_k`, `k ≥ 1`.
    pub fn iv(&self, k: usize) -> usize {
        self.n + k - 1
    }

    pub fn iu(&self, k: usize) -> usize {
        2 * self.n + k
    }

    pub fn controls<'a, T: Scalar>(&self, x: &'a Point<T>) -> ArrayView1<'a, T> {
        x.slice(ndarray::s![2 * self.n..])
    }

    /// `½ w_t Σₖ (pₖ − p̄)² + ½ w_f ((p_N − p̄)² + v_N²) + ½ w_u Σₖ uₖ²`
    pub fn cost<T: Scalar>(&self) -> QuadraticCost<T> {
        let (n, nx) = (self.n, self.nx());
        let mut q = Array2::zeros((nx, nx));
        let mut c = Array1::zeros(nx);
        let mut c0 = 0.0;
        for k in 1..=n {
            let w = self.w_track + if k == n { self.w_terminal } else { 0.0 };
            q[[self.ip(k), self.ip(k)]] = T::lit(w);
            c[self.ip(k)] = T::lit(-w * self.target);
            c0 += 0.5 * w * self.target * self.target;
        }
        q[[self.iv(n), self.iv(n)]] = T::lit(self.w_terminal);
        for k in 0..n {
            q[[self.iu(k), self.iu(k)]] = T::lit(self.w_control);
        }
        QuadraticCost {
            q,
            c,
            c0: T::lit(c0),
        }
    }

    /// Rows `p_{k+1} − p_k − Δt v_k` then `v_{k+1} − v_k − Δt u_k`.
    pub fn dynamics<T: Scalar>(&self) -> AffineConstraint<T> {
        let (n, nx) = (self.n, self.nx());
        let mut a = Array2::zeros((2 * n, nx));
        for k in 0..n {
            a[[k, self.ip(k + 1)]] = T::one();
            a[[n + k, self.iv(k + 1)]] = T::one();
            if k > 0 {
                a[[k, self.ip(k)]] = -T::one();
                a[[k, self.iv(k)]] = T::lit(-self.dt);
                a[[n + k, self.iv(k)]] = -T::one();
            }
            a[[n + k, self.iu(k)]] = T::lit(-self.dt);
        }
        AffineConstraint::new(ConstraintKind::Equality, a, Array1::zeros(2 * n))
    }

    /// `u_k ≤ u_max` then `−u_k ≤ u_max`.
    pub fn bounds<T: Scalar>(&self) -> AffineConstraint<T> {
        let (n, nx) = (self.n, self.nx());
        let mut a = Array2::zeros((2 * n, nx));
        for k in 0..n {
            a[[k, self.iu(k)]] = T::one();
            a[[n + k, self.iu(k)]] = -T::one();
        }
        AffineConstraint::new(
            ConstraintKind::Inequality,
            a,
            Array1::from_elem(2 * n, T::lit(self.u_max)),
        )
    }

    pub fn problem<T: Scalar>(&self) -> Problem<T> {
        Problem::new(Manifold::Euclidean(self.nx()), self.cost())
            .with_constraint(self.dynamics())
            .with_constraint(self.bounds())
    }
}

fn double_integrator<T: Scalar>() -> NamedProblem<T> {
    let di = DoubleIntegrator::default();
    NamedProblem {
        name: "double-integrator-oc",
        x0: Array1::zeros(di.nx()),
        oracle: None,
        problem: di.problem(),
    }
}

// ---------------------------------------------------------------------------
// random instances

/// `A (anchor ⊖ x) − b` (equality or inequality) on any manifold.
#[derive(Debug, Clone)]
pub struct TangentAffine<T> {
    pub kind: ConstraintKind,
    pub manifold: Manifold,
    pub anchor: Point<T>,
    pub a: Array2<T>,
    pub b: Array1<T>,
}

impl<T: Scalar> Constraint<T> for TangentAffine<T> {
    fn kind(&self) -> ConstraintKind {
        self.kind
    }

    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: ArrayView1<T>) -> EvalResult<Array1<T>> {
        let d = self.manifold.difference(&self.anchor, x).expect("anchor");
        Ok(self.a.dot(&d) - &self.b)
    }

    fn jacobian(&self, x: ArrayView1<T>) -> EvalResult<Array2<T>> {
        let j = self
            .manifold
            .jacobian_difference(&self.anchor, x, DiffArg::Second)
            .expect("anchor");
        Ok(self.a.dot(&j))
    }
}

/// A problem together with a primal-dual point, multiplier estimates and a
/// penalty, for exercising the merit and Newton machinery.
#[derive(Debug)]
pub struct RandomInstance<T: Scalar> {
    pub problem: Problem<T>,
    pub x: Point<T>,
    pub mult: Multipliers<T>,
    pub est: Multipliers<T>,
    pub mu: T,
}

/// Deterministic random instance. Euclidean instances get an indefinite
/// quadratic cost; group instances a sum of squared distances.
pub fn random_instance<T: Scalar>(seed: u64) -> RandomInstance<T> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let manifold = match rng.random_range(0..6) {
        0 => Manifold::Euclidean(rng.random_range(1..=6)),
        1 => Manifold::SO2,
        2 => Manifold::SE2,
        3 => Manifold::SO3,
        4 => Manifold::SE3,
        _ => Manifold::Product(vec![Manifold::SE2, Manifold::Euclidean(2), Manifold::SO3]),
    };
    let nt = manifold.nt();
    let unif = |rng: &mut rand_chacha::ChaCha8Rng, n: usize, lo: f64, hi: f64| -> Array1<T> {
        (0..n).map(|_| T::lit(rng.random_range(lo..hi))).collect()
    };
    let mat = |rng: &mut rand_chacha::ChaCha8Rng, r: usize, c: usize| -> Array2<T> {
        Array2::from_shape_fn((r, c), |_| T::lit(rng.random_range(-1.0..1.0)))
    };

    let mut problem = match manifold {
        Manifold::Euclidean(n) => {
            let m = mat(&mut rng, n, n);
            let c = unif(&mut rng, n, -1.0, 1.0);
            Problem::new(manifold.clone(), QuadraticCost::new(&m + &m.t(), c))
        }
        _ => {
            let points = (0..2).map(|_| manifold.sample_point(&mut rng)).collect();
            Problem::new(
                manifold.clone(),
                SquaredDistances {
                    manifold: manifold.clone(),
                    points,
                },
            )
        }
    };
    let ne = rng.random_range(0..nt.min(3));
    let ni = rng.random_range(0..=3);
    let anchor: Point<T> = manifold.sample_point(&mut rng);
    for (kind, m) in [(ConstraintKind::Equality, ne), (ConstraintKind::Inequality, ni)] {
        if m > 0 {
            problem = problem.with_constraint(TangentAffine {
                kind,
                manifold: manifold.clone(),
                anchor: anchor.clone(),
                a: mat(&mut rng, m, nt),
                b: unif(&mut rng, m, -0.5, 0.5),
            });
        }
    }
    RandomInstance {
        mult: Multipliers::new(unif(&mut rng, ne, -1.0, 1.0), unif(&mut rng, ni, 0.0, 1.0)),
        est: Multipliers::new(unif(&mut rng, ne, -1.0, 1.0), unif(&mut rng, ni, 0.0, 1.0)),
        mu: T::lit(10f64.powf(rng.random_range(-4.0..0.0))),
        x: manifold.sample_point(&mut rng),
        problem,
    }
}
