//! Manifolds on which the decision variable lives.
//!
//! Points are stored in their ambient representation (`nrep` coordinates) and
//! perturbed through tangent vectors (`nt` coordinates):
//!
//! | kind        | representation                 | tangent            |
//! |-------------|--------------------------------|--------------------|
//! | `R^n`       | `x`                            | `v`                |
//! | SO(2)       | `(cos θ, sin θ)`               | `ω`                |
//! | SE(2)       | `(x, y, cos θ, sin θ)`         | `(vx, vy, ω)`      |
//! | SO(3)       | quaternion `(qx, qy, qz, qw)`  | `(ωx, ωy, ωz)`     |
//! | SE(3)       | `(x, y, z, qx, qy, qz, qw)`    | `(v, ω)`           |
//!
//! Lie groups use the group exponential as retraction: `x ⊕ v = x · exp(v)`
//! and `x ⊖ y = log(x⁻¹ · y)`.

mod lie;

use ndarray::{s, Array1, Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Result};
use crate::scalar::Scalar;

use lie::{Quat, Rot2, Se2, Se3};

/// Element of a manifold, in ambient coordinates.
pub type Point<T> = Array1<T>;
/// Tangent-space coordinates.
pub type Tangent<T> = Array1<T>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManifoldKind {
    Euclidean,
    SO2,
    SE2,
    SO3,
    SE3,
    Product,
}

/// Which argument of `x ⊖ y` a Jacobian is taken with respect to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffArg {
    First,
    Second,
}

/// Manifold descriptor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Manifold {
    Euclidean(usize),
    SO2,
    SE2,
    SO3,
    SE3,
    Product(Vec<Manifold>),
}

impl Manifold {
    pub fn kind(&self) -> ManifoldKind {
        match self {
            Manifold::Euclidean(_) => ManifoldKind::Euclidean,
            Manifold::SO2 => ManifoldKind::SO2,
            Manifold::SE2 => ManifoldKind::SE2,
            Manifold::SO3 => ManifoldKind::SO3,
            Manifold::SE3 => ManifoldKind::SE3,
            Manifold::Product(_) => ManifoldKind::Product,
        }
    }

    /// Length of the ambient representation.
    pub fn nrep(&self) -> usize {
        match self {
            Manifold::Euclidean(n) => *n,
            Manifold::SO2 => 2,
            Manifold::SE2 => 4,
            Manifold::SO3 => 4,
            Manifold::SE3 => 7,
            Manifold::Product(parts) => parts.iter().map(Manifold::nrep).sum(),
        }
    }

    /// Tangent dimension.
    pub fn nt(&self) -> usize {
        match self {
            Manifold::Euclidean(n) => *n,
            Manifold::SO2 => 1,
            Manifold::SE2 => 3,
            Manifold::SO3 => 3,
            Manifold::SE3 => 6,
            Manifold::Product(parts) => parts.iter().map(Manifold::nt).sum(),
        }
    }

    /// Group identity, or the origin for `R^n`.
    pub fn neutral<T: Scalar>(&self) -> Point<T> {
        let (o, z) = (T::one(), T::zero());
        match self {
            Manifold::Euclidean(n) => Array1::zeros(*n),
            Manifold::SO2 => Array1::from(vec![o, z]),
            Manifold::SE2 => Array1::from(vec![z, z, o, z]),
            Manifold::SO3 => Array1::from(vec![z, z, z, o]),
            Manifold::SE3 => Array1::from(vec![z, z, z, z, z, z, o]),
            Manifold::Product(parts) => concat(parts.iter().map(|m| m.neutral())),
        }
    }

    /// Deterministic random point: translations uniform in `[-1, 1]`,
    /// rotations uniform on the group.
    pub fn random_point<T: Scalar>(&self, seed: u64) -> Point<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_point(&mut rng)
    }

    pub fn sample_point<T: Scalar, R: Rng + ?Sized>(&self, rng: &mut R) -> Point<T> {
        let mut unif = |n: usize| -> Vec<T> {
            (0..n)
                .map(|_| T::lit(rng.random_range(-1.0..=1.0)))
                .collect()
        };
        match self {
            Manifold::Euclidean(n) => Array1::from(unif(*n)),
            Manifold::SO2 => {
                let th = T::lit(rng.random_range(-std::f64::consts::PI..std::f64::consts::PI));
                Array1::from(vec![th.cos(), th.sin()])
            }
            Manifold::SE2 => {
                let mut v = unif(2);
                let th = T::lit(rng.random_range(-std::f64::consts::PI..std::f64::consts::PI));
                v.extend([th.cos(), th.sin()]);
                Array1::from(v)
            }
            Manifold::SO3 => {
                let q = uniform_quat::<T, R>(rng);
                Array1::from(vec![q.x, q.y, q.z, q.w])
            }
            Manifold::SE3 => {
                let mut v = unif(3);
                let q = uniform_quat::<T, R>(rng);
                v.extend([q.x, q.y, q.z, q.w]);
                Array1::from(v)
            }
            Manifold::Product(parts) => {
                let pieces: Vec<Point<T>> = parts.iter().map(|m| m.sample_point(rng)).collect();
                concat(pieces.into_iter())
            }
        }
    }

    /// Checks the representation length and that rotation blocks have unit
    /// norm within `tol`.
    pub fn is_valid_point<'a, T: Scalar>(&self, x: impl Into<ArrayView1<'a, T>>, tol: T) -> bool {
        let x = x.into();
        if x.len() != self.nrep() || x.iter().any(|c| !c.is_finite()) {
            return false;
        }
        let unit = |a: ArrayView1<T>| (a.dot(&a).sqrt() - T::one()).abs() <= tol;
        match self {
            Manifold::Euclidean(_) => true,
            Manifold::SO2 | Manifold::SO3 => unit(x),
            Manifold::SE2 => unit(x.slice(s![2..4])),
            Manifold::SE3 => unit(x.slice(s![3..7])),
            Manifold::Product(parts) => {
                let mut off = 0;
                parts.iter().all(|m| {
                    let n = m.nrep();
                    let ok = m.is_valid_point(x.slice(s![off..off + n]), tol);
                    off += n;
                    ok
                })
            }
        }
    }

    /// Retraction `x ⊕ v`. Rotation blocks are re-normalized.
    pub fn integrate<'a, 'b, T: Scalar>(
        &self,
        x: impl Into<ArrayView1<'a, T>>,
        v: impl Into<ArrayView1<'b, T>>,
    ) -> Result<Point<T>> {
        let (x, v) = (x.into(), v.into());
        check_dim("integrate: point", self.nrep(), x.len())?;
        check_dim("integrate: tangent", self.nt(), v.len())?;
        Ok(self.integrate_unchecked(x, v))
    }

    fn integrate_unchecked<T: Scalar>(&self, x: ArrayView1<T>, v: ArrayView1<T>) -> Point<T> {
        match self {
            Manifold::Euclidean(_) => &x + &v,
            Manifold::SO2 => {
                let r = rot2(x).compose(&Rot2::exp(v[0])).normalized();
                Array1::from(vec![r.c, r.s])
            }
            Manifold::SE2 => se2_to_vec(&se2(x).compose(&Se2::exp([v[0], v[1], v[2]]))),
            Manifold::SO3 => {
                let q = quat(x).mul(&Quat::exp([v[0], v[1], v[2]])).normalized();
                Array1::from(vec![q.x, q.y, q.z, q.w])
            }
            Manifold::SE3 => {
                let e = Se3::exp([v[0], v[1], v[2], v[3], v[4], v[5]]);
                se3_to_vec(&se3(x).compose(&e))
            }
            Manifold::Product(parts) => concat(self.split(parts, x, v).map(
                |(m, xs, vs)| m.integrate_unchecked(xs, vs),
            )),
        }
    }

    /// `x ⊖ y`: the tangent `v` at `x` with `x ⊕ v = y`.
    pub fn difference<'a, 'b, T: Scalar>(
        &self,
        x: impl Into<ArrayView1<'a, T>>,
        y: impl Into<ArrayView1<'b, T>>,
    ) -> Result<Tangent<T>> {
        let (x, y) = (x.into(), y.into());
        check_dim("difference: first point", self.nrep(), x.len())?;
        check_dim("difference: second point", self.nrep(), y.len())?;
        Ok(self.difference_unchecked(x, y))
    }

    fn difference_unchecked<T: Scalar>(&self, x: ArrayView1<T>, y: ArrayView1<T>) -> Tangent<T> {
        match self {
            Manifold::Euclidean(_) => &y - &x,
            Manifold::SO2 => {
                Array1::from(vec![rot2(x).inverse().compose(&rot2(y)).log()])
            }
            Manifold::SE2 => Array1::from(se2(x).inverse().compose(&se2(y)).log().to_vec()),
            Manifold::SO3 => Array1::from(quat(x).conj().mul(&quat(y)).log().to_vec()),
            Manifold::SE3 => Array1::from(se3(x).inverse().compose(&se3(y)).log().to_vec()),
            Manifold::Product(parts) => concat(self.split_rep(parts, x, y).map(
                |(m, xs, ys)| m.difference_unchecked(xs, ys),
            )),
        }
    }

    /// Jacobian of `x ⊖ y` with respect to `x` or `y`, where both arguments
    /// are perturbed through [`Manifold::integrate`].
    pub fn jacobian_difference<'a, 'b, T: Scalar>(
        &self,
        x: impl Into<ArrayView1<'a, T>>,
        y: impl Into<ArrayView1<'b, T>>,
        arg: DiffArg,
    ) -> Result<Array2<T>> {
        let (x, y) = (x.into(), y.into());
        check_dim("jacobian_difference: first point", self.nrep(), x.len())?;
        check_dim("jacobian_difference: second point", self.nrep(), y.len())?;
        Ok(self.jacobian_difference_unchecked(x, y, arg))
    }

    fn jacobian_difference_unchecked<T: Scalar>(
        &self,
        x: ArrayView1<T>,
        y: ArrayView1<T>,
        arg: DiffArg,
    ) -> Array2<T> {
        // d/dδ log(exp(−δ) X⁻¹Y) = −Jl⁻¹(ξ) = −Jr⁻¹(−ξ)
        // d/dδ log(X⁻¹Y exp(δ))  =  Jr⁻¹(ξ)
        let sign = match arg {
            DiffArg::First => -T::one(),
            DiffArg::Second => T::one(),
        };
        let n = self.nt();
        match self {
            Manifold::Euclidean(_) | Manifold::SO2 => Array2::eye(n) * sign,
            Manifold::SE2 => {
                let xi = se2(x).inverse().compose(&se2(y)).log();
                let xi = match arg {
                    DiffArg::First => xi.map(|c| -c),
                    DiffArg::Second => xi,
                };
                mat_from(Se2::jr_inv(xi)) * sign
            }
            Manifold::SO3 => {
                let xi = quat(x).conj().mul(&quat(y)).log();
                let xi = match arg {
                    DiffArg::First => xi.map(|c| -c),
                    DiffArg::Second => xi,
                };
                mat_from(lie::so3_jr_inv(&xi)) * sign
            }
            Manifold::SE3 => {
                let xi = se3(x).inverse().compose(&se3(y)).log();
                let xi = match arg {
                    DiffArg::First => xi.map(|c| -c),
                    DiffArg::Second => xi,
                };
                mat_from(Se3::jr_inv(xi)) * sign
            }
            Manifold::Product(parts) => {
                let mut out = Array2::zeros((n, n));
                let mut off = 0;
                for (m, xs, ys) in self.split_rep(parts, x, y) {
                    let k = m.nt();
                    out.slice_mut(s![off..off + k, off..off + k])
                        .assign(&m.jacobian_difference_unchecked(xs, ys, arg));
                    off += k;
                }
                out
            }
        }
    }

    fn split<'s, 'x, T: Scalar>(
        &'s self,
        parts: &'s [Manifold],
        x: ArrayView1<'x, T>,
        v: ArrayView1<'x, T>,
    ) -> impl Iterator<Item = (&'s Manifold, ArrayView1<'x, T>, ArrayView1<'x, T>)> + 's
    where
        'x: 's,
    {
        let mut ro = 0;
        let mut to = 0;
        parts.iter().map(move |m| {
            let (nr, nt) = (m.nrep(), m.nt());
            let out = (m, x.slice_move(s![ro..ro + nr]), v.slice_move(s![to..to + nt]));
            ro += nr;
            to += nt;
            out
        })
    }

    fn split_rep<'s, 'x, T: Scalar>(
        &'s self,
        parts: &'s [Manifold],
        x: ArrayView1<'x, T>,
        y: ArrayView1<'x, T>,
    ) -> impl Iterator<Item = (&'s Manifold, ArrayView1<'x, T>, ArrayView1<'x, T>)> + 's
    where
        'x: 's,
    {
        let mut ro = 0;
        parts.iter().map(move |m| {
            let nr = m.nrep();
            let out = (m, x.slice_move(s![ro..ro + nr]), y.slice_move(s![ro..ro + nr]));
            ro += nr;
            out
        })
    }
}

fn concat<T: Scalar>(pieces: impl Iterator<Item = Array1<T>>) -> Array1<T> {
    let mut v = Vec::new();
    for p in pieces {
        v.extend(p.iter().copied());
    }
    Array1::from(v)
}

fn mat_from<T: Scalar, const N: usize>(m: [[T; N]; N]) -> Array2<T> {
    Array2::from_shape_fn((N, N), |(i, j)| m[i][j])
}

fn rot2<T: Scalar>(x: ArrayView1<T>) -> Rot2<T> {
    Rot2 { c: x[0], s: x[1] }
}

fn se2<T: Scalar>(x: ArrayView1<T>) -> Se2<T> {
    Se2 {
        t: [x[0], x[1]],
        r: Rot2 { c: x[2], s: x[3] },
    }
}

fn se2_to_vec<T: Scalar>(g: &Se2<T>) -> Array1<T> {
    let r = g.r.normalized();
    Array1::from(vec![g.t[0], g.t[1], r.c, r.s])
}

fn quat<T: Scalar>(x: ArrayView1<T>) -> Quat<T> {
    Quat {
        x: x[0],
        y: x[1],
        z: x[2],
        w: x[3],
    }
}

fn se3<T: Scalar>(x: ArrayView1<T>) -> Se3<T> {
    Se3 {
        t: [x[0], x[1], x[2]],
        q: quat(x.slice(s![3..7])),
    }
}

fn se3_to_vec<T: Scalar>(g: &Se3<T>) -> Array1<T> {
    let q = g.q.normalized();
    Array1::from(vec![g.t[0], g.t[1], g.t[2], q.x, q.y, q.z, q.w])
}

/// Shoemake's uniform sampling on the unit quaternions.
fn uniform_quat<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> Quat<T> {
    let tau = std::f64::consts::TAU;
    let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let q = Quat {
        x: T::lit(a * (tau * u2).sin()),
        y: T::lit(a * (tau * u2).cos()),
        z: T::lit(b * (tau * u3).sin()),
        w: T::lit(b * (tau * u3).cos()),
    };
    debug_assert!((q.norm() - T::one()).abs() < T::lit(1e-6));
    q
}
