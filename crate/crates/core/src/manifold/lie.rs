//! Closed-form exponential, logarithm and right-Jacobian inverses for the
//! planar and spatial rotation/rigid-motion groups.
//!
//! Tangent coordinates of rigid motions are ordered (linear, angular).
//! Quaternions are stored as (x, y, z, w).

use crate::scalar::Scalar;

pub(crate) type Vec3<T> = [T; 3];
pub(crate) type Mat3<T> = [[T; 3]; 3];

/// Below this angle, first-order coefficients switch to their Taylor series.
const SMALL_ANGLE: f64 = 1e-6;
/// Coefficients that divide by θ³ or higher lose precision much earlier;
/// their series are used on a wider interval.
const SERIES_ANGLE: f64 = 0.1;

/// `sin θ / θ`
pub(crate) fn sinc<T: Scalar>(t: T) -> T {
    if t.abs() < T::lit(SMALL_ANGLE) {
        T::one() - t * t / T::lit(6.0)
    } else {
        t.sin() / t
    }
}

/// `(1 − cos θ) / θ²`, evaluated as `2 sin²(θ/2) / θ²`.
pub(crate) fn versine_sq<T: Scalar>(t: T) -> T {
    if t.abs() < T::lit(SMALL_ANGLE) {
        T::lit(0.5) - t * t / T::lit(24.0)
    } else {
        let h = (t / T::lit(2.0)).sin();
        T::lit(2.0) * h * h / (t * t)
    }
}

/// `(θ − sin θ) / θ³`
pub(crate) fn theta_minus_sin_cube<T: Scalar>(t: T) -> T {
    if t.abs() < T::lit(SERIES_ANGLE) {
        let t2 = t * t;
        T::lit(1.0 / 6.0) - t2 / T::lit(120.0) + t2 * t2 / T::lit(5040.0)
            - t2 * t2 * t2 / T::lit(362_880.0)
    } else {
        (t - t.sin()) / (t * t * t)
    }
}

/// `(θ² + 2 cos θ − 2) / (2 θ⁴)`
fn se3_coef2<T: Scalar>(t: T) -> T {
    if t.abs() < T::lit(SERIES_ANGLE) {
        let t2 = t * t;
        T::lit(1.0 / 24.0) - t2 / T::lit(720.0) + t2 * t2 / T::lit(40_320.0)
            - t2 * t2 * t2 / T::lit(3_628_800.0)
    } else {
        let t2 = t * t;
        (t2 + T::lit(2.0) * t.cos() - T::lit(2.0)) / (T::lit(2.0) * t2 * t2)
    }
}

/// `(2θ − 3 sin θ + θ cos θ) / (2 θ⁵)`
fn se3_coef3<T: Scalar>(t: T) -> T {
    if t.abs() < T::lit(SERIES_ANGLE) {
        let t2 = t * t;
        T::lit(1.0 / 120.0) - t2 / T::lit(2520.0) + t2 * t2 / T::lit(120_960.0)
            - t2 * t2 * t2 / T::lit(9_979_200.0)
    } else {
        let t2 = t * t;
        (T::lit(2.0) * t - T::lit(3.0) * t.sin() + t * t.cos()) / (T::lit(2.0) * t2 * t2 * t)
    }
}

/// `(1 − (θ/2) cot(θ/2)) / θ²`, the quadratic coefficient of the SO(3)
/// inverse Jacobian. Well defined on `[0, π]`.
fn so3_inv_coef<T: Scalar>(t: T) -> T {
    if t.abs() < T::lit(SERIES_ANGLE) {
        let t2 = t * t;
        T::lit(1.0 / 12.0) + t2 / T::lit(720.0) + t2 * t2 / T::lit(30_240.0)
            + t2 * t2 * t2 / T::lit(1_209_600.0)
    } else {
        let h = t / T::lit(2.0);
        (T::one() - h * h.cos() / h.sin()) / (t * t)
    }
}

// ---------------------------------------------------------------------------
// small fixed-size linear algebra

pub(crate) fn norm3<T: Scalar>(v: &Vec3<T>) -> T {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn cross<T: Scalar>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn hat<T: Scalar>(v: &Vec3<T>) -> Mat3<T> {
    let z = T::zero();
    [[z, -v[2], v[1]], [v[2], z, -v[0]], [-v[1], v[0], z]]
}

pub(crate) fn identity3<T: Scalar>() -> Mat3<T> {
    let (o, z) = (T::one(), T::zero());
    [[o, z, z], [z, o, z], [z, z, o]]
}

pub(crate) fn matmul3<T: Scalar>(a: &Mat3<T>, b: &Mat3<T>) -> Mat3<T> {
    let mut c = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    c
}

pub(crate) fn matvec3<T: Scalar>(a: &Mat3<T>, v: &Vec3<T>) -> Vec3<T> {
    [
        a[0][0] * v[0] + a[0][1] * v[1] + a[0][2] * v[2],
        a[1][0] * v[0] + a[1][1] * v[1] + a[1][2] * v[2],
        a[2][0] * v[0] + a[2][1] * v[1] + a[2][2] * v[2],
    ]
}

fn lincomb3<T: Scalar>(terms: &[(T, &Mat3<T>)]) -> Mat3<T> {
    let mut c = [[T::zero(); 3]; 3];
    for (w, m) in terms {
        for i in 0..3 {
            for j in 0..3 {
                c[i][j] = c[i][j] + *w * m[i][j];
            }
        }
    }
    c
}

fn neg3<T: Scalar>(v: &Vec3<T>) -> Vec3<T> {
    [-v[0], -v[1], -v[2]]
}

// ---------------------------------------------------------------------------
// SO(2) / SE(2)

/// Planar rotation stored as (cos, sin).
#[derive(Clone, Copy, Debug)]
pub(crate) struct Rot2<T> {
    pub c: T,
    pub s: T,
}

impl<T: Scalar> Rot2<T> {
    pub fn exp(theta: T) -> Self {
        Self {
            c: theta.cos(),
            s: theta.sin(),
        }
    }

    pub fn log(&self) -> T {
        self.s.atan2(self.c)
    }

    pub fn compose(&self, o: &Self) -> Self {
        Self {
            c: self.c * o.c - self.s * o.s,
            s: self.s * o.c + self.c * o.s,
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            c: self.c,
            s: -self.s,
        }
    }

    pub fn rotate(&self, p: [T; 2]) -> [T; 2] {
        [self.c * p[0] - self.s * p[1], self.s * p[0] + self.c * p[1]]
    }

    pub fn normalized(&self) -> Self {
        let n = (self.c * self.c + self.s * self.s).sqrt();
        Self {
            c: self.c / n,
            s: self.s / n,
        }
    }
}

/// Rigid planar motion.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Se2<T> {
    pub t: [T; 2],
    pub r: Rot2<T>,
}

impl<T: Scalar> Se2<T> {
    /// `V(θ) = [[a, −b], [b, a]]` with `a = sin θ/θ`, `b = (1 − cos θ)/θ`.
    fn v_coefs(theta: T) -> (T, T) {
        (sinc(theta), versine_sq(theta) * theta)
    }

    pub fn exp(v: [T; 3]) -> Self {
        let (a, b) = Self::v_coefs(v[2]);
        Self {
            t: [a * v[0] - b * v[1], b * v[0] + a * v[1]],
            r: Rot2::exp(v[2]),
        }
    }

    pub fn log(&self) -> [T; 3] {
        let theta = self.r.log();
        let (a, b) = Self::v_coefs(theta);
        let d = a * a + b * b;
        [
            (a * self.t[0] + b * self.t[1]) / d,
            (-b * self.t[0] + a * self.t[1]) / d,
            theta,
        ]
    }

    pub fn compose(&self, o: &Self) -> Self {
        let rt = self.r.rotate(o.t);
        Self {
            t: [self.t[0] + rt[0], self.t[1] + rt[1]],
            r: self.r.compose(&o.r),
        }
    }

    pub fn inverse(&self) -> Self {
        let ri = self.r.inverse();
        let t = ri.rotate(self.t);
        Self {
            t: [-t[0], -t[1]],
            r: ri,
        }
    }

    /// Inverse of the right Jacobian at tangent `v`.
    pub fn jr_inv(v: [T; 3]) -> Mat3<T> {
        let [r1, r2, th] = v;
        let a = sinc(th);
        let b = versine_sq(th) * th;
        let c = versine_sq(th);
        let d = theta_minus_sin_cube(th) * th;
        // Jr = [[a, b, c1], [-b, a, c2], [0, 0, 1]]
        let c1 = r1 * d - r2 * c;
        let c2 = r1 * c + r2 * d;
        let det = a * a + b * b;
        let m = [[a / det, -b / det], [b / det, a / det]];
        let z = T::zero();
        [
            [m[0][0], m[0][1], -(m[0][0] * c1 + m[0][1] * c2)],
            [m[1][0], m[1][1], -(m[1][0] * c1 + m[1][1] * c2)],
            [z, z, T::one()],
        ]
    }
}

// ---------------------------------------------------------------------------
// SO(3) / SE(3)

#[derive(Clone, Copy, Debug)]
pub(crate) struct Quat<T> {
    pub x: T,
    pub y: T,
    pub z: T,
    pub w: T,
}

impl<T: Scalar> Quat<T> {
    pub fn vec(&self) -> Vec3<T> {
        [self.x, self.y, self.z]
    }

    pub fn exp(phi: Vec3<T>) -> Self {
        let th = norm3(&phi);
        let half = th / T::lit(2.0);
        let k = sinc(half) / T::lit(2.0);
        Self {
            x: k * phi[0],
            y: k * phi[1],
            z: k * phi[2],
            w: half.cos(),
        }
    }

    /// Representative with `w ≥ 0`; at `w = 0` the vector part is chosen so
    /// that its first nonzero component is positive.
    pub fn canonical(&self) -> Self {
        let flip = if self.w < T::zero() {
            true
        } else if self.w == T::zero() {
            self.vec()
                .iter()
                .find(|c| **c != T::zero())
                .is_some_and(|c| *c < T::zero())
        } else {
            false
        };
        if flip {
            Self {
                x: -self.x,
                y: -self.y,
                z: -self.z,
                w: -self.w,
            }
        } else {
            *self
        }
    }

    pub fn log(&self) -> Vec3<T> {
        let q = self.canonical();
        let v = q.vec();
        let n = norm3(&v);
        let k = if n < T::lit(SMALL_ANGLE) {
            // 2 atan(n/w)/n ≈ (2/w)(1 − n²/(3w²))
            let r = n / q.w;
            T::lit(2.0) / q.w * (T::one() - r * r / T::lit(3.0))
        } else {
            T::lit(2.0) * n.atan2(q.w) / n
        };
        [k * v[0], k * v[1], k * v[2]]
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self {
            w: self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            x: self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            y: self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            z: self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            x: -self.x,
            y: -self.y,
            z: -self.z,
            w: self.w,
        }
    }

    pub fn rotate(&self, p: &Vec3<T>) -> Vec3<T> {
        let u = self.vec();
        let two = T::lit(2.0);
        let t = cross(&u, p);
        let t = [two * t[0], two * t[1], two * t[2]];
        let ut = cross(&u, &t);
        [
            p[0] + self.w * t[0] + ut[0],
            p[1] + self.w * t[1] + ut[1],
            p[2] + self.w * t[2] + ut[2],
        ]
    }

    pub fn normalized(&self) -> Self {
        let n = (self.x * self.x + self.y * self.y + self.z * self.z + self.w * self.w).sqrt();
        Self {
            x: self.x / n,
            y: self.y / n,
            z: self.z / n,
            w: self.w / n,
        }
    }

    pub fn norm(&self) -> T {
        (self.x * self.x + self.y * self.y + self.z * self.z + self.w * self.w).sqrt()
    }
}

/// SO(3) left Jacobian `I + (1−cos θ)/θ² φ^ + (θ−sin θ)/θ³ φ^²`.
pub(crate) fn so3_jl<T: Scalar>(phi: &Vec3<T>) -> Mat3<T> {
    let th = norm3(phi);
    let k = hat(phi);
    let k2 = matmul3(&k, &k);
    lincomb3(&[
        (T::one(), &identity3()),
        (versine_sq(th), &k),
        (theta_minus_sin_cube(th), &k2),
    ])
}

/// SO(3) inverse left Jacobian `I − ½ φ^ + e(θ) φ^²`.
pub(crate) fn so3_jl_inv<T: Scalar>(phi: &Vec3<T>) -> Mat3<T> {
    let th = norm3(phi);
    let k = hat(phi);
    let k2 = matmul3(&k, &k);
    lincomb3(&[
        (T::one(), &identity3()),
        (-T::lit(0.5), &k),
        (so3_inv_coef(th), &k2),
    ])
}

/// SO(3) inverse right Jacobian, `Jr⁻¹(φ) = Jl⁻¹(−φ)`.
pub(crate) fn so3_jr_inv<T: Scalar>(phi: &Vec3<T>) -> Mat3<T> {
    so3_jl_inv(&neg3(phi))
}

/// Off-diagonal block of the SE(3) left Jacobian at `(ρ, φ)`.
fn se3_q_left<T: Scalar>(rho: &Vec3<T>, phi: &Vec3<T>) -> Mat3<T> {
    let th = norm3(phi);
    let r = hat(rho);
    let p = hat(phi);
    let pr = matmul3(&p, &r);
    let rp = matmul3(&r, &p);
    let prp = matmul3(&pr, &p);
    let ppr = matmul3(&p, &pr);
    let rpp = matmul3(&rp, &p);
    let prpp = matmul3(&prp, &p);
    let pprp = matmul3(&p, &prp);
    let a = theta_minus_sin_cube(th);
    let b = se3_coef2(th);
    let c = se3_coef3(th);
    lincomb3(&[
        (T::lit(0.5), &r),
        (a, &pr),
        (a, &rp),
        (a, &prp),
        (b, &ppr),
        (b, &rpp),
        (-T::lit(3.0) * b, &prp),
        (c, &prpp),
        (c, &pprp),
    ])
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Se3<T> {
    pub t: Vec3<T>,
    pub q: Quat<T>,
}

impl<T: Scalar> Se3<T> {
    pub fn exp(v: [T; 6]) -> Self {
        let rho = [v[0], v[1], v[2]];
        let phi = [v[3], v[4], v[5]];
        Self {
            t: matvec3(&so3_jl(&phi), &rho),
            q: Quat::exp(phi),
        }
    }

    pub fn log(&self) -> [T; 6] {
        let phi = self.q.log();
        let rho = matvec3(&so3_jl_inv(&phi), &self.t);
        [rho[0], rho[1], rho[2], phi[0], phi[1], phi[2]]
    }

    pub fn compose(&self, o: &Self) -> Self {
        let rt = self.q.rotate(&o.t);
        Self {
            t: [self.t[0] + rt[0], self.t[1] + rt[1], self.t[2] + rt[2]],
            q: self.q.mul(&o.q),
        }
    }

    pub fn inverse(&self) -> Self {
        let qi = self.q.conj();
        Self {
            t: neg3(&qi.rotate(&self.t)),
            q: qi,
        }
    }

    /// Inverse of the right Jacobian, `[[A, −A Q A], [0, A]]` with
    /// `A = Jr⁻¹(φ)` and `Q = Q_left(−ρ, −φ)`.
    pub fn jr_inv(v: [T; 6]) -> [[T; 6]; 6] {
        let rho = [v[0], v[1], v[2]];
        let phi = [v[3], v[4], v[5]];
        let a = so3_jr_inv(&phi);
        let q = se3_q_left(&neg3(&rho), &neg3(&phi));
        let aqa = matmul3(&matmul3(&a, &q), &a);
        let mut out = [[T::zero(); 6]; 6];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = a[i][j];
                out[i + 3][j + 3] = a[i][j];
                out[i][j + 3] = -aqa[i][j];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_branches_are_continuous() {
        let below = SERIES_ANGLE * (1.0 - 1e-9);
        let above = SERIES_ANGLE * (1.0 + 1e-9);
        for f in [
            theta_minus_sin_cube::<f64>,
            se3_coef2::<f64>,
            se3_coef3::<f64>,
            so3_inv_coef::<f64>,
        ] {
            assert!((f(below) - f(above)).abs() < 1e-12);
        }
        let below = SMALL_ANGLE * (1.0 - 1e-9);
        let above = SMALL_ANGLE * (1.0 + 1e-9);
        assert!((sinc(below) - sinc(above)).abs() < 1e-14);
        assert!((versine_sq(below) - versine_sq(above)).abs() < 1e-14);
    }

    #[test]
    fn se2_exp_quarter_turn_with_translation() {
        let g = Se2::exp([1.0, 0.0, std::f64::consts::FRAC_PI_2]);
        let two_over_pi = 2.0 / std::f64::consts::PI;
        assert!((g.t[0] - two_over_pi).abs() < 1e-15);
        assert!((g.t[1] - two_over_pi).abs() < 1e-15);
        assert!(g.r.c.abs() < 1e-15 && (g.r.s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quaternion_half_turn_branch() {
        // rotation by π about −x: both (±1, 0, 0, 0) represent it
        let q = Quat {
            x: -1.0,
            y: 0.0,
            z: 0.0,
            w: 0.0,
        };
        let phi = q.log();
        assert!((phi[0] - std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(phi[1], 0.0);
        assert_eq!(phi[2], 0.0);
    }

    #[test]
    fn so3_jacobian_inverse_pair() {
        let phi = [0.3, -1.2, 0.7];
        let p = matmul3(&so3_jl(&phi), &so3_jl_inv(&phi));
        let id = identity3::<f64>();
        for i in 0..3 {
            for j in 0..3 {
                assert!((p[i][j] - id[i][j]).abs() < 1e-13);
            }
        }
    }
}
