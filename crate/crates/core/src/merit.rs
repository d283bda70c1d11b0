//! Augmented Lagrangian and primal-dual merit functions.
//!
//! With penalty `μ > 0` and multiplier estimates `(y_e, z_e)`:
//!
//! ```text
//! L_μ(x)       = f + 1/(2μ) ‖g + μ y_e‖² + 1/(2μ) ‖[h + μ z_e]₊‖²
//! M_μ(x, y, z) = L_μ(x) + 1/(2μ) ‖g + μ (y_e − y)‖² + 1/(2μ) ‖[h + μ z_e]₊ − μ z‖²
//! ```
//!
//! The dual blocks of `∇M_μ` vanish exactly at the first-order estimates
//! `y = y_e + g/μ`, `z = [z_e + h/μ]₊`.

use ndarray::{Array1, ArrayView1, Zip};

use crate::error::Result;
use crate::nlp::{Evaluation, Problem};
use crate::scalar::Scalar;

/// Equality duals `y` and inequality duals `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Multipliers<T> {
    pub y: Array1<T>,
    pub z: Array1<T>,
}

impl<T: Scalar> Multipliers<T> {
    pub fn new(y: Array1<T>, z: Array1<T>) -> Self {
        Self { y, z }
    }

    pub fn zeros(ne: usize, ni: usize) -> Self {
        Self {
            y: Array1::zeros(ne),
            z: Array1::zeros(ni),
        }
    }

    /// Clamps `y` to `[−bound, bound]` and `z` to `[0, bound]`.
    pub fn clamp(&mut self, bound: T) {
        self.y.mapv_inplace(|v| v.max(-bound).min(bound));
        self.z.mapv_inplace(|v| v.max(T::zero()).min(bound));
    }
}

fn pos<T: Scalar>(v: T) -> T {
    v.max(T::zero())
}

fn sq_norm<T: Scalar>(a: &Array1<T>) -> T {
    a.dot(a)
}

/// `[h + μ z_e]₊`
fn shifted_ineq<T: Scalar>(h: ArrayView1<T>, z_e: ArrayView1<T>, mu: T) -> Array1<T> {
    Zip::from(&h).and(&z_e).map_collect(|&h, &z| pos(h + mu * z))
}

/// Augmented Lagrangian value from cost and constraint values.
pub fn al_value_from<T: Scalar>(
    cost: T,
    eq: ArrayView1<T>,
    ineq: ArrayView1<T>,
    est: &Multipliers<T>,
    mu: T,
) -> T {
    debug_assert!(mu > T::zero());
    let half_inv = T::lit(0.5) / mu;
    let e = &eq + &(&est.y * mu);
    let i = shifted_ineq(ineq, est.z.view(), mu);
    cost + half_inv * (sq_norm(&e) + sq_norm(&i))
}

/// Primal-dual merit value from cost and constraint values.
pub fn pdal_value_from<T: Scalar>(
    cost: T,
    eq: ArrayView1<T>,
    ineq: ArrayView1<T>,
    mult: &Multipliers<T>,
    est: &Multipliers<T>,
    mu: T,
) -> T {
    let half_inv = T::lit(0.5) / mu;
    let de = &eq + &((&est.y - &mult.y) * mu);
    let di = shifted_ineq(ineq, est.z.view(), mu) - &(&mult.z * mu);
    al_value_from(cost, eq, ineq, est, mu) + half_inv * (sq_norm(&de) + sq_norm(&di))
}

/// Projected dual ascent: `y⁺ = y_e + g/μ`, `z⁺ = [z_e + h/μ]₊`.
pub fn first_order_multipliers_from<T: Scalar>(
    eq: ArrayView1<T>,
    ineq: ArrayView1<T>,
    est: &Multipliers<T>,
    mu: T,
) -> Multipliers<T> {
    let y = &est.y + &(&eq / mu);
    let z = Zip::from(&est.z).and(&ineq).map_collect(|&z, &h| pos(z + h / mu));
    Multipliers { y, z }
}

/// `i` is active iff `h_i + μ z_{e,i} ≥ 0`.
pub fn active_set_from<T: Scalar>(ineq: ArrayView1<T>, z_e: ArrayView1<T>, mu: T) -> Vec<bool> {
    Zip::from(&ineq)
        .and(&z_e)
        .map_collect(|&h, &z| h + mu * z >= T::zero())
        .to_vec()
}

/// Gradient of the primal-dual merit with respect to `(x, y, z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PdalGradient<T> {
    pub gx: Array1<T>,
    pub gy: Array1<T>,
    pub gz: Array1<T>,
}

impl<T: Scalar> PdalGradient<T> {
    pub fn inf_norm(&self) -> T {
        self.gx
            .iter()
            .chain(self.gy.iter())
            .chain(self.gz.iter())
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Directional derivative along `(dx, dy, dz)`.
    pub fn directional(&self, dx: &Array1<T>, dy: &Array1<T>, dz: &Array1<T>) -> T {
        self.gx.dot(dx) + self.gy.dot(dy) + self.gz.dot(dz)
    }
}

/// ```text
/// ∇ₓM = ∇f + g_xᵀ(2π_y − y) + h_xᵀ(2π_z − D z)
/// ∇_yM = μ(y − y_e) − g
/// ∇_zM = μ z − [h + μ z_e]₊
/// ```
/// with `π` the first-order estimates and `D` the active-set indicator.
pub fn pdal_gradient_at<T: Scalar>(
    ev: &Evaluation<T>,
    mult: &Multipliers<T>,
    est: &Multipliers<T>,
    mu: T,
) -> PdalGradient<T> {
    let pi = first_order_multipliers_from(ev.eq.view(), ev.ineq.view(), est, mu);
    let active = active_set_from(ev.ineq.view(), est.z.view(), mu);
    let two = T::lit(2.0);
    let wy = &pi.y * two - &mult.y;
    let wz: Array1<T> = (0..mult.z.len())
        .map(|i| {
            let dz = if active[i] { mult.z[i] } else { T::zero() };
            two * pi.z[i] - dz
        })
        .collect();
    let gx = &ev.grad + &ev.eq_jac.t().dot(&wy) + &ev.ineq_jac.t().dot(&wz);
    let gy = (&mult.y - &est.y) * mu - &ev.eq;
    let gz = &mult.z * mu - &shifted_ineq(ev.ineq.view(), est.z.view(), mu);
    PdalGradient { gx, gy, gz }
}

pub fn al_value<'a, T: Scalar>(
    p: &Problem<T>,
    x: impl Into<ArrayView1<'a, T>>,
    est: &Multipliers<T>,
    mu: T,
) -> Result<T> {
    let x = x.into();
    let (g, h) = p.eval_residuals(x)?;
    Ok(al_value_from(p.eval_cost(x)?, g.view(), h.view(), est, mu))
}

pub fn pdal_value<'a, T: Scalar>(
    p: &Problem<T>,
    x: impl Into<ArrayView1<'a, T>>,
    mult: &Multipliers<T>,
    est: &Multipliers<T>,
    mu: T,
) -> Result<T> {
    let x = x.into();
    let (g, h) = p.eval_residuals(x)?;
    Ok(pdal_value_from(p.eval_cost(x)?, g.view(), h.view(), mult, est, mu))
}

pub fn first_order_multipliers<'a, T: Scalar>(
    p: &Problem<T>,
    x: impl Into<ArrayView1<'a, T>>,
    est: &Multipliers<T>,
    mu: T,
) -> Result<Multipliers<T>> {
    let (g, h) = p.eval_residuals(x)?;
    Ok(first_order_multipliers_from(g.view(), h.view(), est, mu))
}

pub fn active_set<'a, T: Scalar>(
    p: &Problem<T>,
    x: impl Into<ArrayView1<'a, T>>,
    z_e: &Array1<T>,
    mu: T,
) -> Result<Vec<bool>> {
    let (_, h) = p.eval_residuals(x)?;
    Ok(active_set_from(h.view(), z_e.view(), mu))
}

pub fn pdal_gradient<'a, T: Scalar>(
    p: &Problem<T>,
    x: impl Into<ArrayView1<'a, T>>,
    mult: &Multipliers<T>,
    est: &Multipliers<T>,
    mu: T,
) -> Result<PdalGradient<T>> {
    let ev = p.evaluate(x)?;
    Ok(pdal_gradient_at(&ev, mult, est, mu))
}
