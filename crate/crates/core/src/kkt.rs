//! Primal-dual Newton system and its inertia-corrected solve.
//!
//! ```text
//! [ H + δI   g_xᵀ    P h_xᵀ ] [dx]     [ ∇f + g_xᵀ y + h_xᵀ P z      ]
//! [ g_x      −μ I    0      ] [dy] = − [ g − μ (y − y_e)             ]
//! [ P h_x    0       −μ I   ] [dz]     [ P([h + μ z_e]₊ − μ z) − (I−P) μ z ]
//! ```
//!
//! `P` selects the active inequalities. Inactive rows keep only their `−μ`
//! diagonal, so the step drives those multipliers to zero: `z + dz = 0`.

use ndarray::{s, Array1, Array2, ArrayView1};

use crate::error::{Error, Inertia, Result};
use crate::linalg::Ldlt;
use crate::merit::{active_set_from, Multipliers};
use crate::nlp::{Evaluation, Problem};
use crate::scalar::Scalar;

const REG_FIRST: f64 = 1e-10;
const REG_FROM_LAST: f64 = 1e-6;
const REG_GROWTH: f64 = 8.0;
const REG_MAX: f64 = 1e8;
const REFINE_ROUNDS: usize = 3;

#[derive(Debug, Clone)]
pub struct KktSystem<T> {
    pub mat: Array2<T>,
    pub rhs: Array1<T>,
    pub active: Vec<bool>,
    /// Shift added to the primal block by the last solve.
    pub primal_reg: T,
    nt: usize,
    ne: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step<T> {
    pub dx: Array1<T>,
    pub dy: Array1<T>,
    pub dz: Array1<T>,
}

impl<T: Scalar> Step<T> {
    pub fn is_finite(&self) -> bool {
        self.dx
            .iter()
            .chain(self.dy.iter())
            .chain(self.dz.iter())
            .all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone)]
pub struct KktSolution<T> {
    pub step: Step<T>,
    pub inertia: Inertia,
    pub primal_reg: T,
    /// `‖K s − rhs‖∞` after refinement.
    pub residual: T,
}

/// Memory of the last successful primal shift, carried across Newton
/// iterations of one solve.
#[derive(Debug, Clone, Copy, Default)]
pub struct InertiaCorrection<T> {
    last: Option<T>,
}

impl<T: Scalar> InertiaCorrection<T> {
    pub fn new() -> Self {
        Self { last: None }
    }

    fn first_shift(&self) -> T {
        match self.last {
            Some(d) if d > T::zero() => T::lit(REG_FIRST).max(d * T::lit(REG_FROM_LAST)),
            _ => T::lit(REG_FIRST),
        }
    }
}

/// Builds the Newton system from an evaluation. `h` approximates the
/// Lagrangian Hessian.
pub fn assemble_at<T: Scalar>(
    ev: &Evaluation<T>,
    mult: &Multipliers<T>,
    est: &Multipliers<T>,
    mu: T,
    h: &Array2<T>,
) -> Result<KktSystem<T>> {
    let nt = ev.grad.len();
    let (ne, ni) = (ev.eq.len(), ev.ineq.len());
    crate::error::check_dim("kkt: hessian rows", nt, h.nrows())?;
    crate::error::check_dim("kkt: hessian cols", nt, h.ncols())?;
    crate::error::check_dim("kkt: equality duals", ne, mult.y.len())?;
    crate::error::check_dim("kkt: inequality duals", ni, mult.z.len())?;
    crate::error::check_dim("kkt: equality estimates", ne, est.y.len())?;
    crate::error::check_dim("kkt: inequality estimates", ni, est.z.len())?;

    let active = active_set_from(ev.ineq.view(), est.z.view(), mu);
    let n = nt + ne + ni;
    let mut mat = Array2::zeros((n, n));
    mat.slice_mut(s![..nt, ..nt]).assign(h);
    mat.slice_mut(s![nt..nt + ne, ..nt]).assign(&ev.eq_jac);
    mat.slice_mut(s![..nt, nt..nt + ne]).assign(&ev.eq_jac.t());
    for i in 0..ne {
        mat[[nt + i, nt + i]] = -mu;
    }
    let off = nt + ne;
    let mut z_act = Array1::zeros(ni);
    let mut r_z = Array1::zeros(ni);
    for i in 0..ni {
        mat[[off + i, off + i]] = -mu;
        if active[i] {
            mat.slice_mut(s![off + i, ..nt]).assign(&ev.ineq_jac.row(i));
            mat.slice_mut(s![..nt, off + i]).assign(&ev.ineq_jac.row(i));
            z_act[i] = mult.z[i];
            r_z[i] = ev.ineq[i] + mu * est.z[i] - mu * mult.z[i];
        } else {
            r_z[i] = -mu * mult.z[i];
        }
    }
    let r_x = &ev.grad + &ev.eq_jac.t().dot(&mult.y) + &ev.ineq_jac.t().dot(&z_act);
    let r_y = &ev.eq - &((&mult.y - &est.y) * mu);
    let mut rhs = Array1::zeros(n);
    rhs.slice_mut(s![..nt]).assign(&(-r_x));
    rhs.slice_mut(s![nt..off]).assign(&(-r_y));
    rhs.slice_mut(s![off..]).assign(&(-r_z));

    Ok(KktSystem {
        mat,
        rhs,
        active,
        primal_reg: T::zero(),
        nt,
        ne,
    })
}

pub fn assemble<'a, T: Scalar>(
    p: &Problem<T>,
    x: impl Into<ArrayView1<'a, T>>,
    mult: &Multipliers<T>,
    est: &Multipliers<T>,
    mu: T,
    h: &Array2<T>,
) -> Result<KktSystem<T>> {
    let ev = p.evaluate(x)?;
    assemble_at(&ev, mult, est, mu, h)
}

fn inf_norm<T: Scalar>(v: &Array1<T>) -> T {
    v.iter().fold(T::zero(), |m, c| m.max(c.abs()))
}

impl<T: Scalar> KktSystem<T> {
    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    /// Signature of a system whose primal Schur complement is positive definite.
    pub fn target_inertia(&self) -> Inertia {
        Inertia {
            positive: self.nt,
            negative: self.dim() - self.nt,
            zero: 0,
        }
    }

    fn shift_primal(&mut self, delta: T) {
        let change = delta - self.primal_reg;
        for i in 0..self.nt {
            self.mat[[i, i]] = self.mat[[i, i]] + change;
        }
        self.primal_reg = delta;
    }

    pub fn solve(&mut self) -> Result<KktSolution<T>> {
        self.solve_with(&mut InertiaCorrection::new())
    }

    /// Factors the system, shifting the primal block until the inertia is
    /// `(nt, ne + ni, 0)`, then solves with iterative refinement.
    pub fn solve_with(&mut self, corr: &mut InertiaCorrection<T>) -> Result<KktSolution<T>> {
        let target = self.target_inertia();
        self.shift_primal(T::zero());
        let mut fact = Ldlt::factor(&self.mat);
        let mut inertia = fact.inertia();
        if inertia != target {
            let mut delta = corr.first_shift();
            loop {
                self.shift_primal(delta);
                fact = Ldlt::factor(&self.mat);
                inertia = fact.inertia();
                if inertia == target {
                    corr.last = Some(delta);
                    break;
                }
                delta = delta * T::lit(REG_GROWTH);
                if delta > T::lit(REG_MAX) {
                    return Err(Error::KktDegenerate { inertia });
                }
            }
        }

        let tol = T::lit(1e-9) * (T::one() + inf_norm(&self.rhs));
        let mut sol = fact.solve(&self.rhs);
        let mut res = &self.rhs - &self.mat.dot(&sol);
        for _ in 0..REFINE_ROUNDS {
            if inf_norm(&res) <= tol {
                break;
            }
            sol = sol + fact.solve(&res);
            res = &self.rhs - &self.mat.dot(&sol);
        }
        let (nt, ne) = (self.nt, self.ne);
        Ok(KktSolution {
            step: Step {
                dx: sol.slice(s![..nt]).to_owned(),
                dy: sol.slice(s![nt..nt + ne]).to_owned(),
                dz: sol.slice(s![nt + ne..]).to_owned(),
            },
            inertia,
            primal_reg: self.primal_reg,
            residual: inf_norm(&res),
        })
    }
}
