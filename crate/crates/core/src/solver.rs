//! Outer augmented-Lagrangian loop.
//!
//! Each outer iteration minimizes the primal-dual merit over `(x, y, z)` with
//! linesearched Newton steps until `‖∇M‖∞ ≤ ω`. If the primal infeasibility
//! is then below `η`, the multiplier estimates take the projected dual ascent
//! step and both tolerances tighten; otherwise `μ` shrinks and the tolerances
//! are reset from it.

use std::time::Instant;

use ndarray::{Array1, ArrayView1, Zip};

use crate::error::{check_dim, Error, Result};
use crate::globalization::{search, LinesearchSettings};
use crate::kkt::{assemble_at, InertiaCorrection};
use crate::manifold::Point;
use crate::merit::{first_order_multipliers_from, pdal_gradient_at, pdal_value_from, Multipliers};
use crate::nlp::{Evaluation, HessianMode, Problem};
use crate::scalar::Scalar;

/// Exponent of `μ` in the feasibility tolerance after a penalty decrease.
const FEAS_RESET_EXPONENT: f64 = 0.1;
/// Exponent of `μ` in the feasibility tolerance after an accepted update.
const FEAS_TIGHTEN_EXPONENT: f64 = 0.9;
/// The inner tolerance never drops below this fraction of `tol_abs`.
const INNER_TOL_FLOOR: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings<T> {
    pub tol_abs: T,
    pub mu_init: T,
    pub mu_factor: T,
    pub mu_min: T,
    pub inner_tol_init: T,
    pub inner_tol_exponent: T,
    pub feas_tol_factor: T,
    pub max_outer: usize,
    pub max_inner_total: usize,
    pub dual_bound: T,
    pub hessian_mode: HessianMode,
    pub linesearch: LinesearchSettings<T>,
}

impl<T: Scalar> Default for SolverSettings<T> {
    fn default() -> Self {
        Self {
            tol_abs: T::lit(1e-4),
            mu_init: T::lit(1e-2),
            mu_factor: T::lit(0.1),
            mu_min: T::lit(1e-9),
            inner_tol_init: T::one(),
            inner_tol_exponent: T::one(),
            feas_tol_factor: T::lit(0.1),
            max_outer: 50,
            max_inner_total: 1000,
            dual_bound: T::lit(1e6),
            hessian_mode: HessianMode::default(),
            linesearch: LinesearchSettings::default(),
        }
    }
}

impl<T: Scalar> SolverSettings<T> {
    pub fn validate(&self) -> Result<()> {
        let z = T::zero();
        let positive = [
            ("tol_abs", self.tol_abs),
            ("mu_init", self.mu_init),
            ("mu_min", self.mu_min),
            ("inner_tol_init", self.inner_tol_init),
            ("inner_tol_exponent", self.inner_tol_exponent),
            ("feas_tol_factor", self.feas_tol_factor),
            ("dual_bound", self.dual_bound),
        ];
        for (name, v) in positive {
            if !(v > z) {
                return Err(Error::InvalidSettings(format!("{name} must be positive")));
            }
        }
        if !(self.mu_factor > z && self.mu_factor < T::one()) {
            return Err(Error::InvalidSettings("mu_factor must lie in (0, 1)".into()));
        }
        if self.mu_min > self.mu_init {
            return Err(Error::InvalidSettings("mu_min exceeds mu_init".into()));
        }
        if self.max_outer == 0 {
            return Err(Error::InvalidSettings("max_outer must be positive".into()));
        }
        self.linesearch.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIters,
    LinesearchFail,
    KktDegenerate,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Converged => "Converged",
            Status::MaxIters => "MaxIters",
            Status::LinesearchFail => "LinesearchFail",
            Status::KktDegenerate => "KktDegenerate",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// KKT residual norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals<T> {
    /// `max(‖g‖∞, ‖[h]₊‖∞)`
    pub prim: T,
    /// `‖∇f + g_xᵀ y + h_xᵀ z‖∞`
    pub dual: T,
    /// `‖min(z, −h)‖∞`
    pub comp: T,
}

impl<T: Scalar> Residuals<T> {
    pub fn max(&self) -> T {
        self.prim.max(self.dual).max(self.comp)
    }
}

fn inf_norm<T: Scalar>(v: &Array1<T>) -> T {
    v.iter().fold(T::zero(), |m, c| m.max(c.abs()))
}

fn primal_infeasibility<T: Scalar>(eq: &Array1<T>, ineq: &Array1<T>) -> T {
    let h = ineq.iter().fold(T::zero(), |m, c| m.max(*c));
    inf_norm(eq).max(h)
}

pub fn residuals_at<T: Scalar>(ev: &Evaluation<T>, mult: &Multipliers<T>) -> Residuals<T> {
    let lag = &ev.grad + &ev.eq_jac.t().dot(&mult.y) + &ev.ineq_jac.t().dot(&mult.z);
    let comp = Zip::from(&mult.z)
        .and(&ev.ineq)
        .fold(T::zero(), |m, &z, &h| m.max(z.min(-h).abs()));
    Residuals {
        prim: primal_infeasibility(&ev.eq, &ev.ineq),
        dual: inf_norm(&lag),
        comp,
    }
}

pub fn residuals<'a, T: Scalar>(
    p: &Problem<T>,
    x: impl Into<ArrayView1<'a, T>>,
    mult: &Multipliers<T>,
) -> Result<Residuals<T>> {
    let ev = p.evaluate(x)?;
    check_dim("residuals: equality duals", ev.eq.len(), mult.y.len())?;
    check_dim("residuals: inequality duals", ev.ineq.len(), mult.z.len())?;
    Ok(residuals_at(&ev, mult))
}

/// One record per outer iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord<T> {
    pub k: usize,
    pub mu: T,
    pub prim: T,
    pub dual: T,
    pub comp: T,
    pub merit: T,
    /// Last accepted step length (0 if no step was taken).
    pub alpha: T,
    pub inner_iters: usize,
    /// Whether this iteration ended with a multiplier update.
    pub accepted: bool,
}

#[derive(Debug, Clone)]
pub struct SolveResult<T> {
    pub status: Status,
    pub x: Point<T>,
    pub mult: Multipliers<T>,
    pub residuals: Residuals<T>,
    pub trace: Vec<TraceRecord<T>>,
    pub outer_iters: usize,
    pub inner_iters: usize,
    /// Final penalty parameter.
    pub mu: T,
    pub time_ms: f64,
}

pub type TraceSink<'s, T> = Box<dyn FnMut(&TraceRecord<T>) + 's>;

pub struct Solver<'s, T: Scalar> {
    pub settings: SolverSettings<T>,
    sink: Option<TraceSink<'s, T>>,
}

/// Outcome of one inner minimization.
enum Inner {
    /// `‖∇M‖∞ ≤ ω` reached.
    Solved,
    /// KKT residuals already below the absolute tolerance.
    Converged,
    /// The step could not be globalized at the current penalty.
    Stalled,
    Failed(Status),
}

struct State<T: Scalar> {
    x: Point<T>,
    mult: Multipliers<T>,
    est: Multipliers<T>,
    mu: T,
    alpha: T,
    merit: T,
    inner: usize,
    inner_total: usize,
    res: Residuals<T>,
    corr: InertiaCorrection<T>,
}

impl<'s, T: Scalar> Solver<'s, T> {
    pub fn new(settings: SolverSettings<T>) -> Self {
        Self {
            settings,
            sink: None,
        }
    }

    /// Receives every trace record as it is produced.
    pub fn with_trace_sink(mut self, sink: impl FnMut(&TraceRecord<T>) + 's) -> Self {
        self.sink = Some(Box::new(sink));
        self
    }

    pub fn solve(
        &mut self,
        p: &Problem<T>,
        x0: &Point<T>,
        warm: Option<&Multipliers<T>>,
    ) -> Result<SolveResult<T>> {
        self.settings.validate()?;
        check_dim("solve: initial point", p.manifold().nrep(), x0.len())?;
        let mult = match warm {
            Some(m) => {
                check_dim("solve: warm equality duals", p.ne(), m.y.len())?;
                check_dim("solve: warm inequality duals", p.ni(), m.z.len())?;
                m.clone()
            }
            None => Multipliers::zeros(p.ne(), p.ni()),
        };
        let start = Instant::now();
        let s = self.settings.clone();
        let mut st = State {
            x: x0.clone(),
            est: mult.clone(),
            mult,
            mu: s.mu_init,
            alpha: T::zero(),
            merit: T::nan(),
            inner: 0,
            inner_total: 0,
            res: Residuals {
                prim: T::infinity(),
                dual: T::infinity(),
                comp: T::infinity(),
            },
            corr: InertiaCorrection::new(),
        };
        let mut omega = s.inner_tol_init * st.mu.powf(s.inner_tol_exponent);
        let mut eta = s.feas_tol_factor * st.mu.powf(T::lit(FEAS_RESET_EXPONENT));
        let mut trace = Vec::new();
        let mut status = Status::MaxIters;

        for k in 0..s.max_outer {
            st.inner = 0;
            let outcome = self.inner_solve(p, &mut st, omega)?;
            let mut record = TraceRecord {
                k,
                mu: st.mu,
                prim: st.res.prim,
                dual: st.res.dual,
                comp: st.res.comp,
                merit: st.merit,
                alpha: st.alpha,
                inner_iters: st.inner,
                accepted: false,
            };
            let done = match outcome {
                Inner::Converged => {
                    status = Status::Converged;
                    true
                }
                Inner::Failed(f) => {
                    status = f;
                    true
                }
                Inner::Stalled => {
                    if st.mu > s.mu_min {
                        st.mu = (st.mu * s.mu_factor).max(s.mu_min);
                        omega = s.inner_tol_init * st.mu.powf(s.inner_tol_exponent);
                        eta = s.feas_tol_factor * st.mu.powf(T::lit(FEAS_RESET_EXPONENT));
                        false
                    } else {
                        status = Status::LinesearchFail;
                        true
                    }
                }
                Inner::Solved => {
                    let (g, h) = p.eval_residuals(&st.x)?;
                    if primal_infeasibility(&g, &h) <= eta {
                        let mut next = first_order_multipliers_from(g.view(), h.view(), &st.est, st.mu);
                        next.clamp(s.dual_bound);
                        st.est = next.clone();
                        st.mult = next;
                        record.accepted = true;
                        omega = omega * st.mu.powf(s.inner_tol_exponent);
                        eta = eta * st.mu.powf(T::lit(FEAS_TIGHTEN_EXPONENT));
                    } else {
                        st.mu = (st.mu * s.mu_factor).max(s.mu_min);
                        omega = s.inner_tol_init * st.mu.powf(s.inner_tol_exponent);
                        eta = s.feas_tol_factor * st.mu.powf(T::lit(FEAS_RESET_EXPONENT));
                    }
                    false
                }
            };
            let out_of_budget = !done && st.inner_total >= s.max_inner_total;
            if out_of_budget {
                status = Status::MaxIters;
            }
            self.emit(&record, &mut trace);
            if done || out_of_budget {
                break;
            }
        }

        let ev = p.evaluate(&st.x)?;
        let res = residuals_at(&ev, &st.mult);
        if status == Status::MaxIters && res.max() <= s.tol_abs {
            status = Status::Converged;
        }
        Ok(SolveResult {
            status,
            outer_iters: trace.len(),
            inner_iters: st.inner_total,
            trace,
            x: st.x,
            mult: st.mult,
            residuals: res,
            mu: st.mu,
            time_ms: start.elapsed().as_secs_f64() * 1e3,
        })
    }

    fn emit(&mut self, record: &TraceRecord<T>, trace: &mut Vec<TraceRecord<T>>) {
        if let Some(sink) = self.sink.as_mut() {
            sink(record);
        }
        trace.push(*record);
    }

    fn inner_solve(&self, p: &Problem<T>, st: &mut State<T>, omega: T) -> Result<Inner> {
        let s = &self.settings;
        let omega = omega.max(s.tol_abs * T::lit(INNER_TOL_FLOOR));
        loop {
            let ev = p.evaluate(&st.x)?;
            st.res = residuals_at(&ev, &st.mult);
            st.merit = pdal_value_from(ev.cost, ev.eq.view(), ev.ineq.view(), &st.mult, &st.est, st.mu);
            if st.res.max() <= s.tol_abs {
                return Ok(Inner::Converged);
            }
            let grad = pdal_gradient_at(&ev, &st.mult, &st.est, st.mu);
            if grad.inf_norm() <= omega {
                return Ok(Inner::Solved);
            }
            if st.inner_total >= s.max_inner_total {
                return Ok(Inner::Failed(Status::MaxIters));
            }
            let h = p.lagrangian_hessian(&st.x, &st.mult, s.hessian_mode)?;
            let mut sys = assemble_at(&ev, &st.mult, &st.est, st.mu, &h)?;
            let sol = match sys.solve_with(&mut st.corr) {
                Ok(sol) => sol,
                Err(Error::KktDegenerate { .. }) => return Ok(Inner::Failed(Status::KktDegenerate)),
                Err(e) => return Err(e),
            };
            if !sol.step.is_finite() {
                return Ok(Inner::Failed(Status::KktDegenerate));
            }
            let slope = grad.directional(&sol.step.dx, &sol.step.dy, &sol.step.dz);
            match search(p, &st.x, &st.mult, &st.est, st.mu, &sol.step, st.merit, slope, &s.linesearch) {
                Ok(acc) => {
                    st.x = acc.x;
                    st.mult = acc.mult;
                    st.alpha = acc.alpha;
                    st.merit = acc.merit;
                }
                Err(Error::NotDescent { .. } | Error::LinesearchFailure { .. }) => {
                    return Ok(Inner::Stalled)
                }
                Err(e) => return Err(e),
            }
            st.inner += 1;
            st.inner_total += 1;
        }
    }
}

/// Solves with default trace handling.
pub fn solve<T: Scalar>(
    p: &Problem<T>,
    x0: &Point<T>,
    warm: Option<&Multipliers<T>>,
    settings: &SolverSettings<T>,
) -> Result<SolveResult<T>> {
    Solver::new(settings.clone()).solve(p, x0, warm)
}
