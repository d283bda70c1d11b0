//! Problem data model: `min f(x)` over a manifold subject to blocks of
//! equality constraints `g(x) = 0` and inequality constraints `h(x) ≤ 0`.

use ndarray::{s, Array1, Array2, ArrayView1};

use crate::error::{CallbackError, CallbackSite, Error, Result};
use crate::manifold::{Manifold, Point};
use crate::merit::Multipliers;
use crate::scalar::Scalar;

pub type EvalResult<V> = std::result::Result<V, CallbackError>;

/// Objective function. Gradients are expressed in tangent coordinates.
///
/// Implementations must be pure functions of their input.
pub trait CostFunction<T: Scalar>: Send + Sync {
    fn value(&self, x: ArrayView1<T>) -> EvalResult<T>;

    fn gradient(&self, x: ArrayView1<T>) -> EvalResult<Array1<T>>;

    /// Exact second derivative, if available.
    fn hessian(&self, _x: ArrayView1<T>) -> Option<EvalResult<Array2<T>>> {
        None
    }

    /// `JᵀJ` for costs of the form `½‖r(x)‖²`.
    fn gauss_newton(&self, _x: ArrayView1<T>) -> Option<EvalResult<Array2<T>>> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    /// `c(x) = 0`
    Equality,
    /// `c(x) ≤ 0`
    Inequality,
}

pub trait Constraint<T: Scalar>: Send + Sync {
    fn kind(&self) -> ConstraintKind;

    fn dim(&self) -> usize;

    fn value(&self, x: ArrayView1<T>) -> EvalResult<Array1<T>>;

    /// `dim × nt` Jacobian.
    fn jacobian(&self, x: ArrayView1<T>) -> EvalResult<Array2<T>>;

    /// `Σᵢ λᵢ ∇²cᵢ(x)`, if available.
    fn weighted_hessian(
        &self,
        _x: ArrayView1<T>,
        _lambda: ArrayView1<T>,
    ) -> Option<EvalResult<Array2<T>>> {
        None
    }
}

/// How the Lagrangian Hessian block of the Newton system is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HessianMode {
    /// Exact second derivatives where callbacks provide them; a cost without
    /// a Hessian falls back to its Gauss-Newton model, then to the identity.
    #[default]
    Exact,
    /// Cost Gauss-Newton model (or its Hessian when no residual structure is
    /// exposed); constraint curvature is dropped.
    GaussNewton,
    Identity,
}

/// Cost, derivatives, and stacked constraint values at one point.
#[derive(Debug, Clone)]
pub struct Evaluation<T> {
    pub cost: T,
    pub grad: Array1<T>,
    /// Stacked equality values, length `ne`.
    pub eq: Array1<T>,
    /// Stacked inequality values, length `ni`.
    pub ineq: Array1<T>,
    pub eq_jac: Array2<T>,
    pub ineq_jac: Array2<T>,
}

pub struct Problem<T: Scalar> {
    manifold: Manifold,
    cost: Box<dyn CostFunction<T>>,
    blocks: Vec<Box<dyn Constraint<T>>>,
}

impl<T: Scalar> std::fmt::Debug for Problem<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("manifold", &self.manifold)
            .field("ne", &self.ne())
            .field("ni", &self.ni())
            .finish()
    }
}

impl<T: Scalar> Problem<T> {
    pub fn new(manifold: Manifold, cost: impl CostFunction<T> + 'static) -> Self {
        Self {
            manifold,
            cost: Box::new(cost),
            blocks: Vec::new(),
        }
    }

    pub fn with_constraint(mut self, block: impl Constraint<T> + 'static) -> Self {
        self.blocks.push(Box::new(block));
        self
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    pub fn cost(&self) -> &dyn CostFunction<T> {
        self.cost.as_ref()
    }

    pub fn blocks(&self) -> &[Box<dyn Constraint<T>>] {
        &self.blocks
    }

    pub fn nt(&self) -> usize {
        self.manifold.nt()
    }

    pub fn ne(&self) -> usize {
        self.dims(ConstraintKind::Equality)
    }

    pub fn ni(&self) -> usize {
        self.dims(ConstraintKind::Inequality)
    }

    fn dims(&self, kind: ConstraintKind) -> usize {
        self.blocks
            .iter()
            .filter(|b| b.kind() == kind)
            .map(|b| b.dim())
            .sum()
    }

    fn check_point(&self, x: ArrayView1<T>) -> Result<()> {
        crate::error::check_dim("problem point", self.manifold.nrep(), x.len())
    }

    fn block_value(&self, i: usize, x: ArrayView1<T>) -> Result<Array1<T>> {
        let b = &self.blocks[i];
        let v = b.value(x).map_err(|source| Error::Callback {
            site: CallbackSite::Block(i),
            source,
        })?;
        crate::error::check_dim("constraint value", b.dim(), v.len())?;
        Ok(v)
    }

    fn block_jacobian(&self, i: usize, x: ArrayView1<T>) -> Result<Array2<T>> {
        let b = &self.blocks[i];
        let j = b.jacobian(x).map_err(|source| Error::Callback {
            site: CallbackSite::Block(i),
            source,
        })?;
        crate::error::check_dim("constraint jacobian rows", b.dim(), j.nrows())?;
        crate::error::check_dim("constraint jacobian cols", self.nt(), j.ncols())?;
        Ok(j)
    }

    fn cost_value(&self, x: ArrayView1<T>) -> Result<T> {
        self.cost.value(x).map_err(|source| Error::Callback {
            site: CallbackSite::Cost,
            source,
        })
    }

    fn cost_gradient(&self, x: ArrayView1<T>) -> Result<Array1<T>> {
        let g = self.cost.gradient(x).map_err(|source| Error::Callback {
            site: CallbackSite::Cost,
            source,
        })?;
        crate::error::check_dim("cost gradient", self.nt(), g.len())?;
        Ok(g)
    }

    /// Stacked `(g(x), h(x))`, block order preserved within each kind.
    pub fn eval_residuals<'a>(
        &self,
        x: impl Into<ArrayView1<'a, T>>,
    ) -> Result<(Array1<T>, Array1<T>)> {
        let x = x.into();
        self.check_point(x)?;
        let mut eq = Vec::with_capacity(self.ne());
        let mut ineq = Vec::with_capacity(self.ni());
        for (i, b) in self.blocks.iter().enumerate() {
            let v = self.block_value(i, x)?;
            match b.kind() {
                ConstraintKind::Equality => eq.extend(v.iter().copied()),
                ConstraintKind::Inequality => ineq.extend(v.iter().copied()),
            }
        }
        Ok((Array1::from(eq), Array1::from(ineq)))
    }

    /// Cost value only, for linesearch trial points.
    pub fn eval_cost<'a>(&self, x: impl Into<ArrayView1<'a, T>>) -> Result<T> {
        let x = x.into();
        self.check_point(x)?;
        self.cost_value(x)
    }

    /// Value-and-derivative evaluation used by the Newton iteration.
    pub fn evaluate<'a>(&self, x: impl Into<ArrayView1<'a, T>>) -> Result<Evaluation<T>> {
        let x = x.into();
        self.check_point(x)?;
        let (eq, ineq) = self.eval_residuals(x)?;
        let nt = self.nt();
        let mut eq_jac = Array2::zeros((self.ne(), nt));
        let mut ineq_jac = Array2::zeros((self.ni(), nt));
        let (mut ro_e, mut ro_i) = (0, 0);
        for (i, b) in self.blocks.iter().enumerate() {
            let j = self.block_jacobian(i, x)?;
            let m = b.dim();
            match b.kind() {
                ConstraintKind::Equality => {
                    eq_jac.slice_mut(s![ro_e..ro_e + m, ..]).assign(&j);
                    ro_e += m;
                }
                ConstraintKind::Inequality => {
                    ineq_jac.slice_mut(s![ro_i..ro_i + m, ..]).assign(&j);
                    ro_i += m;
                }
            }
        }
        Ok(Evaluation {
            cost: self.cost_value(x)?,
            grad: self.cost_gradient(x)?,
            eq,
            ineq,
            eq_jac,
            ineq_jac,
        })
    }

    /// Approximation `H` of the Lagrangian Hessian at `(x, y, z)`, symmetrized.
    pub fn lagrangian_hessian<'a>(
        &self,
        x: impl Into<ArrayView1<'a, T>>,
        mult: &Multipliers<T>,
        mode: HessianMode,
    ) -> Result<Array2<T>> {
        let x = x.into();
        self.check_point(x)?;
        let nt = self.nt();
        let wrap = |site| move |source| Error::Callback { site, source };
        let cost_model = |first: Option<EvalResult<Array2<T>>>,
                          second: &dyn Fn() -> Option<EvalResult<Array2<T>>>|
         -> Result<Array2<T>> {
            match first.or_else(second) {
                Some(h) => h.map_err(wrap(CallbackSite::Cost)),
                None => Ok(Array2::eye(nt)),
            }
        };
        let mut h = match mode {
            HessianMode::Identity => Array2::eye(nt),
            HessianMode::Exact => cost_model(self.cost.hessian(x), &|| self.cost.gauss_newton(x))?,
            HessianMode::GaussNewton => {
                cost_model(self.cost.gauss_newton(x), &|| self.cost.hessian(x))?
            }
        };
        crate::error::check_dim("cost hessian", nt, h.nrows())?;
        crate::error::check_dim("cost hessian", nt, h.ncols())?;
        if mode == HessianMode::Exact {
            let (mut ro_e, mut ro_i) = (0, 0);
            for (i, b) in self.blocks.iter().enumerate() {
                let m = b.dim();
                let lambda = match b.kind() {
                    ConstraintKind::Equality => {
                        ro_e += m;
                        mult.y.slice(s![ro_e - m..ro_e])
                    }
                    ConstraintKind::Inequality => {
                        ro_i += m;
                        mult.z.slice(s![ro_i - m..ro_i])
                    }
                };
                if let Some(hb) = b.weighted_hessian(x, lambda) {
                    let hb = hb.map_err(wrap(CallbackSite::Block(i)))?;
                    h = h + &hb;
                }
            }
        }
        let sym = (&h + &h.t()) * T::lit(0.5);
        Ok(sym)
    }

    /// Compares analytic first derivatives against central differences taken
    /// along each tangent basis direction through `integrate`.
    pub fn check_derivatives<'a>(
        &self,
        x: impl Into<ArrayView1<'a, T>>,
        step: T,
    ) -> Result<DerivativeReport> {
        let x = x.into();
        self.check_point(x)?;
        if !(step > T::zero()) {
            return Err(Error::InvalidSettings("finite-difference step must be positive".into()));
        }
        let nt = self.nt();
        let m = &self.manifold;
        let mut plus = Vec::with_capacity(nt);
        let mut minus = Vec::with_capacity(nt);
        for j in 0..nt {
            let mut e = Array1::zeros(nt);
            e[j] = step;
            plus.push(m.integrate(x, &e)?);
            e[j] = -step;
            minus.push(m.integrate(x, &e)?);
        }
        let two_h = step + step;
        let rel = |fd: T, an: T| ((fd - an).abs() / an.abs().max(T::one())).as_f64();

        let mut entries = Vec::new();
        let grad = self.cost_gradient(x)?;
        let mut err = 0.0f64;
        for j in 0..nt {
            let fd = (self.cost_value(plus[j].view())? - self.cost_value(minus[j].view())?) / two_h;
            err = err.max(rel(fd, grad[j]));
        }
        entries.push(DerivativeEntry {
            site: CallbackSite::Cost,
            max_rel_error: err,
        });
        for i in 0..self.blocks.len() {
            let jac = self.block_jacobian(i, x)?;
            let mut err = 0.0f64;
            for j in 0..nt {
                let fd = (self.block_value(i, plus[j].view())? - self.block_value(i, minus[j].view())?)
                    / two_h;
                for (r, v) in fd.iter().enumerate() {
                    err = err.max(rel(*v, jac[[r, j]]));
                }
            }
            entries.push(DerivativeEntry {
                site: CallbackSite::Block(i),
                max_rel_error: err,
            });
        }
        Ok(DerivativeReport { entries })
    }

    /// Whether `x` has the right length and finite, normalized coordinates.
    pub fn is_valid_point(&self, x: &Point<T>) -> bool {
        self.manifold.is_valid_point(x, T::lit(1e-8))
    }
}

/// Default pass threshold of [`Problem::check_derivatives`] with step `1e-6`.
pub const DERIVATIVE_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeEntry {
    pub site: CallbackSite,
    pub max_rel_error: f64,
}

/// Per-callback maximal relative error `|fd − an| / max(1, |an|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeReport {
    pub entries: Vec<DerivativeEntry>,
}

impl DerivativeReport {
    pub fn max_error(&self) -> f64 {
        self.entries.iter().map(|e| e.max_rel_error).fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.entries.iter().all(|e| e.max_rel_error <= tol)
    }

    pub fn failures(&self, tol: f64) -> impl Iterator<Item = &DerivativeEntry> {
        self.entries.iter().filter(move |e| !(e.max_rel_error <= tol))
    }
}

// ---------------------------------------------------------------------------
// reusable building blocks

/// `½ xᵀQx + cᵀx + c₀` on `R^n`.
#[derive(Debug, Clone)]
pub struct QuadraticCost<T> {
    pub q: Array2<T>,
    pub c: Array1<T>,
    pub c0: T,
}

impl<T: Scalar> QuadraticCost<T> {
    pub fn new(q: Array2<T>, c: Array1<T>) -> Self {
        Self {
            q,
            c,
            c0: T::zero(),
        }
    }
}

impl<T: Scalar> CostFunction<T> for QuadraticCost<T> {
    fn value(&self, x: ArrayView1<T>) -> EvalResult<T> {
        Ok(x.dot(&self.q.dot(&x)) * T::lit(0.5) + self.c.dot(&x) + self.c0)
    }

    fn gradient(&self, x: ArrayView1<T>) -> EvalResult<Array1<T>> {
        Ok(self.q.dot(&x) + &self.c)
    }

    fn hessian(&self, _x: ArrayView1<T>) -> Option<EvalResult<Array2<T>>> {
        Some(Ok(self.q.clone()))
    }
}

/// `A x − b` (equality `= 0` or inequality `≤ 0`) on `R^n`.
#[derive(Debug, Clone)]
pub struct AffineConstraint<T> {
    pub kind: ConstraintKind,
    pub a: Array2<T>,
    pub b: Array1<T>,
}

impl<T: Scalar> AffineConstraint<T> {
    pub fn new(kind: ConstraintKind, a: Array2<T>, b: Array1<T>) -> Self {
        assert_eq!(a.nrows(), b.len(), "affine constraint shape");
        Self { kind, a, b }
    }
}

impl<T: Scalar> Constraint<T> for AffineConstraint<T> {
    fn kind(&self) -> ConstraintKind {
        self.kind
    }

    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: ArrayView1<T>) -> EvalResult<Array1<T>> {
        Ok(self.a.dot(&x) - &self.b)
    }

    fn jacobian(&self, _x: ArrayView1<T>) -> EvalResult<Array2<T>> {
        Ok(self.a.clone())
    }

    fn weighted_hessian(
        &self,
        _x: ArrayView1<T>,
        _lambda: ArrayView1<T>,
    ) -> Option<EvalResult<Array2<T>>> {
        Some(Ok(Array2::zeros((self.a.ncols(), self.a.ncols()))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn line(kind: ConstraintKind, shift: f64) -> AffineConstraint<f64> {
        AffineConstraint::new(kind, array![[1.0]], array![shift])
    }

    fn zero_cost() -> QuadraticCost<f64> {
        QuadraticCost::new(array![[0.0]], array![0.0])
    }

    #[test]
    fn residuals_at_root() {
        let p = Problem::new(Manifold::Euclidean(1), zero_cost())
            .with_constraint(line(ConstraintKind::Equality, 1.0));
        let (g, h) = p.eval_residuals(&array![1.0]).unwrap();
        assert_eq!(g, array![0.0]);
        assert_eq!(h.len(), 0);
    }

    #[test]
    fn residuals_mixed_blocks() {
        let p = Problem::new(Manifold::Euclidean(1), zero_cost())
            .with_constraint(line(ConstraintKind::Inequality, 3.0))
            .with_constraint(line(ConstraintKind::Equality, 1.0));
        let (g, h) = p.eval_residuals(&array![2.0]).unwrap();
        assert_eq!(g, array![1.0]);
        assert_eq!(h, array![-1.0]);
        assert_eq!((p.ne(), p.ni()), (1, 1));
    }

    #[test]
    fn block_order_is_preserved() {
        let a = AffineConstraint::new(ConstraintKind::Equality, array![[1.0, 0.0]], array![1.0]);
        let b = AffineConstraint::new(ConstraintKind::Equality, array![[0.0, 2.0]], array![0.0]);
        let cost = QuadraticCost::new(Array2::eye(2), array![0.0, 0.0]);
        let x = array![3.0, 5.0];
        let p1 = Problem::new(Manifold::Euclidean(2), cost.clone())
            .with_constraint(a.clone())
            .with_constraint(b.clone());
        let p2 = Problem::new(Manifold::Euclidean(2), cost)
            .with_constraint(b)
            .with_constraint(a);
        let e1 = p1.evaluate(&x).unwrap();
        let e2 = p2.evaluate(&x).unwrap();
        assert_eq!(e1.eq, array![2.0, 10.0]);
        assert_eq!(e2.eq, array![10.0, 2.0]);
        assert_eq!(e1.eq_jac.row(0), e2.eq_jac.row(1));
        assert_eq!(e1.eq_jac.row(1), e2.eq_jac.row(0));
    }

    struct Failing;

    impl Constraint<f64> for Failing {
        fn kind(&self) -> ConstraintKind {
            ConstraintKind::Inequality
        }
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, _x: ArrayView1<f64>) -> EvalResult<Array1<f64>> {
            Err(CallbackError::new("out of domain"))
        }
        fn jacobian(&self, _x: ArrayView1<f64>) -> EvalResult<Array2<f64>> {
            Err(CallbackError::new("out of domain"))
        }
    }

    #[test]
    fn callback_failure_carries_block_index() {
        let p = Problem::new(Manifold::Euclidean(1), zero_cost())
            .with_constraint(line(ConstraintKind::Equality, 0.0))
            .with_constraint(Failing);
        match p.eval_residuals(&array![0.0]) {
            Err(Error::Callback { site, .. }) => assert_eq!(site, CallbackSite::Block(1)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn quadratic_cost_derivatives() {
        let p = Problem::new(
            Manifold::Euclidean(3),
            QuadraticCost::new(Array2::eye(3), Array1::zeros(3)),
        );
        let r = p.check_derivatives(&array![0.3, -1.2, 2.0], 1e-6).unwrap();
        assert!(r.max_error() <= 1e-8, "{r:?}");
    }

    struct ScaledJacobian(AffineConstraint<f64>);

    impl Constraint<f64> for ScaledJacobian {
        fn kind(&self) -> ConstraintKind {
            self.0.kind
        }
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn value(&self, x: ArrayView1<f64>) -> EvalResult<Array1<f64>> {
            self.0.value(x)
        }
        fn jacobian(&self, x: ArrayView1<f64>) -> EvalResult<Array2<f64>> {
            self.0.jacobian(x).map(|j| j * 2.0)
        }
    }

    #[test]
    fn wrong_jacobian_is_flagged() {
        let a = AffineConstraint::new(ConstraintKind::Equality, array![[1.0, -2.0]], array![0.5]);
        let p = Problem::new(
            Manifold::Euclidean(2),
            QuadraticCost::new(Array2::eye(2), Array1::zeros(2)),
        )
        .with_constraint(a.clone())
        .with_constraint(ScaledJacobian(a));
        let r = p.check_derivatives(&array![0.1, 0.2], 1e-6).unwrap();
        let failed: Vec<_> = r.failures(DERIVATIVE_TOL).map(|e| e.site).collect();
        assert_eq!(failed, vec![CallbackSite::Block(1)]);
    }

    #[test]
    fn hessian_modes() {
        let p = Problem::new(
            Manifold::Euclidean(2),
            QuadraticCost::new(array![[2.0, 1.0], [1.0, 3.0]], Array1::zeros(2)),
        );
        let mult = Multipliers::zeros(0, 0);
        let x = array![0.0, 0.0];
        assert_eq!(
            p.lagrangian_hessian(&x, &mult, HessianMode::Exact).unwrap(),
            array![[2.0, 1.0], [1.0, 3.0]]
        );
        // no residual structure: Gauss-Newton falls back to the Hessian
        assert_eq!(
            p.lagrangian_hessian(&x, &mult, HessianMode::GaussNewton).unwrap(),
            array![[2.0, 1.0], [1.0, 3.0]]
        );
        assert_eq!(
            p.lagrangian_hessian(&x, &mult, HessianMode::Identity).unwrap(),
            Array2::<f64>::eye(2)
        );
    }
}
