//! Armijo backtracking on the primal-dual merit function.

use ndarray::ArrayView1;

use crate::error::{Error, Result};
use crate::kkt::Step;
use crate::manifold::Point;
use crate::merit::{pdal_value_from, Multipliers};
use crate::nlp::Problem;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinesearchSettings<T> {
    pub armijo_c1: T,
    pub backtrack: T,
    pub alpha_min: T,
}

impl<T: Scalar> Default for LinesearchSettings<T> {
    fn default() -> Self {
        Self {
            armijo_c1: T::lit(1e-4),
            backtrack: T::lit(0.5),
            alpha_min: T::lit(1e-10),
        }
    }
}

impl<T: Scalar> LinesearchSettings<T> {
    pub fn validate(&self) -> Result<()> {
        let (z, o) = (T::zero(), T::one());
        if !(self.armijo_c1 > z && self.armijo_c1 < o) {
            return Err(Error::InvalidSettings("armijo_c1 must lie in (0, 1)".into()));
        }
        if !(self.backtrack > z && self.backtrack < o) {
            return Err(Error::InvalidSettings("backtrack must lie in (0, 1)".into()));
        }
        if !(self.alpha_min > z) {
            return Err(Error::InvalidSettings("alpha_min must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Accepted<T> {
    pub alpha: T,
    pub x: Point<T>,
    pub mult: Multipliers<T>,
    pub merit: T,
}

/// Merit value at the trial point `(x ⊕ α dx, y + α dy, z + α dz)`.
fn trial<T: Scalar>(
    p: &Problem<T>,
    x: ArrayView1<T>,
    mult: &Multipliers<T>,
    est: &Multipliers<T>,
    mu: T,
    step: &Step<T>,
    alpha: T,
) -> Result<(Point<T>, Multipliers<T>, T)> {
    let xt = p.manifold().integrate(x, &(&step.dx * alpha))?;
    let mt = Multipliers {
        y: &mult.y + &(&step.dy * alpha),
        z: &mult.z + &(&step.dz * alpha),
    };
    let (g, h) = p.eval_residuals(&xt)?;
    let f = p.eval_cost(&xt)?;
    let m = pdal_value_from(f, g.view(), h.view(), &mt, est, mu);
    Ok((xt, mt, m))
}

/// Largest `α ∈ {1, β, β², …}` with
/// `M(x ⊕ α dx, y + α dy, z + α dz) ≤ M(x, y, z) + c₁ α d₀`.
///
/// `merit0` is the merit at the current point and `slope` the directional
/// derivative `d₀`, which must be negative.
#[allow(clippy::too_many_arguments)]
pub fn search<'a, T: Scalar>(
    p: &Problem<T>,
    x: impl Into<ArrayView1<'a, T>>,
    mult: &Multipliers<T>,
    est: &Multipliers<T>,
    mu: T,
    step: &Step<T>,
    merit0: T,
    slope: T,
    settings: &LinesearchSettings<T>,
) -> Result<Accepted<T>> {
    let x = x.into();
    if !(slope < T::zero()) {
        return Err(Error::NotDescent {
            slope: slope.as_f64(),
        });
    }
    let mut alpha = T::one();
    while alpha >= settings.alpha_min {
        let (xt, mt, m) = trial(p, x, mult, est, mu, step, alpha)?;
        if m <= merit0 + settings.armijo_c1 * alpha * slope {
            return Ok(Accepted {
                alpha,
                x: xt,
                mult: mt,
                merit: m,
            });
        }
        alpha = alpha * settings.backtrack;
    }
    Err(Error::LinesearchFailure {
        alpha_min: settings.alpha_min.as_f64(),
    })
}
