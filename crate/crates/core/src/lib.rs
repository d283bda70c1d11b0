//! Primal-dual augmented Lagrangian solver for constrained optimization on
//! Lie groups and their products.

pub mod error;
pub mod globalization;
pub mod kkt;
pub mod linalg;
pub mod manifold;
pub mod merit;
pub mod probset;
pub mod nlp;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use manifold::{DiffArg, Manifold, ManifoldKind};
pub use merit::Multipliers;
pub use probset::{NamedProblem, CATALOG};
pub use nlp::{Constraint, ConstraintKind, CostFunction, HessianMode, Problem};
pub use scalar::Scalar;
pub use solver::{Residuals, SolveResult, Solver, SolverSettings, Status, TraceRecord};

pub type ProblemF64 = Problem<f64>;
pub type ProblemF32 = Problem<f32>;
pub type SettingsF64 = SolverSettings<f64>;
pub type SettingsF32 = SolverSettings<f32>;
pub type SolveResultF64 = SolveResult<f64>;
pub type SolveResultF32 = SolveResult<f32>;
