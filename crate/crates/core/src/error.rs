use thiserror::Error;

/// Error raised by a user-supplied cost or constraint callback.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct CallbackError(pub String);

impl CallbackError {
    pub fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }
}

/// Location of a failing callback inside a problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CallbackSite {
    Cost,
    Block(usize),
}

impl std::fmt::Display for CallbackSite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CallbackSite::Cost => write!(f, "cost"),
            CallbackSite::Block(i) => write!(f, "constraint block {i}"),
        }
    }
}

/// Factorization signature: counts of positive, negative and zero eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

impl std::fmt::Display for Inertia {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.positive, self.negative, self.zero)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("callback failure in {site}: {source}")]
    Callback {
        site: CallbackSite,
        #[source]
        source: CallbackError,
    },
    #[error("KKT degenerate: regularization exhausted with inertia {inertia}")]
    KktDegenerate { inertia: Inertia },
    #[error("search direction is not a descent direction (directional derivative {slope:e})")]
    NotDescent { slope: f64 },
    #[error("linesearch failure: step length fell below {alpha_min:e}")]
    LinesearchFailure { alpha_min: f64 },
    #[error("unknown problem `{name}`; available: {}", catalog.join(", "))]
    UnknownProblem {
        name: String,
        catalog: Vec<&'static str>,
    },
    #[error("invalid settings: {0}")]
    InvalidSettings(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            got,
        })
    }
}
