use thiserror::Error;

/// Errors produced by the model, quadrature, solver and oracle layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} = {value} is outside the domain ({expected})")]
    Domain {
        what: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("integral did not converge: {0}")]
    ConvergenceFailure(String),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error(
        "kernel evaluation failed in block n={n}, row i={i}, history l={l:?} at (t={t}, s={s}); \
         the kernel returned {value}"
    )]
    KernelEvaluation {
        n: usize,
        i: usize,
        l: Option<usize>,
        t: f64,
        s: f64,
        value: f64,
    },
    #[error(
        "step size too large: h*||B_{n}||_1 = {value} >= 1; increase the number of subintervals"
    )]
    StepSize { n: usize, value: f64 },
    #[error(
        "collocation block {n} is singular or ill-conditioned (condition estimate {condition:e})"
    )]
    IllConditioned { n: usize, condition: f64 },
    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),
    #[error("missing refinement level N={0}")]
    MissingLevel(usize),
}

impl Error {
    /// `true` for errors caused by the caller's configuration rather than by
    /// the numerics failing.
    pub fn is_configuration(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. }
                | Error::InvalidParameter(_)
                | Error::Unsupported(_)
                | Error::MissingLevel(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure_nonneg(what: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value,
            expected: "finite and >= 0",
        })
    }
}
