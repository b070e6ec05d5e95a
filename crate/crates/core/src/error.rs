use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the numerical routines.
///
/// Scalars are carried as `f64` regardless of the scalar type the
/// computation ran in, so the error type stays non-generic.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("overflow evaluating order {l} at z = {re:e}{im:+e}i")]
    Overflow { l: usize, re: f64, im: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("pole: {0}")]
    Pole(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("regime error: {0}")]
    Regime(String),

    #[error("multipole order {l} exceeds the supported maximum {max}")]
    UnsupportedOrder { l: usize, max: usize },

    #[error("geometry too close to contact: phi = {phi} exceeds {max}")]
    NearContact { phi: f64, max: f64 },

    #[error(
        "series did not converge after {terms} terms \
         (partial sum {partial_re:e}{partial_im:+e}i, relative estimate {estimate:e})"
    )]
    Convergence {
        terms: usize,
        partial_re: f64,
        partial_im: f64,
        estimate: f64,
    },

    #[error("quadrature did not reach tolerance: estimated relative error {estimate:e}")]
    Quadrature { estimate: f64 },

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("Matsubara term j = {j}: {source}")]
    Matsubara {
        j: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("transition #{index}: {source}")]
    Transition {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Innermost error, looking through the index annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::Matsubara { source, .. } | Error::Transition { source, .. } => source.root(),
            e => e,
        }
    }

    pub fn is_regime(&self) -> bool {
        matches!(self.root(), Error::Regime(_) | Error::NearContact { .. })
    }

    pub fn is_convergence(&self) -> bool {
        matches!(
            self.root(),
            Error::Convergence { .. } | Error::Quadrature { .. }
        )
    }
}
