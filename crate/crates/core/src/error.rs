use thiserror::Error;

use crate::thresholds::EquivalenceReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument lies outside the domain of the requested formula.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} did not converge after {iterations} iterations: {detail}")]
    Convergence {
        what: &'static str,
        iterations: usize,
        detail: String,
    },

    #[error("threshold equation has no sign change on [{lo:e}, {hi:e}] (alpha = {alpha})")]
    NoSignChange { alpha: f64, lo: f64, hi: f64 },

    #[error("threshold equation changes sign {count} times on [{lo:e}, {hi:e}] (alpha = {alpha})")]
    MultipleSignChanges {
        alpha: f64,
        lo: f64,
        hi: f64,
        count: usize,
    },

    #[error("{what} has {count} roots on the scanned bracket")]
    MultipleRoots { what: &'static str, count: usize },

    #[error("equivalence violated at alpha = {}: {}", .0.point.alpha, .0.summary())]
    Equivalence(Box<EquivalenceReport>),

    #[error("success rate does not cross one half at alpha = {alpha}")]
    NotBracketed { alpha: f64 },

    #[error("linear program: {0}")]
    Lp(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for input validation failures, false for numerical failures.
    pub fn is_domain(&self) -> bool {
        matches!(self, Error::Domain(_))
    }
}
