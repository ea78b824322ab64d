use thiserror::Error;

/// Errors produced by instance construction, the closed-form machinery and
/// the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// Every polynomial coefficient is (relatively) zero, so the root set is
    /// the whole real line rather than a finite list.
    #[error("all-zero polynomial")]
    AllZeroPolynomial,

    /// The harvest targets cannot be met even with all power steered to the
    /// energy receivers' best subcarriers.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Exhaustive enumeration was asked for more work than its caller allowed.
    #[error("limit exceeded: {0}")]
    LimitExceeded(String),
}

pub type Result<T> = std::result::Result<T, Error>;
