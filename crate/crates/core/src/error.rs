use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the admissible parameter range.
    #[error("domain error: {0}")]
    Domain(String),
    /// A quadrature, tail integral or regression could not produce a finite value.
    #[error("fit error: {0}")]
    Fit(String),
    /// Two profiles live on incompatible grids, or a region leaves the grid.
    #[error("grid error: {0}")]
    Grid(String),
    /// An iteration ended without meeting its tolerance.
    #[error("convergence error: {0}")]
    Convergence(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn fit<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Fit(msg.into()))
}
