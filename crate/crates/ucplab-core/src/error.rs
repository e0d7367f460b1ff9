use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid radii: {0}")]
    InvalidRadii(String),
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("Carleman precondition violated: mu - 33 d rho thetaE^(11/2) thetaL = {c_mu} <= 0")]
    MuTooSmall { c_mu: f64 },
    #[error("radii fail the interpolation assumption")]
    RadiiAssumption,
    #[error("delta = {delta} outside (0, delta0 = {delta0})")]
    DeltaOutOfRange { delta: f64, delta0: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("coefficient matrix not symmetric at x = {at:?}")]
    Asymmetric { at: Vec<f64> },
    #[error("off-diagonal coefficients do not vanish on the boundary (max |a_ij| = {max_offdiag})")]
    DirViolated { max_offdiag: f64 },
    #[error("matrix not positive definite after shift (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("eigensolver did not converge after {iterations} iterations; residuals {residuals:?}")]
    NoConvergence { iterations: usize, residuals: Vec<f64> },
    #[error("eigenvalue not simple: gap {gap} below {gap_tol} at t = {t}")]
    Degenerate { t: f64, gap: f64, gap_tol: f64 },
    #[error("spectral window not resolved: {0}")]
    Unresolved(String),
    #[error("empty spectral interval")]
    EmptyInterval,
    #[error("annulus leaves the domain: {0}")]
    OutsideDomain(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
