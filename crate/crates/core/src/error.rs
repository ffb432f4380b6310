use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty basis: no configuration of {sites} sites reaches total excitation {total}")]
    EmptyBasis { sites: usize, total: usize },

    #[error("site index {site} out of range for {sites} sites")]
    SiteOutOfRange { site: usize, sites: usize },

    #[error("atomic operator requested on site {0}, which has no two-level atom")]
    NoAtom(usize),

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("operator does not conserve excitation number (||[H, N]|| = {0:.3e})")]
    NotNumberConserving(f64),

    #[error("evaluation at a pole of the mean-field coefficient ({0})")]
    Pole(String),

    #[error("integrator step size underflow at t = {t:.6e} (h = {h:.3e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("steady state is not unique: Liouvillian kernel dimension {0}")]
    DegenerateKernel(usize),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("aliasing: sampled frequency span {span:.4} is smaller than the spectral spread {spread:.4}")]
    Aliasing { span: f64, spread: f64 },

    #[error("too few levels for statistics: need at least 3, got {0}")]
    TooFewLevels(usize),

    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}
