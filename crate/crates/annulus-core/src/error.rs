use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// The requested computation is not supported by the precision carried
    /// by the input (decimal digits, series truncation, convergent supply).
    #[error("insufficient precision: {0}")]
    InsufficientPrecision(String),

    /// An orbit/interval scan hit its iteration cap before resolving.
    #[error("search horizon exceeded: {0}")]
    HorizonExceeded(String),

    /// The symplectic stepper could not meet the area-preservation budget
    /// even after the allowed step halvings.
    #[error("integrator tolerance not met: residual {residual:.3e} after {halvings} halvings")]
    IntegratorTolerance { residual: f64, halvings: u32 },

    /// Malformed rotation-number specification string.
    #[error("bad alpha spec: {0}")]
    BadAlphaSpec(String),

    /// Parameter outside its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
