use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The problem data itself is broken, e.g. an oracle returned NaN.
    #[error("instance definition: {0}")]
    Instance(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("{what} did not reach tolerance (residual {residual:e})")]
    Tolerance { what: &'static str, residual: f64 },

    #[error("dual point outside the conjugate domain: {0}")]
    InfeasibleDual(String),

    #[error("missing capability: {0}")]
    Capability(&'static str),

    #[error("certificate check `{check}` failed at iteration {iteration}: residual {residual:e}")]
    Certification {
        check: &'static str,
        iteration: usize,
        residual: f64,
    },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dims(what: &str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Usage(format!(
            "{what}: expected dimension {expected}, got {got}"
        )))
    }
}
