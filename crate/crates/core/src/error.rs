use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Non-finite or out-of-range input values.
    #[error("domain error: {0}")]
    Domain(String),

    /// A discretization or support precondition was not met.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A numerical certificate (envelope, bound) failed on sampled data.
    #[error("certification failed: {0}")]
    Certification(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("field format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(what: &str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} has non-finite coordinates")))
    }
}

pub(crate) fn ensure_param(p: f64) -> Result<()> {
    if !p.is_finite() || p.abs() > 1.0 {
        return Err(Error::Domain(format!("parameter p = {p} outside [-1, 1]")));
    }
    Ok(())
}
