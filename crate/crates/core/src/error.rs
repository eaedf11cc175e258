use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument {0} lies on a pole")]
    PoleArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate poles: {0}")]
    DegeneratePoles(String),

    #[error("normal modes {k} and {k_next} coincide (relative separation {separation:e})")]
    DegenerateModes { k: usize, k_next: usize, separation: f64 },

    #[error("dynamical matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("imaginary residue {im:e} exceeds tolerance for real part {re:e}")]
    ImaginaryResidue { re: f64, im: f64 },

    #[error("series not converged after {terms} terms (remainder bound {remainder:e})")]
    SeriesNotConverged { terms: usize, remainder: f64 },

    #[error("quadrature failed: estimate {estimate:e} with error {error:e} after {intervals} intervals")]
    QuadratureFailure {
        estimate: f64,
        error: f64,
        intervals: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{name} must be positive and finite, got {value}"
        )))
    }
}

pub(crate) fn ensure_non_negative(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{name} must be non-negative and finite, got {value}"
        )))
    }
}
