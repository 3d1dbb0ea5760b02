use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("variable index {index} out of range for {n_vars} variables")]
    IndexOutOfRange { index: usize, n_vars: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("invalid elementary generator: {0}")]
    InvalidElementary(String),
    #[error("elementary perturbation must have degree >= 2, got {0} (use an affine generator instead)")]
    ElementaryDegree(i64),
    #[error("premise violated: {0}")]
    Premise(String),
    #[error("lift is not valid for the given vector field")]
    InvalidLift,
    #[error("cycle enumeration exceeded the cap of {0} cycles")]
    CycleCap(usize),
    #[error("{system}: non-finite state at step {step} (t = {t})")]
    Overflow { system: String, step: usize, t: f64 },
    #[error("{line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("malformed document: {0}")]
    Format(String),
    #[error("invalid argument: {0}")]
    Argument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension {
            context,
            expected,
            found,
        })
    }
}
