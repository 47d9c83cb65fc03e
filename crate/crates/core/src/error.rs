use crate::hierarchy::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid construction parameters: {0}")]
    InvalidParams(ValidationReport),

    #[error("invalid branching count {n}: a ring needs at least 3 squares per edge")]
    InvalidBranching { n: u64 },

    #[error("point or region outside the domain: {0}")]
    OutOfDomain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("malformed input: {0}")]
    Structural(String),

    #[error("parameter outside the admissible domain: {0}")]
    Domain(String),

    #[error("cannot parse rational number {0:?}")]
    Parse(String),

    #[error("scale too small: {0}")]
    InvalidScale(String),

    #[error("integer overflow in {0}")]
    Overflow(&'static str),
}
