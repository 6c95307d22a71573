use thiserror::Error;

#[derive(Debug, Error)]
pub enum EdsError {
    #[error("jet order above 3 while differentiating {coordinate}")]
    JetOverflow { coordinate: String },

    #[error("unsupported substitution: {0}")]
    UnsupportedSubstitution(String),

    #[error("case split required: equality of {difference} with zero is undecided")]
    CaseSplit { difference: String },

    #[error("wedge degree overflow: {0}")]
    DegreeOverflow(String),

    #[error("chart mismatch: {0}")]
    ChartMismatch(String),

    #[error("not in ideal: irreducible residual {0}")]
    NotInIdeal(String),

    #[error("linear solve failed: {0}")]
    SolveFailed(String),

    #[error("cyclic realization involving {0}")]
    CyclicRealization(String),

    #[error("inconsistent realized table: {0}")]
    InconsistentTable(String),

    #[error("elimination definitions are not triangular: {0}")]
    NotTriangular(String),

    #[error("numeric domain error: {0}")]
    NumericDomain(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("undeclared identifier `{0}`")]
    Undeclared(String),

    #[error("{0}")]
    Invalid(String),
}
