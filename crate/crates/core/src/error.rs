use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error(
        "invalid interval: lower bound exceeds upper bound in dimension {dim} ({lower} > {upper})"
    )]
    InvalidInterval { dim: usize, lower: f64, upper: f64 },

    #[error("{what} is rank deficient: numerical rank {rank}, required {required}")]
    RankDeficient {
        what: &'static str,
        rank: usize,
        required: usize,
    },

    #[error("linear program failed: {0}")]
    LpSolver(String),

    #[error("plant domain error in {term}: {detail}")]
    Domain { term: &'static str, detail: String },

    #[error("state bound violated at step {step}: |x|_inf = {norm} > eta = {eta}")]
    StateBound { step: usize, norm: f64, eta: f64 },

    #[error("QP infeasible at step {step}: {diagnostics}")]
    Infeasible { step: usize, diagnostics: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dims(context: &'static str, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            found,
        }
    }
}
