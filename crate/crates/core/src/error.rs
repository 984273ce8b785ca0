use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("splitting is not finalized: index {0} is still undecided")]
    Unfinalized(usize),

    #[error("row {0} has a zero diagonal; dominance is undefined")]
    ZeroDiagonal(usize),

    #[error("row {row} has a nonpositive D_FF entry {value}")]
    NonpositiveDiagonal { row: usize, value: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("degenerate triangle {0} (zero area)")]
    DegenerateTriangle(usize),

    #[error("problem too large for exhaustive search: n = {n}, limit {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("coarsening stalled at level {level}: {n_coarse} of {n} points kept")]
    Stalled { level: usize, n: usize, n_coarse: usize },

    #[error("infeasible splitting: row {row} has dominance {factor} < {theta}")]
    Infeasible { row: usize, factor: f64, theta: f64 },

    #[error("singular coarse-grid matrix")]
    Singular,

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
