use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("oracle budget exceeded: {points} points > {max_points}")]
    BudgetExceeded { points: usize, max_points: usize },

    #[error("image-shell sum is not converging (shell {shell}: {current:e} >= {previous:e})")]
    Divergence {
        shell: usize,
        previous: f64,
        current: f64,
    },

    #[error("blow-up suspected: {0}")]
    BlowUpSuspected(String),

    #[error("field is not radially symmetric (asymmetry {0:e})")]
    NotRadial(f64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed state file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
