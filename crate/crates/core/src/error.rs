use thiserror::Error;

/// Errors reported by mesh construction, assembly and the linear solver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("invalid problem data: {0}")]
    Data(String),
    #[error("solver failure in block `{block}`: {detail}")]
    Solver { block: String, detail: String },
    #[error("level {level}: {source}")]
    Level {
        level: usize,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
