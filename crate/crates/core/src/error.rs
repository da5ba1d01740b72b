use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    Shape {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("video has no frames")]
    EmptyVideo,
    #[error("malformed pair {0}")]
    MalformedPair(String),
    #[error("ingest error: {0}")]
    Ingest(String),
    #[error("degenerate video: {0}")]
    DegenerateVideo(String),
    #[error("infeasible pair {0}: no valid positive/negative frames")]
    InfeasiblePair(String),
    #[error("scenario mismatch: {0} vs {1}")]
    ScenarioMismatch(String, String),
    #[error("ordering error: {0}")]
    Ordering(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("malformed training item: {0}")]
    MalformedItem(String),
    #[error("non-finite loss: {0}")]
    NonFinite(String),
    #[error("mode error: {0}")]
    Mode(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("corrupt file: {0}")]
    Corruption(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn check_len(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Shape {
            context,
            expected,
            got,
        });
    }
    Ok(())
}
