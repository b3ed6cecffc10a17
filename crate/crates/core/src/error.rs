use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpaceError {
    #[error("a search space needs at least 2 dimensions, got {0}")]
    TooFewDimensions(usize),
    #[error("dimension `{0}` has no values")]
    EmptyDimension(String),
    #[error("duplicate dimension name `{0}`")]
    DuplicateDimension(String),
    #[error("duplicate value `{label}` in dimension `{dimension}`")]
    DuplicateLabel { dimension: String, label: String },
    #[error("combination count overflows the flat index")]
    TooLarge,
    #[error("unknown dimension `{0}`")]
    UnknownDimension(String),
    #[error("unknown value `{label}` in dimension `{dimension}`")]
    UnknownLabel { dimension: String, label: String },
    #[error("combination has {got} coordinates, space has {expected} dimensions")]
    Arity { expected: usize, got: usize },
    #[error("index {index} out of range for dimension `{dimension}` of size {size}")]
    IndexOutOfRange { dimension: String, index: usize, size: usize },
    #[error("flat index {0} out of range")]
    FlatOutOfRange(u64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("iterations k must be >= 1, got {0}")]
    Iterations(u64),
    #[error("fixed alpha must be finite and > 0, got {0}")]
    Alpha(f64),
    #[error("factor clamp must satisfy 0 < min <= 1 <= max, got [{0}, {1}]")]
    Clamp(f64, f64),
    #[error("failure factor must lie in (0, 1), got {0}")]
    FailureFactor(f64),
    #[error("exclusion floor must lie in [0, 1), got {0}")]
    Floor(f64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoreError {
    #[error("inference time must be > 0, got {0}")]
    NonPositiveTime(f64),
    #[error("accuracy must lie in [0, 1], got {0}")]
    Accuracy(f64),
}

/// Failures of an evaluator as a component, as opposed to a failed
/// evaluation of one combination (see [`crate::Status`]).
#[derive(Debug, Error)]
pub enum EvaluatorError {
    #[error("failed to spawn evaluator `{command}`: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error("handshake failed: {0}")]
    Handshake(String),
    #[error("evaluator process is dead: {0}")]
    Dead(String),
    #[error("evaluator i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("every combination is excluded; nothing left to sample")]
    Exhausted,
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error("state has {state} entries but the space has {space} combinations")]
    StateMismatch { state: usize, space: u64 },
    #[error("evaluator failed at iteration {iteration} on {combination}: {source}")]
    Evaluator {
        iteration: u64,
        combination: String,
        #[source]
        source: EvaluatorError,
    },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: u64,
    pub message: String,
}

impl ParseError {
    pub fn new(line: u64, message: impl Into<String>) -> Self {
        ParseError { line, message: message.into() }
    }
}

#[derive(Debug, Error)]
pub enum ResultError {
    #[error("no successful evaluation in the table")]
    NoResult,
}

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("run-state i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("unsupported run-state format version {found}, expected {expected}")]
    Version { found: u64, expected: u64 },
    #[error("corrupt run-state file: {0}")]
    Corrupt(String),
}
