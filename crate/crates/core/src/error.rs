use thiserror::Error;

/// Errors raised by ingestion, validation and the measurement routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("distribution needs at least 2 classes, got {0}")]
    TooFewClasses(usize),

    #[error("negative probability {value} at class {index}")]
    NegativeProbability { index: usize, value: f64 },

    #[error("non-finite probability at class {0}")]
    NonFiniteProbability(usize),

    #[error("probability sum {0} outside tolerance")]
    SumOutsideTolerance(f64),

    #[error("line {line}: malformed JSON: {message}")]
    MalformedLine { line: usize, message: String },

    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("instance {instance}: {message}")]
    InvalidInstance { instance: String, message: String },

    #[error("incomplete cell grid: missing ({realization},{question})")]
    IncompleteGrid {
        realization: String,
        question: String,
    },

    #[error("inconsistent number of classes: expected {expected}, got {found}")]
    InconsistentClasses { expected: usize, found: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("duplicate instance id {0:?}")]
    DuplicateInstance(String),

    #[error("task mismatch: {0}")]
    TaskMismatch(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("degenerate influence denominator {0}")]
    DegenerateDenominator(f64),

    #[error("internal consistency error: {quantity} = {value} is negative beyond rounding")]
    NegativeInfluence { quantity: &'static str, value: f64 },

    #[error("invalid logit record {id:?}: {message}")]
    InvalidLogits { id: String, message: String },

    #[error("temperature {0} outside [1e-3, 1e3]")]
    TemperatureOutOfRange(f64),

    #[error(
        "calibration target unattainable: accuracy {accuracy} outside attainable mean max probability range [{low}, {high}]"
    )]
    CalibrationUnattainable { accuracy: f64, low: f64, high: f64 },

    #[error("calibration did not converge: gap {0} after iteration limit")]
    CalibrationNotConverged(f64),

    #[error("invalid word {0:?}")]
    InvalidWord(String),

    #[error("no words found")]
    NoWords,

    #[error("zero-norm vector")]
    ZeroNorm,

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("invalid fraction {0}: must lie in (0, 1]")]
    InvalidFraction(f64),

    #[error("fractions must be strictly increasing")]
    UnsortedFractions,

    #[error("invalid min gap {0}")]
    InvalidGap(f64),

    #[error("missing ordering score for instance {0:?}")]
    MissingScore(String),

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("support too large to enumerate: {0} cells")]
    SupportTooLarge(usize),

    #[error("I/O error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn at_line(self, line: usize) -> Self {
        Error::AtLine {
            line,
            source: Box::new(self),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
