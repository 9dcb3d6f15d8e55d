use std::fmt;

/// Errors raised by the geometry engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("derivative order unsupported: requested (x:{x}, y:{y}), maximum (x:1, y:3)")]
    OrderUnsupported { x: u8, y: u8 },

    #[error("singular Jacobian (|det| = {det:e}) at {point:?}")]
    SingularJacobian { det: f64, point: Vec<f64> },

    #[error("{0}")]
    Parse(ParseError),

    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("variable `{name}` out of range for dimension {n} at offset {offset}")]
    IndexOutOfRange { name: String, n: usize, offset: usize },

    #[error("conformal factor must depend on x only, found `{0}`")]
    YDependentSigma(String),

    #[error("degenerate metric: {0}")]
    DegenerateMetric(String),

    #[error("signature mismatch: declared {expected:?}, found {found:?}")]
    SignatureMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("point not admissible: x={x:?}, y={y:?}")]
    NotAdmissible { x: Vec<f64>, y: Vec<f64> },

    #[error("null direction (|L| = {l:e} <= {tol:e})")]
    NullDirection { l: f64, tol: f64 },

    #[error("sampling exhausted after {attempts} rejections")]
    SamplingExhausted { attempts: usize },

    #[error("grid too coarse: {0} samples, need at least 3")]
    GridTooCoarse(usize),

    #[error("not conformal at {x:?}: {reason}")]
    NotConformalAt { x: Vec<f64>, reason: String },

    #[error("all samples null at {0:?}")]
    AllSamplesNull(Vec<f64>),

    #[error("flow blew up (|x| = {0:e})")]
    FlowBlowup(f64),

    #[error("no witness found in {0} samples")]
    InconclusiveSampling(usize),

    #[error("trajectory is not null (|L0| = {0:e})")]
    NotNull(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Syntax error in an expression, located by 1-based byte position.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub offset: usize,
    pub found: String,
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "parse error at offset {}: found {}, expected one of: {}",
            self.offset,
            self.found,
            self.expected.join(", ")
        )
    }
}

impl From<ParseError> for Error {
    fn from(e: ParseError) -> Self {
        Error::Parse(e)
    }
}
