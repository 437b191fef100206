use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid spline: {0}")]
    InvalidSpline(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("unsupported operation: {0}")]
    UnsupportedOperation(String),

    #[error("invalid operation: {0}")]
    InvalidOperation(String),

    #[error("hole contour leaves the external contour on slice {slice}")]
    ContainmentViolation { slice: usize },

    #[error("meshing failed on slice {slice}: {reason}")]
    MeshingFailure { slice: usize, reason: String },

    #[error("mesh is not watertight ({} bad edges, first {:?})", boundary_edges.len(), boundary_edges.first())]
    NotWatertight { boundary_edges: Vec<(u32, u32)> },

    #[error("gripper collides with the object at its initial pose: {0}")]
    Collision(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("document version {found:?} is not supported (expected {expected:?}); upgrade the file first")]
    VersionMismatch { found: String, expected: String },

    #[error("dangling reference: {0}")]
    DanglingReference(String),

    #[error("part {part}: {source}")]
    Part {
        part: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    /// Stable name of the error variant, used by the CLI and the service.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidSpline(_) => "InvalidSpline",
            Error::EmptyInput(_) => "EmptyInput",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::UnsupportedOperation(_) => "UnsupportedOperation",
            Error::InvalidOperation(_) => "InvalidOperation",
            Error::ContainmentViolation { .. } => "ContainmentViolation",
            Error::MeshingFailure { .. } => "MeshingFailure",
            Error::NotWatertight { .. } => "NotWatertight",
            Error::Collision(_) => "Collision",
            Error::Parse { .. } => "ParseError",
            Error::UnsupportedFormat(_) => "UnsupportedFormat",
            Error::VersionMismatch { .. } => "VersionMismatch",
            Error::DanglingReference(_) => "DanglingReference",
            Error::Part { source, .. } => source.kind(),
            Error::Io(_) => "IoError",
            Error::Serde(_) => "SerializationError",
        }
    }

    pub(crate) fn index(what: &'static str, index: usize, len: usize) -> Self {
        Error::IndexOutOfRange { what, index, len }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
