use std::fmt;
use std::path::PathBuf;

use crate::value::DType;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Location of a token or construct inside a pipeline script.
///
/// Offsets are byte offsets into the script text; `line` and `column` are
/// 1-based and point at `start`. Columns count characters, not bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("column `{name}` has {found} rows, expected {expected}")]
    LengthMismatch {
        name: String,
        expected: usize,
        found: usize,
    },

    #[error("duplicate column name `{0}`")]
    DuplicateName(String),

    #[error("column `{name}` declared {expected} but holds a {found} value")]
    DtypeMismatch {
        name: String,
        expected: DType,
        found: DType,
    },

    #[error("a frame without columns cannot have rows")]
    RowsWithoutColumns,

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("unknown table `{0}`")]
    UnknownTable(String),

    #[error("type error: {0}")]
    Type(String),

    #[error("{func}() takes {expected} argument(s), got {found}")]
    Arity {
        func: String,
        expected: String,
        found: usize,
    },

    #[error("integer division by zero")]
    DivideByZero,

    #[error("integer overflow in {0}")]
    Overflow(String),

    #[error("cannot parse `{0}` as a date")]
    DateParse(String),

    #[error("select() must keep at least one column")]
    EmptyProjection,

    #[error("select() drops grouping key `{0}`")]
    GroupKeyDropped(String),

    #[error("column name `{0}` collides with an existing column")]
    NameCollision(String),

    #[error("head() needs a positive row count")]
    InvalidHead,

    #[error("table `{0}` is remote; compile it to SQL instead of collecting")]
    RemoteNotExecutable(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("line {line}: invalid UTF-8")]
    BadUtf8 { line: u64 },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("csv: {0}")]
    Csv(String),

    #[error("{span}: syntax error: {message}")]
    Syntax { message: String, span: SourceSpan },

    #[error("{span}: `{construct}` is not supported in pipeline scripts")]
    Reserved { construct: String, span: SourceSpan },

    #[error("no SQL mapping for {0}")]
    Unsupported(String),

    /// An error raised while checking a script statement, located at the
    /// verb that caused it.
    #[error("{span}: {source}")]
    At {
        span: SourceSpan,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn type_error(msg: impl Into<String>) -> Self {
        Error::Type(msg.into())
    }

    /// Source location, for errors raised by the script parser.
    pub fn span(&self) -> Option<SourceSpan> {
        match self {
            Error::Syntax { span, .. } | Error::Reserved { span, .. } | Error::At { span, .. } => {
                Some(*span)
            }
            _ => None,
        }
    }

    /// The underlying error, without any location wrapper.
    pub fn root(&self) -> &Error {
        match self {
            Error::At { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_io(&self) -> bool {
        matches!(
            self.root(),
            Error::Io { .. }
                | Error::RaggedRow { .. }
                | Error::BadUtf8 { .. }
                | Error::Csv(_)
                | Error::SchemaMismatch(_)
        )
    }
}
