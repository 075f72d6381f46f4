use thiserror::Error;

use crate::geometry::BBox;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("box has zero extent ({w}x{h})")]
    EmptyBox { w: u32, h: u32 },
    #[error("cannot take the union of zero boxes")]
    EmptyUnion,
    #[error("box {bbox} exceeds image bounds {width}x{height}")]
    OutOfBounds { bbox: BBox, width: u32, height: u32 },
    #[error("invalid split policy: {0}")]
    InvalidSplit(String),
    #[error("cannot parse box from {0:?}, expected x,y,w,h")]
    Parse(String),
    #[error("image has no pixel data")]
    NoPixels,
    #[error("cannot read image {path}: {reason}")]
    Image { path: String, reason: String },
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("transport failure after {attempts} attempt(s): {reason}")]
    Transport { attempts: u32, reason: String },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl OracleError {
    pub fn is_transport(&self) -> bool {
        matches!(self, OracleError::Transport { .. })
    }
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid search config: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    /// An oracle failure part-way through a search, with the events logged
    /// up to that point.
    #[error("search aborted after {} trace event(s): {source}", partial.events.len())]
    Aborted {
        source: OracleError,
        partial: Box<crate::search::SearchTrace>,
    },
}

impl SearchError {
    pub fn is_transport(&self) -> bool {
        match self {
            SearchError::Oracle(e) | SearchError::Aborted { source: e, .. } => e.is_transport(),
            _ => false,
        }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot read dataset {path}: {reason}")]
    Dataset { path: String, reason: String },
    #[error("dataset {path}: {malformed} of {total} lines malformed")]
    TooManyMalformed {
        path: String,
        malformed: usize,
        total: usize,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
