use thiserror::Error;

pub type Result<T> = std::result::Result<T, CupidError>;

/// Every failure the curation engine can report.
///
/// Each variant maps onto a stable machine-readable [`kind`](CupidError::kind)
/// so front ends can surface it without string matching.
#[derive(Debug, Error)]
pub enum CupidError {
    #[error("format error: {0}")]
    Format(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("data error in video '{video_id}': {reason}")]
    Data { video_id: String, reason: String },
    #[error("not found: {0}")]
    NotFound(String),
    #[error("argument error: {0}")]
    Argument(String),
    #[error("capacity error: {0}")]
    Capacity(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CupidError {
    pub fn kind(&self) -> &'static str {
        match self {
            CupidError::Format(_) => "format",
            CupidError::Schema(_) => "schema",
            CupidError::Data { .. } => "data",
            CupidError::NotFound(_) => "not_found",
            CupidError::Argument(_) => "argument",
            CupidError::Capacity(_) => "capacity",
            CupidError::Io(_) => "io",
            CupidError::Json(_) => "json",
        }
    }

    pub fn data(video_id: impl Into<String>, reason: impl Into<String>) -> Self {
        CupidError::Data {
            video_id: video_id.into(),
            reason: reason.into(),
        }
    }
}
