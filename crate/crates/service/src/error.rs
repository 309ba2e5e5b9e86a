use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use sociface_core::dialogue::DialogueError;
use sociface_core::harness::HarnessError;
use sociface_core::recognizer::RecognizerError;
use sociface_core::socialstore::StoreError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    NotFound,
    BadRequest,
    Conflict,
    Internal,
}

impl ErrorCode {
    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::BadRequest => StatusCode::BAD_REQUEST,
            ErrorCode::Conflict => StatusCode::CONFLICT,
            ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

/// Body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{code:?}: {message}")]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::NotFound, message)
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::BadRequest, message)
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::Conflict, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::Internal, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.code.status(), Json(self)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let code = match e {
            StoreError::UnknownPerson(_) => ErrorCode::NotFound,
            StoreError::Hidden { .. } => ErrorCode::Conflict,
            StoreError::Io(_) => ErrorCode::Internal,
            _ => ErrorCode::BadRequest,
        };
        Self::new(code, e.to_string())
    }
}

impl From<DialogueError> for ApiError {
    fn from(e: DialogueError) -> Self {
        match e {
            DialogueError::Store(s) => s.into(),
            DialogueError::UnknownRobot(_) | DialogueError::Template(_) => {
                Self::internal(e.to_string())
            }
            _ => Self::conflict(e.to_string()),
        }
    }
}

impl From<RecognizerError> for ApiError {
    fn from(e: RecognizerError) -> Self {
        match e {
            RecognizerError::InvalidPolicy(_) => Self::bad_request(e.to_string()),
            _ => Self::internal(e.to_string()),
        }
    }
}

impl From<HarnessError> for ApiError {
    fn from(e: HarnessError) -> Self {
        let code = match e {
            HarnessError::UnknownExperiment(_) => ErrorCode::NotFound,
            HarnessError::OutOfRange(_)
            | HarnessError::InvalidConfig(_)
            | HarnessError::InvalidSpec(_) => ErrorCode::BadRequest,
            _ => ErrorCode::Internal,
        };
        Self::new(code, e.to_string())
    }
}

/// Parses an optional JSON body; an empty body yields the default.
pub(crate) fn parse_body<T: serde::de::DeserializeOwned + Default>(
    bytes: &[u8],
) -> Result<T, ApiError> {
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    parse_required(bytes)
}

/// Every documented body is a JSON object; arrays are refused even where serde
/// would accept them positionally.
pub(crate) fn parse_required<T: serde::de::DeserializeOwned>(bytes: &[u8]) -> Result<T, ApiError> {
    let malformed = |e: serde_json::Error| ApiError::bad_request(format!("malformed body: {e}"));
    let value: serde_json::Value = serde_json::from_slice(bytes).map_err(malformed)?;
    if !value.is_object() {
        return Err(ApiError::bad_request(
            "malformed body: expected a JSON object",
        ));
    }
    serde_json::from_value(value).map_err(malformed)
}
