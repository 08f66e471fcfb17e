use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use stratincon_core::profiles::ProfileError;
use stratincon_core::store::StoreError;

/// Body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub status: u16,
    pub code: String,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status: status.as_u16(),
            code: code.to_string(),
            message: message.into(),
        }
    }

    pub fn not_found(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, code, message)
    }

    pub fn unprocessable(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, code, message)
    }

    pub fn match_not_found(id: &str) -> Self {
        Self::not_found("match_not_found", format!("no match with id {id:?}"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match &e {
            StoreError::NotFound { kind: "bundle", .. } => {
                Self::not_found("analysis_not_found", e.to_string())
            }
            StoreError::NotFound { kind: "match", .. } => {
                Self::not_found("match_not_found", e.to_string())
            }
            StoreError::NotFound { .. } => Self::not_found("not_found", e.to_string()),
            StoreError::InvalidId(_) => Self::unprocessable("invalid_id", e.to_string()),
            StoreError::VersionSkew { .. } => {
                Self::new(StatusCode::CONFLICT, "version_skew", e.to_string())
            }
            StoreError::CorruptEntity { .. } | StoreError::Io(_) => {
                Self::new(StatusCode::INTERNAL_SERVER_ERROR, e.code(), e.to_string())
            }
        }
    }
}

impl From<ProfileError> for ApiError {
    fn from(e: ProfileError) -> Self {
        match &e {
            ProfileError::NoMatches => Self::not_found("no_matches", e.to_string()),
            ProfileError::MissingLoadoutData => {
                Self::not_found("missing_loadout_data", e.to_string())
            }
            ProfileError::TooFewMatches { .. } => {
                Self::unprocessable("too_few_matches", e.to_string())
            }
            ProfileError::UnknownMatch(_) => {
                Self::unprocessable("match_not_in_selection", e.to_string())
            }
        }
    }
}
