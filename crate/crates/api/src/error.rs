use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use serde_json::json;
use verifi_core::cas::CasError;
use verifi_core::ledger::LedgerError;
use verifi_core::WorkflowError;

use crate::reply::Reply;

/// Error body: `{"code": ..., "message": ...}` with a stable code per kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn unauthenticated(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "UNAUTHENTICATED", message)
    }

    pub fn unauthorized(message: impl Into<String>) -> Self {
        Self::new(StatusCode::FORBIDDEN, "UNAUTHORIZED", message)
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "VALIDATION", message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "NOT_FOUND", message)
    }
}

impl From<WorkflowError> for ApiError {
    fn from(err: WorkflowError) -> Self {
        use StatusCode as S;
        let message = err.to_string();
        let (status, code) = match &err {
            WorkflowError::Unauthenticated(_) => (S::UNAUTHORIZED, "UNAUTHENTICATED"),
            WorkflowError::BadCredentials => (S::UNAUTHORIZED, "BAD_CREDENTIALS"),
            WorkflowError::Unauthorized(_) => (S::FORBIDDEN, "UNAUTHORIZED"),
            WorkflowError::Forbidden(_) => (S::FORBIDDEN, "FORBIDDEN"),
            WorkflowError::NotFound(_) => (S::NOT_FOUND, "NOT_FOUND"),
            WorkflowError::DuplicateUser(_) => (S::CONFLICT, "DUPLICATE_USER"),
            WorkflowError::WrongState(_) => (S::CONFLICT, "WRONG_STATE"),
            WorkflowError::DuplicatePending => (S::CONFLICT, "DUPLICATE_PENDING"),
            WorkflowError::EmptyFile => (S::UNPROCESSABLE_ENTITY, "EMPTY_FILE"),
            WorkflowError::TooLarge => (S::UNPROCESSABLE_ENTITY, "TOO_LARGE"),
            WorkflowError::Validation(_) => (S::UNPROCESSABLE_ENTITY, "VALIDATION"),
            WorkflowError::AnchorFailed(inner) => (
                S::CONFLICT,
                match inner {
                    LedgerError::FeeNotApproved => "FEE_NOT_APPROVED",
                    LedgerError::InsufficientBalance { .. } => "INSUFFICIENT_BALANCE",
                    LedgerError::QuorumNotReached(_) => "QUORUM_NOT_REACHED",
                    _ => "ANCHOR_FAILED",
                },
            ),
            WorkflowError::TamperDetected(_) | WorkflowError::Cas(CasError::CorruptObject(_)) => {
                (S::INTERNAL_SERVER_ERROR, "TAMPER_DETECTED")
            }
            WorkflowError::AlreadyInitialized
            | WorkflowError::NotInitialized
            | WorkflowError::Cas(_)
            | WorkflowError::Ledger(_)
            | WorkflowError::Io(_) => (S::INTERNAL_SERVER_ERROR, "INTERNAL"),
        };
        Self::new(status, code, message)
    }
}

impl From<LedgerError> for ApiError {
    fn from(err: LedgerError) -> Self {
        match err {
            LedgerError::UnknownTx(_) | LedgerError::UnknownBlock(_) => Self::not_found(err.to_string()),
            other => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        Reply::new(self.status, json!({ "code": self.code, "message": self.message })).into_response()
    }
}
