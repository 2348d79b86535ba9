use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use serde::Serialize;
use serde_json::Value;
use verifi_core::canonical;

/// JSON response rendered as sorted-key canonical text.
#[derive(Debug)]
pub struct Reply {
    status: StatusCode,
    body: Value,
}

impl Reply {
    pub fn new(status: StatusCode, body: Value) -> Self {
        Self { status, body }
    }

    pub fn ok<T: Serialize>(value: &T) -> Self {
        Self::with_status(StatusCode::OK, value)
    }

    pub fn created<T: Serialize>(value: &T) -> Self {
        Self::with_status(StatusCode::CREATED, value)
    }

    fn with_status<T: Serialize>(status: StatusCode, value: &T) -> Self {
        let body = serde_json::to_value(value).expect("response types serialize");
        Self { status, body }
    }
}

impl IntoResponse for Reply {
    fn into_response(self) -> Response {
        (
            self.status,
            [(header::CONTENT_TYPE, "application/json")],
            canonical::value_to_text(&self.body),
        )
            .into_response()
    }
}
