use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use kgexplore_core::embed::EmbedError;
use kgexplore_core::layout::LayoutError;
use kgexplore_core::results::ResultsError;
use kgexplore_core::sparql::SparqlError;
use kgexplore_core::suggest::SuggestError;
use serde::Serialize;
use serde_json::{json, Value};

use crate::endpoint::EndpointError;

/// Error body returned by every endpoint: `{httpStatus, code, message, details}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ApiError {
    pub http_status: u16,
    pub code: &'static str,
    pub message: String,
    pub details: Value,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            http_status: status.as_u16(),
            code,
            message: message.into(),
            details: Value::Null,
        }
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.details = details;
        self
    }

    pub fn invalid_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "InvalidRequest", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.http_status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

impl From<EmbedError> for ApiError {
    fn from(e: EmbedError) -> Self {
        match e {
            EmbedError::Timeout => ApiError::new(StatusCode::GATEWAY_TIMEOUT, "Timeout", e.to_string()),
            EmbedError::DimensionMismatch { expected, found } => {
                ApiError::new(StatusCode::BAD_GATEWAY, "DimensionMismatch", e.to_string())
                    .with_details(json!({ "expected": expected, "found": found }))
            }
            _ => ApiError::new(StatusCode::BAD_GATEWAY, "EmbedderError", e.to_string()),
        }
    }
}

impl From<SuggestError> for ApiError {
    fn from(e: SuggestError) -> Self {
        match e {
            SuggestError::UnknownTopic(id) => {
                ApiError::new(StatusCode::NOT_FOUND, "UnknownTopic", e.to_string()).with_details(json!({ "topicId": id }))
            }
            SuggestError::UnknownClass(ref iri) => ApiError::new(StatusCode::NOT_FOUND, "UnknownClass", e.to_string())
                .with_details(json!({ "classIri": iri })),
            SuggestError::EmptySelection => ApiError::new(StatusCode::BAD_REQUEST, "EmptySelection", e.to_string()),
            SuggestError::Embed(inner) => inner.into(),
        }
    }
}

impl From<SparqlError> for ApiError {
    fn from(e: SparqlError) -> Self {
        let SparqlError::InvalidGraph(ref diagnostics) = e;
        let code = diagnostics.first().map_or("InvalidGraph", |d| d.code.as_str());
        ApiError::new(StatusCode::BAD_REQUEST, code, e.to_string())
            .with_details(json!({ "diagnostics": diagnostics }))
    }
}

impl From<LayoutError> for ApiError {
    fn from(e: LayoutError) -> Self {
        let LayoutError::UnknownClass(ref iri) = e;
        ApiError::new(StatusCode::NOT_FOUND, "UnknownClass", e.to_string()).with_details(json!({ "classIri": iri }))
    }
}

impl From<EndpointError> for ApiError {
    fn from(e: EndpointError) -> Self {
        match e {
            EndpointError::Timeout => ApiError::new(StatusCode::GATEWAY_TIMEOUT, "Timeout", e.to_string()),
            EndpointError::Transport(_) => ApiError::new(StatusCode::BAD_GATEWAY, "EndpointUnavailable", e.to_string()),
            EndpointError::Endpoint { status, .. } => ApiError::new(StatusCode::BAD_GATEWAY, "EndpointError", e.to_string())
                .with_details(json!({ "status": status })),
            EndpointError::Results(inner) => inner.into(),
        }
    }
}

impl From<ResultsError> for ApiError {
    fn from(e: ResultsError) -> Self {
        let code = match e {
            ResultsError::MalformedResults(_) => "MalformedResults",
            ResultsError::MissingVariable { .. } => "MissingVariable",
            ResultsError::UnexpectedTerm { .. } => "UnexpectedTerm",
        };
        ApiError::new(StatusCode::BAD_GATEWAY, code, e.to_string())
    }
}
