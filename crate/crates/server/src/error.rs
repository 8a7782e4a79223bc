use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use datascope::coding::CodingError;
use datascope::hypothesis::HypothesisError;
use datascope::layout::LayoutError;
use datascope::neighborhood::NeighborError;
use datascope::pipeline::PipelineError;
use serde::{Deserialize, Serialize};

/// Every error response body: `{status, code, message}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub status: u16,
    pub code: String,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status: status.as_u16(),
            code: code.to_string(),
            message: message.into(),
        }
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn unprocessable(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "rule_violation", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }

    pub fn unavailable(message: impl Into<String>) -> Self {
        Self::new(StatusCode::SERVICE_UNAVAILABLE, "unavailable", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

impl From<CodingError> for ApiError {
    fn from(e: CodingError) -> Self {
        let msg = e.to_string();
        match e {
            CodingError::OrdinalConflict { .. } => ApiError::new(StatusCode::CONFLICT, "ordinal_conflict", msg),
            CodingError::AlreadyExists(_) => ApiError::new(StatusCode::CONFLICT, "already_exists", msg),
            CodingError::NotFound(_) => ApiError::not_found(msg),
            CodingError::InvalidSessionId(_) | CodingError::UnknownLabel(_) | CodingError::MissingEmbedding => {
                ApiError::bad_request(msg)
            }
            CodingError::Import(_) | CodingError::Csv(_) => ApiError::bad_request(msg),
            ref r if r.is_rule_violation() => ApiError::unprocessable(msg),
            _ => ApiError::internal(msg),
        }
    }
}

impl From<HypothesisError> for ApiError {
    fn from(e: HypothesisError) -> Self {
        let msg = e.to_string();
        match e {
            HypothesisError::NotFound(_) => ApiError::not_found(msg),
            HypothesisError::InvalidId(_)
            | HypothesisError::UnknownSample(_)
            | HypothesisError::UnknownLabel(_)
            | HypothesisError::MissingNullStatement => ApiError::bad_request(msg),
            HypothesisError::Closed | HypothesisError::InsufficientEvidence { .. } => ApiError::unprocessable(msg),
            HypothesisError::Json(_) | HypothesisError::Io(_) => ApiError::internal(msg),
        }
    }
}

impl From<NeighborError> for ApiError {
    fn from(e: NeighborError) -> Self {
        let msg = e.to_string();
        match e {
            NeighborError::UnknownAnchor(_) | NeighborError::UnknownComparison(_) => ApiError::not_found(msg),
            NeighborError::NoNeighbor { .. } => ApiError::unprocessable(msg),
            NeighborError::ShapeMismatch { .. } => ApiError::internal(msg),
        }
    }
}

impl From<LayoutError> for ApiError {
    fn from(e: LayoutError) -> Self {
        ApiError::internal(e.to_string())
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        ApiError::bad_request(e.to_string())
    }
}

impl From<crate::catalog::CatalogError> for ApiError {
    fn from(e: crate::catalog::CatalogError) -> Self {
        use crate::catalog::CatalogError;
        let msg = e.to_string();
        match e {
            CatalogError::UnknownDataset(_) => ApiError::not_found(msg),
            CatalogError::BadVersion(_) => ApiError::bad_request(msg),
            CatalogError::Unavailable(_) => ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "data_unavailable", msg),
        }
    }
}

impl From<crate::layouts::LayoutLookup> for ApiError {
    fn from(e: crate::layouts::LayoutLookup) -> Self {
        use crate::layouts::LayoutLookup;
        match e {
            LayoutLookup::InvalidId => ApiError::bad_request("invalid layout id"),
            LayoutLookup::NotFound => ApiError::not_found("layout not found"),
            LayoutLookup::Failed(e) => ApiError::internal(e.to_string()),
        }
    }
}

/// `Json`, `Query` and `Path` whose rejections use the error body above.
pub mod extract {
    use axum::extract::rejection::{JsonRejection, PathRejection, QueryRejection};
    use axum::extract::{FromRequest, FromRequestParts, Request};
    use axum::http::request::Parts;
    use serde::de::DeserializeOwned;

    use super::ApiError;

    fn rejected(status: axum::http::StatusCode, code: &str, text: String) -> ApiError {
        ApiError::new(status, code, text)
    }

    pub struct Json<T>(pub T);

    impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Json<T> {
        type Rejection = ApiError;

        async fn from_request(req: Request, state: &S) -> Result<Self, ApiError> {
            axum::Json::<T>::from_request(req, state)
                .await
                .map(|j| Json(j.0))
                .map_err(|r: JsonRejection| rejected(r.status(), "invalid_body", r.body_text()))
        }
    }

    pub struct Query<T>(pub T);

    impl<S: Send + Sync, T: DeserializeOwned> FromRequestParts<S> for Query<T> {
        type Rejection = ApiError;

        async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, ApiError> {
            axum::extract::Query::<T>::from_request_parts(parts, state)
                .await
                .map(|q| Query(q.0))
                .map_err(|r: QueryRejection| rejected(r.status(), "invalid_query", r.body_text()))
        }
    }

    pub struct Path<T>(pub T);

    impl<S: Send + Sync, T: DeserializeOwned + Send> FromRequestParts<S> for Path<T> {
        type Rejection = ApiError;

        async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, ApiError> {
            axum::extract::Path::<T>::from_request_parts(parts, state)
                .await
                .map(|p| Path(p.0))
                .map_err(|r: PathRejection| rejected(r.status(), "invalid_path", r.body_text()))
        }
    }
}
