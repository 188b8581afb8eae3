use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use hyperadapt_core::assessment::AssessmentError;
use hyperadapt_core::content::ContentError;
use hyperadapt_core::generator::GeneratorError;
use hyperadapt_core::ils::IlsError;
use hyperadapt_core::learner::LearnerError;
use hyperadapt_core::pedagogy::PedagogyError;
use hyperadapt_core::psychometrics::PsychometricsError;
use serde::{Deserialize, Serialize};

use crate::cohort::CohortError;
use crate::store::StoreError;

/// Wire form of every error response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn unauthorized(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "Unauthorized", message)
    }

    pub fn not_found(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, code, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            code: self.code.to_string(),
            message: self.message,
        };
        (self.status, Json(body)).into_response()
    }
}

fn with(status: StatusCode, code: &'static str, e: impl std::fmt::Display) -> ApiError {
    ApiError::new(status, code, e.to_string())
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        with(StatusCode::BAD_REQUEST, "MalformedBody", e.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        with(StatusCode::BAD_REQUEST, "MalformedQuery", e.body_text())
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let status = match &e {
            StoreError::NotFound { .. } => StatusCode::NOT_FOUND,
            StoreError::IntegrityViolation(_) => StatusCode::UNPROCESSABLE_ENTITY,
            StoreError::InvalidId { .. } => StatusCode::BAD_REQUEST,
            StoreError::Unavailable(_) | StoreError::Corrupt { .. } => StatusCode::SERVICE_UNAVAILABLE,
        };
        let code = match &e {
            StoreError::NotFound { kind: "learner", .. } => "UnknownLearner",
            StoreError::NotFound { kind: "course", .. } => "UnknownCourse",
            StoreError::NotFound { kind: "instrument", .. } => "UnknownInstrument",
            other => other.code(),
        };
        with(status, code, e)
    }
}

impl From<IlsError> for ApiError {
    fn from(e: IlsError) -> Self {
        with(StatusCode::BAD_REQUEST, e.code(), e)
    }
}

impl From<LearnerError> for ApiError {
    fn from(e: LearnerError) -> Self {
        let status = match &e {
            LearnerError::DuplicateLogin(_) | LearnerError::StyleAlreadySet => StatusCode::CONFLICT,
            _ => StatusCode::BAD_REQUEST,
        };
        with(status, e.code(), e)
    }
}

impl From<AssessmentError> for ApiError {
    fn from(e: AssessmentError) -> Self {
        let status = match &e {
            AssessmentError::AlreadyTaken(_) => StatusCode::CONFLICT,
            AssessmentError::UnknownConcept(_) | AssessmentError::NotEnrolled(_) | AssessmentError::NoSuchTest(_) => {
                StatusCode::NOT_FOUND
            }
            _ => StatusCode::BAD_REQUEST,
        };
        with(status, e.code(), e)
    }
}

impl From<GeneratorError> for ApiError {
    fn from(e: GeneratorError) -> Self {
        let status = match &e {
            GeneratorError::PretestMissing(_) => StatusCode::CONFLICT,
            GeneratorError::NotEnrolled(_) | GeneratorError::UnknownConcept(_) => StatusCode::NOT_FOUND,
        };
        with(status, e.code(), e)
    }
}

impl From<PedagogyError> for ApiError {
    fn from(e: PedagogyError) -> Self {
        with(StatusCode::NOT_FOUND, e.code(), e)
    }
}

impl From<ContentError> for ApiError {
    fn from(e: ContentError) -> Self {
        let status = match &e {
            ContentError::MalformedDocument(_) => StatusCode::BAD_REQUEST,
            ContentError::UnknownConcept(_) => StatusCode::NOT_FOUND,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        with(status, e.code(), e)
    }
}

impl From<PsychometricsError> for ApiError {
    fn from(e: PsychometricsError) -> Self {
        with(StatusCode::UNPROCESSABLE_ENTITY, e.code(), e)
    }
}

impl From<CohortError> for ApiError {
    fn from(e: CohortError) -> Self {
        match e {
            CohortError::Store(e) => e.into(),
            CohortError::Psychometrics(e) => e.into(),
        }
    }
}
