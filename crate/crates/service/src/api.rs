//! JSON read API for the dashboard.
//!
//! Handlers read an immutable store snapshot; the writer publishes a new one
//! after each ingest/orchestrate cycle. The need threshold is an atomic swap
//! visible to every later request.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, NaiveDate, Utc};
use needminer_core::enrich::{Gender, Sentiment};
use needminer_core::needcat::{Bucket, CategoryAssignment, NeedCategory};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::ServiceError;
use crate::orchestrate::{Enrichers, Thresholds};
use crate::query::{query_summary, query_timeseries, query_tweets, Filters, Window, DEFAULT_TOP};
use crate::registry::{LoadedModels, ModelVersions};
use crate::store::StoredTweet;

pub const DEFAULT_TWEET_LIMIT: usize = 20;
pub const MAX_TWEET_LIMIT: usize = 1000;
pub const MAX_CLASSIFY_TEXTS: usize = 1000;

pub struct AppState {
    snapshot: RwLock<Arc<Vec<StoredTweet>>>,
    models: RwLock<Option<Arc<LoadedModels>>>,
    need_threshold: AtomicU64,
    category_threshold: f64,
    enrichers: Enrichers,
}

impl AppState {
    pub fn new(
        snapshot: Arc<Vec<StoredTweet>>,
        models: Option<LoadedModels>,
        th: Thresholds,
        enrichers: Enrichers,
    ) -> Arc<Self> {
        Arc::new(AppState {
            snapshot: RwLock::new(snapshot),
            models: RwLock::new(models.map(Arc::new)),
            need_threshold: AtomicU64::new(th.need.to_bits()),
            category_threshold: th.category,
            enrichers,
        })
    }

    pub fn publish(&self, snapshot: Arc<Vec<StoredTweet>>) {
        *self.snapshot.write().expect("snapshot lock") = snapshot;
    }

    pub fn snapshot(&self) -> Arc<Vec<StoredTweet>> {
        self.snapshot.read().expect("snapshot lock").clone()
    }

    pub fn set_models(&self, models: Option<LoadedModels>) {
        *self.models.write().expect("models lock") = models.map(Arc::new);
    }

    pub fn models(&self) -> Option<Arc<LoadedModels>> {
        self.models.read().expect("models lock").clone()
    }

    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            need: f64::from_bits(self.need_threshold.load(Ordering::SeqCst)),
            category: self.category_threshold,
        }
    }

    pub fn set_threshold(&self, value: f64) -> Result<(), ServiceError> {
        if !(0.0..=1.0).contains(&value) {
            return Err(ServiceError::Query(format!(
                "threshold {value} outside [0, 1]"
            )));
        }
        self.need_threshold.store(value.to_bits(), Ordering::SeqCst);
        Ok(())
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            message: message.into(),
        }
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let status = match e {
            ServiceError::Query(_) | ServiceError::Core(needminer_core::Error::InvalidInput(_)) => {
                StatusCode::BAD_REQUEST
            }
            ServiceError::ModelsNotLoaded => StatusCode::SERVICE_UNAVAILABLE,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError {
            status,
            message: e.to_string(),
        }
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        ApiError::bad_request(e.body_text())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::bad_request(e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Accepts RFC 3339 timestamps or plain `YYYY-MM-DD` dates (midnight UTC).
fn parse_time(name: &str, s: &str) -> Result<DateTime<Utc>, ApiError> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(t.with_timezone(&Utc));
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map(|d| d.and_hms_opt(0, 0, 0).expect("midnight").and_utc())
        .map_err(|_| {
            ApiError::bad_request(format!(
                "{name}: expected RFC 3339 time or YYYY-MM-DD, got {s:?}"
            ))
        })
}

#[derive(Debug, Default, Deserialize)]
pub struct SelectionParams {
    from: Option<String>,
    to: Option<String>,
    category: Option<String>,
    min_score: Option<f64>,
    gender: Option<String>,
    bucket: Option<String>,
    top: Option<usize>,
    limit: Option<usize>,
}

impl SelectionParams {
    fn window(&self) -> Result<Window, ApiError> {
        let w = Window {
            from: self
                .from
                .as_deref()
                .map(|s| parse_time("from", s))
                .transpose()?,
            to: self
                .to
                .as_deref()
                .map(|s| parse_time("to", s))
                .transpose()?,
        };
        w.validate()?;
        Ok(w)
    }

    fn filters(&self) -> Result<Filters, ApiError> {
        let f = Filters {
            category: self
                .category
                .as_deref()
                .map(str::parse::<NeedCategory>)
                .transpose()
                .map_err(|e| ApiError::bad_request(e.to_string()))?,
            min_score: self.min_score,
            gender: self
                .gender
                .as_deref()
                .map(str::parse::<Gender>)
                .transpose()
                .map_err(|e| ApiError::bad_request(e.to_string()))?,
        };
        f.validate()?;
        Ok(f)
    }
}

async fn healthz() -> &'static str {
    "ok"
}

async fn summary(
    State(st): State<Arc<AppState>>,
    q: Result<Query<SelectionParams>, QueryRejection>,
) -> ApiResult<crate::query::Summary> {
    let Query(p) = q?;
    let s = query_summary(
        &st.snapshot(),
        &p.window()?,
        &p.filters()?,
        st.thresholds(),
        p.top.unwrap_or(DEFAULT_TOP),
    )?;
    Ok(Json(s))
}

#[derive(Debug, Serialize)]
struct Timeseries {
    bucket: Bucket,
    threshold: f64,
    series: Vec<needminer_core::needcat::NeedQuantification>,
}

async fn timeseries(
    State(st): State<Arc<AppState>>,
    q: Result<Query<SelectionParams>, QueryRejection>,
) -> ApiResult<Timeseries> {
    let Query(p) = q?;
    let bucket = match p.bucket.as_deref() {
        None => Bucket::Day,
        Some(b) => b
            .parse::<Bucket>()
            .map_err(|e| ApiError::bad_request(e.to_string()))?,
    };
    let th = st.thresholds();
    let series = query_timeseries(&st.snapshot(), &p.window()?, &p.filters()?, th, bucket)?;
    Ok(Json(Timeseries {
        bucket,
        threshold: th.need,
        series,
    }))
}

async fn tweets(
    State(st): State<Arc<AppState>>,
    q: Result<Query<SelectionParams>, QueryRejection>,
) -> ApiResult<Vec<crate::query::NeedTweet>> {
    let Query(p) = q?;
    let limit = p.limit.unwrap_or(DEFAULT_TWEET_LIMIT);
    if limit == 0 || limit > MAX_TWEET_LIMIT {
        return Err(ApiError::bad_request(format!(
            "limit must be in 1..={MAX_TWEET_LIMIT}"
        )));
    }
    Ok(Json(query_tweets(
        &st.snapshot(),
        &p.window()?,
        &p.filters()?,
        st.thresholds(),
        limit,
    )?))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyRequest {
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub need_score: f64,
    pub is_need: bool,
    /// Present when `is_need`.
    pub categories: Option<CategoryAssignment>,
    pub sentiment: Sentiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyResponse {
    pub threshold: f64,
    pub versions: ModelVersions,
    pub results: Vec<Classification>,
}

async fn classify(
    State(st): State<Arc<AppState>>,
    body: Result<Json<ClassifyRequest>, JsonRejection>,
) -> ApiResult<ClassifyResponse> {
    let Json(req) = body?;
    if req.texts.len() > MAX_CLASSIFY_TEXTS {
        return Err(ApiError::bad_request(format!(
            "at most {MAX_CLASSIFY_TEXTS} texts per request"
        )));
    }
    let models = st.models().ok_or(ServiceError::ModelsNotLoaded)?;
    let th = st.thresholds();
    let results = req
        .texts
        .iter()
        .enumerate()
        .map(|(i, text)| {
            let need_score = models.need.score_text(text);
            let is_need = need_score > th.need;
            let categories = is_need.then(|| {
                let scores = models
                    .categories
                    .iter()
                    .map(|(c, m)| (*c, m.score_text(text)))
                    .collect();
                CategoryAssignment::from_scores(&i.to_string(), scores, th.category)
            });
            Classification {
                need_score,
                is_need,
                categories,
                sentiment: st.enrichers.sentiment.score(text),
            }
        })
        .collect();
    Ok(Json(ClassifyResponse {
        threshold: th.need,
        versions: models.versions.clone(),
        results,
    }))
}

async fn models(State(st): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(match st.models() {
        None => json!({ "loaded": false }),
        Some(m) => json!({
            "loaded": true,
            "versions": m.versions,
            "need": {
                "algorithm": m.need.spec().params.to_string(),
                "vocabulary": m.need.vocabulary().len(),
            },
            "categories": m.categories.keys().collect::<Vec<_>>(),
        }),
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdBody {
    pub value: f64,
}

async fn get_threshold(State(st): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(json!({ "value": st.thresholds().need }))
}

async fn put_threshold(
    State(st): State<Arc<AppState>>,
    body: Result<Json<ThresholdBody>, JsonRejection>,
) -> ApiResult<serde_json::Value> {
    let Json(b) = body?;
    st.set_threshold(b.value)?;
    Ok(Json(json!({ "value": b.value })))
}

async fn not_found() -> ApiError {
    ApiError {
        status: StatusCode::NOT_FOUND,
        message: "no such route".into(),
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/api/v1/needs/summary", get(summary))
        .route("/api/v1/needs/timeseries", get(timeseries))
        .route("/api/v1/tweets", get(tweets))
        .route("/api/v1/classify", post(classify))
        .route("/api/v1/models", get(models))
        .route(
            "/api/v1/config/threshold",
            get(get_threshold).put(put_threshold),
        )
        .fallback(not_found)
        .with_state(state)
}
