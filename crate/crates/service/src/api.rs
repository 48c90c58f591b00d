//! HTTP routes under `/v1`.

use std::collections::BTreeSet;
use std::future::Future;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Request, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::routing::{get, post};
use axum::{Json, Router};
use kgexplore_core::bundle::IndexBundle;
use kgexplore_core::embed::Embedder;
use kgexplore_core::layout::{highlight_classes, MinimapLayout, PackedCircle};
use kgexplore_core::proto::{validate_graph, Diagnostic, PrototypeGraph};
use kgexplore_core::rdf::Iri;
use kgexplore_core::results::{assemble_instances, PrevalenceCache, ResultInstance};
use kgexplore_core::sparql::{generate_prevalence_count, generate_select, GeneratedQuery, QueryOptions, TypeMode, DEFAULT_LIMIT};
use kgexplore_core::suggest::{
    search_constraints, search_out_links, start_links, Suggestion, SuggestError, DEFAULT_SEARCH_K, DEFAULT_START_K,
};
use kgexplore_core::topics::TopicTree;
use kgexplore_core::Exec;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

use crate::endpoint::EndpointClient;
use crate::error::ApiError;

pub const MAX_K: usize = 100;

pub struct AppState {
    pub bundle: IndexBundle,
    pub endpoint: EndpointClient,
    pub embedder: Arc<dyn Embedder>,
    pub prevalence: PrevalenceCache,
    pub type_mode: TypeMode,
    pub exec: Exec,
}

impl AppState {
    pub fn new(
        bundle: IndexBundle,
        endpoint: EndpointClient,
        embedder: Arc<dyn Embedder>,
        type_mode: TypeMode,
        exec: Exec,
    ) -> Result<Self, String> {
        if embedder.dimension() != bundle.index.dimension() {
            return Err(format!(
                "embedder dimension {} does not match index dimension {}",
                embedder.dimension(),
                bundle.index.dimension()
            ));
        }
        let prevalence = PrevalenceCache::preloaded(bundle.prevalence.counts.clone());
        Ok(AppState {
            bundle,
            endpoint,
            embedder,
            prevalence,
            type_mode,
            exec,
        })
    }
}

type Shared = State<Arc<AppState>>;

/// JSON body extractor whose rejections use the API error shape.
pub struct ApiJson<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for ApiJson<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, ApiError> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(value)) => Ok(ApiJson(value)),
            Err(rejection) => Err(rejection_error(rejection)),
        }
    }
}

fn rejection_error(rejection: JsonRejection) -> ApiError {
    if rejection.status() == StatusCode::UNSUPPORTED_MEDIA_TYPE {
        return ApiError::new(StatusCode::UNSUPPORTED_MEDIA_TYPE, "UnsupportedMediaType", rejection.body_text());
    }
    ApiError::invalid_request(rejection.body_text())
}

pub fn cors_layer(origins: &[String]) -> CorsLayer {
    let base = CorsLayer::new()
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE]);
    if origins.iter().any(|o| o == "*") {
        base.allow_origin(Any)
    } else {
        base.allow_origin(AllowOrigin::list(
            origins.iter().filter_map(|o| HeaderValue::from_str(o).ok()),
        ))
    }
}

pub fn router(state: Arc<AppState>, cors: CorsLayer) -> Router {
    let v1 = Router::new()
        .route("/healthz", get(healthz))
        .route("/topics", get(topics))
        .route("/suggest/start-links", post(suggest_start_links))
        .route("/suggest/out-links", post(suggest_out_links))
        .route("/suggest/constraints", post(suggest_constraints))
        .route("/graph/validate", post(graph_validate))
        .route("/graph/sparql", post(graph_sparql))
        .route("/graph/execute", post(graph_execute))
        .route("/layout/minimap", get(layout_minimap))
        .route("/layout/highlight", post(layout_highlight));
    Router::new()
        .nest("/v1", v1)
        .fallback(not_found)
        .method_not_allowed_fallback(method_not_allowed)
        .with_state(state)
        .layer(cors)
}

pub async fn serve(
    listener: tokio::net::TcpListener,
    app: Router,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "NotFound", "no such route")
}

async fn method_not_allowed() -> ApiError {
    ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "MethodNotAllowed", "method not allowed on this route")
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct IndexInfo {
    pub dimension: usize,
    pub entries: usize,
    pub classes: usize,
    pub properties: usize,
    pub topics: usize,
    pub leaf_topics: usize,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Health {
    pub status: &'static str,
    pub index: IndexInfo,
    pub type_mode: TypeMode,
}

async fn healthz(State(state): Shared) -> Json<Health> {
    let b = &state.bundle;
    Json(Health {
        status: "ok",
        index: IndexInfo {
            dimension: b.index.dimension(),
            entries: b.index.len(),
            classes: b.ontology.class_count(),
            properties: b.ontology.property_count(),
            topics: b.topics.topics.len(),
            leaf_topics: b.topics.leaves().count(),
        },
        type_mode: state.type_mode,
    })
}

async fn topics(State(state): Shared) -> Json<TopicTree> {
    Json(state.bundle.topics.clone())
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct StartLinksRequest {
    pub topic_ids: Vec<usize>,
    pub k: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SearchRequest {
    pub class_iri: Iri,
    #[serde(default)]
    pub query: String,
    pub k: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct Suggestions {
    pub suggestions: Vec<Suggestion>,
}

/// Runs a ranking off the async workers and fills unknown prevalence from the endpoint.
async fn ranked<F>(state: Arc<AppState>, f: F) -> Result<Json<Suggestions>, ApiError>
where
    F: FnOnce(&AppState) -> Result<Vec<Suggestion>, SuggestError> + Send + 'static,
{
    let worker = state.clone();
    let mut suggestions = tokio::task::spawn_blocking(move || f(&worker))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    for s in suggestions.iter_mut().filter(|s| s.prevalence.is_none()) {
        match state.endpoint.count(&generate_prevalence_count(&s.property_iri)).await {
            Ok(n) => s.prevalence = Some(state.prevalence.insert_once(&s.property_iri, n)),
            Err(e) => tracing::debug!(property = %s.property_iri, error = %e, "prevalence unavailable"),
        }
    }
    Ok(Json(Suggestions { suggestions }))
}

fn clamp_k(k: Option<usize>, default: usize) -> usize {
    k.unwrap_or(default).min(MAX_K)
}

async fn suggest_start_links(State(state): Shared, ApiJson(req): ApiJson<StartLinksRequest>) -> Result<Json<Suggestions>, ApiError> {
    let k = clamp_k(req.k, DEFAULT_START_K);
    ranked(state, move |s| {
        let b = &s.bundle;
        start_links(&req.topic_ids, &b.topics, &b.index, &b.ontology, k, &|p| s.prevalence.get(p), s.exec)
    })
    .await
}

async fn suggest_out_links(State(state): Shared, ApiJson(req): ApiJson<SearchRequest>) -> Result<Json<Suggestions>, ApiError> {
    let k = clamp_k(req.k, DEFAULT_SEARCH_K);
    ranked(state, move |s| {
        let b = &s.bundle;
        search_out_links(&req.class_iri, &req.query, &b.ontology, &b.index, &*s.embedder, k, &|p| s.prevalence.get(p), s.exec)
    })
    .await
}

async fn suggest_constraints(State(state): Shared, ApiJson(req): ApiJson<SearchRequest>) -> Result<Json<Suggestions>, ApiError> {
    let k = clamp_k(req.k, DEFAULT_SEARCH_K);
    ranked(state, move |s| {
        let b = &s.bundle;
        search_constraints(&req.class_iri, &req.query, &b.ontology, &b.index, &*s.embedder, k, &|p| s.prevalence.get(p), s.exec)
    })
    .await
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct GraphRequest {
    pub graph: PrototypeGraph,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct QueryRequest {
    pub graph: PrototypeGraph,
    pub limit: Option<u32>,
    #[serde(default)]
    pub offset: u32,
}

#[derive(Debug, Serialize)]
pub struct Validation {
    pub valid: bool,
    pub diagnostics: Vec<Diagnostic>,
}

async fn graph_validate(State(state): Shared, ApiJson(req): ApiJson<GraphRequest>) -> Json<Validation> {
    let diagnostics = validate_graph(&req.graph, &state.bundle.ontology);
    Json(Validation {
        valid: diagnostics.is_empty(),
        diagnostics,
    })
}

fn generate(state: &AppState, req: &QueryRequest) -> Result<GeneratedQuery, ApiError> {
    let options = QueryOptions {
        limit: Some(req.limit.unwrap_or(DEFAULT_LIMIT)),
        offset: req.offset,
        type_mode: state.type_mode,
    };
    Ok(generate_select(&req.graph, &state.bundle.ontology, &options)?)
}

async fn graph_sparql(State(state): Shared, ApiJson(req): ApiJson<QueryRequest>) -> Result<Json<GeneratedQuery>, ApiError> {
    generate(&state, &req).map(Json)
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Execution {
    pub query: GeneratedQuery,
    pub instances: Vec<ResultInstance>,
}

async fn graph_execute(State(state): Shared, ApiJson(req): ApiJson<QueryRequest>) -> Result<Json<Execution>, ApiError> {
    let query = generate(&state, &req)?;
    let bindings = state.endpoint.execute(&query).await?;
    let mut resources = BTreeSet::new();
    for row in &bindings {
        for var in query.variable_map.nodes.values() {
            if let Some(iri) = row.get(var).and_then(|t| t.as_iri()) {
                resources.insert(iri.clone());
            }
        }
    }
    let resources: Vec<Iri> = resources.into_iter().collect();
    let labels = state.endpoint.labels(&resources).await?;
    let instances = assemble_instances(&req.graph, &query.variable_map, &bindings, &labels)?;
    Ok(Json(Execution { query, instances }))
}

async fn layout_minimap(State(state): Shared) -> Json<MinimapLayout> {
    Json(state.bundle.layout.clone())
}

#[derive(Debug, Serialize)]
pub struct Highlights {
    pub highlights: Vec<PackedCircle>,
}

async fn layout_highlight(State(state): Shared, ApiJson(req): ApiJson<GraphRequest>) -> Result<Json<Highlights>, ApiError> {
    let highlights = highlight_classes(&state.bundle.layout, &req.graph)?;
    Ok(Json(Highlights { highlights }))
}
