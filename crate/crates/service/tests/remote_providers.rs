mod support;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use kgexplore_core::bundle::load_bundle;
use kgexplore_core::embed::{embed_offline, EmbedError, Embedder};
use kgexplore_core::topics::{LabelError, Labeler};
use kgexplore_core::Exec;
use kgexplore_service::config::{BuildConfig, DataSource, EmbedderConfig, LabelerConfig};
use kgexplore_service::pipeline::{run_build, Stage};
use kgexplore_service::remote::{RemoteEmbedder, RemoteLabeler, EMBED_BATCH};
use serde_json::{json, Value};
use support::{fixture, spawn_app, AppHandle};

const DIM: usize = 48;

fn embedding_of(text: &str, d: usize) -> Vec<f64> {
    // unnormalised, so the client must normalise
    embed_offline(text, d).values().iter().map(|x| x * 3.0).collect()
}

async fn embed(State(calls): State<Arc<AtomicUsize>>, Json(body): Json<Value>) -> Json<Value> {
    calls.fetch_add(1, Ordering::SeqCst);
    let data: Vec<Value> = body["input"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| json!({ "embedding": embedding_of(t.as_str().unwrap(), DIM) }))
        .collect();
    Json(json!({ "data": data }))
}

async fn wrong_dimension(Json(body): Json<Value>) -> Json<Value> {
    let n = body["input"].as_array().unwrap().len();
    Json(json!({ "data": vec![json!({ "embedding": vec![1.0; DIM + 1] }); n] }))
}

async fn slow() -> Json<Value> {
    tokio::time::sleep(Duration::from_millis(800)).await;
    Json(json!({ "data": [] }))
}

async fn label(Json(body): Json<Value>) -> Json<Value> {
    let first = body["keywords"][0].as_str().unwrap_or("none").to_string();
    Json(json!({ "label": format!("  About {first}  ") }))
}

async fn failing() -> StatusCode {
    StatusCode::INTERNAL_SERVER_ERROR
}

async fn blank() -> Json<Value> {
    Json(json!({ "label": "   " }))
}

fn providers() -> (AppHandle, Arc<AtomicUsize>) {
    let calls = Arc::new(AtomicUsize::new(0));
    let app = Router::new()
        .route("/embed", post(embed))
        .route("/embed-wrong", post(wrong_dimension))
        .route("/slow", post(slow))
        .route("/label", post(label))
        .route("/label-fail", post(failing))
        .route("/label-blank", post(blank))
        .with_state(calls.clone());
    (spawn_app(app), calls)
}

#[test]
fn remote_embeddings_are_normalised_and_batched() {
    let (app, calls) = providers();
    let e = RemoteEmbedder::new(app.url("/embed"), "test-model", DIM, Duration::from_secs(5)).unwrap();
    let texts: Vec<String> = (0..EMBED_BATCH + 5).map(|i| format!("text number {i}")).collect();
    let vectors = e.embed_batch(&texts).unwrap();
    assert_eq!(vectors.len(), texts.len());
    assert_eq!(calls.load(Ordering::SeqCst), 2);
    for (t, v) in texts.iter().zip(&vectors) {
        let expected = embed_offline(t, DIM);
        for (a, b) in v.values().iter().zip(expected.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn wrong_dimension_is_an_error() {
    let (app, _) = providers();
    let e = RemoteEmbedder::new(app.url("/embed-wrong"), "m", DIM, Duration::from_secs(5)).unwrap();
    assert_eq!(
        e.embed("x").unwrap_err(),
        EmbedError::DimensionMismatch {
            expected: DIM,
            found: DIM + 1
        }
    );
}

#[test]
fn slow_providers_time_out() {
    let (app, _) = providers();
    let e = RemoteEmbedder::new(app.url("/slow"), "m", DIM, Duration::from_millis(100)).unwrap();
    assert_eq!(e.embed("x").unwrap_err(), EmbedError::Timeout);
    let l = RemoteLabeler::new(app.url("/slow"), Duration::from_millis(100)).unwrap();
    assert_eq!(l.label(&[], &[]).unwrap_err(), LabelError::Timeout);
}

#[test]
fn remote_labels_are_used() {
    let (app, _) = providers();
    let l = RemoteLabeler::new(app.url("/label"), Duration::from_secs(5)).unwrap();
    assert_eq!(l.label(&["athletics".into()], &[]).unwrap(), "  About athletics  ");
}

fn build_with(dir: &std::path::Path, embedder: EmbedderConfig, labeler: LabelerConfig) -> BuildConfig {
    BuildConfig {
        ontology_path: fixture("ontology.ttl"),
        source: DataSource::File(fixture("instances.nt")),
        index_path: dir.join("remote.idx"),
        embedder,
        labeler,
        leaf_count: Some(6),
    }
}

#[test]
fn failing_labeler_falls_back_per_topic() {
    let (app, _) = providers();
    let dir = tempfile::tempdir().unwrap();
    for (path, expect_fallbacks) in [("/label", false), ("/label-fail", true), ("/label-blank", true)] {
        let config = build_with(
            dir.path(),
            EmbedderConfig::Offline { dimension: DIM },
            LabelerConfig::Remote {
                url: app.url(path),
                timeout: Duration::from_secs(5),
            },
        );
        let labeler = RemoteLabeler::new(app.url(path), Duration::from_secs(5)).unwrap();
        let embedder = kgexplore_core::embed::OfflineEmbedder::new(DIM);
        let report = run_build(&config, &embedder, &labeler, Exec::Sequential).unwrap();
        let bundle = load_bundle(&config.index_path).unwrap();
        assert_eq!(report.label_fallbacks.is_empty(), !expect_fallbacks, "{path}");
        if expect_fallbacks {
            assert_eq!(report.label_fallbacks.len(), bundle.topics.topics.len());
        }
        for t in bundle.topics.topics.values() {
            assert!(!t.label.trim().is_empty());
            assert_eq!(t.label.starts_with("About "), !expect_fallbacks, "{}", t.label);
        }
    }
}

#[test]
fn remote_embedder_failure_names_the_stage() {
    let (app, _) = providers();
    let dir = tempfile::tempdir().unwrap();
    let config = build_with(dir.path(), EmbedderConfig::Offline { dimension: DIM }, LabelerConfig::Offline);
    let embedder = RemoteEmbedder::new(app.url("/embed-wrong"), "m", DIM, Duration::from_secs(5)).unwrap();
    let err = run_build(&config, &embedder, &kgexplore_core::topics::OfflineLabeler, Exec::Sequential).unwrap_err();
    assert_eq!(err.stage, Stage::Embed);
    assert!(!config.index_path.exists());
}

#[test]
fn remote_build_matches_offline_vectors() {
    // the stub serves scaled offline vectors, so both builds agree exactly
    let (app, _) = providers();
    let dir = tempfile::tempdir().unwrap();
    let remote = RemoteEmbedder::new(app.url("/embed"), "m", DIM, Duration::from_secs(5)).unwrap();
    let config = build_with(dir.path(), EmbedderConfig::Offline { dimension: DIM }, LabelerConfig::Offline);
    run_build(&config, &remote, &kgexplore_core::topics::OfflineLabeler, Exec::default()).unwrap();
    let from_remote = std::fs::read(&config.index_path).unwrap();
    let offline = kgexplore_core::embed::OfflineEmbedder::new(DIM);
    run_build(&config, &offline, &kgexplore_core::topics::OfflineLabeler, Exec::default()).unwrap();
    let local = load_bundle(&config.index_path).unwrap();
    let remote_bundle = kgexplore_core::bundle::decode_bundle(&from_remote).unwrap();
    assert_eq!(remote_bundle.topics.topics.len(), local.topics.topics.len());
    for (a, b) in remote_bundle.index.entries().iter().zip(local.index.entries()) {
        assert_eq!(a.key, b.key);
        for (x, y) in a.vector.values().iter().zip(b.vector.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
