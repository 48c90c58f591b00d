//! The `build` command: ingest, count, embed, cluster, lay out, persist.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::time::Instant;

use kgexplore_core::bundle::{build_bundle, encode_bundle, BuildError, BuildOptions, PrevalenceSnapshot};
use kgexplore_core::embed::{EmbedError, Embedder, OfflineEmbedder};
use kgexplore_core::ontology::{build_ontology_with_report, IngestionReport, OntologyModel};
use kgexplore_core::rdf::{parse_rdf, Iri, RdfFormat, Triple};
use kgexplore_core::sparql::{generate_instance_count, generate_prevalence_count};
use kgexplore_core::store::InstanceStore;
use kgexplore_core::topics::{LabelFallback, Labeler, OfflineLabeler};
use kgexplore_core::Exec;
use serde::Serialize;
use tokio::task::JoinSet;

use crate::config::{BuildConfig, DataSource, EmbedderConfig, EndpointConfig, LabelerConfig};
use crate::endpoint::{EndpointClient, EndpointError};
use crate::remote::{RemoteEmbedder, RemoteLabeler};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Config,
    Parse,
    Ontology,
    Instances,
    Embed,
    Index,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Config => "config",
            Stage::Parse => "parse",
            Stage::Ontology => "ontology",
            Stage::Instances => "instances",
            Stage::Embed => "embed",
            Stage::Index => "index",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, thiserror::Error)]
#[error("{stage} stage failed: {message}")]
pub struct StageError {
    pub stage: Stage,
    pub message: String,
}

impl StageError {
    pub fn new(stage: Stage, message: impl fmt::Display) -> Self {
        StageError {
            stage,
            message: message.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BuildReport {
    pub ontology: IngestionReport,
    pub source: &'static str,
    pub instance_triples: Option<usize>,
    pub leaf_topics: usize,
    pub topics: usize,
    pub dimension: usize,
    pub index_entries: usize,
    pub index_bytes: usize,
    pub index_path: String,
    pub label_fallbacks: Vec<LabelFallback>,
    pub durations_ms: BTreeMap<&'static str, u64>,
}

pub fn make_embedder(config: &EmbedderConfig, exec: Exec) -> Result<Box<dyn Embedder>, StageError> {
    Ok(match config {
        EmbedderConfig::Offline { dimension } => Box::new(OfflineEmbedder {
            dimension: *dimension,
            exec,
        }),
        EmbedderConfig::Remote {
            url,
            model,
            dimension,
            timeout,
        } => Box::new(RemoteEmbedder::new(url, model, *dimension, *timeout).map_err(|e| StageError::new(Stage::Embed, e))?),
    })
}

pub fn make_labeler(config: &LabelerConfig) -> Result<Box<dyn Labeler>, StageError> {
    Ok(match config {
        LabelerConfig::Offline => Box::new(OfflineLabeler),
        LabelerConfig::Remote { url, timeout } => {
            Box::new(RemoteLabeler::new(url, *timeout).map_err(|e| StageError::new(Stage::Embed, e))?)
        }
    })
}

pub fn read_rdf(path: &Path) -> Result<Vec<Triple>, StageError> {
    let file = std::fs::File::open(path).map_err(|e| StageError::new(Stage::Parse, format!("{}: {e}", path.display())))?;
    parse_rdf(std::io::BufReader::new(file), RdfFormat::from_path(path))
        .map_err(|e| StageError::new(Stage::Parse, format!("{}: {e}", path.display())))
}

/// Predicate and direct type counts from a local instance file.
pub fn count_local(store: &InstanceStore, ontology: &OntologyModel) -> (BTreeMap<Iri, u64>, BTreeMap<Iri, u64>) {
    let prevalence = ontology.properties().map(|p| (p.iri.clone(), store.prevalence(&p.iri))).collect();
    let instances = ontology
        .classes()
        .map(|c| (c.iri.clone(), store.direct_instances(&c.iri).count() as u64))
        .collect();
    (prevalence, instances)
}

/// The same counts via COUNT queries against the endpoint.
pub fn count_remote(
    config: &EndpointConfig,
    ontology: &OntologyModel,
) -> Result<(BTreeMap<Iri, u64>, BTreeMap<Iri, u64>), EndpointError> {
    let runtime = tokio::runtime::Builder::new_current_thread()
        .enable_all()
        .build()
        .map_err(|e| EndpointError::Transport(e.to_string()))?;
    let client = EndpointClient::new(config.clone())?;
    runtime.block_on(async {
        let mut tasks = JoinSet::new();
        for p in ontology.properties() {
            let (client, iri) = (client.clone(), p.iri.clone());
            tasks.spawn(async move { (true, client.count(&generate_prevalence_count(&iri)).await, iri) });
        }
        for c in ontology.classes() {
            let (client, iri) = (client.clone(), c.iri.clone());
            tasks.spawn(async move { (false, client.count(&generate_instance_count(&iri)).await, iri) });
        }
        let mut prevalence = BTreeMap::new();
        let mut instances = BTreeMap::new();
        while let Some(joined) = tasks.join_next().await {
            let (is_property, count, iri) = joined.map_err(|e| EndpointError::Transport(e.to_string()))?;
            let target = if is_property { &mut prevalence } else { &mut instances };
            target.insert(iri, count?);
        }
        Ok((prevalence, instances))
    })
}

pub fn run_build(
    config: &BuildConfig,
    embedder: &dyn Embedder,
    labeler: &dyn Labeler,
    exec: Exec,
) -> Result<BuildReport, StageError> {
    let mut durations = BTreeMap::new();
    let mut clock = Instant::now();
    let mut lap = |name: &'static str| {
        durations.insert(name, clock.elapsed().as_millis() as u64);
        clock = Instant::now();
    };
    let schema = read_rdf(&config.ontology_path)?;
    let (mut ontology, report) = build_ontology_with_report(&schema).map_err(|e| StageError::new(Stage::Ontology, e))?;
    lap("ontology");
    tracing::info!(classes = report.classes, properties = report.properties, "ontology loaded");

    let (source, instance_triples, (prevalence, instances)) = match &config.source {
        DataSource::File(path) => {
            let store = InstanceStore::new(read_rdf(path)?);
            ("data", Some(store.len()), count_local(&store, &ontology))
        }
        DataSource::Endpoint(endpoint) => (
            "endpoint",
            None,
            count_remote(endpoint, &ontology).map_err(|e| StageError::new(Stage::Instances, e))?,
        ),
    };
    for (class, n) in &instances {
        ontology.set_instance_count(class, *n);
    }
    lap("counts");

    let options = BuildOptions {
        leaf_count: config.leaf_count,
        ..BuildOptions::default()
    };
    let snapshot = PrevalenceSnapshot {
        counts: prevalence,
        built_at: None,
    };
    let output = build_bundle(ontology, snapshot, embedder, labeler, options, exec).map_err(|e| match e {
        BuildError::Embed(e) => StageError::new(Stage::Embed, describe_embed(&e)),
        BuildError::Index(e) => StageError::new(Stage::Index, e),
    })?;
    for f in &output.fallbacks {
        tracing::warn!(topic = f.topic_id, error = %f.error, "topic label fell back to keywords");
    }
    lap("topics");
    let bytes = encode_bundle(&output.bundle);
    write_atomically(&config.index_path, &bytes).map_err(|e| StageError::new(Stage::Index, e))?;
    lap("write");

    let bundle = &output.bundle;
    Ok(BuildReport {
        ontology: report,
        source,
        instance_triples,
        leaf_topics: bundle.topics.leaves().count(),
        topics: bundle.topics.topics.len(),
        dimension: bundle.index.dimension(),
        index_entries: bundle.index.len(),
        index_bytes: bytes.len(),
        index_path: config.index_path.display().to_string(),
        label_fallbacks: output.fallbacks,
        durations_ms: durations,
    })
}

fn describe_embed(e: &EmbedError) -> String {
    format!("embedding provider: {e}")
}

fn write_atomically(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}
