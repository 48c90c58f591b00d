//! SPARQL protocol client for the configured endpoint.

use std::collections::HashMap;
use std::sync::Arc;

use kgexplore_core::rdf::{Iri, Term};
use kgexplore_core::results::{parse_count, parse_results_json, Binding, ResultsError, SelectResults};
use kgexplore_core::sparql::{generate_label_lookup, GeneratedQuery};
use reqwest::header::{ACCEPT, AUTHORIZATION};
use tokio::sync::Semaphore;

use crate::config::EndpointConfig;

pub const RESULTS_MEDIA_TYPE: &str = "application/sparql-results+json";
/// Queries whose URL-encoded form exceeds this go out as POST.
pub const MAX_GET_QUERY_BYTES: usize = 2048;
pub const LABEL_BATCH: usize = 100;
const MAX_ERROR_BODY: usize = 512;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EndpointError {
    #[error("endpoint unreachable: {0}")]
    Transport(String),
    #[error("endpoint returned HTTP {status}: {message}")]
    Endpoint { status: u16, message: String },
    #[error(transparent)]
    Results(#[from] ResultsError),
    #[error("endpoint did not answer in time")]
    Timeout,
}

#[derive(Debug, Clone)]
pub struct EndpointClient {
    http: reqwest::Client,
    config: EndpointConfig,
    permits: Arc<Semaphore>,
}

fn encoded_len(query: &str) -> usize {
    url_form_len(query) + "query=".len()
}

fn url_form_len(s: &str) -> usize {
    s.bytes()
        .map(|b| if b.is_ascii_alphanumeric() || b"-_.*".contains(&b) || b == b' ' { 1 } else { 3 })
        .sum()
}

impl EndpointClient {
    pub fn new(config: EndpointConfig) -> Result<Self, EndpointError> {
        let http = reqwest::Client::builder()
            .pool_max_idle_per_host(config.max_connections)
            .build()
            .map_err(|e| EndpointError::Transport(e.to_string()))?;
        Ok(EndpointClient {
            http,
            permits: Arc::new(Semaphore::new(config.max_connections)),
            config,
        })
    }

    pub fn url(&self) -> &str {
        &self.config.url
    }

    pub async fn select(&self, query: &str) -> Result<SelectResults, EndpointError> {
        let _permit = self.permits.acquire().await.map_err(|e| EndpointError::Transport(e.to_string()))?;
        let mut request = if encoded_len(query) <= MAX_GET_QUERY_BYTES {
            self.http.get(&self.config.url).query(&[("query", query)])
        } else {
            self.http.post(&self.config.url).form(&[("query", query)])
        };
        request = request.header(ACCEPT, RESULTS_MEDIA_TYPE);
        if let Some(token) = &self.config.token {
            request = request.header(AUTHORIZATION, format!("Bearer {token}"));
        }
        let exchange = async {
            let response = request.send().await.map_err(transport)?;
            let status = response.status();
            let body = response.bytes().await.map_err(transport)?;
            if !status.is_success() {
                let text = String::from_utf8_lossy(&body);
                return Err(EndpointError::Endpoint {
                    status: status.as_u16(),
                    message: text.chars().take(MAX_ERROR_BODY).collect(),
                });
            }
            Ok(parse_results_json(&body)?)
        };
        tokio::time::timeout(self.config.timeout, exchange)
            .await
            .map_err(|_| EndpointError::Timeout)?
    }

    /// Runs a generated SELECT and checks every projected variable is bound.
    pub async fn execute(&self, query: &GeneratedQuery) -> Result<Vec<Binding>, EndpointError> {
        let results = self.select(&query.text).await?;
        let expected = query.variable_map.variables();
        for (index, row) in results.bindings.iter().enumerate() {
            if let Some(missing) = expected.iter().find(|v| !row.contains_key(**v)) {
                return Err(ResultsError::MissingVariable {
                    index,
                    variable: missing.to_string(),
                }
                .into());
            }
        }
        Ok(results.bindings)
    }

    pub async fn count(&self, query: &GeneratedQuery) -> Result<u64, EndpointError> {
        let results = self.select(&query.text).await?;
        Ok(parse_count(&results, "c")?)
    }

    /// `rdfs:label` per resource, preferring untagged literals, then the
    /// lexicographically smallest value.
    pub async fn labels(&self, iris: &[Iri]) -> Result<HashMap<Iri, String>, EndpointError> {
        let mut best: HashMap<Iri, (bool, String)> = HashMap::new();
        for chunk in iris.chunks(LABEL_BATCH) {
            let results = self.select(&generate_label_lookup(chunk).text).await?;
            for row in &results.bindings {
                let (Some(Term::Iri(s)), Some(Term::Literal(label))) = (row.get("s"), row.get("label")) else {
                    continue;
                };
                let candidate = (label.language().is_some(), label.lexical().to_string());
                match best.get(s) {
                    Some(current) if *current <= candidate => {}
                    _ => {
                        best.insert(s.clone(), candidate);
                    }
                }
            }
        }
        Ok(best.into_iter().map(|(k, (_, v))| (k, v)).collect())
    }
}

fn transport(e: reqwest::Error) -> EndpointError {
    if e.is_timeout() {
        EndpointError::Timeout
    } else {
        EndpointError::Transport(e.to_string())
    }
}
