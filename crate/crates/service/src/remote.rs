//! HTTP embedding and labeling providers.
//!
//! Both use blocking clients: the embedder is called from index builds and,
//! in the server, from `spawn_blocking` tasks. Create them outside any async
//! runtime.

use std::time::Duration;

use kgexplore_core::embed::{EmbedError, Embedder, EmbeddingVector};
use kgexplore_core::topics::{LabelError, Labeler};
use serde::{Deserialize, Serialize};

pub const EMBED_BATCH: usize = 64;

#[derive(Serialize)]
struct EmbedRequest<'a> {
    model: &'a str,
    input: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    data: Vec<EmbedItem>,
}

#[derive(Deserialize)]
struct EmbedItem {
    embedding: Vec<f64>,
}

/// POSTs `{"model", "input": [..]}` and reads `{"data": [{"embedding": [..]}]}`.
#[derive(Debug)]
pub struct RemoteEmbedder {
    client: reqwest::blocking::Client,
    url: String,
    model: String,
    dimension: usize,
}

impl RemoteEmbedder {
    pub fn new(url: impl Into<String>, model: impl Into<String>, dimension: usize, timeout: Duration) -> Result<Self, EmbedError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| EmbedError::Transport(e.to_string()))?;
        Ok(RemoteEmbedder {
            client,
            url: url.into(),
            model: model.into(),
            dimension,
        })
    }

    fn request(&self, input: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let response = self
            .client
            .post(&self.url)
            .json(&EmbedRequest { model: &self.model, input })
            .send()
            .map_err(embed_transport)?;
        let status = response.status();
        if !status.is_success() {
            return Err(EmbedError::Transport(format!("HTTP {status}")));
        }
        let body: EmbedResponse = response
            .json()
            .map_err(|e| if e.is_timeout() { EmbedError::Timeout } else { EmbedError::InvalidResponse(e.to_string()) })?;
        if body.data.len() != input.len() {
            return Err(EmbedError::InvalidResponse(format!(
                "{} embeddings for {} inputs",
                body.data.len(),
                input.len()
            )));
        }
        body.data
            .into_iter()
            .map(|item| {
                if item.embedding.len() != self.dimension {
                    return Err(EmbedError::DimensionMismatch {
                        expected: self.dimension,
                        found: item.embedding.len(),
                    });
                }
                if item.embedding.iter().any(|x| !x.is_finite()) {
                    return Err(EmbedError::InvalidResponse("non-finite component".into()));
                }
                Ok(EmbeddingVector::normalized(item.embedding))
            })
            .collect()
    }
}

fn embed_transport(e: reqwest::Error) -> EmbedError {
    if e.is_timeout() {
        EmbedError::Timeout
    } else {
        EmbedError::Transport(e.to_string())
    }
}

impl Embedder for RemoteEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let mut out = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(EMBED_BATCH) {
            out.extend(self.request(chunk)?);
        }
        Ok(out)
    }
}

#[derive(Serialize)]
struct LabelRequest<'a> {
    keywords: &'a [String],
    examples: &'a [String],
}

#[derive(Deserialize)]
struct LabelResponse {
    label: String,
}

/// POSTs `{"keywords", "examples"}` and reads `{"label"}`.
#[derive(Debug)]
pub struct RemoteLabeler {
    client: reqwest::blocking::Client,
    url: String,
}

impl RemoteLabeler {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Result<Self, LabelError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| LabelError::Transport(e.to_string()))?;
        Ok(RemoteLabeler { client, url: url.into() })
    }
}

impl Labeler for RemoteLabeler {
    fn label(&self, keywords: &[String], examples: &[String]) -> Result<String, LabelError> {
        let label_transport = |e: reqwest::Error| {
            if e.is_timeout() {
                LabelError::Timeout
            } else {
                LabelError::Transport(e.to_string())
            }
        };
        let response = self
            .client
            .post(&self.url)
            .json(&LabelRequest { keywords, examples })
            .send()
            .map_err(label_transport)?;
        let status = response.status();
        if !status.is_success() {
            return Err(LabelError::Transport(format!("HTTP {status}")));
        }
        let body: LabelResponse = response.json().map_err(|e| {
            if e.is_timeout() {
                LabelError::Timeout
            } else {
                LabelError::InvalidResponse(e.to_string())
            }
        })?;
        Ok(body.label)
    }
}
