//! Command line, environment and config-file settings, resolved with the
//! precedence CLI flag > `KGEXPLORE_*` environment variable > TOML file.

use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kgexplore_core::embed::DEFAULT_DIMENSION;
use kgexplore_core::sparql::TypeMode;
use serde::Deserialize;

pub const ENV_PREFIX: &str = "KGEXPLORE_";
pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_TIMEOUT_MS: u64 = 10_000;
pub const DEFAULT_MAX_CONNECTIONS: usize = 8;

#[derive(Debug, Parser)]
#[command(name = "kgexplore", version, about = "Ontology exploration service and index builder")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the index file from an ontology and instance data or an endpoint.
    Build(BuildArgs),
    /// Serve the HTTP API over a built index.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderMode {
    Offline,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TypeModeArg {
    Exact,
    Closure,
}

impl From<TypeModeArg> for TypeMode {
    fn from(m: TypeModeArg) -> Self {
        match m {
            TypeModeArg::Exact => TypeMode::Exact,
            TypeModeArg::Closure => TypeMode::SubclassClosure,
        }
    }
}

/// Options shared by both subcommands.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML config file.
    #[arg(long, env = "KGEXPLORE_CONFIG")]
    pub config: Option<PathBuf>,
    /// SPARQL endpoint URL.
    #[arg(long, env = "KGEXPLORE_ENDPOINT")]
    pub endpoint: Option<String>,
    /// Static bearer token sent to the endpoint.
    #[arg(long, env = "KGEXPLORE_ENDPOINT_TOKEN", hide_env_values = true)]
    pub endpoint_token: Option<String>,
    /// Index file path.
    #[arg(long, env = "KGEXPLORE_INDEX")]
    pub index: Option<PathBuf>,
    #[arg(long, value_enum, env = "KGEXPLORE_EMBEDDER")]
    pub embedder: Option<ProviderMode>,
    #[arg(long, env = "KGEXPLORE_EMBEDDER_URL")]
    pub embedder_url: Option<String>,
    #[arg(long, env = "KGEXPLORE_EMBEDDER_MODEL")]
    pub embedder_model: Option<String>,
    /// Embedding dimension.
    #[arg(long, env = "KGEXPLORE_DIMENSION")]
    pub dimension: Option<usize>,
    /// Timeout for endpoint and provider calls, in milliseconds.
    #[arg(long, env = "KGEXPLORE_TIMEOUT_MS")]
    pub timeout_ms: Option<u64>,
    /// Maximum concurrent endpoint requests.
    #[arg(long, env = "KGEXPLORE_MAX_CONNECTIONS")]
    pub max_connections: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Ontology file (.ttl or .nt).
    #[arg(long, env = "KGEXPLORE_ONTOLOGY")]
    pub ontology: Option<PathBuf>,
    /// Instance data file (.ttl or .nt); alternative to --endpoint.
    #[arg(long, env = "KGEXPLORE_DATA")]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum, env = "KGEXPLORE_LABELER")]
    pub labeler: Option<ProviderMode>,
    #[arg(long, env = "KGEXPLORE_LABELER_URL")]
    pub labeler_url: Option<String>,
    /// Leaf topic count; defaults to max(2, ceil(sqrt(classes))).
    #[arg(long, env = "KGEXPLORE_TOPICS")]
    pub topics: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, env = "KGEXPLORE_HOST")]
    pub host: Option<IpAddr>,
    /// Listening port; 0 picks a free one.
    #[arg(long, env = "KGEXPLORE_PORT")]
    pub port: Option<u16>,
    /// Allowed CORS origins, comma-separated; "*" allows any.
    #[arg(long, env = "KGEXPLORE_CORS_ORIGINS", value_delimiter = ',')]
    pub cors_origins: Option<Vec<String>>,
    /// Class membership semantics of generated queries.
    #[arg(long, value_enum, env = "KGEXPLORE_TYPE_MODE")]
    pub type_mode: Option<TypeModeArg>,
}

/// Config file contents; every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub ontology: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub endpoint: Option<String>,
    pub endpoint_token: Option<String>,
    pub index: Option<PathBuf>,
    pub embedder: Option<ProviderMode>,
    pub embedder_url: Option<String>,
    pub embedder_model: Option<String>,
    pub labeler: Option<ProviderMode>,
    pub labeler_url: Option<String>,
    pub dimension: Option<usize>,
    pub topics: Option<usize>,
    pub timeout_ms: Option<u64>,
    pub max_connections: Option<usize>,
    pub host: Option<IpAddr>,
    pub port: Option<u16>,
    pub cors_origins: Option<Vec<String>>,
    pub type_mode: Option<TypeModeArg>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config file {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| ConfigError(format!("invalid config file {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EndpointConfig {
    pub url: String,
    pub timeout: Duration,
    pub max_connections: usize,
    pub token: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EmbedderConfig {
    Offline { dimension: usize },
    Remote { url: String, model: String, dimension: usize, timeout: Duration },
}

impl EmbedderConfig {
    pub fn dimension(&self) -> usize {
        match self {
            EmbedderConfig::Offline { dimension } | EmbedderConfig::Remote { dimension, .. } => *dimension,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelerConfig {
    Offline,
    Remote { url: String, timeout: Duration },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DataSource {
    File(PathBuf),
    Endpoint(EndpointConfig),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildConfig {
    pub ontology_path: PathBuf,
    pub source: DataSource,
    pub index_path: PathBuf,
    pub embedder: EmbedderConfig,
    pub labeler: LabelerConfig,
    pub leaf_count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServeConfig {
    pub index_path: PathBuf,
    pub endpoint: EndpointConfig,
    pub embedder: EmbedderConfig,
    pub bind: SocketAddr,
    pub cors_origins: Vec<String>,
    pub type_mode: TypeMode,
}

fn file_config(common: &CommonArgs) -> Result<FileConfig, ConfigError> {
    common.config.as_deref().map(FileConfig::load).transpose().map(Option::unwrap_or_default)
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T, ConfigError> {
    value.ok_or_else(|| ConfigError(format!("missing --{flag} (or {ENV_PREFIX}{} / config key)", env_name(flag))))
}

fn env_name(flag: &str) -> String {
    flag.replace('-', "_").to_uppercase()
}

fn timeout(common: &CommonArgs, file: &FileConfig) -> Duration {
    Duration::from_millis(common.timeout_ms.or(file.timeout_ms).unwrap_or(DEFAULT_TIMEOUT_MS))
}

fn endpoint_config(common: &CommonArgs, file: &FileConfig, url: String) -> Result<EndpointConfig, ConfigError> {
    if !(url.starts_with("http://") || url.starts_with("https://")) {
        return Err(ConfigError(format!("endpoint URL must be http(s): {url}")));
    }
    let max_connections = common.max_connections.or(file.max_connections).unwrap_or(DEFAULT_MAX_CONNECTIONS);
    if max_connections == 0 {
        return Err(ConfigError("max-connections must be at least 1".into()));
    }
    Ok(EndpointConfig {
        url,
        timeout: timeout(common, file),
        max_connections,
        token: common.endpoint_token.clone().or_else(|| file.endpoint_token.clone()),
    })
}

fn embedder_config(common: &CommonArgs, file: &FileConfig) -> Result<EmbedderConfig, ConfigError> {
    let dimension = common.dimension.or(file.dimension).unwrap_or(DEFAULT_DIMENSION);
    if dimension == 0 {
        return Err(ConfigError("dimension must be at least 1".into()));
    }
    match common.embedder.or(file.embedder).unwrap_or(ProviderMode::Offline) {
        ProviderMode::Offline => Ok(EmbedderConfig::Offline { dimension }),
        ProviderMode::Remote => Ok(EmbedderConfig::Remote {
            url: required(common.embedder_url.clone().or_else(|| file.embedder_url.clone()), "embedder-url")?,
            model: required(common.embedder_model.clone().or_else(|| file.embedder_model.clone()), "embedder-model")?,
            dimension,
            timeout: timeout(common, file),
        }),
    }
}

impl BuildArgs {
    pub fn resolve(&self) -> Result<BuildConfig, ConfigError> {
        let file = file_config(&self.common)?;
        let common = &self.common;
        let ontology_path = required(self.ontology.clone().or_else(|| file.ontology.clone()), "ontology")?;
        if !ontology_path.is_file() {
            return Err(ConfigError(format!("ontology file not found: {}", ontology_path.display())));
        }
        let data = self.data.clone().or_else(|| file.data.clone());
        let endpoint = common.endpoint.clone().or_else(|| file.endpoint.clone());
        let source = match (data, endpoint) {
            (Some(_), Some(_)) => return Err(ConfigError("give either --data or --endpoint, not both".into())),
            (None, None) => return Err(ConfigError("one of --data or --endpoint is required".into())),
            (Some(path), None) => {
                if !path.is_file() {
                    return Err(ConfigError(format!("data file not found: {}", path.display())));
                }
                DataSource::File(path)
            }
            (None, Some(url)) => DataSource::Endpoint(endpoint_config(common, &file, url)?),
        };
        let labeler = match self.labeler.or(file.labeler).unwrap_or(ProviderMode::Offline) {
            ProviderMode::Offline => LabelerConfig::Offline,
            ProviderMode::Remote => LabelerConfig::Remote {
                url: required(self.labeler_url.clone().or_else(|| file.labeler_url.clone()), "labeler-url")?,
                timeout: timeout(common, &file),
            },
        };
        let leaf_count = self.topics.or(file.topics);
        if leaf_count == Some(0) {
            return Err(ConfigError("topics must be at least 1".into()));
        }
        Ok(BuildConfig {
            ontology_path,
            source,
            index_path: required(common.index.clone().or_else(|| file.index.clone()), "index")?,
            embedder: embedder_config(common, &file)?,
            labeler,
            leaf_count,
        })
    }
}

impl ServeArgs {
    pub fn resolve(&self) -> Result<ServeConfig, ConfigError> {
        let file = file_config(&self.common)?;
        let common = &self.common;
        let index_path = required(common.index.clone().or_else(|| file.index.clone()), "index")?;
        if !index_path.is_file() {
            return Err(ConfigError(format!("index file not found: {}", index_path.display())));
        }
        let url = required(common.endpoint.clone().or_else(|| file.endpoint.clone()), "endpoint")?;
        let host = self.host.or(file.host).unwrap_or(IpAddr::from([127, 0, 0, 1]));
        let port = self.port.or(file.port).unwrap_or(DEFAULT_PORT);
        Ok(ServeConfig {
            index_path,
            endpoint: endpoint_config(common, &file, url)?,
            embedder: embedder_config(common, &file)?,
            bind: SocketAddr::new(host, port),
            cors_origins: self.cors_origins.clone().or_else(|| file.cors_origins.clone()).unwrap_or_default(),
            type_mode: self.type_mode.or(file.type_mode).map_or(TypeMode::Exact, TypeMode::from),
        })
    }
}
