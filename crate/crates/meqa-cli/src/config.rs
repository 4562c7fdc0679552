//! Run configuration and wiring. Precedence is flags over environment over
//! config file; the environment only supplies the API key and a cache-root
//! override. Offline mode refuses to start without a cache root, and model
//! calls need either a replay tape or a live endpoint.

use std::env;
use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use serde::Deserialize;

use meqa::llm::{replay_session, HttpBackend, LlmBackend, LlmGateway, ModelConfig};
use meqa::netcache::{CachedTransport, NetCache};
use meqa::retrieval::WikiClient;
use meqa::transport::{HttpTransport, LiveHttp, RetryPolicy, TransportError};

pub const API_KEY_VAR: &str = "MEQA_API_KEY";
pub const CACHE_ROOT_VAR: &str = "MEQA_CACHE_ROOT";

/// Command failure carrying its exit class: 1 usage, 2 stage failure,
/// 3 fixture or cache integrity.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Stage { stage: &'static str, message: String },
    Integrity(String),
}

impl CliError {
    pub fn stage(stage: &'static str, err: impl fmt::Display) -> CliError {
        CliError::Stage { stage, message: err.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Stage { .. } => 2,
            CliError::Integrity(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Stage { stage, message } => write!(f, "{stage}: {message}"),
            CliError::Integrity(m) => write!(f, "integrity: {m}"),
        }
    }
}

/// Values taken from command-line flags; each beats the other sources.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub offline: bool,
    pub tape: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub cache_root: Option<PathBuf>,
}

/// The config file document. Every key is explicit; unknown keys error so
/// typos surface instead of silently falling back to defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    sparql_endpoint: Option<String>,
    search_endpoint: Option<String>,
    page_endpoint: Option<String>,
    model_endpoint: Option<String>,
    capable_model: Option<String>,
    fast_model: Option<String>,
    cache_root: Option<PathBuf>,
    offline: Option<bool>,
    tape: Option<PathBuf>,
    seed: Option<u64>,
    workers: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub sparql_endpoint: Option<String>,
    pub search_endpoint: Option<String>,
    pub page_endpoint: Option<String>,
    pub model_endpoint: Option<String>,
    pub api_key: Option<String>,
    pub models: ModelConfig,
    pub cache_root: Option<PathBuf>,
    pub offline: bool,
    pub tape: Option<PathBuf>,
    pub seed: u64,
    pub workers: usize,
}

impl RunConfig {
    pub fn resolve(flags: &Overrides) -> Result<RunConfig, CliError> {
        let file = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Usage(format!("config {}: {e}", path.display()))
                })?;
                toml::from_str::<FileConfig>(&text).map_err(|e| {
                    CliError::Usage(format!("config {}: {e}", path.display()))
                })?
            }
            None => FileConfig::default(),
        };
        let defaults = ModelConfig::default();
        let config = RunConfig {
            sparql_endpoint: file.sparql_endpoint,
            search_endpoint: file.search_endpoint,
            page_endpoint: file.page_endpoint,
            model_endpoint: file.model_endpoint,
            api_key: env::var(API_KEY_VAR).ok(),
            models: ModelConfig {
                capable: file.capable_model.unwrap_or(defaults.capable),
                fast: file.fast_model.unwrap_or(defaults.fast),
            },
            cache_root: flags
                .cache_root
                .clone()
                .or_else(|| env::var_os(CACHE_ROOT_VAR).map(PathBuf::from))
                .or(file.cache_root),
            offline: flags.offline || file.offline.unwrap_or(false),
            tape: flags.tape.clone().or(file.tape),
            seed: flags.seed.or(file.seed).unwrap_or(7),
            workers: flags.workers.or(file.workers).unwrap_or(8),
        };
        if config.offline && config.cache_root.is_none() {
            return Err(CliError::Usage(
                "offline mode needs a cache root (--cache-root, MEQA_CACHE_ROOT, or config file)"
                    .to_string(),
            ));
        }
        if config.workers == 0 {
            return Err(CliError::Usage("workers must be at least 1".to_string()));
        }
        Ok(config)
    }

    fn transport(&self) -> Result<Box<dyn HttpTransport>, CliError> {
        Ok(match (&self.cache_root, self.offline) {
            (Some(root), true) => {
                let cache = NetCache::open(root).map_err(cache_err)?;
                Box::new(CachedTransport::offline(Arc::new(cache)))
            }
            (Some(root), false) => {
                let cache = NetCache::open(root).map_err(cache_err)?;
                Box::new(CachedTransport::new(
                    Arc::new(cache),
                    Box::new(LiveHttp::new(RetryPolicy::default())),
                ))
            }
            (None, _) => Box::new(LiveHttp::new(RetryPolicy::default())),
        })
    }

    pub fn client(&self) -> Result<WikiClient, CliError> {
        let mut client = WikiClient::new(self.transport()?);
        if let Some(ep) = &self.sparql_endpoint {
            client.sparql_endpoint = ep.clone();
        }
        if let Some(ep) = &self.search_endpoint {
            client.search_endpoint = ep.clone();
        }
        if let Some(ep) = &self.page_endpoint {
            client.page_endpoint = ep.clone();
        }
        Ok(client)
    }

    /// Replay tape when configured, otherwise a live chat endpoint.
    pub fn gateway(&self) -> Result<LlmGateway, CliError> {
        let backend: Box<dyn LlmBackend> = match (&self.tape, &self.model_endpoint) {
            (Some(path), _) => {
                Box::new(replay_session(path).map_err(|e| CliError::stage("model", e))?)
            }
            (None, Some(endpoint)) => Box::new(HttpBackend::new(
                endpoint.clone(),
                self.api_key.clone(),
                RetryPolicy::default(),
            )),
            (None, None) => {
                return Err(CliError::Usage(
                    "no model configured: set --tape or a model_endpoint".to_string(),
                ))
            }
        };
        Ok(LlmGateway::new(backend, self.models.clone()))
    }

    pub fn cache(&self) -> Result<NetCache, CliError> {
        match &self.cache_root {
            Some(root) => NetCache::open(root).map_err(cache_err),
            None => Err(CliError::Usage(
                "cache commands need a cache root (--cache-root, MEQA_CACHE_ROOT, or config file)"
                    .to_string(),
            )),
        }
    }
}

fn cache_err(e: TransportError) -> CliError {
    CliError::Stage { stage: "cache", message: e.to_string() }
}
