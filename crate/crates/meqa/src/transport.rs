//! HTTP transport abstraction. The pipeline never talks to the network
//! directly: it goes through [`HttpTransport`], which is either a live
//! client, a cache wrapper, or an in-process fixture server.

use std::time::Duration;

use thiserror::Error;

/// Bounded exponential backoff. `delays()` yields one item per attempt; the
/// value is the sleep to take after that attempt fails (None on the last).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { attempts: 3, initial_backoff: Duration::from_millis(500) }
    }
}

impl RetryPolicy {
    /// Zero-wait policy for tests.
    pub fn immediate(attempts: u32) -> Self {
        Self { attempts, initial_backoff: Duration::ZERO }
    }

    pub fn delays(&self) -> impl Iterator<Item = Option<Duration>> {
        let attempts = self.attempts.max(1);
        let initial = self.initial_backoff;
        (0..attempts).map(move |i| {
            if i + 1 == attempts {
                None
            } else {
                Some(initial * 2u32.saturating_pow(i))
            }
        })
    }
}

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("network failure after retries: {0}")]
    Network(String),
    #[error("http status {code} from {url}")]
    Status { code: u16, url: String },
    #[error("offline run, response not cached: {url}")]
    OfflineMiss { url: String },
    #[error("cache failure: {0}")]
    Cache(String),
    #[error("fixture has no route for {url}")]
    FixtureMiss { url: String },
}

/// One request surface for everything the pipeline fetches (SPARQL results,
/// search results, page intros). An empty `body` means GET; a non-empty one
/// is sent as a form-encoded POST.
pub trait HttpTransport: Send + Sync {
    fn fetch(&self, url: &str, body: &str) -> Result<String, TransportError>;
}

/// Live client with retry. Transient failures (connect errors, 429, 5xx)
/// are retried per policy; other statuses fail immediately.
pub struct LiveHttp {
    client: reqwest::blocking::Client,
    retry: RetryPolicy,
}

impl LiveHttp {
    pub fn new(retry: RetryPolicy) -> Self {
        let client = reqwest::blocking::Client::builder()
            .user_agent("meqa/0.1 (multi-entity qa pipeline)")
            .timeout(Duration::from_secs(60))
            .build()
            .expect("client with static config");
        Self { client, retry }
    }

    fn send_once(&self, url: &str, body: &str) -> Result<String, TransportError> {
        let req = if body.is_empty() {
            self.client.get(url)
        } else {
            self.client
                .post(url)
                .header("Content-Type", "application/x-www-form-urlencoded")
                .body(body.to_string())
        };
        let resp = req
            .header("Accept", "application/json")
            .send()
            .map_err(|e| TransportError::Network(e.to_string()))?;
        let status = resp.status();
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(TransportError::Network(format!("retryable status {status}")));
        }
        if !status.is_success() {
            return Err(TransportError::Status { code: status.as_u16(), url: url.to_string() });
        }
        resp.text().map_err(|e| TransportError::Network(e.to_string()))
    }
}

impl HttpTransport for LiveHttp {
    fn fetch(&self, url: &str, body: &str) -> Result<String, TransportError> {
        let mut last = None;
        for delay in self.retry.delays() {
            match self.send_once(url, body) {
                Ok(text) => return Ok(text),
                Err(e @ TransportError::Network(_)) => {
                    last = Some(e);
                    if let Some(d) = delay {
                        std::thread::sleep(d);
                    }
                }
                Err(e) => return Err(e),
            }
        }
        Err(last.unwrap_or_else(|| TransportError::Network("no attempts made".into())))
    }
}
