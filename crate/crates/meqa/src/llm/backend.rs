//! Model backends. `EchoBackend` for plumbing tests, `HttpBackend` for a
//! live chat-completions endpoint, `ReplayBackend`/`RecordBackend` for
//! deterministic reruns.

use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use serde::Deserialize;
use serde_json::json;

use super::tape::{Tape, TapeEntry};
use super::{estimate_tokens, request_hash, LlmError, LlmRequest, LlmResponse, ModelTier};
use crate::transport::RetryPolicy;

pub trait LlmBackend: Send + Sync {
    fn complete(&self, request: &LlmRequest, model: &ModelTier)
        -> Result<LlmResponse, LlmError>;

    /// Short stable name recorded in responses (`echo`, `replay`, ...).
    fn id(&self) -> &'static str;
}

/// Shared handles delegate, so callers can hand a gateway one clone and
/// keep another (a recorder stays reachable for [`RecordBackend::finish`]).
impl<T: LlmBackend + ?Sized> LlmBackend for Arc<T> {
    fn complete(&self, request: &LlmRequest, model: &ModelTier) -> Result<LlmResponse, LlmError> {
        (**self).complete(request, model)
    }

    fn id(&self) -> &'static str {
        (**self).id()
    }
}

/// Returns the prompt as the reply. Useful for wiring tests and as a
/// degenerate baseline in evaluation runs.
pub struct EchoBackend;

impl LlmBackend for EchoBackend {
    fn complete(
        &self,
        request: &LlmRequest,
        _model: &ModelTier,
    ) -> Result<LlmResponse, LlmError> {
        Ok(LlmResponse {
            text: request.prompt.clone(),
            input_tokens: estimate_tokens(&request.prompt),
            output_tokens: estimate_tokens(&request.prompt),
            backend_id: self.id().to_string(),
        })
    }

    fn id(&self) -> &'static str {
        "echo"
    }
}

/// Serves replies from a tape. A request whose hash is not on the tape is a
/// hard error; best-effort callers handle it themselves.
pub struct ReplayBackend {
    tape: Tape,
}

impl ReplayBackend {
    pub fn new(tape: Tape) -> Self {
        Self { tape }
    }

    pub fn tape(&self) -> &Tape {
        &self.tape
    }
}

impl LlmBackend for ReplayBackend {
    fn complete(
        &self,
        request: &LlmRequest,
        _model: &ModelTier,
    ) -> Result<LlmResponse, LlmError> {
        let hash = request_hash(request.task, &request.prompt);
        let entry = self
            .tape
            .get(&hash)
            .ok_or(LlmError::FixtureMissing { hash })?;
        Ok(LlmResponse {
            text: entry.text.clone(),
            input_tokens: estimate_tokens(&request.prompt),
            output_tokens: estimate_tokens(&entry.text),
            backend_id: self.id().to_string(),
        })
    }

    fn id(&self) -> &'static str {
        "replay"
    }
}

/// Wraps another backend and captures every reply onto a tape. Requests
/// already on the tape are answered from it without touching the inner
/// backend, so interrupted recording runs can resume. Call [`finish`] to
/// write the tape out; dropping the backend writes it best-effort.
///
/// [`finish`]: RecordBackend::finish
pub struct RecordBackend {
    inner: Box<dyn LlmBackend>,
    tape: Mutex<Tape>,
    path: PathBuf,
}

impl RecordBackend {
    pub(super) fn new(inner: Box<dyn LlmBackend>, tape: Tape, path: PathBuf) -> Self {
        Self { inner, tape: Mutex::new(tape), path }
    }

    pub fn finish(&self) -> Result<usize, LlmError> {
        let tape = self.tape.lock().expect("tape lock poisoned");
        tape.save(&self.path)?;
        Ok(tape.len())
    }
}

impl Drop for RecordBackend {
    fn drop(&mut self) {
        if let Ok(tape) = self.tape.lock() {
            let _ = tape.save(&self.path);
        }
    }
}

impl LlmBackend for RecordBackend {
    fn complete(&self, request: &LlmRequest, model: &ModelTier) -> Result<LlmResponse, LlmError> {
        let hash = request_hash(request.task, &request.prompt);
        if let Some(entry) = self.tape.lock().expect("tape lock poisoned").get(&hash) {
            return Ok(LlmResponse {
                text: entry.text.clone(),
                input_tokens: estimate_tokens(&request.prompt),
                output_tokens: estimate_tokens(&entry.text),
                backend_id: self.id().to_string(),
            });
        }
        let response = self.inner.complete(request, model)?;
        self.tape.lock().expect("tape lock poisoned").insert(TapeEntry {
            hash,
            task: request.task,
            tier: model.tier,
            text: response.text.trim_end().to_string(),
        });
        Ok(response)
    }

    fn id(&self) -> &'static str {
        "record"
    }
}

/// Live chat-completions client. Sends the rendered prompt as a single user
/// message; retries transient failures per the configured policy.
pub struct HttpBackend {
    endpoint: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
    retry: RetryPolicy,
}

#[derive(Deserialize)]
struct ChatReply {
    choices: Vec<ChatChoice>,
    #[serde(default)]
    usage: Option<ChatUsage>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: String,
}

#[derive(Deserialize)]
struct ChatUsage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

impl HttpBackend {
    /// `endpoint` is the full completions URL, e.g.
    /// `https://host/v1/chat/completions`.
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>, retry: RetryPolicy) -> Self {
        Self {
            endpoint: endpoint.into(),
            api_key,
            client: reqwest::blocking::Client::new(),
            retry,
        }
    }

    fn send_once(&self, body: &serde_json::Value) -> Result<LlmResponse, LlmError> {
        let mut req = self.client.post(&self.endpoint).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| LlmError::Transport(e.to_string()))?;
        let status = resp.status();
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(LlmError::Transport(format!("retryable status {status}")));
        }
        if !status.is_success() {
            let text = resp.text().unwrap_or_default();
            return Err(LlmError::Backend(format!("status {status}: {text}")));
        }
        let reply: ChatReply = resp.json().map_err(|e| LlmError::Backend(e.to_string()))?;
        let choice = reply
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| LlmError::Backend("reply carried no choices".into()))?;
        let usage = reply.usage.unwrap_or(ChatUsage { prompt_tokens: 0, completion_tokens: 0 });
        Ok(LlmResponse {
            text: choice.message.content,
            input_tokens: usage.prompt_tokens,
            output_tokens: usage.completion_tokens,
            backend_id: "http".to_string(),
        })
    }
}

impl LlmBackend for HttpBackend {
    fn complete(&self, request: &LlmRequest, model: &ModelTier) -> Result<LlmResponse, LlmError> {
        let body = json!({
            "model": model.model_name,
            "messages": [{"role": "user", "content": request.prompt}],
            "max_tokens": request.max_output_tokens,
            "temperature": request.temperature,
        });
        let mut last = None;
        for delay in self.retry.delays() {
            match self.send_once(&body) {
                Ok(resp) => {
                    let mut resp = resp;
                    if resp.input_tokens == 0 {
                        resp.input_tokens = estimate_tokens(&request.prompt);
                    }
                    if resp.output_tokens == 0 {
                        resp.output_tokens = estimate_tokens(&resp.text);
                    }
                    return Ok(resp);
                }
                Err(e @ LlmError::Transport(_)) => {
                    last = Some(e);
                    if let Some(d) = delay {
                        std::thread::sleep(d);
                    }
                }
                Err(e) => return Err(e),
            }
        }
        Err(last.unwrap_or_else(|| LlmError::Transport("no attempts made".into())))
    }

    fn id(&self) -> &'static str {
        "http"
    }
}
