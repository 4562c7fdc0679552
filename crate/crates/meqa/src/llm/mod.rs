//! Language-model gateway: tiered model selection, prompt templating,
//! output-size control, and deterministic record/replay backends.
//!
//! Every machine-parsed request is rendered from a named template that ends
//! with an instructive output-control suffix, and replies are cleaned up
//! leniently before parsing (models still add chatter around the payload).

mod backend;
mod tape;
mod template;

pub use backend::{EchoBackend, HttpBackend, LlmBackend, RecordBackend, ReplayBackend};
pub use tape::{record_session, replay_session, Tape, TapeEntry};
pub use template::{bindings, render_prompt, template_ids, template_text, OUTPUT_CONTROL_SUFFIX};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// The pipeline tasks that reach a language model. Closed enumeration: the
/// tier routing below is total over it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskClass {
    SemanticAnalysis,
    SchemaGeneration,
    SqlGeneration,
    InformationExtraction,
    QuestionRefinement,
}

impl TaskClass {
    pub const ALL: [TaskClass; 5] = [
        TaskClass::SemanticAnalysis,
        TaskClass::SchemaGeneration,
        TaskClass::SqlGeneration,
        TaskClass::InformationExtraction,
        TaskClass::QuestionRefinement,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskClass::SemanticAnalysis => "SemanticAnalysis",
            TaskClass::SchemaGeneration => "SchemaGeneration",
            TaskClass::SqlGeneration => "SqlGeneration",
            TaskClass::InformationExtraction => "InformationExtraction",
            TaskClass::QuestionRefinement => "QuestionRefinement",
        }
    }
}

/// Capability tier. Complex analysis and generation tasks go to the capable
/// (expensive) model; bulk extraction goes to the fast one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tier {
    Capable,
    Fast,
}

/// One configured model: its tier plus the backend-facing model name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelTier {
    pub tier: Tier,
    pub model_name: String,
}

/// Exactly one configured model per tier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub capable: String,
    pub fast: String,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { capable: "gpt-4".to_string(), fast: "mistral-7b".to_string() }
    }
}

/// Task-to-tier routing. Total function: semantic analysis, schema and SQL
/// generation, and question refinement need the capable model; bulk
/// information extraction runs on the fast one.
pub fn select_tier(task: TaskClass) -> Tier {
    match task {
        TaskClass::SemanticAnalysis
        | TaskClass::SchemaGeneration
        | TaskClass::SqlGeneration
        | TaskClass::QuestionRefinement => Tier::Capable,
        TaskClass::InformationExtraction => Tier::Fast,
    }
}

impl ModelConfig {
    pub fn select_model(&self, task: TaskClass) -> ModelTier {
        let tier = select_tier(task);
        let model_name = match tier {
            Tier::Capable => self.capable.clone(),
            Tier::Fast => self.fast.clone(),
        };
        ModelTier { tier, model_name }
    }
}

/// A fully rendered request. `max_output_tokens` and `temperature` carry the
/// output-control knobs; machine-parsed tasks default to temperature 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmRequest {
    pub task: TaskClass,
    pub prompt: String,
    pub max_output_tokens: u32,
    pub temperature: f64,
}

impl LlmRequest {
    pub fn new(task: TaskClass, prompt: impl Into<String>) -> Self {
        Self { task, prompt: prompt.into(), max_output_tokens: 1024, temperature: 0.0 }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.prompt.is_empty() {
            return Err(LlmError::InvalidRequest("prompt must be non-empty".into()));
        }
        if self.max_output_tokens == 0 {
            return Err(LlmError::InvalidRequest("max_output_tokens must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.temperature) {
            return Err(LlmError::InvalidRequest("temperature must be in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Backend reply. `text` is exactly what the backend returned, minus
/// trailing whitespace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmResponse {
    pub text: String,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub backend_id: String,
}

/// Rough token estimate used where a backend does not report usage.
pub fn estimate_tokens(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4)
}

/// Content hash a replay tape is keyed by: task name + prompt.
pub fn request_hash(task: TaskClass, prompt: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(task.name().as_bytes());
    hasher.update(b"\n");
    hasher.update(prompt.as_bytes());
    hex_string(&hasher.finalize())
}

fn hex_string(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("template {template}: unbound placeholder {{{placeholder}}}")]
    Template { template: String, placeholder: String },
    #[error("unknown template id {0}")]
    UnknownTemplate(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("replay tape has no entry for request hash {hash}")]
    FixtureMissing { hash: String },
    #[error("tape parse failure at line {line}: {message}")]
    TapeParse { line: usize, message: String },
    #[error("transport failure after retries: {0}")]
    Transport(String),
    #[error("backend error: {0}")]
    Backend(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl LlmError {
    /// Best-effort stages (question refinement, schema critique) degrade to
    /// identity on a missing fixture instead of failing the pipeline.
    pub fn is_fixture_miss(&self) -> bool {
        matches!(self, LlmError::FixtureMissing { .. })
    }
}

/// Bundles a backend with the per-tier model configuration; the pipeline
/// stages call [`LlmGateway::complete_task`] with a rendered prompt.
pub struct LlmGateway {
    backend: Box<dyn LlmBackend>,
    models: ModelConfig,
}

impl LlmGateway {
    pub fn new(backend: Box<dyn LlmBackend>, models: ModelConfig) -> Self {
        Self { backend, models }
    }

    pub fn models(&self) -> &ModelConfig {
        &self.models
    }

    pub fn select_model(&self, task: TaskClass) -> ModelTier {
        self.models.select_model(task)
    }

    pub fn complete(&self, request: &LlmRequest) -> Result<LlmResponse, LlmError> {
        request.validate()?;
        let model = self.select_model(request.task);
        let mut response = self.backend.complete(request, &model)?;
        response.text = response.text.trim_end().to_string();
        Ok(response)
    }

    /// Renders nothing: the caller provides the prompt (already rendered via
    /// [`render_prompt`]) and default request knobs are applied.
    pub fn complete_task(&self, task: TaskClass, prompt: &str) -> Result<LlmResponse, LlmError> {
        self.complete(&LlmRequest::new(task, prompt))
    }
}

/// Lenient reply cleanup: models wrap payloads in code fences and prose.
pub mod cleanup {
    /// Drops markdown fence lines, keeping fenced content.
    pub fn strip_fences(text: &str) -> String {
        if !text.contains("```") {
            return text.to_string();
        }
        text.lines().filter(|l| !l.trim_start().starts_with("```")).collect::<Vec<_>>().join("\n")
    }

    /// Extracts the outermost JSON value (object or array) from a noisy
    /// reply. Returns `None` when no braces or brackets are found.
    pub fn json_payload(text: &str) -> Option<String> {
        let text = strip_fences(text);
        let obj = text.find('{').map(|start| (start, text.rfind('}')));
        let arr = text.find('[').map(|start| (start, text.rfind(']')));
        let candidate = match (obj, arr) {
            (Some((os, Some(oe))), Some((as_, Some(ae)))) => {
                if os < as_ {
                    Some((os, oe))
                } else {
                    Some((as_, ae))
                }
            }
            (Some((os, Some(oe))), _) => Some((os, oe)),
            (_, Some((as_, Some(ae)))) => Some((as_, ae)),
            _ => None,
        };
        candidate.and_then(|(s, e)| if e >= s { Some(text[s..=e].to_string()) } else { None })
    }

    /// Extracts a query payload: everything from the first occurrence of one
    /// of `keywords` (case-insensitive) to the end of the reply.
    pub fn query_payload(text: &str, keywords: &[&str]) -> Option<String> {
        let text = strip_fences(text);
        let upper = text.to_uppercase();
        let start = keywords.iter().filter_map(|k| upper.find(&k.to_uppercase())).min()?;
        Some(text[start..].trim().trim_end_matches(';').trim().to_string())
    }
}
