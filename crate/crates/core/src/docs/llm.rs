//! LLM clients: an HTTP endpoint and a scripted stand-in for tests and replays.

use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::chain::RetryPolicy;
use crate::service::{ServiceEndpoint, ServiceError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("LLM endpoint: {0}")]
    Service(#[from] ServiceError),
    #[error("LLM script has no response for a prompt starting {0:?}")]
    Unscripted(String),
    #[error("LLM script: {0}")]
    Script(String),
}

/// Prompt text in, completion text out.
pub trait LlmClient: Send + Sync {
    fn name(&self) -> &str;
    fn complete(&self, prompt: &str) -> Result<String, LlmError>;
}

pub const SCRIPT_FORMAT: &str = "govaudit-llm-script/1";

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScriptRecord {
    /// Substring the prompt must contain.
    #[serde(rename = "match", alias = "matchSubstring")]
    pub match_substring: String,
    #[serde(alias = "responseText")]
    pub response: String,
    /// Repeatable records answer any number of prompts; others answer one.
    #[serde(default)]
    pub repeat: bool,
}

#[derive(Debug, Deserialize)]
struct ScriptFile {
    version: String,
    responses: Vec<ScriptRecord>,
}

/// Answers each prompt with the first matching record not yet used up.
#[derive(Debug)]
pub struct ScriptedLlm {
    records: Vec<ScriptRecord>,
    used: Mutex<Vec<bool>>,
}

impl ScriptedLlm {
    pub fn new(records: Vec<ScriptRecord>) -> Self {
        let used = Mutex::new(vec![false; records.len()]);
        Self { records, used }
    }

    /// `{"version": "govaudit-llm-script/1", "responses": [{match, response, repeat?}]}`.
    pub fn parse(text: &str) -> Result<Self, LlmError> {
        let file: ScriptFile = serde_json::from_str(text).map_err(|e| LlmError::Script(e.to_string()))?;
        if file.version != SCRIPT_FORMAT {
            return Err(LlmError::Script(format!("unsupported version {:?}", file.version)));
        }
        Ok(Self::new(file.responses))
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path).map_err(|e| LlmError::Script(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

impl LlmClient for ScriptedLlm {
    fn name(&self) -> &str {
        "script"
    }

    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        let mut used = self.used.lock().expect("script lock poisoned");
        for (i, record) in self.records.iter().enumerate() {
            if used[i] || !prompt.contains(&record.match_substring) {
                continue;
            }
            if !record.repeat {
                used[i] = true;
            }
            return Ok(record.response.clone());
        }
        Err(LlmError::Unscripted(prompt.chars().take(80).collect()))
    }
}

/// POST `{"model", "prompt"}`; the reply is `{"text"}`, or a chat-completions style
/// `choices[0]` with `message.content` or `text`.
#[derive(Debug, Clone)]
pub struct HttpLlm {
    endpoint: ServiceEndpoint,
    model: String,
    retry: RetryPolicy,
}

impl HttpLlm {
    pub fn new(endpoint: ServiceEndpoint, model: impl Into<String>, retry: RetryPolicy) -> Self {
        Self {
            endpoint,
            model: model.into(),
            retry,
        }
    }

    /// `GOVAUDIT_LLM_URL`, `GOVAUDIT_LLM_KEY` and `GOVAUDIT_LLM_MODEL`.
    pub fn from_env() -> Result<Self, LlmError> {
        let mut endpoint = ServiceEndpoint::from_env("GOVAUDIT_LLM")?;
        endpoint.timeout = Duration::from_secs(180);
        let model = std::env::var("GOVAUDIT_LLM_MODEL")
            .map_err(|_| ServiceError::NotConfigured("GOVAUDIT_LLM_MODEL".into()))?;
        Ok(Self::new(endpoint, model, RetryPolicy::default()))
    }
}

fn completion_text(response: &Value) -> Option<String> {
    if let Some(text) = response.get("text").and_then(Value::as_str) {
        return Some(text.to_string());
    }
    let choice = response.get("choices")?.get(0)?;
    choice
        .pointer("/message/content")
        .or_else(|| choice.get("text"))
        .and_then(Value::as_str)
        .map(str::to_string)
}

impl LlmClient for HttpLlm {
    fn name(&self) -> &str {
        "http"
    }

    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        let body = json!({ "model": self.model, "prompt": prompt });
        let mut delay = self.retry.backoff;
        let mut attempt = 1;
        loop {
            match self.endpoint.post(&body) {
                Ok(response) => {
                    return completion_text(&response)
                        .ok_or_else(|| ServiceError::Malformed("no completion text".into()).into())
                }
                Err(ServiceError::Unavailable(_)) if attempt < self.retry.attempts.max(1) => {
                    std::thread::sleep(delay);
                    delay = delay.saturating_mul(2);
                    attempt += 1;
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
}
