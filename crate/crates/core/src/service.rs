//! JSON-over-HTTP calls to the optional model services (classifier, embeddings, LLM).

use std::time::Duration;

use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ServiceError {
    #[error("{0} is not set")]
    NotConfigured(String),
    #[error("service unavailable: {0}")]
    Unavailable(String),
    #[error("service rejected the request (HTTP {status}): {message}")]
    Rejected { status: u16, message: String },
    #[error("malformed service response: {0}")]
    Malformed(String),
}

/// Endpoint URL, optional bearer key, and timeout.
#[derive(Debug, Clone)]
pub struct ServiceEndpoint {
    pub url: String,
    pub key: Option<String>,
    pub timeout: Duration,
}

impl ServiceEndpoint {
    /// Reads `{prefix}_URL` and `{prefix}_KEY`.
    pub fn from_env(prefix: &str) -> Result<Self, ServiceError> {
        let url_var = format!("{prefix}_URL");
        let url = std::env::var(&url_var)
            .ok()
            .filter(|u| !u.is_empty())
            .ok_or(ServiceError::NotConfigured(url_var))?;
        Ok(Self {
            url,
            key: std::env::var(format!("{prefix}_KEY")).ok().filter(|k| !k.is_empty()),
            timeout: Duration::from_secs(60),
        })
    }

    pub fn post(&self, body: &Value) -> Result<Value, ServiceError> {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .http_status_as_error(false)
            .build()
            .new_agent();
        let mut request = agent.post(&self.url);
        if let Some(key) = &self.key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let response = request
            .send_json(body)
            .map_err(|e| ServiceError::Unavailable(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response
            .into_body()
            .read_to_string()
            .map_err(|e| ServiceError::Unavailable(e.to_string()))?;
        if status == 429 || status >= 500 {
            return Err(ServiceError::Unavailable(format!("HTTP {status}")));
        }
        if status >= 400 {
            return Err(ServiceError::Rejected { status, message: text });
        }
        serde_json::from_str(&text).map_err(|e| ServiceError::Malformed(e.to_string()))
    }
}
