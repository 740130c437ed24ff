use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

/// Which upstream service a request is for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Endpoint {
    Rpc,
    Scanner,
    SignatureDb,
}

/// A normalized request. RPC requests carry JSON-RPC `method`/`params`; scanner and
/// signature-database requests use the method names documented in `docs/chain-data.md`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub endpoint: Endpoint,
    pub method: String,
    pub params: Value,
}

impl Request {
    pub fn rpc(method: &str, params: Value) -> Self {
        Self {
            endpoint: Endpoint::Rpc,
            method: method.to_string(),
            params,
        }
    }

    pub fn scanner(method: &str, params: Value) -> Self {
        Self {
            endpoint: Endpoint::Scanner,
            method: method.to_string(),
            params,
        }
    }

    pub fn signature_db(method: &str, params: Value) -> Self {
        Self {
            endpoint: Endpoint::SignatureDb,
            method: method.to_string(),
            params,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum TransportError {
    /// Network failure, timeout, rate limit: worth retrying.
    #[error("unavailable: {message}")]
    Unavailable { message: String },
    /// The service answered with an error.
    #[error("rejected ({code}): {message}")]
    Rejected { code: i64, message: String },
    /// The endpoint does not implement the method.
    #[error("unsupported: {message}")]
    Unsupported { message: String },
    #[error("not configured: {message}")]
    NotConfigured { message: String },
}

impl TransportError {
    pub fn is_retriable(&self) -> bool {
        matches!(self, TransportError::Unavailable { .. })
    }

    /// Errors that are a property of the request rather than the moment, and so are
    /// cached alongside successful responses.
    pub fn is_deterministic(&self) -> bool {
        matches!(self, TransportError::Rejected { .. } | TransportError::Unsupported { .. })
    }
}

pub trait Transport: Send + Sync {
    fn send(&self, request: &Request) -> Result<Value, TransportError>;
}

/// Refuses every request. Used in replay mode so any escape to the network is visible.
#[derive(Debug, Default)]
pub struct OfflineTransport {
    attempts: AtomicUsize,
}

impl OfflineTransport {
    pub fn attempts(&self) -> usize {
        self.attempts.load(Ordering::SeqCst)
    }
}

impl Transport for OfflineTransport {
    fn send(&self, request: &Request) -> Result<Value, TransportError> {
        self.attempts.fetch_add(1, Ordering::SeqCst);
        Err(TransportError::NotConfigured {
            message: format!("network access attempted while offline: {}", request.method),
        })
    }
}

/// Counting semaphore bounding concurrent upstream requests.
#[derive(Debug)]
pub struct InFlightLimiter {
    max: usize,
    current: Mutex<usize>,
    freed: Condvar,
}

pub struct InFlightGuard<'a> {
    limiter: &'a InFlightLimiter,
}

impl InFlightLimiter {
    pub fn new(max: usize) -> Self {
        Self {
            max: max.max(1),
            current: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    pub fn acquire(&self) -> InFlightGuard<'_> {
        let mut current = self.current.lock().expect("limiter poisoned");
        while *current >= self.max {
            current = self.freed.wait(current).expect("limiter poisoned");
        }
        *current += 1;
        InFlightGuard { limiter: self }
    }
}

impl Drop for InFlightGuard<'_> {
    fn drop(&mut self) {
        let mut current = self.limiter.current.lock().expect("limiter poisoned");
        *current -= 1;
        self.limiter.freed.notify_one();
    }
}

/// Speaks JSON-RPC to a node, an Etherscan-compatible scanner API and a 4byte-style
/// signature database, and normalizes their responses.
pub struct HttpTransport {
    pub rpc_url: Option<String>,
    pub scanner_url: Option<String>,
    pub scanner_key: Option<String>,
    pub signature_db_url: Option<String>,
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(
        rpc_url: Option<String>,
        scanner_url: Option<String>,
        scanner_key: Option<String>,
        signature_db_url: Option<String>,
        timeout: Duration,
    ) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .new_agent();
        Self {
            rpc_url,
            scanner_url,
            scanner_key,
            signature_db_url,
            agent,
        }
    }

    fn unavailable(e: impl std::fmt::Display) -> TransportError {
        TransportError::Unavailable {
            message: e.to_string(),
        }
    }

    fn read_json(response: ureq::http::Response<ureq::Body>) -> Result<Value, TransportError> {
        let status = response.status().as_u16();
        let mut body = response.into_body();
        let text = body.read_to_string().map_err(Self::unavailable)?;
        if status == 429 || status >= 500 {
            return Err(Self::unavailable(format!("HTTP {status}")));
        }
        if status >= 400 {
            return Err(TransportError::Rejected {
                code: i64::from(status),
                message: text,
            });
        }
        serde_json::from_str(&text).map_err(|e| TransportError::Rejected {
            code: -1,
            message: format!("response is not JSON: {e}"),
        })
    }

    fn rpc(&self, request: &Request) -> Result<Value, TransportError> {
        let url = self.rpc_url.as_deref().ok_or_else(|| TransportError::NotConfigured {
            message: "GOVAUDIT_RPC_URL is not set".into(),
        })?;
        let body = json!({"jsonrpc": "2.0", "id": 1, "method": request.method, "params": request.params});
        let response = self.agent.post(url).send_json(&body).map_err(Self::unavailable)?;
        let value = Self::read_json(response)?;
        if let Some(error) = value.get("error") {
            let code = error.get("code").and_then(Value::as_i64).unwrap_or(0);
            let message = error.get("message").and_then(Value::as_str).unwrap_or_default().to_string();
            return Err(if code == -32601 {
                TransportError::Unsupported { message }
            } else {
                TransportError::Rejected { code, message }
            });
        }
        Ok(value.get("result").cloned().unwrap_or(Value::Null))
    }

    fn scanner(&self, request: &Request) -> Result<Value, TransportError> {
        let url = self.scanner_url.as_deref().ok_or_else(|| TransportError::NotConfigured {
            message: "GOVAUDIT_SCANNER_URL is not set".into(),
        })?;
        let address = request.params.get("address").and_then(Value::as_str).unwrap_or_default();
        let (action, address_param) = match request.method.as_str() {
            "getcontractcreation" => ("getcontractcreation", "contractaddresses"),
            "getsourcecode" => ("getsourcecode", "address"),
            "getaddresstag" => ("getaddresstag", "address"),
            other => {
                return Err(TransportError::Unsupported {
                    message: format!("scanner method {other}"),
                })
            }
        };
        let mut call = self
            .agent
            .get(url)
            .query("module", "contract")
            .query("action", action)
            .query(address_param, address);
        if let Some(key) = &self.scanner_key {
            call = call.query("apikey", key);
        }
        let value = Self::read_json(call.call().map_err(Self::unavailable)?)?;
        let result = value.get("result").cloned().unwrap_or(Value::Null);
        let message = value.get("message").and_then(Value::as_str).unwrap_or_default();
        if value.get("status").and_then(Value::as_str) == Some("0") {
            let text = result.as_str().unwrap_or(message).to_string();
            if text.to_ascii_lowercase().contains("rate limit") {
                return Err(Self::unavailable(text));
            }
            if request.method == "getaddresstag" && text.to_ascii_lowercase().contains("invalid action") {
                return Ok(Value::Null);
            }
            if request.method != "getcontractcreation" && request.method != "getaddresstag" {
                return Err(TransportError::Rejected { code: 0, message: text });
            }
            return Ok(Value::Null);
        }
        Ok(normalize_scanner(&request.method, &result))
    }

    fn signature_db(&self, request: &Request) -> Result<Value, TransportError> {
        let url = self.signature_db_url.as_deref().ok_or_else(|| TransportError::NotConfigured {
            message: "GOVAUDIT_SIG_DB_URL is not set".into(),
        })?;
        let selector = request.params.get("selector").and_then(Value::as_str).unwrap_or_default();
        let response = self
            .agent
            .get(url)
            .query("hex_signature", selector)
            .query("ordering", "created_at")
            .call()
            .map_err(Self::unavailable)?;
        let value = Self::read_json(response)?;
        let candidates: Vec<Value> = value
            .get("results")
            .and_then(Value::as_array)
            .map(|rows| {
                rows.iter()
                    .filter_map(|r| r.get("text_signature").cloned())
                    .collect()
            })
            .unwrap_or_default();
        Ok(Value::Array(candidates))
    }
}

/// Maps Etherscan-style result payloads onto the normalized scanner shapes.
pub fn normalize_scanner(method: &str, result: &Value) -> Value {
    match method {
        "getcontractcreation" => {
            let row = result.as_array().and_then(|rows| rows.first()).unwrap_or(result);
            if row.is_null() {
                return Value::Null;
            }
            json!({
                "creator": row.get("contractCreator").or_else(|| row.get("creator")).cloned().unwrap_or(Value::Null),
                "txHash": row.get("txHash").cloned().unwrap_or(Value::Null),
                "creationKind": row.get("creationKind").cloned().unwrap_or(Value::Null),
            })
        }
        "getsourcecode" => {
            let row = result.as_array().and_then(|rows| rows.first()).unwrap_or(result);
            let abi_text = row.get("ABI").and_then(Value::as_str).unwrap_or_default();
            let functions = serde_json::from_str::<Value>(abi_text)
                .ok()
                .map(|abi| crate::abi::functions_from_json_abi(&abi));
            json!({
                "verified": functions.is_some(),
                "functions": functions,
                "contractName": row.get("ContractName").cloned().unwrap_or(Value::Null),
            })
        }
        "getaddresstag" => {
            let tag = result
                .get("nameTag")
                .or_else(|| result.as_array().and_then(|r| r.first()).and_then(|r| r.get("nameTag")))
                .cloned()
                .unwrap_or(Value::Null);
            json!({ "nameTag": tag })
        }
        _ => result.clone(),
    }
}

impl Transport for HttpTransport {
    fn send(&self, request: &Request) -> Result<Value, TransportError> {
        match request.endpoint {
            Endpoint::Rpc => self.rpc(request),
            Endpoint::Scanner => self.scanner(request),
            Endpoint::SignatureDb => self.signature_db(request),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn etherscan_source_payload_normalizes() {
        let unverified = json!([{"ABI": "Contract source code not verified", "ContractName": ""}]);
        let n = normalize_scanner("getsourcecode", &unverified);
        assert_eq!(n["verified"], json!(false));
        assert!(n["functions"].is_null());

        let abi = r#"[{"type":"function","name":"transfer","inputs":[{"type":"address"},{"type":"uint256"}]}]"#;
        let verified = json!([{"ABI": abi, "ContractName": "Token"}]);
        let n = normalize_scanner("getsourcecode", &verified);
        assert_eq!(n["verified"], json!(true));
        assert_eq!(n["functions"], json!(["transfer(address,uint256)"]));
    }

    #[test]
    fn creation_payload_normalizes() {
        let rows = json!([{"contractAddress": "0x1", "contractCreator": "0x2", "txHash": "0x3"}]);
        let n = normalize_scanner("getcontractcreation", &rows);
        assert_eq!(n["creator"], json!("0x2"));
        assert!(n["creationKind"].is_null());
    }

    #[test]
    fn limiter_blocks_at_capacity() {
        let limiter = Arc::new(InFlightLimiter::new(2));
        let a = limiter.acquire();
        let _b = limiter.acquire();
        let l2 = Arc::clone(&limiter);
        let handle = std::thread::spawn(move || {
            let _c = l2.acquire();
        });
        std::thread::sleep(Duration::from_millis(20));
        assert!(!handle.is_finished());
        drop(a);
        handle.join().unwrap();
    }

    #[test]
    fn offline_transport_counts_attempts() {
        let t = OfflineTransport::default();
        assert!(t.send(&Request::rpc("eth_getCode", json!([]))).is_err());
        assert_eq!(t.attempts(), 1);
    }
}
