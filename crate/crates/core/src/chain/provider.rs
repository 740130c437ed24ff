use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde_json::{json, Value};

use super::cache::{CacheKey, ResponseCache};
use super::transport::{HttpTransport, InFlightLimiter, Request, Transport, TransportError};
use super::{ChainData, CreationKind, CreationRecord, DataError, Mode, SourceInfo};
use crate::evm::Opcode;
use crate::primitives::{decode_hex, encode_hex, Address, Selector, B256};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    /// Delay before the second attempt; doubled after each further failure.
    pub backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            backoff: Duration::from_millis(250),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProviderConfig {
    pub chain_id: u64,
    pub rpc_url: Option<String>,
    pub scanner_url: Option<String>,
    pub scanner_key: Option<String>,
    pub signature_db_url: Option<String>,
    pub mode: Mode,
    pub cache_dir: Option<PathBuf>,
    pub max_in_flight: usize,
    pub retry: RetryPolicy,
    pub timeout: Duration,
}

impl ProviderConfig {
    pub fn new(chain_id: u64) -> Self {
        Self {
            chain_id,
            rpc_url: None,
            scanner_url: None,
            scanner_key: None,
            signature_db_url: None,
            mode: Mode::Live,
            cache_dir: None,
            max_in_flight: 4,
            retry: RetryPolicy::default(),
            timeout: Duration::from_secs(30),
        }
    }

    /// Reads `GOVAUDIT_RPC_URL`, `GOVAUDIT_SCANNER_URL`, `GOVAUDIT_SCANNER_KEY`,
    /// `GOVAUDIT_SIG_DB_URL`, `GOVAUDIT_MODE` and `GOVAUDIT_CACHE_DIR`.
    pub fn from_env(chain_id: u64) -> Result<Self, DataError> {
        let var = |name: &str| std::env::var(name).ok().filter(|v| !v.trim().is_empty());
        let mut config = Self::new(chain_id);
        config.rpc_url = var("GOVAUDIT_RPC_URL");
        config.scanner_url = var("GOVAUDIT_SCANNER_URL");
        config.scanner_key = var("GOVAUDIT_SCANNER_KEY");
        config.signature_db_url = var("GOVAUDIT_SIG_DB_URL");
        if let Some(mode) = var("GOVAUDIT_MODE") {
            config.mode = mode.parse().map_err(DataError::Config)?;
        }
        config.cache_dir = var("GOVAUDIT_CACHE_DIR").map(PathBuf::from);
        Ok(config)
    }

    pub fn http_transport(&self) -> HttpTransport {
        HttpTransport::new(
            self.rpc_url.clone(),
            self.scanner_url.clone(),
            self.scanner_key.clone(),
            self.signature_db_url.clone(),
            self.timeout,
        )
    }
}

/// The standard [`ChainData`] implementation: requests go through the configured
/// transport, bounded by `max_in_flight`, retried per policy, and cached per mode.
pub struct Provider {
    chain_id: u64,
    mode: Mode,
    transport: Arc<dyn Transport>,
    cache: Option<ResponseCache>,
    memo: Mutex<HashMap<String, Result<Value, TransportError>>>,
    limiter: InFlightLimiter,
    retry: RetryPolicy,
}

impl Provider {
    pub fn new(config: &ProviderConfig, transport: Arc<dyn Transport>) -> Result<Self, DataError> {
        if config.mode != Mode::Live && config.cache_dir.is_none() {
            return Err(DataError::Config(format!("{} mode needs a cache directory", config.mode)));
        }
        Ok(Self {
            chain_id: config.chain_id,
            mode: config.mode,
            transport,
            cache: config.cache_dir.clone().map(ResponseCache::new),
            memo: Mutex::new(HashMap::new()),
            limiter: InFlightLimiter::new(config.max_in_flight),
            retry: config.retry,
        })
    }

    /// Provider over HTTP endpoints from the config.
    pub fn http(config: &ProviderConfig) -> Result<Self, DataError> {
        Self::new(config, Arc::new(config.http_transport()))
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    fn send_with_retry(&self, request: &Request) -> Result<Value, TransportError> {
        let mut delay = self.retry.backoff;
        let attempts = self.retry.attempts.max(1);
        let mut attempt = 1;
        loop {
            let outcome = {
                let _slot = self.limiter.acquire();
                self.transport.send(request)
            };
            match outcome {
                Err(e) if e.is_retriable() && attempt < attempts => {
                    std::thread::sleep(delay);
                    delay = delay.saturating_mul(2);
                    attempt += 1;
                }
                other => return other,
            }
        }
    }

    /// Resolves one request according to the mode. Deterministic upstream errors are
    /// cached like responses; transient ones are not.
    pub fn fetch(&self, request: &Request) -> Result<Value, DataError> {
        let key = CacheKey::new(self.chain_id, request);
        let canonical = key.canonical();
        if let Some(hit) = self.memo.lock().expect("memo poisoned").get(&canonical) {
            return lift(request, hit.clone());
        }
        let outcome = match self.mode {
            Mode::Replay => {
                let cache = self.cache.as_ref().expect("checked in new");
                match cache.load(&key).map_err(|e| DataError::Cache(e.to_string()))? {
                    Some(entry) => entry.outcome(),
                    None => return Err(DataError::ReplayMiss { key: canonical }),
                }
            }
            Mode::Live | Mode::Record => {
                let outcome = self.send_with_retry(request);
                let keep = outcome.as_ref().map_or_else(TransportError::is_deterministic, |_| true);
                if keep && self.mode == Mode::Record {
                    let cache = self.cache.as_ref().expect("checked in new");
                    cache
                        .store(&key, &outcome)
                        .map_err(|e| DataError::Cache(format!("writing {}: {e}", cache.path_for(&key).display())))?;
                }
                if !keep {
                    return lift(request, outcome);
                }
                outcome
            }
        };
        self.memo
            .lock()
            .expect("memo poisoned")
            .insert(canonical, outcome.clone());
        lift(request, outcome)
    }
}

fn lift(request: &Request, outcome: Result<Value, TransportError>) -> Result<Value, DataError> {
    outcome.map_err(|source| match source {
        TransportError::Unsupported { message } => DataError::Capability {
            method: request.method.clone(),
            message,
        },
        source => DataError::Transport {
            method: request.method.clone(),
            source,
        },
    })
}

fn malformed(method: &str, message: impl Into<String>) -> DataError {
    DataError::Malformed {
        method: method.to_string(),
        message: message.into(),
    }
}

fn hex_field(method: &str, value: &Value) -> Result<Vec<u8>, DataError> {
    match value {
        Value::Null => Ok(Vec::new()),
        Value::String(s) => decode_hex(s).map_err(|e| malformed(method, e.to_string())),
        other => Err(malformed(method, format!("expected hex string, got {other}"))),
    }
}

fn parse_field<T: std::str::FromStr>(method: &str, value: Option<&Value>, what: &str) -> Result<T, DataError>
where
    T::Err: std::fmt::Display,
{
    value
        .and_then(Value::as_str)
        .ok_or_else(|| malformed(method, format!("missing {what}")))?
        .parse()
        .map_err(|e: T::Err| malformed(method, format!("{what}: {e}")))
}

/// Opcode names from a `debug_traceTransaction` struct-log response or a plain list.
pub(crate) fn trace_opcodes(value: &Value) -> Result<Vec<Opcode>, String> {
    let steps = value
        .get("structLogs")
        .or_else(|| value.get("opcodes"))
        .unwrap_or(value)
        .as_array()
        .ok_or("trace is not a list")?;
    steps
        .iter()
        .map(|step| {
            let name = step
                .as_str()
                .or_else(|| step.get("op").and_then(Value::as_str))
                .ok_or_else(|| format!("trace step without op: {step}"))?;
            Opcode::from_name(name).ok_or_else(|| format!("unknown opcode {name:?}"))
        })
        .collect()
}

impl ChainData for Provider {
    fn chain_id(&self) -> u64 {
        self.chain_id
    }

    fn get_code(&self, address: Address) -> Result<Vec<u8>, DataError> {
        let request = Request::rpc("eth_getCode", json!([address, "latest"]));
        hex_field(&request.method, &self.fetch(&request)?)
    }

    fn get_storage(&self, address: Address, slot: B256) -> Result<B256, DataError> {
        let request = Request::rpc("eth_getStorageAt", json!([address, slot, "latest"]));
        let bytes = hex_field(&request.method, &self.fetch(&request)?)?;
        if bytes.len() > 32 {
            return Err(malformed(&request.method, format!("{} bytes in a storage word", bytes.len())));
        }
        let mut word = [0u8; 32];
        word[32 - bytes.len()..].copy_from_slice(&bytes);
        Ok(B256(word))
    }

    fn get_creation(&self, address: Address) -> Result<Option<CreationRecord>, DataError> {
        let request = Request::scanner("getcontractcreation", json!({ "address": address }));
        let value = self.fetch(&request)?;
        if value.is_null() {
            return Ok(None);
        }
        let method = request.method.as_str();
        let kind = match value.get("creationKind") {
            None | Some(Value::Null) => None,
            Some(_) => Some(parse_field::<CreationKind>(method, value.get("creationKind"), "creationKind")?),
        };
        Ok(Some(CreationRecord {
            creator: parse_field(method, value.get("creator"), "creator")?,
            tx_hash: parse_field(method, value.get("txHash"), "txHash")?,
            kind,
        }))
    }

    fn get_trace_opcodes(&self, tx: B256) -> Result<Vec<Opcode>, DataError> {
        let request = Request::rpc(
            "debug_traceTransaction",
            json!([tx, {"disableStack": true, "disableMemory": true, "disableStorage": true}]),
        );
        let value = self.fetch(&request)?;
        trace_opcodes(&value).map_err(|e| malformed(&request.method, e))
    }

    fn call(&self, to: Address, data: &[u8]) -> Result<Vec<u8>, DataError> {
        let request = Request::rpc("eth_call", json!([{"to": to, "data": encode_hex(data)}, "latest"]));
        hex_field(&request.method, &self.fetch(&request)?)
    }

    fn source_info(&self, address: Address) -> Result<SourceInfo, DataError> {
        let request = Request::scanner("getsourcecode", json!({ "address": address }));
        let value = self.fetch(&request)?;
        if value.is_null() {
            return Ok(SourceInfo::default());
        }
        serde_json::from_value(value).map_err(|e| malformed(&request.method, e.to_string()))
    }

    fn get_name_tag(&self, address: Address) -> Result<Option<String>, DataError> {
        let request = Request::scanner("getaddresstag", json!({ "address": address }));
        let value = self.fetch(&request)?;
        Ok(value
            .get("nameTag")
            .and_then(Value::as_str)
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(String::from))
    }

    fn lookup_signature(&self, selector: Selector) -> Result<Vec<String>, DataError> {
        let request = Request::signature_db("lookup", json!({ "selector": selector }));
        let value = self.fetch(&request)?;
        match value {
            Value::Null => Ok(Vec::new()),
            Value::Array(items) => items
                .into_iter()
                .map(|v| {
                    v.as_str()
                        .map(String::from)
                        .ok_or_else(|| malformed(&request.method, format!("candidate {v} is not a string")))
                })
                .collect(),
            other => Err(malformed(&request.method, format!("expected a list, got {other}"))),
        }
    }
}
