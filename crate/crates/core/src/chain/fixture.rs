//! An in-memory chain answering the normalized request shapes, loaded from a world file.
//!
//! Used to record replay caches and to run the CLI without network access:
//!
//! ```json
//! {
//!   "format": "govaudit-world/1",
//!   "chainId": 1,
//!   "accounts": {
//!     "0x…": {
//!       "code": "0x…", "storage": {"0x0": "0x…"},
//!       "creation": {"creator": "0x…", "txHash": "0x…", "kind": "CREATE2"},
//!       "verified": true, "functions": ["propose(address,bytes,string)"],
//!       "nameTag": "…", "symbol": "…", "decimals": 18, "calls": {"0xcalldata": "0xreturn"}
//!     }
//!   },
//!   "traces": {"0xtxhash": ["PUSH1", "CREATE2"], "0xother": "unsupported"},
//!   "signatures": {"0xa9059cbb": ["transfer(address,uint256)"]}
//! }
//! ```

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use primitive_types::U256;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::transport::{Endpoint, Request, Transport, TransportError};
use super::CreationKind;
use crate::abi::{encode_args, AbiType, AbiValue};
use crate::evm::compute_selector;
use crate::primitives::{decode_hex, encode_hex, hex_bytes, parse_u256, Address, Selector, B256};

pub const WORLD_FORMAT: &str = "govaudit-world/1";

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing world: {0}")]
    Parse(String),
    #[error("unsupported world format {0:?}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FixtureCreation {
    pub creator: Address,
    pub tx_hash: B256,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<CreationKind>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct FixtureAccount {
    #[serde(with = "hex_bytes")]
    pub code: Vec<u8>,
    /// Slot → value, both as hex quantities.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub storage: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub creation: Option<FixtureCreation>,
    pub verified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub functions: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contract_name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name_tag: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symbol: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decimals: Option<u8>,
    /// Exact calldata → return data, for anything beyond `symbol()`/`decimals()`.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub calls: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FixtureTrace {
    Opcodes(Vec<String>),
    /// `"unsupported"`: the endpoint refuses to trace this transaction.
    Refused(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FixtureWorld {
    pub format: String,
    pub chain_id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default)]
    pub accounts: BTreeMap<Address, FixtureAccount>,
    #[serde(default)]
    pub traces: BTreeMap<B256, FixtureTrace>,
    #[serde(default)]
    pub signatures: BTreeMap<Selector, Vec<String>>,
    #[serde(skip)]
    requests: AtomicUsize,
}

impl FixtureWorld {
    pub fn new(chain_id: u64) -> Self {
        Self {
            format: WORLD_FORMAT.to_string(),
            chain_id,
            description: None,
            accounts: BTreeMap::new(),
            traces: BTreeMap::new(),
            signatures: BTreeMap::new(),
            requests: AtomicUsize::new(0),
        }
    }

    pub fn parse(text: &str) -> Result<Self, FixtureError> {
        let world: FixtureWorld = serde_json::from_str(text).map_err(|e| FixtureError::Parse(e.to_string()))?;
        if world.format != WORLD_FORMAT {
            return Err(FixtureError::Format(world.format));
        }
        Ok(world)
    }

    pub fn load(path: &Path) -> Result<Self, FixtureError> {
        let text = std::fs::read_to_string(path).map_err(|source| FixtureError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Number of requests answered so far.
    pub fn requests(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    pub fn account_mut(&mut self, address: Address) -> &mut FixtureAccount {
        self.accounts.entry(address).or_default()
    }

    fn account(&self, address: Address) -> Option<&FixtureAccount> {
        self.accounts.get(&address)
    }

    fn rpc(&self, request: &Request) -> Result<Value, TransportError> {
        let params = request.params.as_array().cloned().unwrap_or_default();
        let address_at = |i: usize| -> Result<Address, TransportError> {
            params
                .get(i)
                .and_then(Value::as_str)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| rejected(format!("{}: bad address parameter", request.method)))
        };
        match request.method.as_str() {
            "eth_chainId" => Ok(json!(format!("0x{:x}", self.chain_id))),
            "eth_getCode" => {
                let code = self.account(address_at(0)?).map(|a| a.code.clone()).unwrap_or_default();
                Ok(json!(encode_hex(&code)))
            }
            "eth_getStorageAt" => {
                let account = self.account(address_at(0)?);
                let slot = params
                    .get(1)
                    .and_then(Value::as_str)
                    .and_then(|s| parse_u256(s).ok())
                    .ok_or_else(|| rejected("eth_getStorageAt: bad slot"))?;
                let value = account
                    .and_then(|a| a.storage.iter().find(|(k, _)| parse_u256(k).ok() == Some(slot)))
                    .map(|(_, v)| parse_u256(v).map_err(rejected))
                    .transpose()?
                    .unwrap_or_default();
                Ok(json!(encode_hex(&value.to_big_endian())))
            }
            "eth_call" => {
                let call = params.first().ok_or_else(|| rejected("eth_call: missing call object"))?;
                let to: Address = call
                    .get("to")
                    .and_then(Value::as_str)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| rejected("eth_call: bad to"))?;
                let data = call
                    .get("data")
                    .and_then(Value::as_str)
                    .map(decode_hex)
                    .transpose()
                    .map_err(|e| rejected(e.to_string()))?
                    .unwrap_or_default();
                self.eth_call(to, &data).map(|out| json!(encode_hex(&out)))
            }
            "debug_traceTransaction" => {
                let tx: B256 = params
                    .first()
                    .and_then(Value::as_str)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| rejected("debug_traceTransaction: bad hash"))?;
                match self.traces.get(&tx) {
                    Some(FixtureTrace::Opcodes(ops)) => Ok(json!({
                        "structLogs": ops.iter().map(|op| json!({"op": op})).collect::<Vec<_>>()
                    })),
                    Some(FixtureTrace::Refused(reason)) => Err(TransportError::Unsupported {
                        message: reason.clone(),
                    }),
                    None => Err(rejected(format!("transaction {tx} not found"))),
                }
            }
            other => Err(TransportError::Unsupported {
                message: format!("method {other} not available"),
            }),
        }
    }

    fn eth_call(&self, to: Address, data: &[u8]) -> Result<Vec<u8>, TransportError> {
        let Some(account) = self.account(to).filter(|a| !a.code.is_empty()) else {
            return Ok(Vec::new());
        };
        let wanted = encode_hex(data);
        if let Some((_, out)) = account.calls.iter().find(|(k, _)| k.to_ascii_lowercase() == wanted) {
            return decode_hex(out).map_err(|e| rejected(e.to_string()));
        }
        let revert = || TransportError::Rejected {
            code: 3,
            message: "execution reverted".into(),
        };
        if data == compute_selector("symbol()").0 {
            let symbol = account.symbol.clone().ok_or_else(revert)?;
            return Ok(encode_args(&[AbiType::String], &[AbiValue::String(symbol)]).expect("string encodes"));
        }
        if data == compute_selector("decimals()").0 {
            let decimals = account.decimals.ok_or_else(revert)?;
            return Ok(U256::from(decimals).to_big_endian().to_vec());
        }
        Err(revert())
    }

    fn scanner(&self, request: &Request) -> Result<Value, TransportError> {
        let address: Address = request
            .params
            .get("address")
            .and_then(Value::as_str)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| rejected(format!("{}: bad address", request.method)))?;
        let account = self.account(address);
        match request.method.as_str() {
            "getcontractcreation" => Ok(match account.and_then(|a| a.creation.as_ref()) {
                Some(c) => json!({"creator": c.creator, "txHash": c.tx_hash, "creationKind": c.kind}),
                None => Value::Null,
            }),
            "getsourcecode" => Ok(match account {
                Some(a) => json!({
                    "verified": a.verified || a.functions.is_some(),
                    "functions": a.functions,
                    "contractName": a.contract_name,
                }),
                None => json!({"verified": false, "functions": null, "contractName": null}),
            }),
            "getaddresstag" => Ok(json!({ "nameTag": account.and_then(|a| a.name_tag.clone()) })),
            other => Err(TransportError::Unsupported {
                message: format!("scanner method {other}"),
            }),
        }
    }

    fn signature_db(&self, request: &Request) -> Result<Value, TransportError> {
        let selector: Selector = request
            .params
            .get("selector")
            .and_then(Value::as_str)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| rejected("lookup: bad selector"))?;
        Ok(json!(self.signatures.get(&selector).cloned().unwrap_or_default()))
    }
}

fn rejected(message: impl Into<String>) -> TransportError {
    TransportError::Rejected {
        code: -32602,
        message: message.into(),
    }
}

impl Transport for FixtureWorld {
    fn send(&self, request: &Request) -> Result<Value, TransportError> {
        self.requests.fetch_add(1, Ordering::SeqCst);
        match request.endpoint {
            Endpoint::Rpc => self.rpc(request),
            Endpoint::Scanner => self.scanner(request),
            Endpoint::SignatureDb => self.signature_db(request),
        }
    }
}
