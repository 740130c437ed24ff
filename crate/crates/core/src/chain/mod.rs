//! Chain data behind one interface: node RPC, block scanner and signature database,
//! with live, record and replay modes.

mod cache;
mod fixture;
mod provider;
mod transport;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abi::{decode_text_return, decode_uint_return};
use crate::evm::{compute_selector, Opcode};
use crate::primitives::{Address, Selector, B256};

pub use cache::{CacheEntry, CacheKey, ResponseCache, CACHE_FORMAT};
pub use fixture::{FixtureAccount, FixtureCreation, FixtureError, FixtureTrace, FixtureWorld, WORLD_FORMAT};
pub use provider::{Provider, ProviderConfig, RetryPolicy};
pub use transport::{
    normalize_scanner, Endpoint, HttpTransport, InFlightGuard, InFlightLimiter, OfflineTransport, Request,
    Transport, TransportError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Live,
    Record,
    Replay,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "live" => Ok(Mode::Live),
            "record" => Ok(Mode::Record),
            "replay" => Ok(Mode::Replay),
            other => Err(format!("unknown mode {other:?} (expected live, record or replay)")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Live => "live",
            Mode::Record => "record",
            Mode::Replay => "replay",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DataError {
    #[error("replay cache has no entry for {key}")]
    ReplayMiss { key: String },
    #[error("{method}: {source}")]
    Transport {
        method: String,
        #[source]
        source: TransportError,
    },
    /// The endpoint cannot answer this kind of request at all (e.g. no tracing).
    #[error("{method} is not supported by the endpoint: {message}")]
    Capability { method: String, message: String },
    #[error("malformed {method} response: {message}")]
    Malformed { method: String, message: String },
    #[error("cache: {0}")]
    Cache(String),
    #[error("configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CreationKind {
    #[serde(rename = "CREATE")]
    Create,
    #[serde(rename = "CREATE2")]
    Create2,
}

impl FromStr for CreationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "CREATE" => Ok(CreationKind::Create),
            "CREATE2" => Ok(CreationKind::Create2),
            other => Err(format!("unknown creation kind {other:?}")),
        }
    }
}

/// Who deployed a contract and in which transaction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CreationRecord {
    pub creator: Address,
    pub tx_hash: B256,
    /// As reported by the scanner, when it reports one. Not trace-confirmed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<CreationKind>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SourceInfo {
    pub verified: bool,
    #[serde(default)]
    pub functions: Option<Vec<String>>,
    #[serde(default)]
    pub contract_name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ContractMetadata {
    pub address: Address,
    pub verified: bool,
    pub abi: Option<Vec<String>>,
    pub name_tag: Option<String>,
    pub symbol: Option<String>,
}

pub trait ChainData: Send + Sync {
    fn chain_id(&self) -> u64;

    /// Runtime code; empty for externally owned accounts and destroyed contracts.
    fn get_code(&self, address: Address) -> Result<Vec<u8>, DataError>;

    fn get_storage(&self, address: Address, slot: B256) -> Result<B256, DataError>;

    /// `None` when no deployment transaction is known for the address.
    fn get_creation(&self, address: Address) -> Result<Option<CreationRecord>, DataError>;

    /// Executed opcodes of a transaction, in order. `DataError::Capability` when the
    /// endpoint cannot trace.
    fn get_trace_opcodes(&self, tx: B256) -> Result<Vec<Opcode>, DataError>;

    /// Read-only call at the latest block.
    fn call(&self, to: Address, data: &[u8]) -> Result<Vec<u8>, DataError>;

    fn source_info(&self, address: Address) -> Result<SourceInfo, DataError>;

    fn get_name_tag(&self, address: Address) -> Result<Option<String>, DataError>;

    /// Candidate canonical signatures, in the database's order.
    fn lookup_signature(&self, selector: Selector) -> Result<Vec<String>, DataError>;

    fn is_verified(&self, address: Address) -> Result<bool, DataError> {
        Ok(self.source_info(address)?.verified)
    }

    /// `symbol()` via a call; `None` when the call reverts or returns something unreadable.
    fn symbol(&self, address: Address) -> Result<Option<String>, DataError> {
        match self.call(address, &compute_selector("symbol()").0) {
            Ok(data) => Ok(decode_text_return(&data)),
            Err(DataError::Transport { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    fn decimals(&self, address: Address) -> Result<Option<u32>, DataError> {
        match self.call(address, &compute_selector("decimals()").0) {
            Ok(data) => Ok(decode_uint_return(&data).filter(|v| v.bits() <= 8).map(|v| v.as_u32())),
            Err(DataError::Transport { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Verification status and ABI from the scanner, name tag, and `symbol()` when the
    /// address has no tag.
    fn get_abi(&self, address: Address) -> Result<ContractMetadata, DataError> {
        let source = self.source_info(address)?;
        let name_tag = self.get_name_tag(address)?;
        let symbol = if name_tag.is_none() && !self.get_code(address)?.is_empty() {
            self.symbol(address)?
        } else {
            None
        };
        Ok(ContractMetadata {
            address,
            verified: source.verified || source.functions.is_some(),
            abi: source.functions,
            name_tag,
            symbol,
        })
    }
}
