//! Proposal input records.

use std::path::Path;

use primitive_types::U256;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abi::FunctionSignature;
use crate::primitives::{dec_u256, encode_hex, hex_bytes, Address, Selector};

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing proposal: {0}")]
    Parse(String),
    #[error("call {index}: {message}")]
    Call { index: usize, message: String },
}

/// One call as it appears in the governance contract's proposal: `signature` is either a
/// 4-byte selector (then `calldata` starts with it) or a text signature whose selector
/// may be omitted from `calldata`, as Compound-style governors store it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProposalCall {
    pub target: Address,
    #[serde(with = "dec_u256", default)]
    pub value: U256,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signature: Option<String>,
    #[serde(with = "hex_bytes", default)]
    pub calldata: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProposalRecord {
    pub id: String,
    /// The DAO's governance contract; calls into it are not re-checked for mutability.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub governance: Option<Address>,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub calls: Vec<ProposalCall>,
    /// `false` for platforms whose proposals carry no description at all; such
    /// proposals are not scored for consistency.
    #[serde(default = "yes")]
    pub description_supported: bool,
}

fn yes() -> bool {
    true
}

/// A call with its selector settled and full calldata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedCall {
    pub target: Address,
    pub value: U256,
    /// `None` for a plain value transfer with empty calldata.
    pub selector: Option<Selector>,
    pub calldata: Vec<u8>,
    /// Canonical text signature supplied by the record itself.
    pub record_signature: Option<String>,
}

impl ProposalRecord {
    pub fn parse(text: &str) -> Result<Self, RecordError> {
        serde_json::from_str(text).map_err(|e| RecordError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, RecordError> {
        let text = std::fs::read_to_string(path).map_err(|source| RecordError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Validates every call and settles its selector.
    pub fn resolved_calls(&self) -> Result<Vec<ResolvedCall>, RecordError> {
        self.calls.iter().enumerate().map(|(index, call)| resolve(index, call)).collect()
    }
}

fn resolve(index: usize, call: &ProposalCall) -> Result<ResolvedCall, RecordError> {
    let err = |message: String| RecordError::Call { index, message };
    let signature = call.signature.as_deref().map(str::trim).filter(|s| !s.is_empty());
    let head = |data: &[u8]| (data.len() >= 4).then(|| Selector::from_slice(&data[..4]).expect("4 bytes"));
    match signature {
        None => {
            if !call.calldata.is_empty() && call.calldata.len() < 4 {
                return Err(err(format!("calldata {} is shorter than a selector", encode_hex(&call.calldata))));
            }
            Ok(ResolvedCall {
                target: call.target,
                value: call.value,
                selector: head(&call.calldata),
                calldata: call.calldata.clone(),
                record_signature: None,
            })
        }
        Some(sig) if sig.starts_with("0x") => {
            let selector: Selector = sig.parse().map_err(|e| err(format!("signature {sig}: {e}")))?;
            if head(&call.calldata) != Some(selector) {
                return Err(err(format!("calldata does not begin with signature {sig}")));
            }
            Ok(ResolvedCall {
                target: call.target,
                value: call.value,
                selector: Some(selector),
                calldata: call.calldata.clone(),
                record_signature: None,
            })
        }
        Some(sig) => {
            let parsed = FunctionSignature::parse(sig).map_err(|e| err(e.to_string()))?;
            let selector = parsed.selector();
            let calldata = if head(&call.calldata) == Some(selector) {
                call.calldata.clone()
            } else {
                let mut full = selector.0.to_vec();
                full.extend_from_slice(&call.calldata);
                full
            };
            Ok(ResolvedCall {
                target: call.target,
                value: call.value,
                selector: Some(selector),
                calldata,
                record_signature: Some(parsed.canonical()),
            })
        }
    }
}
