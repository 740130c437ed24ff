use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::chain::{ChainData, CreationKind, DataError};
use crate::evm::{disassemble, Opcode};
use crate::primitives::{Address, B256};

/// Chains longer than this are treated as corrupt data.
pub const MAX_CHAIN_LENGTH: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("{0} has no code and no creation record; it is not a contract")]
    NotAContract(Address),
    #[error("{0} has code but no creation record")]
    MissingCreation(Address),
    #[error("creation chain revisits {0}")]
    Cycle(Address),
    #[error("creation chain exceeds {MAX_CHAIN_LENGTH} steps")]
    TooLong,
}

/// Where a step's creation kind came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum KindSource {
    /// Executed opcodes of the creation transaction.
    Trace,
    /// The scanner's creation record; not independently confirmed.
    CreationRecord,
    /// No kind reported, creator is an externally owned account: taken to be a plain
    /// deployment transaction, which is nonce-based.
    EoaTransaction,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CreationStep {
    pub created_address: Address,
    pub creator_address: Address,
    pub creation_kind: Option<CreationKind>,
    pub kind_source: KindSource,
    pub creation_tx_id: B256,
}

/// `G → C0 → … → EOA`: `steps[0]` creates nothing but is created by `steps[1]`'s
/// subject, and so on until `terminal_eoa`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CreationChain {
    pub steps: Vec<CreationStep>,
    pub terminal_eoa: Address,
}

enum AccountKind {
    Contract(crate::chain::CreationRecord),
    Eoa,
}

fn classify(address: Address, provider: &dyn ChainData) -> Result<AccountKind, ChainError> {
    match provider.get_creation(address)? {
        Some(record) => Ok(AccountKind::Contract(record)),
        None if provider.get_code(address)?.is_empty() => Ok(AccountKind::Eoa),
        None => Err(ChainError::MissingCreation(address)),
    }
}

/// Follows creator-of links until an externally owned account. Destroyed contracts (no
/// code, but a creation record) stay in the chain.
pub fn build_creation_chain(address: Address, provider: &dyn ChainData) -> Result<CreationChain, ChainError> {
    let mut record = match classify(address, provider)? {
        AccountKind::Contract(record) => record,
        AccountKind::Eoa => return Err(ChainError::NotAContract(address)),
    };
    let mut current = address;
    let mut seen = BTreeSet::from([address]);
    let mut steps = Vec::new();
    loop {
        if steps.len() >= MAX_CHAIN_LENGTH {
            return Err(ChainError::TooLong);
        }
        let creator = record.creator;
        if !seen.insert(creator) {
            return Err(ChainError::Cycle(creator));
        }
        let next = classify(creator, provider)?;
        let (kind, source) = match (record.kind, &next) {
            (Some(kind), _) => (Some(kind), KindSource::CreationRecord),
            (None, AccountKind::Eoa) => (Some(CreationKind::Create), KindSource::EoaTransaction),
            (None, AccountKind::Contract(_)) => (None, KindSource::Unknown),
        };
        steps.push(CreationStep {
            created_address: current,
            creator_address: creator,
            creation_kind: kind,
            kind_source: source,
            creation_tx_id: record.tx_hash,
        });
        match next {
            AccountKind::Eoa => {
                return Ok(CreationChain {
                    steps,
                    terminal_eoa: creator,
                })
            }
            AccountKind::Contract(next_record) => {
                current = creator;
                record = next_record;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum DestructReason {
    Selfdestruct,
    /// Delegated code can self-destruct on the caller's behalf, and can be swapped.
    Delegatecall,
    /// Already gone: a creation record but no code.
    Destroyed,
}

/// Opcodes that make a contract destructible, found anywhere in its code (reachable or not).
pub fn destruct_reasons(code: &[u8]) -> Vec<DestructReason> {
    let mut reasons = BTreeSet::new();
    for ins in disassemble(code) {
        match ins.opcode {
            Opcode::SELFDESTRUCT => {
                reasons.insert(DestructReason::Selfdestruct);
            }
            Opcode::DELEGATECALL => {
                reasons.insert(DestructReason::Delegatecall);
            }
            _ => {}
        }
    }
    reasons.into_iter().collect()
}

pub fn can_self_destruct(code: &[u8]) -> bool {
    !destruct_reasons(code).is_empty()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Confidence {
    /// Every creation kind the verdict depends on was read from a trace or is certain.
    Confirmed,
    /// At least one kind came from the scanner record because tracing was unavailable.
    Reduced,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StepAssessment {
    pub address: Address,
    pub creation_kind: Option<CreationKind>,
    pub kind_source: KindSource,
    pub destructible: bool,
    pub reasons: Vec<DestructReason>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MutabilityVerdict {
    pub mutable: bool,
    pub pivot_index: Option<usize>,
    pub destructibility: Vec<bool>,
    pub steps: Vec<StepAssessment>,
    pub confidence: Confidence,
}

/// Kind of a step, confirmed from the creation transaction's trace where possible.
fn confirm_kind(step: &CreationStep, provider: &dyn ChainData) -> Result<(Option<CreationKind>, KindSource), DataError> {
    match provider.get_trace_opcodes(step.creation_tx_id) {
        Ok(ops) => {
            let kind = if ops.contains(&Opcode::CREATE2) {
                CreationKind::Create2
            } else {
                CreationKind::Create
            };
            Ok((Some(kind), KindSource::Trace))
        }
        Err(DataError::Capability { .. }) => Ok((step.creation_kind, step.kind_source)),
        Err(e) => Err(e),
    }
}

/// Mutable iff some step was created by CREATE2 and it and every step before it (closer
/// to the governance contract) can be destroyed.
pub fn assess_mutability(chain: &CreationChain, provider: &dyn ChainData) -> Result<MutabilityVerdict, DataError> {
    let mut steps = Vec::with_capacity(chain.steps.len());
    for step in &chain.steps {
        let (kind, source) = confirm_kind(step, provider)?;
        let code = provider.get_code(step.created_address)?;
        let reasons = if code.is_empty() {
            vec![DestructReason::Destroyed]
        } else {
            destruct_reasons(&code)
        };
        steps.push(StepAssessment {
            address: step.created_address,
            creation_kind: kind,
            kind_source: source,
            destructible: !reasons.is_empty(),
            reasons,
        });
    }
    Ok(verdict_from_steps(steps))
}

/// The decision rule on already-assessed steps.
pub fn verdict_from_steps(steps: Vec<StepAssessment>) -> MutabilityVerdict {
    let destructibility: Vec<bool> = steps.iter().map(|s| s.destructible).collect();
    let prefix = destructibility.iter().take_while(|d| **d).count();
    let pivot_index = steps[..prefix]
        .iter()
        .position(|s| s.creation_kind == Some(CreationKind::Create2));
    // Only kinds up to the pivot (or the destructible prefix) can affect the verdict.
    let relevant = pivot_index.map_or(prefix.min(steps.len()), |p| p + 1);
    let reduced = steps[..relevant.min(steps.len())]
        .iter()
        .any(|s| matches!(s.kind_source, KindSource::CreationRecord | KindSource::Unknown));
    MutabilityVerdict {
        mutable: pivot_index.is_some(),
        pivot_index,
        destructibility,
        steps,
        confidence: if reduced { Confidence::Reduced } else { Confidence::Confirmed },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(kind: Option<CreationKind>, destructible: bool) -> StepAssessment {
        StepAssessment {
            address: Address::default(),
            creation_kind: kind,
            kind_source: KindSource::Trace,
            destructible,
            reasons: if destructible { vec![DestructReason::Selfdestruct] } else { vec![] },
        }
    }

    #[test]
    fn scans_for_destruct_opcodes() {
        assert!(can_self_destruct(&[0x60, 0x00, 0xff]));
        assert!(can_self_destruct(&[0xf4]));
        assert!(!can_self_destruct(&[0x60, 0x00, 0x00]));
        // 0xff inside a PUSH payload is data, not an instruction
        assert!(!can_self_destruct(&[0x60, 0xff]));
        assert_eq!(destruct_reasons(&[0xf4, 0xff]), vec![DestructReason::Selfdestruct, DestructReason::Delegatecall]);
    }

    #[test]
    fn pivot_rule() {
        let create = Some(CreationKind::Create);
        let create2 = Some(CreationKind::Create2);
        let v = verdict_from_steps(vec![step(create, true), step(create2, true)]);
        assert!(v.mutable);
        assert_eq!(v.pivot_index, Some(1));
        assert!(!verdict_from_steps(vec![step(create, true), step(create, true)]).mutable);
        assert!(!verdict_from_steps(vec![step(create, false), step(create2, true)]).mutable);
        // the pivot itself must be destructible
        assert!(!verdict_from_steps(vec![step(create, true), step(create2, false)]).mutable);
        assert_eq!(verdict_from_steps(vec![step(create2, true)]).pivot_index, Some(0));
        assert!(!verdict_from_steps(vec![]).mutable);
    }
}
