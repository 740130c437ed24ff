//! Code actions: proposal calls enriched with symbols, function names and decoded
//! parameters, and the mutability check on call targets.

use primitive_types::U256;
use serde::Serialize;

use super::record::ResolvedCall;
use crate::abi::{decode_calldata, FunctionSignature, TypedParam};
use crate::chain::{ChainData, DataError};
use crate::governance::{assess_mutability, build_creation_chain, ChainError, MutabilityVerdict};
use crate::primitives::{dec_u256, Address, Selector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum NameSource {
    ProposalRecord,
    Abi,
    SignatureDb,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CodeAction {
    pub target_address: Address,
    pub target_address_symbol: Option<String>,
    #[serde(with = "dec_u256")]
    pub value: U256,
    pub function_signature: Option<Selector>,
    pub function_name: Option<String>,
    /// Present only when `function_name` is and the calldata decodes against it.
    pub function_parameters: Option<Vec<TypedParam>>,
    pub name_source: Option<NameSource>,
    /// Every signature-database candidate for the selector, in the database's order.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub signature_candidates: Vec<String>,
}

impl CodeAction {
    /// Bare function name, without the parameter list.
    pub fn function_identifier(&self) -> Option<&str> {
        self.function_name.as_deref().map(|n| n.split('(').next().unwrap_or(n))
    }
}

/// Something that could not be looked up; the corresponding field stays empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ActionDiagnostic {
    pub call_index: usize,
    pub message: String,
}

fn soft<T>(
    result: Result<T, DataError>,
    call_index: usize,
    what: &str,
    diagnostics: &mut Vec<ActionDiagnostic>,
) -> Option<T> {
    match result {
        Ok(v) => Some(v),
        Err(e) => {
            diagnostics.push(ActionDiagnostic {
                call_index,
                message: format!("{what}: {e}"),
            });
            None
        }
    }
}

/// Name tag, else `symbol()`.
pub fn target_symbol(
    target: Address,
    provider: &dyn ChainData,
    call_index: usize,
    diagnostics: &mut Vec<ActionDiagnostic>,
) -> Option<String> {
    if let Some(tag) = soft(provider.get_name_tag(target), call_index, "name tag", diagnostics).flatten() {
        return Some(tag);
    }
    soft(provider.symbol(target), call_index, "symbol()", diagnostics).flatten()
}

/// Signature-database candidates that match the selector and decode the calldata
/// strictly; the one with fewest parameters wins, then database order.
fn pick_candidate(candidates: &[String], selector: Selector, calldata: &[u8]) -> Option<(String, Vec<TypedParam>)> {
    candidates
        .iter()
        .filter_map(|c| FunctionSignature::parse(c).ok())
        .filter(|sig| sig.selector() == selector)
        .filter_map(|sig| {
            let canonical = sig.canonical();
            decode_calldata(&canonical, calldata).ok().map(|params| (canonical, params))
        })
        .min_by_key(|(_, params)| params.len())
}

fn extract_one(
    index: usize,
    call: &ResolvedCall,
    provider: &dyn ChainData,
    diagnostics: &mut Vec<ActionDiagnostic>,
) -> CodeAction {
    let mut action = CodeAction {
        target_address: call.target,
        target_address_symbol: target_symbol(call.target, provider, index, diagnostics),
        value: call.value,
        function_signature: call.selector,
        function_name: None,
        function_parameters: None,
        name_source: None,
        signature_candidates: Vec::new(),
    };
    let Some(selector) = call.selector else {
        return action;
    };

    let mut named = call
        .record_signature
        .clone()
        .map(|sig| (sig, NameSource::ProposalRecord));
    if named.is_none() {
        if let Some(info) = soft(provider.source_info(call.target), index, "source", diagnostics) {
            named = info
                .functions
                .unwrap_or_default()
                .iter()
                .filter_map(|f| FunctionSignature::parse(f).ok())
                .find(|sig| sig.selector() == selector)
                .map(|sig| (sig.canonical(), NameSource::Abi));
        }
    }
    if let Some((name, source)) = named {
        match decode_calldata(&name, &call.calldata) {
            Ok(params) => action.function_parameters = Some(params),
            Err(e) => diagnostics.push(ActionDiagnostic {
                call_index: index,
                message: format!("calldata does not decode as {name}: {e}"),
            }),
        }
        action.function_name = Some(name);
        action.name_source = Some(source);
        return action;
    }

    let candidates = soft(provider.lookup_signature(selector), index, "signature lookup", diagnostics).unwrap_or_default();
    if let Some((name, params)) = pick_candidate(&candidates, selector, &call.calldata) {
        action.function_name = Some(name);
        action.function_parameters = Some(params);
        action.name_source = Some(NameSource::SignatureDb);
    } else if !candidates.is_empty() {
        diagnostics.push(ActionDiagnostic {
            call_index: index,
            message: format!("no signature candidate for {selector} decodes the calldata"),
        });
    }
    action.signature_candidates = candidates;
    action
}

/// One code action per call. Lookup failures leave fields empty and are reported as
/// diagnostics rather than errors.
pub fn extract_code_actions(calls: &[ResolvedCall], provider: &dyn ChainData) -> (Vec<CodeAction>, Vec<ActionDiagnostic>) {
    let mut diagnostics = Vec::new();
    let actions = calls
        .iter()
        .enumerate()
        .map(|(i, call)| extract_one(i, call, provider, &mut diagnostics))
        .collect();
    (actions, diagnostics)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum SkipReason {
    /// The DAO's own governance contract, which the governance audit covers.
    GovernanceContract,
    /// No code and no creation record: a plain account receiving value.
    ExternallyOwned,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "camelCase")]
pub enum TargetImmutabilityResult {
    #[serde(rename_all = "camelCase")]
    Skipped { target: Address, reason: SkipReason },
    #[serde(rename_all = "camelCase")]
    Checked {
        target: Address,
        open_source: bool,
        create2_risk: MutabilityVerdict,
    },
}

impl TargetImmutabilityResult {
    /// Closed source or replaceable code.
    pub fn is_risky(&self) -> bool {
        match self {
            TargetImmutabilityResult::Skipped { .. } => false,
            TargetImmutabilityResult::Checked {
                open_source,
                create2_risk,
                ..
            } => !open_source || create2_risk.mutable,
        }
    }
}

/// Verified source and creation-chain mutability of a call target.
pub fn check_target_immutability(
    target: Address,
    governance: Option<Address>,
    provider: &dyn ChainData,
) -> Result<TargetImmutabilityResult, ChainError> {
    if governance == Some(target) {
        return Ok(TargetImmutabilityResult::Skipped {
            target,
            reason: SkipReason::GovernanceContract,
        });
    }
    if provider.get_creation(target)?.is_none() && provider.get_code(target)?.is_empty() {
        return Ok(TargetImmutabilityResult::Skipped {
            target,
            reason: SkipReason::ExternallyOwned,
        });
    }
    let open_source = provider.is_verified(target)?;
    let chain = build_creation_chain(target, provider)?;
    let create2_risk = assess_mutability(&chain, provider)?;
    Ok(TargetImmutabilityResult::Checked {
        target,
        open_source,
        create2_risk,
    })
}
