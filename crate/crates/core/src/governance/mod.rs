//! Governance-contract checks: soundness against known templates, independence from
//! external privileged accounts, and immutability of the deployment chain.

mod address;
mod creation;
mod privilege;
mod soundness;

use serde::Serialize;

pub use address::{compute_create2_address, compute_create_address};
pub use creation::{
    assess_mutability, build_creation_chain, can_self_destruct, destruct_reasons, verdict_from_steps, ChainError,
    Confidence, CreationChain, CreationStep, DestructReason, KindSource, MutabilityVerdict, StepAssessment,
    MAX_CHAIN_LENGTH,
};
pub use privilege::{
    detect_privileged_functions, privileged_checks_in, ComparandSource, Controller, PrivilegedFunctionFinding,
};
pub use soundness::{
    check_soundness, load_deployers, DeployersError, PlatformDeployers, SoundnessConfig, SoundnessDetails,
    SoundnessEvidence, SoundnessVerdict, TemplateScore, DEPLOYERS_FORMAT, EXECUTE_NAMES, PROPOSE_NAMES, VOTE_NAMES,
};

/// Summary of privileged findings: independent when every gated function is controlled by
/// the governance contract itself.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct IndependenceVerdict {
    pub independent: bool,
    pub self_governed: usize,
    pub external: usize,
    pub unresolved: usize,
}

impl IndependenceVerdict {
    pub fn from_findings(findings: &[PrivilegedFunctionFinding]) -> Self {
        let count = |c: Controller| findings.iter().filter(|f| f.controller == c).count();
        let external = count(Controller::External);
        let unresolved = count(Controller::Unresolved);
        Self {
            independent: external == 0 && unresolved == 0,
            self_governed: count(Controller::SelfGoverned),
            external,
            unresolved,
        }
    }
}

/// A step of the governance audit that could not be finished.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StepFailure {
    pub step: &'static str,
    pub error: ChainError,
}

impl Serialize for ChainError {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

/// Every governance check on one contract. Each part is `None` when its step failed;
/// the failure is in `failures`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GovernanceAudit {
    pub address: crate::primitives::Address,
    pub soundness: Option<SoundnessVerdict>,
    pub privileged_functions: Option<Vec<PrivilegedFunctionFinding>>,
    pub independence: Option<IndependenceVerdict>,
    pub creation_chain: Option<CreationChain>,
    pub mutability: Option<MutabilityVerdict>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<StepFailure>,
}

impl GovernanceAudit {
    /// Short labels of what failed: unsound, externally controlled or unresolved
    /// privileged checks, and a mutable creation chain.
    pub fn findings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.soundness.as_ref().is_some_and(|s| !s.sound) {
            out.push("unsound: no platform deployer, template or governance-function match".to_string());
        }
        for f in self.privileged_functions.iter().flatten() {
            if f.controller != Controller::SelfGoverned {
                out.push(format!("privileged {:?}: {} checked at {:#x}", f.controller, f.selector, f.check_offset));
            }
        }
        if let Some(m) = self.mutability.as_ref().filter(|m| m.mutable) {
            out.push(format!("mutable: CREATE2 pivot at chain step {}", m.pivot_index.unwrap_or_default()));
        }
        out
    }
}

/// Soundness, privileged functions, creation chain and mutability of `address`.
pub fn audit_governance(
    address: crate::primitives::Address,
    provider: &dyn crate::chain::ChainData,
    config: &SoundnessConfig,
) -> GovernanceAudit {
    let mut failures = Vec::new();
    let mut fail = |step: &'static str, error: ChainError| failures.push(StepFailure { step, error });

    let soundness = check_soundness(address, provider, config)
        .map_err(|e| fail("soundness", e.into()))
        .ok();
    let privileged_functions = provider
        .get_code(address)
        .map(|code| detect_privileged_functions(&code, address, Some(provider)))
        .map_err(|e| fail("privilegedFunctions", e.into()))
        .ok();
    let independence = privileged_functions.as_deref().map(IndependenceVerdict::from_findings);
    let creation_chain = build_creation_chain(address, provider)
        .map_err(|e| fail("creationChain", e))
        .ok();
    let mutability = creation_chain
        .as_ref()
        .and_then(|chain| assess_mutability(chain, provider).map_err(|e| fail("mutability", e.into())).ok());
    GovernanceAudit {
        address,
        soundness,
        privileged_functions,
        independence,
        creation_chain,
        mutability,
        failures,
    }
}
