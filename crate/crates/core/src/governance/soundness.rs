use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{ChainData, DataError};
use crate::evm::{functions_of, FunctionBody};
use crate::primitives::Address;
use crate::similarity::{contracts_similar_with, SequenceSimilarity, SetJaccard, TemplateRecord, DEFAULT_THRESHOLD};

pub const DEPLOYERS_FORMAT: &str = "govaudit-deployers/1";

/// Function names that implement each governance step in the templates.
pub const PROPOSE_NAMES: &[&str] = &["propose", "submitProposal", "newProposal", "createProposal"];
pub const VOTE_NAMES: &[&str] = &["castVote", "castVoteWithReason", "castVoteBySig", "vote", "submitVote"];
pub const EXECUTE_NAMES: &[&str] = &["execute", "executeProposal", "processProposal"];

#[derive(Debug, Error)]
pub enum DeployersError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing deployers: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PlatformDeployers {
    pub platform: String,
    pub chain_id: u64,
    pub deployers: Vec<Address>,
}

#[derive(Debug, Clone, Deserialize)]
struct DeployersFile {
    format: String,
    platforms: Vec<PlatformDeployers>,
}

/// Reads `{"format": "govaudit-deployers/1", "platforms": [{platform, chainId, deployers}]}`.
pub fn load_deployers(path: &Path) -> Result<Vec<PlatformDeployers>, DeployersError> {
    let text = std::fs::read_to_string(path).map_err(|source| DeployersError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file: DeployersFile = serde_json::from_str(&text).map_err(|e| DeployersError::Parse(e.to_string()))?;
    if file.format != DEPLOYERS_FORMAT {
        return Err(DeployersError::Parse(format!("unsupported format {:?}", file.format)));
    }
    Ok(file.platforms)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum SoundnessEvidence {
    CreatorMatchesPlatformDeployer,
    BytecodeMatchesTemplate,
    HasProposeVoteExecute,
    DocumentedOpenSource,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TemplateScore {
    pub template: String,
    pub score: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SoundnessDetails {
    pub creator: Option<Address>,
    pub platform: Option<String>,
    pub best_template: Option<TemplateScore>,
    pub propose: Option<TemplateScore>,
    pub vote: Option<TemplateScore>,
    pub execute: Option<TemplateScore>,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SoundnessVerdict {
    pub sound: bool,
    pub evidence: Option<SoundnessEvidence>,
    pub details: SoundnessDetails,
}

/// Reference data for the soundness check.
#[derive(Clone)]
pub struct SoundnessConfig {
    pub templates: Vec<TemplateRecord>,
    pub deployers: Vec<PlatformDeployers>,
    /// Governance contracts whose open-source status is documented out of band.
    pub documented_open_source: BTreeSet<Address>,
    pub threshold: f64,
    pub kernel: Arc<dyn SequenceSimilarity>,
}

impl Default for SoundnessConfig {
    fn default() -> Self {
        Self {
            templates: Vec::new(),
            deployers: Vec::new(),
            documented_open_source: BTreeSet::new(),
            threshold: DEFAULT_THRESHOLD,
            kernel: Arc::new(SetJaccard::default()),
        }
    }
}

/// Best match of any target function against any template's bodies for `names`.
fn best_role_match(
    kernel: &dyn SequenceSimilarity,
    targets: &[FunctionBody],
    templates: &[(&TemplateRecord, Vec<FunctionBody>)],
    names: &[&str],
) -> Option<TemplateScore> {
    let mut best: Option<TemplateScore> = None;
    for (template, bodies) in templates {
        let selectors = template.selectors_named(names);
        for variant in bodies.iter().filter(|b| selectors.contains(&b.selector)) {
            let v = variant.opcodes();
            for target in targets {
                let score = kernel.score(&target.opcodes(), &v);
                if best.as_ref().is_none_or(|b| score > b.score) {
                    best = Some(TemplateScore {
                        template: template.name.clone(),
                        score,
                    });
                }
            }
        }
    }
    best
}

/// Tries creator, whole-bytecode, propose/vote/execute and documentation evidence in that
/// order; the first that holds makes the contract sound.
pub fn check_soundness(
    governance: Address,
    provider: &dyn ChainData,
    config: &SoundnessConfig,
) -> Result<SoundnessVerdict, DataError> {
    let chain_id = provider.chain_id();
    let mut details = SoundnessDetails {
        threshold: config.threshold,
        ..SoundnessDetails::default()
    };
    let done = |evidence, details| SoundnessVerdict {
        sound: true,
        evidence: Some(evidence),
        details,
    };

    if let Some(record) = provider.get_creation(governance)? {
        details.creator = Some(record.creator);
        if let Some(p) = config
            .deployers
            .iter()
            .find(|p| p.chain_id == chain_id && p.deployers.contains(&record.creator))
        {
            details.platform = Some(p.platform.clone());
            return Ok(done(SoundnessEvidence::CreatorMatchesPlatformDeployer, details));
        }
    }

    let code = provider.get_code(governance)?;
    let kernel = config.kernel.as_ref();
    for template in &config.templates {
        let decision = contracts_similar_with(kernel, &code, &template.runtime_bytecode_hex, config.threshold);
        if details.best_template.as_ref().is_none_or(|b| decision.score > b.score) {
            details.best_template = Some(TemplateScore {
                template: template.name.clone(),
                score: decision.score,
            });
        }
    }
    if details.best_template.as_ref().is_some_and(|b| b.score >= config.threshold) {
        return Ok(done(SoundnessEvidence::BytecodeMatchesTemplate, details));
    }

    let targets = functions_of(&code).functions;
    let template_bodies: Vec<_> = config
        .templates
        .iter()
        .map(|t| (t, functions_of(&t.runtime_bytecode_hex).functions))
        .collect();
    details.propose = best_role_match(kernel, &targets, &template_bodies, PROPOSE_NAMES);
    details.vote = best_role_match(kernel, &targets, &template_bodies, VOTE_NAMES);
    details.execute = best_role_match(kernel, &targets, &template_bodies, EXECUTE_NAMES);
    let passes = |s: &Option<TemplateScore>| s.as_ref().is_some_and(|s| s.score >= config.threshold);
    if passes(&details.propose) && passes(&details.vote) && passes(&details.execute) {
        return Ok(done(SoundnessEvidence::HasProposeVoteExecute, details));
    }

    if config.documented_open_source.contains(&governance) {
        return Ok(done(SoundnessEvidence::DocumentedOpenSource, details));
    }
    Ok(SoundnessVerdict {
        sound: false,
        evidence: None,
        details,
    })
}
