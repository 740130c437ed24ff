//! The five description/code inconsistencies and the proposal-level classification.

use serde::Serialize;
use thiserror::Error;

use super::actions::{CodeAction, TargetImmutabilityResult};
use super::matching::{match_function, match_parameter, FunctionMatch, FunctionStatus, ParameterMatch, ParameterStatus, TextSimilarity};
use super::nlp::DescriptionIntention;
use crate::chain::{ChainData, DataError};
use crate::service::ServiceError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum InconsistencyCategory {
    LackOfDescriptionIntention,
    LackOfCodeAction,
    IncompleteFunction,
    IncompleteParameter,
    IncorrectProposal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct InconsistencyFinding {
    pub category: InconsistencyCategory,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub call_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intention_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parameter_index: Option<usize>,
    pub explanation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ActionConsistency {
    pub call_index: usize,
    pub function: FunctionMatch,
    pub parameters: Vec<ParameterMatch>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConsistencyReport {
    pub findings: Vec<InconsistencyFinding>,
    pub actions: Vec<ActionConsistency>,
    pub normal: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatchError {
    #[error(transparent)]
    Service(#[from] ServiceError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// The pluggable parts of matching.
pub struct Matchers<'a> {
    pub similarity: &'a dyn TextSimilarity,
    pub threshold: f64,
    pub provider: &'a dyn ChainData,
}

fn action_label(action: &CodeAction) -> String {
    match (&action.function_name, action.function_signature) {
        (Some(name), _) => name.clone(),
        (None, Some(sel)) => sel.to_string(),
        (None, None) => "value transfer".into(),
    }
}

/// Lack of description intention and lack of code action are decided on counts alone;
/// otherwise each code action is matched for its function and every parameter.
pub fn detect_inconsistencies(
    intentions: &[DescriptionIntention],
    actions: &[CodeAction],
    matchers: &Matchers<'_>,
) -> Result<ConsistencyReport, MatchError> {
    let mut findings = Vec::new();
    let mut per_action = Vec::new();
    if !actions.is_empty() && intentions.is_empty() {
        findings.push(InconsistencyFinding {
            category: InconsistencyCategory::LackOfDescriptionIntention,
            call_index: None,
            intention_index: None,
            parameter_index: None,
            explanation: format!("{} code action(s) but no description intention", actions.len()),
        });
    } else if actions.is_empty() && !intentions.is_empty() {
        findings.push(InconsistencyFinding {
            category: InconsistencyCategory::LackOfCodeAction,
            call_index: None,
            intention_index: None,
            parameter_index: None,
            explanation: format!("{} description intention(s) but no code action", intentions.len()),
        });
    } else {
        for (call_index, action) in actions.iter().enumerate() {
            let label = action_label(action);
            let function = match_function(action, intentions, matchers.similarity, matchers.threshold)?;
            if function.status == FunctionStatus::IncompleteFunction {
                findings.push(InconsistencyFinding {
                    category: InconsistencyCategory::IncompleteFunction,
                    call_index: Some(call_index),
                    intention_index: function.best_intention,
                    parameter_index: None,
                    explanation: format!(
                        "{label} is not described (best similarity {:.2} < {:.2})",
                        function.best_score, matchers.threshold
                    ),
                });
            }
            for &i in &function.negative_mentions {
                findings.push(InconsistencyFinding {
                    category: InconsistencyCategory::IncorrectProposal,
                    call_index: Some(call_index),
                    intention_index: Some(i),
                    parameter_index: None,
                    explanation: format!("{label} is executed but the description says it will not be"),
                });
            }
            let mut parameters = Vec::new();
            if let Some(params) = &action.function_parameters {
                let decimals = if params.is_empty() {
                    None
                } else {
                    matchers.provider.decimals(action.target_address)?
                };
                for (k, param) in params.iter().enumerate() {
                    let m = match_parameter(k, param, intentions, decimals, matchers.provider)?;
                    if m.status == ParameterStatus::IncompleteParameter {
                        findings.push(InconsistencyFinding {
                            category: InconsistencyCategory::IncompleteParameter,
                            call_index: Some(call_index),
                            intention_index: None,
                            parameter_index: Some(k),
                            explanation: format!("{label} argument {k} ({}) = {} is not described", m.solidity_type, m.value),
                        });
                    }
                    parameters.push(m);
                }
            }
            per_action.push(ActionConsistency {
                call_index,
                function,
                parameters,
            });
        }
    }
    Ok(ConsistencyReport {
        normal: findings.is_empty(),
        findings,
        actions: per_action,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProposalClassification {
    /// A call target is closed source or can have its code replaced.
    CodeMutability,
    LackOfDescriptionIntention,
    LackOfCodeAction,
    IncorrectProposal,
    IncompleteFunction,
    IncompleteParameter,
    Normal,
    /// The platform stores no descriptions, so consistency is not scored.
    Unscored,
}

/// Single label for a proposal, by precedence: code mutability, then the consistency
/// categories in the order listed on [`ProposalClassification`].
pub fn classify(targets: &[TargetImmutabilityResult], consistency: Option<&ConsistencyReport>) -> ProposalClassification {
    if targets.iter().any(TargetImmutabilityResult::is_risky) {
        return ProposalClassification::CodeMutability;
    }
    let Some(report) = consistency else {
        return ProposalClassification::Unscored;
    };
    let has = |c: InconsistencyCategory| report.findings.iter().any(|f| f.category == c);
    [
        (InconsistencyCategory::LackOfDescriptionIntention, ProposalClassification::LackOfDescriptionIntention),
        (InconsistencyCategory::LackOfCodeAction, ProposalClassification::LackOfCodeAction),
        (InconsistencyCategory::IncorrectProposal, ProposalClassification::IncorrectProposal),
        (InconsistencyCategory::IncompleteFunction, ProposalClassification::IncompleteFunction),
        (InconsistencyCategory::IncompleteParameter, ProposalClassification::IncompleteParameter),
    ]
    .into_iter()
    .find(|(c, _)| has(*c))
    .map_or(ProposalClassification::Normal, |(_, p)| p)
}
