//! The six documentation rules and their question chains.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_QUESTION_CHAINS: &str = include_str!("../../data/question_chains.json");
pub const QUESTION_CHAINS_FORMAT: &str = "govaudit-question-chains/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RuleId {
    MemberParticipation,
    MemberExit,
    VotingPower,
    MinorityProtection,
    GovernanceProcessGuide,
    AppointmentOfGuardian,
}

impl RuleId {
    pub const ALL: [RuleId; 6] = [
        RuleId::MemberParticipation,
        RuleId::MemberExit,
        RuleId::VotingPower,
        RuleId::MinorityProtection,
        RuleId::GovernanceProcessGuide,
        RuleId::AppointmentOfGuardian,
    ];

    /// Human-readable name, e.g. "Member Participation".
    pub fn title(self) -> &'static str {
        match self {
            RuleId::MemberParticipation => "Member Participation",
            RuleId::MemberExit => "Member Exit",
            RuleId::VotingPower => "Voting Power",
            RuleId::MinorityProtection => "Minority Protection",
            RuleId::GovernanceProcessGuide => "Governance Process Guide",
            RuleId::AppointmentOfGuardian => "Appointment of Guardian",
        }
    }
}

/// Where a question's wording comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum QuestionOrigin {
    Paper,
    Reconstructed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub text: String,
    pub origin: QuestionOrigin,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentationRule {
    pub id: RuleId,
    /// Asked in order; each one only after the previous answered Yes.
    pub questions: Vec<Question>,
}

#[derive(Debug, Error)]
pub enum RulesError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("question chains: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("question chains: {0}")]
    Invalid(String),
}

#[derive(Deserialize)]
struct ChainsFile {
    format: String,
    rules: Vec<DocumentationRule>,
}

/// Parses a question-chain file; every rule must appear exactly once with at least one question.
pub fn parse_rules(text: &str) -> Result<Vec<DocumentationRule>, RulesError> {
    let file: ChainsFile = serde_json::from_str(text)?;
    if file.format != QUESTION_CHAINS_FORMAT {
        return Err(RulesError::Invalid(format!("unsupported format {:?}", file.format)));
    }
    for id in RuleId::ALL {
        match file.rules.iter().filter(|r| r.id == id).count() {
            1 => {}
            n => return Err(RulesError::Invalid(format!("{id:?} appears {n} times"))),
        }
    }
    if let Some(r) = file.rules.iter().find(|r| r.questions.is_empty()) {
        return Err(RulesError::Invalid(format!("{:?} has no questions", r.id)));
    }
    Ok(file.rules)
}

pub fn load_rules(path: &Path) -> Result<Vec<DocumentationRule>, RulesError> {
    let text = std::fs::read_to_string(path).map_err(|source| RulesError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_rules(&text)
}

pub fn default_rules() -> Vec<DocumentationRule> {
    parse_rules(DEFAULT_QUESTION_CHAINS).expect("bundled question chains are valid")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QuestionChainNode {
    pub question: String,
    /// Rules whose chain ends at this node.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub completes: Vec<RuleId>,
    pub children: Vec<QuestionChainNode>,
}

/// Merges the rules' chains on shared prefixes.
pub fn question_chain(rules: &[DocumentationRule]) -> Vec<QuestionChainNode> {
    fn insert(nodes: &mut Vec<QuestionChainNode>, questions: &[Question], id: RuleId) {
        let Some((first, rest)) = questions.split_first() else {
            return;
        };
        let pos = match nodes.iter().position(|n| n.question == first.text) {
            Some(p) => p,
            None => {
                nodes.push(QuestionChainNode {
                    question: first.text.clone(),
                    completes: Vec::new(),
                    children: Vec::new(),
                });
                nodes.len() - 1
            }
        };
        if rest.is_empty() {
            nodes[pos].completes.push(id);
        } else {
            insert(&mut nodes[pos].children, rest, id);
        }
    }
    let mut roots = Vec::new();
    for rule in rules {
        insert(&mut roots, &rule.questions, rule.id);
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_chains() {
        let rules = default_rules();
        assert_eq!(rules.iter().map(|r| r.id).collect::<Vec<_>>(), RuleId::ALL.to_vec());
        let texts: Vec<&str> = rules[0].questions.iter().map(|q| q.text.as_str()).collect();
        assert_eq!(
            texts,
            [
                "Does the DAO support governance?",
                "Who can become a member of DAO?",
                "Can members participate in governance?"
            ]
        );
        assert!(rules[0].questions.iter().all(|q| q.origin == QuestionOrigin::Paper));
        assert!(rules[1..].iter().all(|r| r.questions.iter().any(|q| q.origin == QuestionOrigin::Reconstructed)));
    }

    #[test]
    fn chain_merges_prefixes() {
        let roots = question_chain(&default_rules());
        assert_eq!(roots.len(), 1);
        assert_eq!(roots[0].question, "Does the DAO support governance?");
        // member question shared by participation and exit, then four single-rule branches
        assert_eq!(roots[0].children.len(), 5);
        let member = &roots[0].children[0];
        assert_eq!(member.children.len(), 2);
        assert_eq!(member.children[0].completes, vec![RuleId::MemberParticipation]);
    }

    #[test]
    fn rejects_missing_rule() {
        let text = r#"{"format":"govaudit-question-chains/1","rules":[]}"#;
        assert!(matches!(parse_rules(text), Err(RulesError::Invalid(_))));
    }
}
