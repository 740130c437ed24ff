//! Proposal audit: code actions, description intentions and their consistency.

mod actions;
mod detect;
mod lexicon;
mod matching;
mod nlp;
mod record;
mod text;

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

pub use actions::{
    check_target_immutability, extract_code_actions, target_symbol, ActionDiagnostic, CodeAction, NameSource,
    SkipReason, TargetImmutabilityResult,
};
pub use detect::{
    classify, detect_inconsistencies, ActionConsistency, ConsistencyReport, InconsistencyCategory,
    InconsistencyFinding, MatchError, Matchers, ProposalClassification,
};
pub use lexicon::{split_identifier, Lexicon, LexiconError};
pub use matching::{
    code_words, cosine, match_function, match_parameter, EmbeddingSimilarity, FunctionMatch, FunctionStatus,
    LexicalSimilarity, ParameterMatch, ParameterStatus, TextSimilarity, DEFAULT_TEXT_THRESHOLD, VALUE_TRANSFER_WORDS,
};
pub use nlp::{
    extract_intentions, tag, DescriptionIntention, Dep, ExternalClassifier, HeuristicClassifier, Parse, ParseProvider,
    ParsedToken, PatternParser, Pos, SentenceClassifier,
};
pub use record::{ProposalCall, ProposalRecord, RecordError, ResolvedCall};
pub use text::{
    number_values, parse_number, split_sentences, split_stripped, strip_markdown, tokenize, Decimal, Sentence, Token,
    TokenKind,
};

use crate::chain::{ChainData, DataError};
use crate::governance::ChainError;
use crate::primitives::Address;
use crate::service::ServiceError;

#[derive(Debug, Error)]
pub enum ProposalError {
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error("target check: {0}")]
    Target(#[from] ChainError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Service(#[from] ServiceError),
}

impl From<MatchError> for ProposalError {
    fn from(e: MatchError) -> Self {
        match e {
            MatchError::Service(e) => ProposalError::Service(e),
            MatchError::Data(e) => ProposalError::Data(e),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SentenceAnalysis {
    pub text: String,
    pub code_related: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ProposalAudit {
    pub id: String,
    pub sentences: Vec<SentenceAnalysis>,
    pub intentions: Vec<DescriptionIntention>,
    pub code_actions: Vec<CodeAction>,
    pub action_diagnostics: Vec<ActionDiagnostic>,
    pub target_checks: Vec<TargetImmutabilityResult>,
    /// Absent when the proposal's platform does not support descriptions.
    pub consistency: Option<ConsistencyReport>,
    pub classification: ProposalClassification,
}

/// The full pipeline with its pluggable parts.
#[derive(Clone)]
pub struct ProposalAuditor {
    pub lexicon: Arc<Lexicon>,
    pub classifier: Arc<dyn SentenceClassifier>,
    pub parser: Arc<dyn ParseProvider>,
    pub similarity: Arc<dyn TextSimilarity>,
    pub threshold: f64,
}

impl ProposalAuditor {
    /// Heuristic classifier, pattern parser and lexical similarity at the default threshold.
    pub fn offline(lexicon: Arc<Lexicon>) -> Self {
        Self {
            classifier: Arc::new(HeuristicClassifier::new(lexicon.clone())),
            parser: Arc::new(PatternParser::new(lexicon.clone())),
            similarity: Arc::new(LexicalSimilarity::new(lexicon.clone())),
            lexicon,
            threshold: DEFAULT_TEXT_THRESHOLD,
        }
    }

    /// Code-related sentences and the intentions extracted from them.
    pub fn intentions(
        &self,
        description: &str,
        symbols: &BTreeSet<String>,
    ) -> Result<(Vec<SentenceAnalysis>, Vec<DescriptionIntention>), ServiceError> {
        let mut sentences = Vec::new();
        let mut intentions = Vec::new();
        for sentence in split_sentences(description) {
            let code_related = self.classifier.is_code_related(&sentence.text, symbols)?;
            if code_related {
                intentions.extend(extract_intentions(&sentence.text, self.parser.as_ref(), &self.lexicon)?);
            }
            sentences.push(SentenceAnalysis {
                text: sentence.text,
                code_related,
            });
        }
        Ok((sentences, intentions))
    }

    pub fn audit(&self, record: &ProposalRecord, provider: &dyn ChainData) -> Result<ProposalAudit, ProposalError> {
        let calls = record.resolved_calls()?;
        let (code_actions, action_diagnostics) = extract_code_actions(&calls, provider);

        let mut targets: Vec<Address> = Vec::new();
        for call in &calls {
            if !targets.contains(&call.target) {
                targets.push(call.target);
            }
        }
        let target_checks = targets
            .iter()
            .map(|t| check_target_immutability(*t, record.governance, provider))
            .collect::<Result<Vec<_>, _>>()?;

        let symbols: BTreeSet<String> = code_actions
            .iter()
            .filter_map(|a| a.target_address_symbol.as_deref())
            .flat_map(|s| s.split(|c: char| !c.is_alphanumeric()).map(str::to_uppercase).collect::<Vec<_>>())
            .filter(|s| !s.is_empty())
            .collect();
        let (sentences, intentions) = self.intentions(&record.description, &symbols)?;

        let consistency = if record.description_supported {
            let matchers = Matchers {
                similarity: self.similarity.as_ref(),
                threshold: self.threshold,
                provider,
            };
            Some(detect_inconsistencies(&intentions, &code_actions, &matchers)?)
        } else {
            None
        };
        let classification = classify(&target_checks, consistency.as_ref());
        Ok(ProposalAudit {
            id: record.id.clone(),
            sentences,
            intentions,
            code_actions,
            action_diagnostics,
            target_checks,
            consistency,
            classification,
        })
    }
}
