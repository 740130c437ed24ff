//! Asking the question chains against document chunks.

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use super::chunk::{chunk_document, Chunk, DocTokenizer, WhitespaceTokenizer, DEFAULT_CHUNK_OVERLAP, DEFAULT_CHUNK_SIZE};
use super::llm::{LlmClient, LlmError};
use super::rules::{default_rules, DocumentationRule, RuleId};

/// Parse failures before an answer is recorded as No.
pub const MAX_PARSE_ATTEMPTS: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Yes,
    No,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LlmAnswer {
    pub verdict: Verdict,
    pub reason: String,
    /// The last response received.
    pub raw: String,
    /// No response parsed; the verdict defaulted to No.
    pub parse_failed: bool,
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("audit incomplete: {0}")]
pub struct AuditIncomplete(#[from] pub LlmError);

pub fn ask_prompt(question: &str, document: &str) -> String {
    format!(
        "Your task is to answer a question about a DAO using only the document provided. \
         Here is the question: {question} \
         Your answer format should be Result: Yes/No. Reason: [the sentence of the document that supports the answer]. \
         The document is provided below: {document}"
    )
}

pub fn verification_prompt(reason: &str, document: &str) -> String {
    format!(
        "Your task is to check if the sentence content is mentioned in the document. \
         Here is the sentence: {reason}. Your answer format should be Result: Yes/No. \
         The document is provided below: {document}"
    )
}

fn find_ci(haystack: &str, needle: &str) -> Option<usize> {
    haystack.to_ascii_lowercase().find(needle)
}

/// `Result: Yes/No`, optionally followed by `Reason: ...`. Case and surrounding
/// markdown emphasis are tolerated.
pub fn parse_answer(raw: &str) -> Option<(Verdict, String)> {
    let at = find_ci(raw, "result:")?;
    let rest = &raw[at + "result:".len()..];
    let word: String = rest
        .trim_start_matches(|c: char| c.is_whitespace() || c == '*' || c == '"')
        .chars()
        .take_while(|c| c.is_ascii_alphabetic())
        .collect::<String>()
        .to_ascii_lowercase();
    let verdict = match word.as_str() {
        "yes" => Verdict::Yes,
        "no" => Verdict::No,
        _ => return None,
    };
    let reason = find_ci(rest, "reason:")
        .map(|r| rest[r + "reason:".len()..].trim().trim_matches('*').trim().to_string())
        .unwrap_or_default();
    Some((verdict, reason))
}

fn query(prompt: &str, llm: &dyn LlmClient) -> Result<LlmAnswer, AuditIncomplete> {
    let mut raw = String::new();
    for attempt in 1..=MAX_PARSE_ATTEMPTS {
        raw = llm.complete(prompt)?;
        if let Some((verdict, reason)) = parse_answer(&raw) {
            return Ok(LlmAnswer {
                verdict,
                reason,
                raw,
                parse_failed: false,
                attempts: attempt,
            });
        }
    }
    Ok(LlmAnswer {
        verdict: Verdict::No,
        reason: String::new(),
        raw,
        parse_failed: true,
        attempts: MAX_PARSE_ATTEMPTS,
    })
}

pub fn ask(question: &str, chunk: &Chunk, llm: &dyn LlmClient) -> Result<LlmAnswer, AuditIncomplete> {
    query(&ask_prompt(question, &chunk.text), llm)
}

/// Whether the chunk is confirmed to mention `reason`, with the verification answer.
pub fn cross_verify(reason: &str, chunk: &Chunk, llm: &dyn LlmClient) -> Result<(bool, LlmAnswer), AuditIncomplete> {
    let answer = query(&verification_prompt(reason, &chunk.text), llm)?;
    Ok((answer.verdict == Verdict::Yes, answer))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Demotion {
    /// A Yes without a reason cannot be verified.
    EmptyReason,
    VerificationFailed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ChunkExchange {
    pub chunk_index: usize,
    pub answer: LlmAnswer,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<LlmAnswer>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub demotion: Option<Demotion>,
}

impl ChunkExchange {
    pub fn verified_yes(&self) -> bool {
        self.answer.verdict == Verdict::Yes
            && self.demotion.is_none()
            && self.verification.as_ref().is_some_and(|v| v.verdict == Verdict::Yes)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct QuestionRecord {
    pub question: String,
    pub exchanges: Vec<ChunkExchange>,
    /// `None` when the question could not be finished.
    pub outcome: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verified_in_chunk: Option<usize>,
}

/// Asks the chunks in order until one gives a verified Yes. On error the partial
/// record comes back alongside it.
pub fn evaluate_question(
    question: &str,
    chunks: &[Chunk],
    llm: &dyn LlmClient,
) -> (QuestionRecord, Option<AuditIncomplete>) {
    let mut record = QuestionRecord {
        question: question.to_string(),
        exchanges: Vec::new(),
        outcome: None,
        verified_in_chunk: None,
    };
    for chunk in chunks {
        let answer = match ask(question, chunk, llm) {
            Ok(a) => a,
            Err(e) => return (record, Some(e)),
        };
        let mut exchange = ChunkExchange {
            chunk_index: chunk.index,
            answer,
            verification: None,
            demotion: None,
        };
        if exchange.answer.verdict == Verdict::Yes {
            if exchange.answer.reason.is_empty() {
                exchange.demotion = Some(Demotion::EmptyReason);
            } else {
                match cross_verify(&exchange.answer.reason, chunk, llm) {
                    Ok((ok, verification)) => {
                        exchange.verification = Some(verification);
                        if !ok {
                            exchange.demotion = Some(Demotion::VerificationFailed);
                        }
                    }
                    Err(e) => {
                        record.exchanges.push(exchange);
                        return (record, Some(e));
                    }
                }
            }
        }
        let verified = exchange.verified_yes();
        record.exchanges.push(exchange);
        if verified {
            record.outcome = Some(Verdict::Yes);
            record.verified_in_chunk = Some(chunk.index);
            return (record, None);
        }
    }
    record.outcome = Some(Verdict::No);
    (record, None)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DocRuleResult {
    pub rule_id: RuleId,
    pub satisfied: bool,
    /// Set when the chain could not be finished; `satisfied` is then false.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub incomplete: Option<String>,
    /// One record per question asked, in chain order.
    pub transcript: Vec<QuestionRecord>,
}

type Memo = HashMap<String, (QuestionRecord, Option<AuditIncomplete>)>;

fn evaluate_with_memo(rule: &DocumentationRule, chunks: &[Chunk], llm: &dyn LlmClient, memo: &mut Memo) -> DocRuleResult {
    let mut transcript = Vec::new();
    for question in &rule.questions {
        let (record, error) = memo
            .entry(question.text.clone())
            .or_insert_with(|| evaluate_question(&question.text, chunks, llm))
            .clone();
        let outcome = record.outcome;
        transcript.push(record);
        if let Some(e) = error {
            return DocRuleResult {
                rule_id: rule.id,
                satisfied: false,
                incomplete: Some(e.to_string()),
                transcript,
            };
        }
        if outcome != Some(Verdict::Yes) {
            return DocRuleResult {
                rule_id: rule.id,
                satisfied: false,
                incomplete: None,
                transcript,
            };
        }
    }
    DocRuleResult {
        rule_id: rule.id,
        satisfied: true,
        incomplete: None,
        transcript,
    }
}

/// Satisfied iff every question on the rule's chain gets a verified Yes in some chunk.
pub fn evaluate_rule(rule: &DocumentationRule, chunks: &[Chunk], llm: &dyn LlmClient) -> DocRuleResult {
    evaluate_with_memo(rule, chunks, llm, &mut Memo::new())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DocAuditReport {
    pub token_count: usize,
    pub chunks: Vec<Chunk>,
    pub rules: Vec<DocRuleResult>,
}

impl DocAuditReport {
    pub fn is_complete(&self) -> bool {
        self.rules.iter().all(|r| r.incomplete.is_none())
    }

    pub fn satisfied(&self) -> Vec<RuleId> {
        self.rules.iter().filter(|r| r.satisfied).map(|r| r.rule_id).collect()
    }
}

#[derive(Clone)]
pub struct DocAuditor {
    pub llm: Arc<dyn LlmClient>,
    pub tokenizer: Arc<dyn DocTokenizer>,
    pub rules: Vec<DocumentationRule>,
    pub chunk_size: usize,
    pub chunk_overlap: usize,
}

impl DocAuditor {
    /// Bundled question chains, whitespace tokens, 12,000-token chunks overlapping by 2,000.
    pub fn new(llm: Arc<dyn LlmClient>) -> Self {
        Self {
            llm,
            tokenizer: Arc::new(WhitespaceTokenizer),
            rules: default_rules(),
            chunk_size: DEFAULT_CHUNK_SIZE,
            chunk_overlap: DEFAULT_CHUNK_OVERLAP,
        }
    }

    /// All rules in order. A question shared by several chains is asked once per document.
    pub fn audit_documentation(&self, document: &str) -> DocAuditReport {
        let token_count = self.tokenizer.tokens(document).len();
        let chunks = chunk_document(document, self.tokenizer.as_ref(), self.chunk_size, self.chunk_overlap);
        let mut memo = Memo::new();
        let rules = self
            .rules
            .iter()
            .map(|rule| evaluate_with_memo(rule, &chunks, self.llm.as_ref(), &mut memo))
            .collect();
        DocAuditReport {
            token_count,
            chunks,
            rules,
        }
    }
}
