//! Documentation audit: question chains per rule, asked of an LLM over overlapping chunks.

mod audit;
mod chunk;
mod llm;
mod rules;

pub use audit::{
    ask, ask_prompt, cross_verify, evaluate_question, evaluate_rule, parse_answer, verification_prompt, AuditIncomplete,
    ChunkExchange, Demotion, DocAuditReport, DocAuditor, DocRuleResult, LlmAnswer, QuestionRecord, Verdict,
    MAX_PARSE_ATTEMPTS,
};
pub use chunk::{chunk_document, chunk_spans, Chunk, DocTokenizer, WhitespaceTokenizer, DEFAULT_CHUNK_OVERLAP, DEFAULT_CHUNK_SIZE};
pub use llm::{HttpLlm, LlmClient, LlmError, ScriptRecord, ScriptedLlm, SCRIPT_FORMAT};
pub use rules::{
    default_rules, load_rules, parse_rules, question_chain, DocumentationRule, Question, QuestionChainNode, QuestionOrigin,
    RuleId, RulesError, DEFAULT_QUESTION_CHAINS, QUESTION_CHAINS_FORMAT,
};
