mod common;

use std::sync::{Arc, Mutex};

use govaudit::docs::{
    chunk_document, chunk_spans, default_rules, evaluate_rule, Chunk, DocAuditor, LlmClient, LlmError, RuleId,
    ScriptRecord, ScriptedLlm, Verdict, WhitespaceTokenizer, DEFAULT_CHUNK_OVERLAP, DEFAULT_CHUNK_SIZE,
};
use proptest::prelude::*;

#[test]
fn thirteen_thousand_tokens() {
    assert_eq!(
        chunk_spans(13_000, DEFAULT_CHUNK_SIZE, DEFAULT_CHUNK_OVERLAP),
        vec![(0, 12_000), (10_000, 13_000)]
    );
    let doc: Vec<String> = (0..13_000).map(|i| format!("w{i}")).collect();
    let chunks = chunk_document(&doc.join(" "), &WhitespaceTokenizer, DEFAULT_CHUNK_SIZE, DEFAULT_CHUNK_OVERLAP);
    assert_eq!(chunks.len(), 2);
    assert!(chunks[0].text.starts_with("w0 ") && chunks[0].text.ends_with(" w11999"));
    assert!(chunks[1].text.starts_with("w10000 ") && chunks[1].text.ends_with(" w12999"));
}

proptest! {
    #[test]
    fn spans_cover_with_fixed_overlap(n in 0usize..60_000, size in 2usize..15_000, overlap_frac in 0.0f64..1.0) {
        let overlap = ((size - 1) as f64 * overlap_frac) as usize;
        let spans = chunk_spans(n, size, overlap);
        if n == 0 {
            prop_assert!(spans.is_empty());
            return Ok(());
        }
        prop_assert_eq!(spans[0].0, 0);
        prop_assert_eq!(spans.last().unwrap().1, n);
        for (i, (s, e)) in spans.iter().enumerate() {
            prop_assert!(s < e && e - s <= size);
            prop_assert_eq!(*s, i * (size - overlap));
            if i + 1 < spans.len() {
                prop_assert_eq!(e - s, size);
                prop_assert_eq!(e - spans[i + 1].0, overlap);
            }
        }
        // the last span is the only one reaching the end
        prop_assert!(spans[..spans.len() - 1].iter().all(|(_, e)| *e < n));
    }

    #[test]
    fn chunk_text_is_the_token_slice(words in proptest::collection::vec("[a-z]{1,6}", 0..80), size in 2usize..20, overlap in 0usize..2) {
        let text = words.join("  ");
        let chunks = chunk_document(&text, &WhitespaceTokenizer, size, overlap);
        for c in &chunks {
            let (s, e) = c.token_span;
            prop_assert_eq!(c.text.split_whitespace().collect::<Vec<_>>(), words[s..e].iter().map(String::as_str).collect::<Vec<_>>());
        }
    }
}

const Q_GOV: &str = "Does the DAO support governance?";
const Q_MEMBER: &str = "Who can become a member of DAO?";
const Q_PARTICIPATE: &str = "Can members participate in governance?";

/// Answers each question from a table and confirms every verification request, logging prompts.
struct TableLlm {
    answers: Vec<(&'static str, &'static str)>,
    verify: &'static str,
    log: Mutex<Vec<String>>,
}

impl LlmClient for TableLlm {
    fn name(&self) -> &str {
        "table"
    }

    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        self.log.lock().unwrap().push(prompt.to_string());
        if prompt.contains("Here is the sentence:") {
            return Ok(self.verify.to_string());
        }
        self.answers
            .iter()
            .find(|(q, _)| prompt.contains(&format!("Here is the question: {q}")))
            .map(|(_, a)| a.to_string())
            .ok_or_else(|| LlmError::Unscripted(prompt.chars().take(60).collect()))
    }
}

fn one_chunk(text: &str) -> Vec<Chunk> {
    chunk_document(text, &WhitespaceTokenizer, DEFAULT_CHUNK_SIZE, DEFAULT_CHUNK_OVERLAP)
}

fn rule1() -> govaudit::docs::DocumentationRule {
    default_rules().into_iter().find(|r| r.id == RuleId::MemberParticipation).unwrap()
}

#[test]
fn rule_one_iff_all_three_verified_yes() {
    let chunks = one_chunk("Holders vote on proposals. Anyone holding tokens is a member.");
    let rule = rule1();
    assert_eq!(
        rule.questions.iter().map(|q| q.text.as_str()).collect::<Vec<_>>(),
        [Q_GOV, Q_MEMBER, Q_PARTICIPATE]
    );
    for mask in 0u8..8 {
        let yes = |bit: u8| mask & (1 << bit) != 0;
        let reply = |bit| if yes(bit) { "Result: Yes. Reason: Holders vote on proposals." } else { "Result: No." };
        let llm = TableLlm {
            answers: vec![(Q_GOV, reply(0)), (Q_MEMBER, reply(1)), (Q_PARTICIPATE, reply(2))],
            verify: "Result: Yes",
            log: Mutex::new(Vec::new()),
        };
        let result = evaluate_rule(&rule, &chunks, &llm);
        assert_eq!(result.satisfied, mask == 7, "mask {mask:03b}");
        assert!(result.incomplete.is_none());

        // gating: questions after the first No are never asked
        let first_no = (0..3).find(|b| !yes(*b)).map_or(3, |b| b as usize + 1);
        assert_eq!(result.transcript.len(), first_no, "mask {mask:03b}");
        let asked: Vec<String> = llm.log.lock().unwrap().iter().filter(|p| p.contains("Here is the question:")).cloned().collect();
        assert_eq!(asked.len(), first_no);
        for (record, q) in result.transcript.iter().zip([Q_GOV, Q_MEMBER, Q_PARTICIPATE]) {
            assert_eq!(record.question, q);
        }
    }
}

#[test]
fn unverified_yes_does_not_count() {
    let chunks = one_chunk("Holders vote on proposals.");
    let yes = "Result: Yes. Reason: Holders vote on proposals.";
    let llm = TableLlm {
        answers: vec![(Q_GOV, yes), (Q_MEMBER, yes), (Q_PARTICIPATE, yes)],
        verify: "Result: No",
        log: Mutex::new(Vec::new()),
    };
    let result = evaluate_rule(&rule1(), &chunks, &llm);
    assert!(!result.satisfied);
    assert_eq!(result.transcript.len(), 1);
    assert_eq!(result.transcript[0].outcome, Some(Verdict::No));

    let empty_reason = TableLlm {
        answers: vec![(Q_GOV, "Result: Yes."), (Q_MEMBER, yes), (Q_PARTICIPATE, yes)],
        verify: "Result: Yes",
        log: Mutex::new(Vec::new()),
    };
    assert!(!evaluate_rule(&rule1(), &chunks, &empty_reason).satisfied);
}

#[test]
fn later_chunk_can_verify() {
    let words: Vec<String> = (0..30).map(|i| format!("w{i}")).collect();
    let chunks = chunk_document(&words.join(" "), &WhitespaceTokenizer, 20, 5);
    assert_eq!(chunks.len(), 2);
    let llm = ScriptedLlm::new(vec![
        ScriptRecord { match_substring: format!("Here is the question: {Q_GOV}"), response: "Result: No.".into(), repeat: false },
        ScriptRecord { match_substring: format!("Here is the question: {Q_GOV}"), response: "Result: Yes. Reason: w25".into(), repeat: false },
        ScriptRecord { match_substring: "Here is the question:".into(), response: "Result: No.".into(), repeat: true },
        ScriptRecord { match_substring: "Here is the sentence:".into(), response: "Result: Yes".into(), repeat: true },
    ]);
    let result = evaluate_rule(&rule1(), &chunks, &llm);
    assert_eq!(result.transcript[0].verified_in_chunk, Some(1));
    assert_eq!(result.transcript[0].exchanges.len(), 2);
    assert!(!result.satisfied);
}

#[test]
fn unscripted_prompt_marks_rule_incomplete() {
    let llm = ScriptedLlm::new(vec![]);
    let result = evaluate_rule(&rule1(), &one_chunk("Some text."), &llm);
    assert!(!result.satisfied);
    assert!(result.incomplete.is_some());
}

fn compound_report() -> String {
    let doc = std::fs::read_to_string(common::fixture("docs/compound-governance.md")).unwrap();
    let llm = ScriptedLlm::load(&common::fixture("docs/compound-governance.script.json")).unwrap();
    let report = DocAuditor::new(Arc::new(llm)).audit_documentation(&doc);
    serde_json::to_string_pretty(&report).unwrap()
}

#[test]
fn identical_script_gives_identical_report() {
    let a = compound_report();
    let b = compound_report();
    assert_eq!(a.as_bytes(), b.as_bytes());
}

#[test]
fn compound_fixture_outcome() {
    let doc = std::fs::read_to_string(common::fixture("docs/compound-governance.md")).unwrap();
    let llm = ScriptedLlm::load(&common::fixture("docs/compound-governance.script.json")).unwrap();
    let report = DocAuditor::new(Arc::new(llm)).audit_documentation(&doc);
    assert!(report.is_complete());
    assert_eq!(
        report.satisfied(),
        vec![RuleId::MemberParticipation, RuleId::VotingPower, RuleId::GovernanceProcessGuide]
    );
}
