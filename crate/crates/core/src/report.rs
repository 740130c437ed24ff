//! The audit report: one self-describing document per invocation, plus a plain-text rendering.

use std::fmt::Write as _;

use serde::Serialize;

use crate::chain::{DataError, Mode};
use crate::docs::{DocAuditReport, Verdict};
use crate::governance::{ChainError, GovernanceAudit};
use crate::proposal::{ProposalAudit, ProposalClassification, ProposalError};
use crate::similarity::SimilarityDecision;

pub const SCHEMA_VERSION: &str = "govaudit-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SubjectKind {
    Governance,
    Proposal,
    Documentation,
    Similarity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Subject {
    pub kind: SubjectKind,
    pub identifier: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Info,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: String,
    pub message: String,
}

impl Diagnostic {
    pub fn new(severity: Severity, code: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            severity,
            code: code.into(),
            message: message.into(),
        }
    }

    pub fn from_data(context: &str, e: &DataError) -> Self {
        let code = match e {
            DataError::ReplayMiss { .. } => "replay-miss",
            DataError::Config(_) => "config",
            _ => "data-unavailable",
        };
        Self::new(Severity::Error, code, format!("{context}: {e}"))
    }

    pub fn from_chain(context: &str, e: &ChainError) -> Self {
        match e {
            ChainError::Data(d) => Self::from_data(context, d),
            other => Self::new(Severity::Error, "chain-structure", format!("{context}: {other}")),
        }
    }

    pub fn from_proposal(e: &ProposalError) -> Self {
        match e {
            ProposalError::Record(r) => Self::new(Severity::Error, "input", r.to_string()),
            ProposalError::Target(c) => Self::from_chain("target check", c),
            ProposalError::Data(d) => Self::from_data("proposal", d),
            ProposalError::Service(s) => Self::new(Severity::Error, "service-unavailable", s.to_string()),
        }
    }
}

/// Whether the inputs came from the network or from a replay cache.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProvenanceMode {
    Live,
    Replay,
}

impl From<Mode> for ProvenanceMode {
    fn from(mode: Mode) -> Self {
        match mode {
            Mode::Live | Mode::Record => ProvenanceMode::Live,
            Mode::Replay => ProvenanceMode::Replay,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SimilarityVerdict {
    pub kernel: String,
    pub ngram: usize,
    pub decision: SimilarityDecision,
    pub opcode_counts: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Verdicts {
    Governance(GovernanceAudit),
    Proposal(ProposalAudit),
    Documentation(DocAuditReport),
    Similarity(SimilarityVerdict),
}

impl Verdicts {
    /// One short line per finding.
    pub fn findings(&self) -> Vec<String> {
        match self {
            Verdicts::Governance(g) => g.findings(),
            Verdicts::Proposal(p) => {
                let mut out: Vec<String> = p
                    .target_checks
                    .iter()
                    .filter(|t| t.is_risky())
                    .map(|t| format!("code mutability: {}", serde_json::to_string(t).unwrap_or_default()))
                    .collect();
                if let Some(c) = &p.consistency {
                    out.extend(c.findings.iter().map(|f| format!("{:?}: {}", f.category, f.explanation)));
                }
                out
            }
            Verdicts::Documentation(d) => d
                .rules
                .iter()
                .filter(|r| !r.satisfied && r.incomplete.is_none())
                .map(|r| format!("{} not documented", r.rule_id.title()))
                .collect(),
            Verdicts::Similarity(_) => Vec::new(),
        }
    }

    /// Diagnostics implied by the verdicts themselves, such as unfinished steps.
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        match self {
            Verdicts::Governance(g) => g
                .failures
                .iter()
                .map(|f| Diagnostic::from_chain(f.step, &f.error))
                .collect(),
            Verdicts::Proposal(p) => p
                .action_diagnostics
                .iter()
                .map(|d| Diagnostic::new(Severity::Warning, "action-lookup", format!("call {}: {}", d.call_index, d.message)))
                .collect(),
            Verdicts::Documentation(d) => {
                let mut out: Vec<Diagnostic> = d
                    .rules
                    .iter()
                    .filter_map(|r| {
                        r.incomplete.as_ref().map(|m| {
                            Diagnostic::new(Severity::Error, "audit-incomplete", format!("{}: {m}", r.rule_id.title()))
                        })
                    })
                    .collect();
                let parse_failures = d
                    .rules
                    .iter()
                    .flat_map(|r| &r.transcript)
                    .flat_map(|q| &q.exchanges)
                    .filter(|e| e.answer.parse_failed)
                    .count();
                if parse_failures > 0 {
                    out.push(Diagnostic::new(
                        Severity::Warning,
                        "llm-unparseable",
                        format!("{parse_failures} answer(s) could not be parsed and were recorded as No"),
                    ));
                }
                out
            }
            Verdicts::Similarity(_) => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AuditReport {
    pub schema_version: &'static str,
    pub subject: Subject,
    /// Absent when the audit could not produce any result.
    pub verdicts: Option<Verdicts>,
    pub findings: Vec<String>,
    pub diagnostics: Vec<Diagnostic>,
    pub provenance_mode: ProvenanceMode,
    /// Fixture the inputs were served from: a world file or an LLM script.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixture: Option<String>,
}

/// Process exit status for a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Clean,
    Findings,
    Incomplete,
    Usage,
    Input,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Clean => 0,
            ExitStatus::Findings => 1,
            ExitStatus::Incomplete => 2,
            ExitStatus::Usage => 64,
            ExitStatus::Input => 65,
        }
    }
}

impl AuditReport {
    /// Findings and verdict-derived diagnostics are filled in from `verdicts`, after
    /// `diagnostics`. Diagnostics are sorted by severity, keeping their order otherwise.
    pub fn new(
        subject: Subject,
        verdicts: Option<Verdicts>,
        mut diagnostics: Vec<Diagnostic>,
        provenance_mode: ProvenanceMode,
    ) -> Self {
        let findings = verdicts.as_ref().map(Verdicts::findings).unwrap_or_default();
        if let Some(v) = &verdicts {
            diagnostics.extend(v.diagnostics());
        }
        diagnostics.sort_by_key(|d| d.severity);
        Self {
            schema_version: SCHEMA_VERSION,
            subject,
            verdicts,
            findings,
            diagnostics,
            provenance_mode,
            fixture: None,
        }
    }

    pub fn is_incomplete(&self) -> bool {
        self.verdicts.is_none() || self.diagnostics.iter().any(|d| d.severity == Severity::Error)
    }

    pub fn exit_status(&self) -> ExitStatus {
        if self.is_incomplete() {
            ExitStatus::Incomplete
        } else if self.findings.is_empty() {
            ExitStatus::Clean
        } else {
            ExitStatus::Findings
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn render_verdicts(out: &mut String, verdicts: &Verdicts) {
    match verdicts {
        Verdicts::Governance(g) => {
            let _ = writeln!(out, "contract      {}", g.address);
            if let Some(s) = &g.soundness {
                let evidence = s.evidence.map(|e| format!("{e:?}")).unwrap_or_else(|| "none".into());
                let _ = writeln!(out, "sound         {} (evidence: {evidence})", yes_no(s.sound));
            }
            if let Some(i) = &g.independence {
                let _ = writeln!(
                    out,
                    "independent   {} (self-governed {}, external {}, unresolved {})",
                    yes_no(i.independent),
                    i.self_governed,
                    i.external,
                    i.unresolved
                );
            }
            if let Some(c) = &g.creation_chain {
                let _ = writeln!(out, "chain         {} step(s), deployed by {}", c.steps.len(), c.terminal_eoa);
            }
            if let Some(m) = &g.mutability {
                let _ = writeln!(out, "mutable       {} ({:?} confidence)", yes_no(m.mutable), m.confidence);
            }
        }
        Verdicts::Proposal(p) => {
            let _ = writeln!(out, "proposal      {}", p.id);
            let _ = writeln!(out, "class         {:?}", p.classification);
            let _ = writeln!(
                out,
                "sentences     {} ({} code-related), intentions {}",
                p.sentences.len(),
                p.sentences.iter().filter(|s| s.code_related).count(),
                p.intentions.len()
            );
            for (i, a) in p.code_actions.iter().enumerate() {
                let name = a
                    .function_name
                    .clone()
                    .or_else(|| a.function_signature.map(|s| s.to_string()))
                    .unwrap_or_else(|| "(value transfer)".into());
                let symbol = a.target_address_symbol.as_deref().unwrap_or("-");
                let _ = writeln!(out, "call {i:<8} {} [{symbol}] {name}", a.target_address);
            }
            if p.classification == ProposalClassification::Unscored {
                let _ = writeln!(out, "note          platform stores no descriptions; consistency not scored");
            }
        }
        Verdicts::Documentation(d) => {
            let _ = writeln!(out, "tokens        {} in {} chunk(s)", d.token_count, d.chunks.len());
            for r in &d.rules {
                let state = match (&r.incomplete, r.satisfied) {
                    (Some(_), _) => "incomplete",
                    (None, true) => "satisfied",
                    (None, false) => "missing",
                };
                let asked = r.transcript.len();
                let last_yes = r.transcript.iter().filter(|q| q.outcome == Some(Verdict::Yes)).count();
                let _ = writeln!(out, "{:<26} {state:<10} ({last_yes}/{asked} asked questions Yes)", r.rule_id.title());
            }
        }
        Verdicts::Similarity(s) => {
            let _ = writeln!(out, "kernel        {} ({}-grams)", s.kernel, s.ngram);
            let _ = writeln!(out, "opcodes       {} / {}", s.opcode_counts[0], s.opcode_counts[1]);
            let _ = writeln!(out, "score         {:.4}", s.decision.score);
            let _ = writeln!(out, "similar       {} (threshold {})", yes_no(s.decision.similar), s.decision.threshold);
        }
    }
}

/// Plain-text rendering; the finding count matches [`AuditReport::findings`].
pub fn render_text(report: &AuditReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} audit of {} ({} data)",
        serde_json::to_value(report.subject.kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
        report.subject.identifier,
        format!("{:?}", report.provenance_mode).to_lowercase()
    );
    if let Some(v) = &report.verdicts {
        render_verdicts(&mut out, v);
    }
    let _ = writeln!(out, "findings: {}", report.findings.len());
    for f in &report.findings {
        let _ = writeln!(out, "  - {f}");
    }
    for d in &report.diagnostics {
        let _ = writeln!(out, "{:?} [{}] {}", d.severity, d.code, d.message);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn similarity(score: f64) -> AuditReport {
        AuditReport::new(
            Subject {
                kind: SubjectKind::Similarity,
                identifier: "a.hex b.hex".into(),
            },
            Some(Verdicts::Similarity(SimilarityVerdict {
                kernel: "jaccard".into(),
                ngram: 5,
                decision: SimilarityDecision::new(score, 0.8),
                opcode_counts: [10, 12],
            })),
            vec![Diagnostic::new(Severity::Info, "note", "x")],
            ProvenanceMode::Live,
        )
    }

    #[test]
    fn exit_statuses() {
        assert_eq!(similarity(0.5).exit_status().code(), 0);
        let mut r = similarity(0.5);
        r.diagnostics.push(Diagnostic::from_data("x", &DataError::ReplayMiss { key: "k".into() }));
        assert_eq!(r.exit_status(), ExitStatus::Incomplete);
        assert_eq!(r.diagnostics[1].code, "replay-miss");
        let empty = AuditReport::new(similarity(1.0).subject, None, vec![], ProvenanceMode::Replay);
        assert_eq!(empty.exit_status(), ExitStatus::Incomplete);
    }

    #[test]
    fn json_shape() {
        let v: serde_json::Value = serde_json::from_str(&similarity(0.9).to_json()).unwrap();
        assert_eq!(v["schemaVersion"], SCHEMA_VERSION);
        assert_eq!(v["subject"]["kind"], "similarity");
        assert_eq!(v["provenanceMode"], "live");
        assert_eq!(v["verdicts"]["decision"]["similar"], true);
        assert_eq!(v["diagnostics"][0]["severity"], "info");
        assert!(render_text(&similarity(0.9)).contains("findings: 0"));
    }
}
