mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use govaudit::proposal::{Lexicon, ProposalAuditor, ProposalClassification, ProposalRecord};

fn auditor() -> ProposalAuditor {
    ProposalAuditor::offline(Arc::new(Lexicon::default()))
}

fn record(rel: &str) -> ProposalRecord {
    ProposalRecord::load(&common::fixture(rel)).unwrap()
}

fn classify(record: &ProposalRecord) -> ProposalClassification {
    let provider = common::world_provider("worlds/incidents.json");
    auditor().audit(record, &provider).unwrap().classification
}

fn name(c: ProposalClassification) -> String {
    serde_json::to_value(c).unwrap().as_str().unwrap().to_string()
}

#[test]
fn incidents_match_the_table() {
    let expected: BTreeMap<String, String> =
        serde_json::from_str(&std::fs::read_to_string(common::fixture("proposals/incidents/expected.json")).unwrap())
            .unwrap();
    assert_eq!(expected.len(), 13);
    let provider = common::world_provider("worlds/incidents.json");
    let mut tally: BTreeMap<String, usize> = BTreeMap::new();
    for (file, want) in &expected {
        let audit = auditor().audit(&record(&format!("proposals/incidents/{file}")), &provider).unwrap();
        let got = name(audit.classification);
        assert_eq!(&got, want, "{file}");
        *tally.entry(got).or_default() += 1;
    }
    assert_eq!(tally["LackOfDescriptionIntention"], 8);
    assert_eq!(tally["IncompleteFunction"], 3);
    assert_eq!(tally["IncompleteParameter"], 1);
    assert_eq!(tally["CodeMutability"], 1);
}

#[test]
fn empty_description_with_code() {
    let mut r = record("proposals/normal.json");
    r.description = String::new();
    assert_eq!(classify(&r), ProposalClassification::LackOfDescriptionIntention);
}

#[test]
fn description_without_code() {
    assert_eq!(classify(&record("proposals/description-only.json")), ProposalClassification::LackOfCodeAction);
}

#[test]
fn negated_intention_matching_code() {
    assert_eq!(classify(&record("proposals/incorrect.json")), ProposalClassification::IncorrectProposal);
}

#[test]
fn decimals_scaling_accepts_human_amounts() {
    // 1,000 USDC is 1_000_000_000 raw units at 6 decimals
    let normal = record("proposals/normal.json");
    assert_eq!(classify(&normal), ProposalClassification::Normal);

    let mut wrong = normal.clone();
    wrong.description = wrong.description.replace("1,000 USDC", "2,500 USDC");
    assert_eq!(classify(&wrong), ProposalClassification::IncompleteParameter);

    // the unscaled on-chain amount is accepted as well
    let mut raw = normal.clone();
    raw.description = raw.description.replace("1,000 USDC", "1000000000 USDC");
    assert_eq!(classify(&raw), ProposalClassification::Normal);
}

#[test]
fn unsupported_platform_is_not_scored() {
    let provider = common::world_provider("worlds/incidents.json");
    let audit = auditor().audit(&record("proposals/unsupported-platform.json"), &provider).unwrap();
    assert!(audit.consistency.is_none());
    assert_eq!(audit.classification, ProposalClassification::Unscored);
}

#[test]
fn audit_is_deterministic() {
    let provider = common::world_provider("worlds/incidents.json");
    let r = record("proposals/incidents/fortress.json");
    let a = serde_json::to_string(&auditor().audit(&r, &provider).unwrap()).unwrap();
    let b = serde_json::to_string(&auditor().audit(&r, &provider).unwrap()).unwrap();
    assert_eq!(a, b);
}
