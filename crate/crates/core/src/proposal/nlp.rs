//! Part-of-speech tagging, a pattern-based dependency parse, code-related sentence
//! classification and intention extraction.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::Serialize;
use serde_json::json;

use super::lexicon::Lexicon;
use super::text::{tokenize, Token, TokenKind};
use crate::service::{ServiceEndpoint, ServiceError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Pos {
    Noun,
    Propn,
    Num,
    X,
    Det,
    Adj,
    Verb,
    Adp,
    Pron,
    Cconj,
    Part,
    Aux,
    Adv,
    Punct,
}

impl Pos {
    fn nominal(self) -> bool {
        matches!(self, Pos::Noun | Pos::Propn | Pos::X | Pos::Num)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Dep {
    Root,
    Dobj,
    Compound,
    Neg,
    Dep,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParsedToken {
    pub text: String,
    pub lemma: String,
    pub pos: Pos,
    pub dep: Dep,
    /// Index of the head token; `None` for the root and for unattached tokens.
    pub head: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Parse {
    pub tokens: Vec<ParsedToken>,
}

impl Parse {
    pub fn root(&self) -> Option<usize> {
        self.tokens.iter().position(|t| t.dep == Dep::Root)
    }

    pub fn dependents(&self, head: usize, dep: Dep) -> impl Iterator<Item = usize> + '_ {
        self.tokens
            .iter()
            .enumerate()
            .filter(move |(_, t)| t.dep == dep && t.head == Some(head))
            .map(|(i, _)| i)
    }
}

/// Produces a dependency-style parse of one sentence.
pub trait ParseProvider: Send + Sync {
    fn name(&self) -> &str;
    fn parse(&self, sentence: &str) -> Result<Parse, ServiceError>;
}

const DETERMINERS: &[&str] = &[
    "the", "a", "an", "this", "that", "these", "those", "each", "every", "all", "some", "any", "our", "its", "their",
    "his", "her", "my", "your", "both", "either", "neither", "another", "such",
];
const PRONOUNS: &[&str] = &[
    "i", "we", "you", "he", "she", "it", "they", "me", "us", "him", "them", "which", "who", "whom", "what", "itself",
    "themselves", "ourselves",
];
const CONJUNCTIONS: &[&str] = &["and", "or", "but", "nor", "&", "plus"];
const ADPOSITIONS: &[&str] = &[
    "to", "from", "of", "in", "on", "at", "for", "with", "by", "into", "onto", "via", "per", "over", "under", "about",
    "between", "through", "after", "before", "as", "towards", "toward", "within", "without", "against", "during",
    "than", "upon", "across",
];
const AUXILIARIES: &[&str] = &[
    "is", "are", "was", "were", "be", "been", "being", "will", "would", "shall", "should", "can", "ca", "could", "may",
    "might", "must", "do", "does", "did", "has", "have", "had", "wo",
];
const ADVERBS: &[&str] = &[
    "also", "then", "now", "only", "currently", "just", "very", "already", "immediately", "further", "again", "still",
    "here", "there", "instead", "approximately", "roughly", "about", "back", "up", "out", "down", "off",
];
const NEGATIONS: &[&str] = &["not", "n't", "never", "no", "cannot"];
const NUMBER_WORDS: &[&str] = &[
    "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven", "twelve", "twenty",
    "thirty", "forty", "fifty", "hundred", "thousand", "million", "billion",
];
const ADJECTIVES: &[&str] = &[
    "new", "old", "current", "additional", "initial", "total", "remaining", "first", "second", "third", "final",
    "monthly", "annual", "weekly", "minimum", "maximum", "same", "other", "previous", "next", "full", "partial",
    "existing", "several", "many", "few", "more", "less", "most", "least",
];
/// Common verbs outside the verb list; they are tagged as verbs but never accepted as an action.
const OTHER_VERBS: &[&str] = &[
    "propose", "proposes", "proposed", "believe", "believes", "think", "aim", "aims", "want", "wants", "need", "needs",
    "seek", "seeks", "intend", "intends", "plan", "plans", "request", "requests", "ask", "make", "makes", "help",
    "helps", "ensure", "ensures", "benefit", "benefits", "fix", "fixes", "thank", "hope",
];

fn is_all_caps(word: &str) -> bool {
    word.chars().count() >= 2
        && word.chars().all(|c| c.is_alphabetic() || c.is_ascii_digit())
        && word.chars().any(char::is_alphabetic)
        && word.chars().filter(|c| c.is_alphabetic()).all(char::is_uppercase)
}

fn adjective_shape(lower: &str) -> bool {
    ["ous", "ful", "ive", "able", "ible", "less"].iter().any(|s| lower.len() > s.len() + 2 && lower.ends_with(s))
}

/// Rule-based tagger over tokens. Verb-list words in a noun position are nouns.
pub fn tag(tokens: &[Token], lexicon: &Lexicon) -> Vec<Pos> {
    let mut tags: Vec<Pos> = Vec::with_capacity(tokens.len());
    for (k, token) in tokens.iter().enumerate() {
        let lower = token.text.to_lowercase();
        let prev = k.checked_sub(1).map(|j| tags[j]);
        let prev_lower = k.checked_sub(1).map(|j| tokens[j].text.to_lowercase());
        let pos = match token.kind {
            TokenKind::Punct => Pos::Punct,
            TokenKind::Number => Pos::Num,
            TokenKind::Hex | TokenKind::Call | TokenKind::Ident => Pos::X,
            TokenKind::Word => {
                let next_is_verb = tokens
                    .get(k + 1)
                    .is_some_and(|t| t.kind == TokenKind::Word && lexicon.is_action_verb(&t.text));
                if NEGATIONS.contains(&lower.as_str()) {
                    if lower == "no" {
                        Pos::Det
                    } else {
                        Pos::Part
                    }
                } else if lower == "to" && next_is_verb {
                    Pos::Part
                } else if NUMBER_WORDS.contains(&lower.as_str()) {
                    Pos::Num
                } else if DETERMINERS.contains(&lower.as_str()) {
                    Pos::Det
                } else if PRONOUNS.contains(&lower.as_str()) {
                    Pos::Pron
                } else if CONJUNCTIONS.contains(&lower.as_str()) {
                    Pos::Cconj
                } else if ADPOSITIONS.contains(&lower.as_str()) {
                    Pos::Adp
                } else if AUXILIARIES.contains(&lower.as_str()) {
                    Pos::Aux
                } else if ADVERBS.contains(&lower.as_str()) {
                    Pos::Adv
                } else if is_all_caps(&token.text) {
                    Pos::Propn
                } else if lexicon.is_action_verb(&token.text) {
                    let noun_position =
                        matches!(prev, Some(Pos::Det | Pos::Adj | Pos::Num)) || prev_lower.as_deref() == Some("of");
                    if noun_position {
                        Pos::Noun
                    } else {
                        Pos::Verb
                    }
                } else if OTHER_VERBS.contains(&lower.as_str()) {
                    Pos::Verb
                } else if k > 0 && token.text.starts_with(char::is_uppercase) {
                    Pos::Propn
                } else if ADJECTIVES.contains(&lower.as_str()) || adjective_shape(&lower) {
                    Pos::Adj
                } else if lower.ends_with("ly") && lower.len() > 4 {
                    Pos::Adv
                } else {
                    Pos::Noun
                }
            }
        };
        tags.push(pos);
    }
    tags
}

/// Deterministic parser: the first verb-list verb is the root, the head of the first noun
/// phrase after it is the direct object, nouns directly before a phrase head are
/// compounds of it, and negation words before the root attach to it.
#[derive(Debug, Clone)]
pub struct PatternParser {
    lexicon: Arc<Lexicon>,
}

impl PatternParser {
    pub fn new(lexicon: Arc<Lexicon>) -> Self {
        Self { lexicon }
    }
}

/// Maximal runs of noun-phrase tokens, with the index of each run's head.
fn noun_phrases(tags: &[Pos]) -> Vec<(usize, usize, usize)> {
    let in_np = |p: Pos| matches!(p, Pos::Det | Pos::Adj | Pos::Num | Pos::Noun | Pos::Propn | Pos::X);
    let mut out = Vec::new();
    let mut k = 0;
    while k < tags.len() {
        if !in_np(tags[k]) {
            k += 1;
            continue;
        }
        let start = k;
        while k < tags.len() && in_np(tags[k]) {
            k += 1;
        }
        if let Some(head) = (start..k).rev().find(|&j| tags[j].nominal()) {
            out.push((start, k, head));
        }
    }
    out
}

impl ParseProvider for PatternParser {
    fn name(&self) -> &str {
        "pattern"
    }

    fn parse(&self, sentence: &str) -> Result<Parse, ServiceError> {
        let tokens = tokenize(sentence);
        let tags = tag(&tokens, &self.lexicon);
        let mut parsed: Vec<ParsedToken> = tokens
            .iter()
            .zip(&tags)
            .map(|(t, &pos)| ParsedToken {
                text: t.text.clone(),
                lemma: match t.kind {
                    TokenKind::Word => self.lexicon.lemma(&t.text),
                    _ => t.text.clone(),
                },
                pos,
                dep: Dep::Dep,
                head: None,
            })
            .collect();
        let root = (0..parsed.len())
            .find(|&k| tags[k] == Pos::Verb && self.lexicon.is_action_verb(&parsed[k].text))
            .or_else(|| tags.iter().position(|&p| p == Pos::Verb));
        for (start, end, head) in noun_phrases(&tags) {
            let mut k = head;
            while k > start && matches!(tags[k - 1], Pos::Noun | Pos::Propn | Pos::X) {
                k -= 1;
                parsed[k].dep = Dep::Compound;
                parsed[k].head = Some(head);
            }
            for j in start..end {
                if j != head && parsed[j].head.is_none() {
                    parsed[j].head = Some(head);
                }
            }
        }
        if let Some(root) = root {
            parsed[root].dep = Dep::Root;
            if let Some((_, _, head)) = noun_phrases(&tags).into_iter().find(|(start, _, _)| *start > root) {
                parsed[head].dep = Dep::Dobj;
                parsed[head].head = Some(root);
            }
            for k in 0..root {
                if NEGATIONS.contains(&parsed[k].text.to_lowercase().as_str()) {
                    parsed[k].dep = Dep::Neg;
                    parsed[k].head = Some(root);
                }
            }
            for token in parsed.iter_mut() {
                if token.head.is_none() && token.dep == Dep::Dep {
                    token.head = Some(root);
                }
            }
        }
        Ok(Parse { tokens: parsed })
    }
}

/// Decides whether a sentence describes a call in the proposal code.
pub trait SentenceClassifier: Send + Sync {
    fn name(&self) -> &str;
    /// `symbols` are extra known symbols, such as the proposal's own target symbols.
    fn is_code_related(&self, sentence: &str, symbols: &BTreeSet<String>) -> Result<bool, ServiceError>;
}

/// A verb-list verb (or synonym) together with an address, a number, a call-like
/// identifier or a known token symbol.
#[derive(Debug, Clone)]
pub struct HeuristicClassifier {
    lexicon: Arc<Lexicon>,
}

impl HeuristicClassifier {
    pub fn new(lexicon: Arc<Lexicon>) -> Self {
        Self { lexicon }
    }
}

impl SentenceClassifier for HeuristicClassifier {
    fn name(&self) -> &str {
        "heuristic"
    }

    fn is_code_related(&self, sentence: &str, symbols: &BTreeSet<String>) -> Result<bool, ServiceError> {
        let tokens = tokenize(sentence);
        let has_verb = tokens
            .iter()
            .any(|t| t.kind == TokenKind::Word && self.lexicon.is_action_verb(&t.text));
        let has_anchor = tokens.iter().any(|t| match t.kind {
            TokenKind::Hex | TokenKind::Number | TokenKind::Call => true,
            TokenKind::Word | TokenKind::Ident => {
                let lemma = self.lexicon.lemma(&t.text).to_uppercase();
                let upper = t.text.to_uppercase();
                [upper, lemma]
                    .iter()
                    .any(|w| self.lexicon.is_known_symbol(w) || symbols.contains(w))
            }
            TokenKind::Punct => false,
        });
        Ok(has_verb && has_anchor)
    }
}

/// Scores sentences with an external model: POST `{"sentence"}` and read back
/// `{"codeRelated": bool}` or `{"score": number}` (code-related at 0.5 and above).
#[derive(Debug, Clone)]
pub struct ExternalClassifier {
    endpoint: ServiceEndpoint,
}

impl ExternalClassifier {
    pub fn new(endpoint: ServiceEndpoint) -> Self {
        Self { endpoint }
    }

    pub fn from_env() -> Result<Self, ServiceError> {
        Ok(Self::new(ServiceEndpoint::from_env("GOVAUDIT_CLASSIFIER")?))
    }
}

impl SentenceClassifier for ExternalClassifier {
    fn name(&self) -> &str {
        "external"
    }

    fn is_code_related(&self, sentence: &str, _symbols: &BTreeSet<String>) -> Result<bool, ServiceError> {
        let response = self.endpoint.post(&json!({ "sentence": sentence }))?;
        if let Some(flag) = response.get("codeRelated").and_then(|v| v.as_bool()) {
            return Ok(flag);
        }
        response
            .get("score")
            .and_then(|v| v.as_f64())
            .map(|s| s >= 0.5)
            .ok_or_else(|| ServiceError::Malformed("expected codeRelated or score".into()))
    }
}

/// `(action, target object, parameters)` from one code-related sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DescriptionIntention {
    pub action: Vec<String>,
    pub target_object: Vec<String>,
    pub parameters: Vec<String>,
    pub negative: bool,
    pub source_sentence: String,
}

impl DescriptionIntention {
    /// Every word of the tuple.
    pub fn words(&self) -> impl Iterator<Item = &String> {
        self.action.iter().chain(&self.target_object).chain(&self.parameters)
    }
}

/// At most one intention: none when the root's lemma is not an action verb.
pub fn extract_intentions(
    sentence: &str,
    parser: &dyn ParseProvider,
    lexicon: &Lexicon,
) -> Result<Vec<DescriptionIntention>, ServiceError> {
    let parse = parser.parse(sentence)?;
    let Some(root) = parse.root() else {
        return Ok(Vec::new());
    };
    let root_token = &parse.tokens[root];
    if !lexicon.is_action_verb(&root_token.lemma) && !lexicon.is_action_verb(&root_token.text) {
        return Ok(Vec::new());
    }
    let mut action_idx = vec![root];
    action_idx.extend(parse.dependents(root, Dep::Dobj));
    let target_idx: Vec<usize> = action_idx
        .iter()
        .flat_map(|&a| parse.dependents(a, Dep::Compound).collect::<Vec<_>>())
        .collect();
    let negative = parse.dependents(root, Dep::Neg).next().is_some();
    let used: BTreeSet<usize> = action_idx.iter().chain(&target_idx).copied().collect();
    let parameters = parse
        .tokens
        .iter()
        .enumerate()
        .filter(|(k, t)| !used.contains(k) && t.pos.nominal())
        .map(|(_, t)| t.text.clone())
        .collect();
    let mut sorted_target = target_idx.clone();
    sorted_target.sort_unstable();
    Ok(vec![DescriptionIntention {
        action: action_idx.iter().map(|&k| parse.tokens[k].text.to_lowercase()).collect(),
        target_object: sorted_target.iter().map(|&k| parse.tokens[k].text.clone()).collect(),
        parameters,
        negative,
        source_sentence: sentence.to_string(),
    }])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (Arc<Lexicon>, PatternParser) {
        let lx = Arc::new(Lexicon::default());
        (lx.clone(), PatternParser::new(lx))
    }

    #[test]
    fn transfer_sentence_tuple() {
        let (lx, parser) = setup();
        let got = extract_intentions("Transfer 500 ARENA tokens to the grants multisig.", &parser, &lx).unwrap();
        assert_eq!(got.len(), 1);
        let di = &got[0];
        assert_eq!(di.action, vec!["transfer", "tokens"]);
        assert_eq!(di.target_object, vec!["ARENA"]);
        for p in ["500", "grants", "multisig"] {
            assert!(di.parameters.contains(&p.to_string()), "{p} missing from {:?}", di.parameters);
        }
        assert!(!di.negative);
    }

    #[test]
    fn negation_attaches_to_root() {
        let (lx, parser) = setup();
        let got = extract_intentions("Do not upgrade the Timelock.", &parser, &lx).unwrap();
        assert_eq!(got[0].action, vec!["upgrade", "timelock"]);
        assert!(got[0].negative);
        let got = extract_intentions("We won't transfer the funds.", &parser, &lx).unwrap();
        assert!(got[0].negative);
    }

    #[test]
    fn no_action_verb_no_intention() {
        let (lx, parser) = setup();
        assert!(extract_intentions("We believe the community will benefit.", &parser, &lx).unwrap().is_empty());
        assert!(extract_intentions("", &parser, &lx).unwrap().is_empty());
    }

    #[test]
    fn verb_after_determiner_is_a_noun() {
        let lx = Lexicon::default();
        let tags = tag(&tokenize("the transfer of funds"), &lx);
        assert_eq!(tags, vec![Pos::Det, Pos::Noun, Pos::Adp, Pos::Noun]);
    }

    #[test]
    fn heuristic_classifier() {
        let lx = Arc::new(Lexicon::default());
        let c = HeuristicClassifier::new(lx);
        let none = BTreeSet::new();
        assert!(c.is_code_related("This proposal transfers 1,000 USDC to 0xabc…", &none).unwrap());
        assert!(!c.is_code_related("We believe the community will benefit.", &none).unwrap());
        assert!(c.is_code_related("Call setVotingPeriod(100) on the Governor.", &none).unwrap());
        assert!(!c.is_code_related("Transfer the tokens.", &none).unwrap());
        let extra = BTreeSet::from(["GRANTS".to_string()]);
        assert!(c.is_code_related("Fund the grants program.", &extra).unwrap());
    }
}
