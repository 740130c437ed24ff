//! Whether a code action's function and parameters are mentioned by the description
//! intentions.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};

use super::actions::CodeAction;
use super::lexicon::{split_identifier, Lexicon};
use super::nlp::DescriptionIntention;
use super::text::{number_values, tokenize, Decimal, TokenKind};
use crate::abi::{AbiValue, TypedParam};
use crate::chain::{ChainData, DataError};
use crate::primitives::{encode_hex, Address};
use crate::service::{ServiceEndpoint, ServiceError};

pub const DEFAULT_TEXT_THRESHOLD: f64 = 0.75;

/// Words standing for a plain value transfer with no calldata.
pub const VALUE_TRANSFER_WORDS: &[&str] = &["transfer", "ether"];

const STOP_WORDS: &[&str] = &["a", "an", "the", "to", "of", "for", "by", "and", "or", "on", "in", "with", "from", "is"];

/// Function-name and target-symbol words of a code action, identifier-split.
pub fn code_words(action: &CodeAction) -> Vec<String> {
    let mut words = Vec::new();
    match action.function_identifier() {
        Some(name) => words.extend(split_identifier(name)),
        None if action.function_signature.is_none() => {
            words.extend(VALUE_TRANSFER_WORDS.iter().map(|w| w.to_string()))
        }
        None => {}
    }
    if let Some(symbol) = &action.target_address_symbol {
        words.extend(split_identifier(symbol));
    }
    words
}

/// Scores how well a description intention covers a code action's words.
pub trait TextSimilarity: Send + Sync {
    fn name(&self) -> &str;
    fn score(&self, code_words: &[String], intention: &DescriptionIntention) -> Result<f64, ServiceError>;
}

/// Share of the code words (lemmatized, synonyms folded, stop words dropped) that occur
/// anywhere in the intention tuple. No code words scores 0.
#[derive(Debug, Clone)]
pub struct LexicalSimilarity {
    lexicon: Arc<Lexicon>,
}

impl LexicalSimilarity {
    pub fn new(lexicon: Arc<Lexicon>) -> Self {
        Self { lexicon }
    }

    fn normalized(&self, words: impl IntoIterator<Item = String>) -> BTreeSet<String> {
        words
            .into_iter()
            .flat_map(|w| split_identifier(&w))
            .filter(|w| !STOP_WORDS.contains(&w.as_str()))
            .map(|w| self.lexicon.normalize(&w))
            .collect()
    }
}

impl TextSimilarity for LexicalSimilarity {
    fn name(&self) -> &str {
        "lexical"
    }

    fn score(&self, code_words: &[String], intention: &DescriptionIntention) -> Result<f64, ServiceError> {
        let code = self.normalized(code_words.iter().cloned());
        if code.is_empty() {
            return Ok(0.0);
        }
        let described = self.normalized(intention.words().cloned());
        Ok(code.intersection(&described).count() as f64 / code.len() as f64)
    }
}

/// Cosine similarity of sentence embeddings from an external service: POST
/// `{"input": [code text, intention text]}`, read `{"embeddings": [[..], [..]]}`.
#[derive(Debug, Clone)]
pub struct EmbeddingSimilarity {
    endpoint: ServiceEndpoint,
}

impl EmbeddingSimilarity {
    pub fn new(endpoint: ServiceEndpoint) -> Self {
        Self { endpoint }
    }

    pub fn from_env() -> Result<Self, ServiceError> {
        Ok(Self::new(ServiceEndpoint::from_env("GOVAUDIT_EMBED")?))
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.is_empty() {
        return None;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (na > 0.0 && nb > 0.0).then(|| dot / (na * nb))
}

impl TextSimilarity for EmbeddingSimilarity {
    fn name(&self) -> &str {
        "embedding"
    }

    fn score(&self, code_words: &[String], intention: &DescriptionIntention) -> Result<f64, ServiceError> {
        let code_text = code_words.join(" ");
        let intention_text: Vec<&str> = intention
            .action
            .iter()
            .chain(&intention.target_object)
            .map(String::as_str)
            .collect();
        let response = self
            .endpoint
            .post(&json!({ "input": [code_text, intention_text.join(" ")] }))?;
        let vectors: Vec<Vec<f64>> = response
            .get("embeddings")
            .and_then(Value::as_array)
            .map(|rows| {
                rows.iter()
                    .map(|r| r.as_array().map(|v| v.iter().filter_map(Value::as_f64).collect()).unwrap_or_default())
                    .collect()
            })
            .unwrap_or_default();
        match vectors.as_slice() {
            [a, b] => cosine(a, b).ok_or_else(|| ServiceError::Malformed("degenerate embeddings".into())),
            _ => Err(ServiceError::Malformed("expected two embeddings".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum FunctionStatus {
    Mentioned,
    IncompleteFunction,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FunctionMatch {
    pub status: FunctionStatus,
    pub code_words: Vec<String>,
    pub best_score: f64,
    pub best_intention: Option<usize>,
    /// Negative intentions that mention the function.
    pub negative_mentions: Vec<usize>,
}

/// Mentioned iff some intention, of either polarity, scores at least `threshold`.
pub fn match_function(
    action: &CodeAction,
    intentions: &[DescriptionIntention],
    similarity: &dyn TextSimilarity,
    threshold: f64,
) -> Result<FunctionMatch, ServiceError> {
    let words = code_words(action);
    let mut best: Option<(usize, f64)> = None;
    let mut negative_mentions = Vec::new();
    for (i, intention) in intentions.iter().enumerate() {
        let score = similarity.score(&words, intention)?;
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((i, score));
        }
        if intention.negative && score >= threshold {
            negative_mentions.push(i);
        }
    }
    let best_score = best.map_or(0.0, |(_, s)| s);
    Ok(FunctionMatch {
        status: if best_score >= threshold {
            FunctionStatus::Mentioned
        } else {
            FunctionStatus::IncompleteFunction
        },
        code_words: words,
        best_score,
        best_intention: best.map(|(i, _)| i),
        negative_mentions,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum ParameterStatus {
    Mentioned,
    IncompleteParameter,
    /// Booleans are not compared against text.
    NotAssessed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ParameterMatch {
    pub index: usize,
    pub solidity_type: String,
    pub value: String,
    pub status: ParameterStatus,
}

/// What the intentions make available for parameter lookups.
struct Mentions {
    words: BTreeSet<String>,
    hexes: Vec<String>,
    numbers: Vec<Decimal>,
    sentences: Vec<String>,
}

impl Mentions {
    fn of(intentions: &[DescriptionIntention]) -> Self {
        let mut words = BTreeSet::new();
        let mut hexes = Vec::new();
        for word in intentions.iter().flat_map(DescriptionIntention::words) {
            let lower = word.to_lowercase();
            if lower.starts_with("0x") {
                hexes.push(lower.clone());
            }
            words.extend(split_identifier(word));
            words.insert(lower);
        }
        let numbers = intentions
            .iter()
            .flat_map(|i| {
                let tokens = tokenize(&i.parameters.join(" "));
                let mut values = number_values(&tokens);
                values.extend(
                    i.words()
                        .flat_map(|w| tokenize(w))
                        .filter(|t| t.kind == TokenKind::Number)
                        .filter_map(|t| super::text::parse_number(&t.text)),
                );
                values
            })
            .collect();
        let sentences = intentions.iter().map(|i| i.source_sentence.to_lowercase()).collect();
        Self {
            words,
            hexes,
            numbers,
            sentences,
        }
    }

    fn name(&self, name: &str) -> bool {
        let parts: Vec<String> = name
            .split(|c: char| !c.is_alphanumeric())
            .filter(|p| !p.is_empty())
            .map(str::to_lowercase)
            .collect();
        !parts.is_empty() && parts.iter().all(|p| self.words.contains(p))
    }

    fn address_hex(&self, address: Address) -> bool {
        let full = address.to_string();
        let digits = &full[2..];
        self.hexes.iter().any(|h| {
            if *h == full {
                return true;
            }
            let body = &h[2..];
            let (prefix, suffix) = match body.find('…').map(|p| (p, '…'.len_utf8())).or_else(|| body.find("..").map(|p| (p, 2))) {
                Some((p, len)) => (&body[..p], body[p + len..].trim_start_matches('.')),
                None => return false,
            };
            prefix.len() + suffix.len() >= 6 && digits.starts_with(prefix) && digits.ends_with(suffix)
        })
    }

    fn number(&self, raw: primitive_types::U256, decimals: Option<u32>) -> bool {
        self.numbers
            .iter()
            .any(|n| n.equals_scaled(raw, 0) || decimals.is_some_and(|d| n.equals_scaled(raw, d)))
    }

    fn text(&self, needle: &str) -> bool {
        let needle = needle.trim().to_lowercase();
        !needle.is_empty() && self.sentences.iter().any(|s| s.contains(&needle))
    }

    fn bytes(&self, bytes: &[u8]) -> bool {
        let trimmed: &[u8] = {
            let end = bytes.iter().rposition(|b| *b != 0).map_or(0, |p| p + 1);
            &bytes[..end]
        };
        if trimmed.is_empty() {
            return false;
        }
        let hex = encode_hex(bytes);
        if self.text(&hex) || self.text(&hex[2..]) || self.text(&encode_hex(trimmed)[2..]) {
            return true;
        }
        std::str::from_utf8(trimmed).is_ok_and(|s| self.text(s))
    }
}

/// Names an address parameter could be described by: name tag, then symbol.
fn address_names(address: Address, provider: &dyn ChainData) -> Result<Vec<String>, DataError> {
    let mut names = Vec::new();
    names.extend(provider.get_name_tag(address)?);
    if !provider.get_code(address)?.is_empty() {
        names.extend(provider.symbol(address)?);
    }
    Ok(names)
}

fn value_mentioned(
    value: &AbiValue,
    mentions: &Mentions,
    decimals: Option<u32>,
    provider: &dyn ChainData,
) -> Result<ParameterStatus, DataError> {
    let status = |hit: bool| {
        if hit {
            ParameterStatus::Mentioned
        } else {
            ParameterStatus::IncompleteParameter
        }
    };
    Ok(match value {
        AbiValue::Bool(_) => ParameterStatus::NotAssessed,
        AbiValue::Address(a) => {
            let named = address_names(*a, provider)?.iter().any(|n| mentions.name(n));
            status(named || mentions.address_hex(*a))
        }
        AbiValue::Uint(v) => status(mentions.number(*v, decimals)),
        AbiValue::Int(v) => {
            if v.bit(255) {
                status(mentions.text(&value.render()))
            } else {
                status(mentions.number(*v, decimals))
            }
        }
        AbiValue::FixedBytes(b) | AbiValue::Bytes(b) => status(mentions.bytes(b)),
        AbiValue::String(s) => status(mentions.text(s)),
        AbiValue::Array(items) | AbiValue::Tuple(items) => {
            for item in items {
                if value_mentioned(item, mentions, decimals, provider)? == ParameterStatus::IncompleteParameter {
                    return Ok(ParameterStatus::IncompleteParameter);
                }
            }
            ParameterStatus::Mentioned
        }
    })
}

/// Checks one decoded parameter against every intention. `decimals` is the call
/// target's ERC-20 `decimals()`, when it has one.
pub fn match_parameter(
    index: usize,
    param: &TypedParam,
    intentions: &[DescriptionIntention],
    decimals: Option<u32>,
    provider: &dyn ChainData,
) -> Result<ParameterMatch, DataError> {
    let mentions = Mentions::of(intentions);
    Ok(ParameterMatch {
        index,
        solidity_type: param.solidity_type.clone(),
        value: param.decoded_value.render(),
        status: value_mentioned(&param.decoded_value, &mentions, decimals, provider)?,
    })
}
