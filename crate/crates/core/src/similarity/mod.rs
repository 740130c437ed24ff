//! Opcode n-gram profiles and Jaccard scoring for contract and function template matching.

mod templates;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::evm::{disassemble, strip_push_arguments, FunctionBody, Opcode};

pub use templates::{load_templates, parse_templates, TemplateError, TemplateRecord};

pub const DEFAULT_NGRAM: usize = 5;
pub const DEFAULT_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimilarityError {
    #[error("cannot compare a {left}-gram profile with a {right}-gram profile")]
    MismatchedN { left: usize, right: usize },
    #[error("gram length must be at least 1")]
    ZeroN,
    #[error("no template variants to compare against")]
    NoVariants,
}

/// The set of contiguous opcode n-tuples of a PUSH-stripped sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NGramProfile {
    n: usize,
    grams: BTreeSet<Vec<u8>>,
}

impl NGramProfile {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.grams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grams.is_empty()
    }

    pub fn contains(&self, gram: &[Opcode]) -> bool {
        let key: Vec<u8> = gram.iter().map(|o| o.byte()).collect();
        self.grams.contains(&key)
    }
}

pub fn ngram_profile(opcodes: &[Opcode], n: usize) -> Result<NGramProfile, SimilarityError> {
    if n == 0 {
        return Err(SimilarityError::ZeroN);
    }
    let bytes: Vec<u8> = opcodes.iter().map(|o| o.byte()).collect();
    let grams = bytes.windows(n).map(<[u8]>::to_vec).collect();
    Ok(NGramProfile { n, grams })
}

/// `|a ∩ b| / |a ∪ b|`; two empty profiles score 1.0, exactly one empty scores 0.0.
pub fn jaccard(a: &NGramProfile, b: &NGramProfile) -> Result<f64, SimilarityError> {
    if a.n != b.n {
        return Err(SimilarityError::MismatchedN { left: a.n, right: b.n });
    }
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return Ok(1.0),
        (true, false) | (false, true) => return Ok(0.0),
        _ => {}
    }
    let shared = a.grams.intersection(&b.grams).count();
    let union = a.grams.len() + b.grams.len() - shared;
    Ok(shared as f64 / union as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimilarityDecision {
    pub score: f64,
    pub threshold: f64,
    pub similar: bool,
}

impl SimilarityDecision {
    pub fn new(score: f64, threshold: f64) -> Self {
        Self {
            score,
            threshold,
            similar: score >= threshold,
        }
    }
}

/// A scoring kernel over PUSH-stripped opcode sequences, selectable by name.
pub trait SequenceSimilarity: Send + Sync {
    fn name(&self) -> &'static str;
    fn score(&self, a: &[Opcode], b: &[Opcode]) -> f64;
}

/// Set Jaccard over n-gram profiles.
#[derive(Debug, Clone, Copy)]
pub struct SetJaccard {
    pub n: usize,
}

impl Default for SetJaccard {
    fn default() -> Self {
        Self { n: DEFAULT_NGRAM }
    }
}

impl SequenceSimilarity for SetJaccard {
    fn name(&self) -> &'static str {
        "jaccard"
    }

    fn score(&self, a: &[Opcode], b: &[Opcode]) -> f64 {
        let n = self.n.max(1);
        let pa = ngram_profile(a, n).expect("n >= 1");
        let pb = ngram_profile(b, n).expect("n >= 1");
        jaccard(&pa, &pb).expect("same n")
    }
}

/// Weighted Jaccard over n-gram occurrence counts (`Σmin / Σmax`).
#[derive(Debug, Clone, Copy)]
pub struct MultisetJaccard {
    pub n: usize,
}

impl Default for MultisetJaccard {
    fn default() -> Self {
        Self { n: DEFAULT_NGRAM }
    }
}

impl SequenceSimilarity for MultisetJaccard {
    fn name(&self) -> &'static str {
        "multiset-jaccard"
    }

    fn score(&self, a: &[Opcode], b: &[Opcode]) -> f64 {
        let n = self.n.max(1);
        let counts = |seq: &[Opcode]| {
            let bytes: Vec<u8> = seq.iter().map(|o| o.byte()).collect();
            let mut map: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
            for w in bytes.windows(n) {
                *map.entry(w.to_vec()).or_default() += 1;
            }
            map
        };
        let (ca, cb) = (counts(a), counts(b));
        match (ca.is_empty(), cb.is_empty()) {
            (true, true) => return 1.0,
            (true, false) | (false, true) => return 0.0,
            _ => {}
        }
        let keys: BTreeSet<&Vec<u8>> = ca.keys().chain(cb.keys()).collect();
        let (mut min_sum, mut max_sum) = (0usize, 0usize);
        for key in keys {
            let x = ca.get(key).copied().unwrap_or(0);
            let y = cb.get(key).copied().unwrap_or(0);
            min_sum += x.min(y);
            max_sum += x.max(y);
        }
        min_sum as f64 / max_sum as f64
    }
}

/// Contract-level pipeline: disassemble → strip PUSH payloads → 5-gram profile → Jaccard.
pub fn contracts_similar(code_a: &[u8], code_b: &[u8], threshold: f64) -> SimilarityDecision {
    contracts_similar_with(&SetJaccard::default(), code_a, code_b, threshold)
}

pub fn contracts_similar_with(
    kernel: &dyn SequenceSimilarity,
    code_a: &[u8],
    code_b: &[u8],
    threshold: f64,
) -> SimilarityDecision {
    let a = strip_push_arguments(&disassemble(code_a));
    let b = strip_push_arguments(&disassemble(code_b));
    SimilarityDecision::new(kernel.score(&a, &b), threshold)
}

/// Best score of `target` against any compiled variant of a template function.
pub fn function_similar(
    target: &FunctionBody,
    variants: &[FunctionBody],
    threshold: f64,
) -> Result<SimilarityDecision, SimilarityError> {
    function_similar_with(&SetJaccard::default(), target, variants, threshold)
}

pub fn function_similar_with(
    kernel: &dyn SequenceSimilarity,
    target: &FunctionBody,
    variants: &[FunctionBody],
    threshold: f64,
) -> Result<SimilarityDecision, SimilarityError> {
    if variants.is_empty() {
        return Err(SimilarityError::NoVariants);
    }
    let t = target.opcodes();
    let best = variants
        .iter()
        .map(|v| kernel.score(&t, &v.opcodes()))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SimilarityDecision::new(best, threshold))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ops(bytes: &[u8]) -> Vec<Opcode> {
        bytes.iter().copied().map(Opcode).collect()
    }

    #[test]
    fn profile_examples() {
        let p = ngram_profile(&ops(&[1, 2, 3, 4, 5, 6]), 5).unwrap();
        assert_eq!(p.len(), 2);
        assert!(p.contains(&ops(&[1, 2, 3, 4, 5])));
        assert!(p.contains(&ops(&[2, 3, 4, 5, 6])));
        assert!(ngram_profile(&ops(&[1, 2]), 5).unwrap().is_empty());
        assert_eq!(ngram_profile(&ops(&[7; 6]), 5).unwrap().len(), 1);
        assert_eq!(ngram_profile(&ops(&[1]), 0), Err(SimilarityError::ZeroN));
    }

    #[test]
    fn jaccard_examples() {
        let x = ngram_profile(&ops(&[1, 2, 3]), 1).unwrap();
        let y = ngram_profile(&ops(&[2, 3, 4]), 1).unwrap();
        assert_eq!(jaccard(&x, &y).unwrap(), 0.5);
        assert_eq!(jaccard(&x, &x).unwrap(), 1.0);
        let empty = ngram_profile(&[], 1).unwrap();
        assert_eq!(jaccard(&empty, &empty).unwrap(), 1.0);
        assert_eq!(jaccard(&empty, &x).unwrap(), 0.0);
        let two = ngram_profile(&ops(&[1, 2, 3]), 2).unwrap();
        assert!(matches!(jaccard(&x, &two), Err(SimilarityError::MismatchedN { .. })));
    }

    #[test]
    fn push_payloads_do_not_matter() {
        let a = [0x60, 0x01, 0x73, 0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x11,
            0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x33, 0x14, 0x01, 0x00];
        let mut b = a;
        b[1] = 0xff;
        for byte in b.iter_mut().take(23).skip(3) {
            *byte = 0x22;
        }
        let decision = contracts_similar(&a, &b, DEFAULT_THRESHOLD);
        assert_eq!(decision.score, 1.0);
        assert!(decision.similar);
    }

    #[test]
    fn threshold_is_inclusive() {
        assert!(SimilarityDecision::new(0.8, 0.8).similar);
        assert!(!SimilarityDecision::new(0.85, 0.9).similar);
    }

    #[test]
    fn multiset_counts_repeats() {
        let k = MultisetJaccard { n: 1 };
        assert_eq!(k.score(&ops(&[1, 1, 2]), &ops(&[1, 2])), 2.0 / 3.0);
        assert_eq!(SetJaccard { n: 1 }.score(&ops(&[1, 1, 2]), &ops(&[1, 2])), 1.0);
        assert_eq!(k.score(&[], &[]), 1.0);
    }
}
