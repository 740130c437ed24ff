//! Interchangeable strategies, looked up by name.
//!
//! Each strategy kind has a [`Registry`] of named factories producing trait objects.
//! [`Strategies::builtin`] registers everything this crate ships; callers may add more.

use std::path::PathBuf;
use std::sync::Arc;

use thiserror::Error;

use crate::docs::{HttpLlm, LlmClient, LlmError, ScriptedLlm};
use crate::proposal::{
    EmbeddingSimilarity, ExternalClassifier, HeuristicClassifier, LexicalSimilarity, Lexicon, ParseProvider,
    PatternParser, SentenceClassifier, TextSimilarity,
};
use crate::service::ServiceError;
use crate::similarity::{MultisetJaccard, SequenceSimilarity, SetJaccard, DEFAULT_NGRAM};

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("unknown {kind} {name:?} (available: {})", available.join(", "))]
    Unknown {
        kind: &'static str,
        name: String,
        available: Vec<&'static str>,
    },
    #[error("{kind} {name:?}: {message}")]
    Unavailable {
        kind: &'static str,
        name: &'static str,
        message: String,
    },
}

/// What a factory may need to build its strategy.
#[derive(Clone)]
pub struct StrategyContext {
    pub lexicon: Arc<Lexicon>,
    pub ngram: usize,
    /// Scripted responses for the `script` LLM client.
    pub llm_script: Option<PathBuf>,
}

impl Default for StrategyContext {
    fn default() -> Self {
        Self {
            lexicon: Arc::new(Lexicon::default()),
            ngram: DEFAULT_NGRAM,
            llm_script: None,
        }
    }
}

type Factory<T> = Box<dyn Fn(&StrategyContext) -> Result<Arc<T>, String> + Send + Sync>;

struct Entry<T: ?Sized> {
    name: &'static str,
    summary: &'static str,
    factory: Factory<T>,
}

/// Named factories for one strategy kind.
pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: Vec<Entry<T>>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: Vec::new(),
        }
    }

    pub fn kind(&self) -> &'static str {
        self.kind
    }

    /// Registers `name`, replacing any earlier entry with the same name.
    pub fn register<F>(&mut self, name: &'static str, summary: &'static str, factory: F)
    where
        F: Fn(&StrategyContext) -> Result<Arc<T>, String> + Send + Sync + 'static,
    {
        self.entries.retain(|e| e.name != name);
        self.entries.push(Entry {
            name,
            summary,
            factory: Box::new(factory),
        });
    }

    /// Names in registration order.
    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name).collect()
    }

    pub fn describe(&self) -> Vec<(&'static str, &'static str)> {
        self.entries.iter().map(|e| (e.name, e.summary)).collect()
    }

    pub fn create(&self, name: &str, ctx: &StrategyContext) -> Result<Arc<T>, RegistryError> {
        let entry = self
            .entries
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| RegistryError::Unknown {
                kind: self.kind,
                name: name.to_string(),
                available: self.names(),
            })?;
        (entry.factory)(ctx).map_err(|message| RegistryError::Unavailable {
            kind: self.kind,
            name: entry.name,
            message,
        })
    }
}

fn service(e: ServiceError) -> String {
    e.to_string()
}

fn llm(e: LlmError) -> String {
    e.to_string()
}

/// One registry per strategy kind.
pub struct Strategies {
    pub sequence_similarity: Registry<dyn SequenceSimilarity>,
    pub text_similarity: Registry<dyn TextSimilarity>,
    pub classifier: Registry<dyn SentenceClassifier>,
    pub parser: Registry<dyn ParseProvider>,
    pub llm: Registry<dyn LlmClient>,
}

impl Strategies {
    /// The first name registered for each kind is its default.
    pub fn builtin() -> Self {
        let mut sequence_similarity: Registry<dyn SequenceSimilarity> = Registry::new("similarity kernel");
        sequence_similarity.register("jaccard", "set Jaccard over opcode n-grams", |ctx| {
            Ok(Arc::new(SetJaccard { n: ctx.ngram }))
        });
        sequence_similarity.register("multiset-jaccard", "Jaccard over n-gram occurrence counts", |ctx| {
            Ok(Arc::new(MultisetJaccard { n: ctx.ngram }))
        });

        let mut text_similarity: Registry<dyn TextSimilarity> = Registry::new("text similarity");
        text_similarity.register("lexical", "share of code words found in the intention", |ctx| {
            Ok(Arc::new(LexicalSimilarity::new(ctx.lexicon.clone())))
        });
        text_similarity.register("embedding", "cosine of embeddings from GOVAUDIT_EMBED_URL", |_| {
            Ok(Arc::new(EmbeddingSimilarity::from_env().map_err(service)?))
        });

        let mut classifier: Registry<dyn SentenceClassifier> = Registry::new("sentence classifier");
        classifier.register("heuristic", "action verb plus a code anchor", |ctx| {
            Ok(Arc::new(HeuristicClassifier::new(ctx.lexicon.clone())))
        });
        classifier.register("external", "classifier service at GOVAUDIT_CLASSIFIER_URL", |_| {
            Ok(Arc::new(ExternalClassifier::from_env().map_err(service)?))
        });

        let mut parser: Registry<dyn ParseProvider> = Registry::new("parser");
        parser.register("pattern", "rule-based tagger and dependency patterns", |ctx| {
            Ok(Arc::new(PatternParser::new(ctx.lexicon.clone())))
        });

        let mut llm_clients: Registry<dyn LlmClient> = Registry::new("LLM client");
        llm_clients.register("script", "scripted responses from --llm-script", |ctx| {
            let path = ctx.llm_script.as_ref().ok_or("needs an LLM script file")?;
            Ok(Arc::new(ScriptedLlm::load(path).map_err(llm)?))
        });
        llm_clients.register("http", "endpoint at GOVAUDIT_LLM_URL", |_| {
            Ok(Arc::new(HttpLlm::from_env().map_err(llm)?))
        });

        Self {
            sequence_similarity,
            text_similarity,
            classifier,
            parser,
            llm: llm_clients,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_names() {
        let s = Strategies::builtin();
        assert_eq!(s.sequence_similarity.names(), ["jaccard", "multiset-jaccard"]);
        assert_eq!(s.text_similarity.names(), ["lexical", "embedding"]);
        assert_eq!(s.classifier.names(), ["heuristic", "external"]);
        assert_eq!(s.parser.names(), ["pattern"]);
        assert_eq!(s.llm.names(), ["script", "http"]);
    }

    #[test]
    fn create_by_name() {
        let s = Strategies::builtin();
        let ctx = StrategyContext::default();
        assert_eq!(s.sequence_similarity.create("multiset-jaccard", &ctx).unwrap().name(), "multiset-jaccard");
        assert_eq!(s.parser.create("pattern", &ctx).unwrap().name(), "pattern");
        assert!(matches!(
            s.sequence_similarity.create("cosine", &ctx),
            Err(RegistryError::Unknown { .. })
        ));
        assert!(matches!(s.llm.create("script", &ctx), Err(RegistryError::Unavailable { .. })));
    }

    #[test]
    fn register_replaces() {
        let mut r: Registry<dyn SequenceSimilarity> = Registry::new("similarity kernel");
        r.register("k", "first", |_| Ok(Arc::new(SetJaccard { n: 3 })));
        r.register("k", "second", |_| Ok(Arc::new(SetJaccard { n: 4 })));
        assert_eq!(r.describe(), [("k", "second")]);
    }
}
