//! Verb list, synonym table and known token symbols, with a small lemmatizer.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use thiserror::Error;

pub const DEFAULT_VERBS: &str = include_str!("../../data/verbs.txt");
pub const DEFAULT_SYNONYMS: &str = include_str!("../../data/synonyms.txt");
pub const DEFAULT_SYMBOLS: &str = include_str!("../../data/symbols.txt");

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{file} line {line}: {message}")]
    Parse { file: &'static str, line: usize, message: String },
}

#[derive(Debug, Clone)]
pub struct Lexicon {
    verbs: BTreeSet<String>,
    /// Irregular form → lemma.
    irregular: BTreeMap<String, String>,
    /// Word → canonical word.
    canonical: BTreeMap<String, String>,
    symbols: BTreeSet<String>,
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

impl Lexicon {
    pub fn parse(verbs: &str, synonyms: &str, symbols: &str) -> Result<Self, LexiconError> {
        let mut lexicon = Lexicon {
            verbs: BTreeSet::new(),
            irregular: BTreeMap::new(),
            canonical: BTreeMap::new(),
            symbols: BTreeSet::new(),
        };
        for (_, line) in content_lines(verbs) {
            let mut words = line.split_whitespace().map(str::to_lowercase);
            let lemma = words.next().expect("non-empty line");
            for form in words {
                lexicon.irregular.insert(form, lemma.clone());
            }
            lexicon.verbs.insert(lemma);
        }
        let mut heads = BTreeSet::new();
        let mut pairs = Vec::new();
        for (line_no, line) in content_lines(synonyms) {
            let (head, rest) = line.split_once(':').ok_or_else(|| LexiconError::Parse {
                file: "synonyms",
                line: line_no,
                message: "expected `canonical: synonym, ...`".into(),
            })?;
            let head = head.trim().to_lowercase();
            heads.insert(head.clone());
            for syn in rest.split(',').map(|s| s.trim().to_lowercase()).filter(|s| !s.is_empty()) {
                pairs.push((syn, head.clone()));
            }
        }
        for (syn, head) in pairs {
            // a canonical word always stands for itself; otherwise the first listing wins
            if !heads.contains(&syn) {
                lexicon.canonical.entry(syn).or_insert(head);
            }
        }
        for (_, line) in content_lines(symbols) {
            lexicon.symbols.insert(line.to_uppercase());
        }
        Ok(lexicon)
    }

    /// Loads the three data files from a directory, falling back to the built-in copy for
    /// any that are missing.
    pub fn load_dir(dir: &Path) -> Result<Self, LexiconError> {
        let read = |name: &str, default: &str| -> Result<String, LexiconError> {
            let path = dir.join(name);
            if path.exists() {
                std::fs::read_to_string(&path).map_err(|source| LexiconError::Io {
                    path: path.display().to_string(),
                    source,
                })
            } else {
                Ok(default.to_string())
            }
        };
        Self::parse(
            &read("verbs.txt", DEFAULT_VERBS)?,
            &read("synonyms.txt", DEFAULT_SYNONYMS)?,
            &read("symbols.txt", DEFAULT_SYMBOLS)?,
        )
    }

    fn known(&self, word: &str) -> bool {
        self.verbs.contains(word) || self.canonical.contains_key(word)
    }

    /// Lower-cased base form. `-ing`/`-ed` endings are only removed when the result is a
    /// known word; plural `-s` is always removed.
    pub fn lemma(&self, word: &str) -> String {
        let w = word.to_lowercase();
        if let Some(lemma) = self.irregular.get(&w) {
            return lemma.clone();
        }
        if self.known(&w) {
            return w;
        }
        for suffix in ["ing", "ed"] {
            if let Some(stem) = w.strip_suffix(suffix).filter(|s| s.len() >= 2) {
                let mut candidates = vec![stem.to_string(), format!("{stem}e")];
                let b = stem.as_bytes();
                if b.len() >= 2 && b[b.len() - 1] == b[b.len() - 2] {
                    candidates.push(stem[..stem.len() - 1].to_string());
                }
                if let Some(stem) = stem.strip_suffix('i') {
                    candidates.push(format!("{stem}y"));
                }
                if let Some(c) = candidates.into_iter().find(|c| self.known(c)) {
                    return c;
                }
            }
        }
        if w.len() > 3 && w.is_ascii() {
            if let Some(stem) = w.strip_suffix("ies") {
                return format!("{stem}y");
            }
            for suffix in ["sses", "shes", "ches", "xes"] {
                if w.ends_with(suffix) {
                    return w[..w.len() - 2].to_string();
                }
            }
            if w.ends_with('s') && !w.ends_with("ss") && !w.ends_with("us") && !w.ends_with("is") {
                return w[..w.len() - 1].to_string();
            }
        }
        w
    }

    /// The lemma mapped through the synonym table.
    pub fn normalize(&self, word: &str) -> String {
        let lemma = self.lemma(word);
        self.canonical.get(&lemma).cloned().unwrap_or(lemma)
    }

    /// True when the word's lemma is on the verb list or is a synonym of a verb-list entry.
    pub fn is_action_verb(&self, word: &str) -> bool {
        let lemma = self.lemma(word);
        self.verbs.contains(&lemma) || self.canonical.get(&lemma).is_some_and(|c| self.verbs.contains(c))
    }

    pub fn is_known_symbol(&self, word: &str) -> bool {
        self.symbols.contains(&word.to_uppercase())
    }

    pub fn with_symbols<I: IntoIterator<Item = String>>(&self, extra: I) -> Self {
        let mut out = self.clone();
        out.symbols.extend(extra.into_iter().map(|s| s.to_uppercase()).filter(|s| !s.is_empty()));
        out
    }

    pub fn verbs(&self) -> impl Iterator<Item = &str> {
        self.verbs.iter().map(String::as_str)
    }
}

impl Default for Lexicon {
    fn default() -> Self {
        Self::parse(DEFAULT_VERBS, DEFAULT_SYNONYMS, DEFAULT_SYMBOLS).expect("built-in lexicon parses")
    }
}

/// Splits an identifier into lower-case words: `_setPendingGov` → `set pending gov`,
/// `MAX_SUPPLY` → `max supply`, `ERC20Token` → `erc20 token`.
pub fn split_identifier(ident: &str) -> Vec<String> {
    let mut words = Vec::new();
    for part in ident.split(|c: char| !c.is_alphanumeric()).filter(|p| !p.is_empty()) {
        let chars: Vec<char> = part.chars().collect();
        let mut current = String::new();
        for (i, &c) in chars.iter().enumerate() {
            let prev = i.checked_sub(1).map(|j| chars[j]);
            let next = chars.get(i + 1).copied();
            let next_lower = next.is_some_and(char::is_lowercase);
            let boundary = match prev {
                Some(p) if c.is_uppercase() => p.is_lowercase() || ((p.is_uppercase() || p.is_ascii_digit()) && next_lower),
                _ => false,
            };
            if boundary && !current.is_empty() {
                words.push(std::mem::take(&mut current).to_lowercase());
            }
            current.push(c);
        }
        if !current.is_empty() {
            words.push(current.to_lowercase());
        }
    }
    words
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lemmas() {
        let lx = Lexicon::default();
        assert_eq!(lx.lemma("Transfers"), "transfer");
        assert_eq!(lx.lemma("transferred"), "transfer");
        assert_eq!(lx.lemma("settling"), "settle");
        assert_eq!(lx.lemma("sent"), "send");
        assert_eq!(lx.lemma("tokens"), "token");
        assert_eq!(lx.lemma("voting"), "voting");
        assert_eq!(lx.lemma("address"), "address");
        assert_eq!(lx.lemma("rewards"), "reward");
        assert_eq!(lx.lemma("something"), "something");
    }

    #[test]
    fn verbs_and_synonyms() {
        let lx = Lexicon::default();
        assert!(lx.is_action_verb("upgrade"));
        assert!(lx.is_action_verb("moving"));
        assert!(!lx.is_action_verb("believe"));
        assert_eq!(lx.normalize("gov"), "governance");
        assert_eq!(lx.normalize("withdraw"), "withdraw");
        assert!(lx.is_known_symbol("usdc"));
    }

    #[test]
    fn identifiers() {
        assert_eq!(split_identifier("_setPendingGov"), vec!["set", "pending", "gov"]);
        assert_eq!(split_identifier("set_voting_period"), vec!["set", "voting", "period"]);
        assert_eq!(split_identifier("MAX_SUPPLY"), vec!["max", "supply"]);
        assert_eq!(split_identifier("ERC20Token"), vec!["erc20", "token"]);
        assert_eq!(split_identifier("transfer"), vec!["transfer"]);
    }
}
