//! Overlapping fixed-size chunks of a document, counted in tokens.

use serde::Serialize;

pub const DEFAULT_CHUNK_SIZE: usize = 12_000;
pub const DEFAULT_CHUNK_OVERLAP: usize = 2_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Chunk {
    pub index: usize,
    /// `[start, end)` in tokens.
    pub token_span: (usize, usize),
    #[serde(skip)]
    pub text: String,
}

/// Splits text into tokens, reported as byte ranges.
pub trait DocTokenizer: Send + Sync {
    fn tokens(&self, text: &str) -> Vec<(usize, usize)>;
}

/// Whitespace-separated words.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl DocTokenizer for WhitespaceTokenizer {
    fn tokens(&self, text: &str) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut start = None;
        for (i, c) in text.char_indices() {
            match (c.is_whitespace(), start) {
                (true, Some(s)) => {
                    out.push((s, i));
                    start = None;
                }
                (false, None) => start = Some(i),
                _ => {}
            }
        }
        if let Some(s) = start {
            out.push((s, text.len()));
        }
        out
    }
}

/// Token spans of the chunks of an `n`-token document: chunk `k` starts at
/// `k * (size - overlap)` and runs `size` tokens, clipped at the end.
pub fn chunk_spans(n: usize, size: usize, overlap: usize) -> Vec<(usize, usize)> {
    assert!(size > overlap, "chunk size must exceed the overlap");
    let stride = size - overlap;
    let mut spans = Vec::new();
    let mut start = 0;
    while start < n {
        let end = (start + size).min(n);
        spans.push((start, end));
        if end == n {
            break;
        }
        start += stride;
    }
    spans
}

/// Chunks with their original text, whitespace and all, between the first and last token.
pub fn chunk_document(text: &str, tokenizer: &dyn DocTokenizer, size: usize, overlap: usize) -> Vec<Chunk> {
    let tokens = tokenizer.tokens(text);
    chunk_spans(tokens.len(), size, overlap)
        .into_iter()
        .enumerate()
        .map(|(index, (start, end))| Chunk {
            index,
            token_span: (start, end),
            text: text[tokens[start].0..tokens[end - 1].1].to_string(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spans() {
        assert_eq!(chunk_spans(13_000, 12_000, 2_000), vec![(0, 12_000), (10_000, 13_000)]);
        assert_eq!(chunk_spans(500, 12_000, 2_000), vec![(0, 500)]);
        assert!(chunk_spans(0, 12_000, 2_000).is_empty());
        assert_eq!(chunk_spans(12_000, 12_000, 2_000), vec![(0, 12_000)]);
        assert_eq!(chunk_spans(22_000, 12_000, 2_000), vec![(0, 12_000), (10_000, 22_000)]);
    }

    #[test]
    fn chunk_text_keeps_layout() {
        let chunks = chunk_document("a b\n\nc  d e", &WhitespaceTokenizer, 3, 1);
        let texts: Vec<&str> = chunks.iter().map(|c| c.text.as_str()).collect();
        assert_eq!(texts, vec!["a b\n\nc", "c  d e"]);
        assert!(chunk_document(" \n ", &WhitespaceTokenizer, 3, 1).is_empty());
    }
}
