//! Markdown stripping, sentence splitting and tokenizing of proposal descriptions.

use primitive_types::{U256, U512};
use serde::Serialize;

/// A sentence and its byte span in the stripped text it was cut from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Sentence {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

fn is_fence(line: &str) -> bool {
    let t = line.trim_start();
    t.starts_with("```") || t.starts_with("~~~")
}

fn is_rule(line: &str) -> bool {
    let t: String = line.chars().filter(|c| !c.is_whitespace()).collect();
    t.len() >= 3 && (t.chars().all(|c| c == '-') || t.chars().all(|c| c == '*') || t.chars().all(|c| c == '_'))
}

/// Removes a heading, bullet, numbered-list or quote marker. `Some` when one was there.
fn strip_block_marker(line: &str) -> Option<&str> {
    let t = line.trim_start();
    let hashes = t.chars().take_while(|c| *c == '#').count();
    if (1..=6).contains(&hashes) && t[hashes..].starts_with([' ', '\t']) {
        return Some(t[hashes..].trim_start());
    }
    for marker in ["- ", "* ", "+ ", "> "] {
        if let Some(rest) = t.strip_prefix(marker) {
            return Some(rest.trim_start());
        }
    }
    let digits = t.chars().take_while(char::is_ascii_digit).count();
    if digits > 0 && digits <= 3 {
        let rest = &t[digits..];
        if let Some(rest) = rest.strip_prefix(". ").or_else(|| rest.strip_prefix(") ")) {
            return Some(rest.trim_start());
        }
    }
    if t.starts_with('|') {
        return Some(t);
    }
    None
}

/// Visible text of inline markdown: link and image text, code spans without backticks,
/// no bold markers or line-break tags.
fn strip_inline(line: &str) -> String {
    let mut out = String::with_capacity(line.len());
    let chars: Vec<char> = line.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let image = c == '!' && chars.get(i + 1) == Some(&'[');
        if c == '[' || image {
            let open = if image { i + 1 } else { i };
            if let Some(close) = chars[open..].iter().position(|&c| c == ']').map(|p| p + open) {
                if chars.get(close + 1) == Some(&'(') {
                    if let Some(end) = chars[close..].iter().position(|&c| c == ')').map(|p| p + close) {
                        out.extend(&chars[open + 1..close]);
                        i = end + 1;
                        continue;
                    }
                }
            }
        }
        if c == '`' {
            i += 1;
            continue;
        }
        if (c == '*' || c == '_') && chars.get(i + 1) == Some(&c) {
            i += 2;
            continue;
        }
        if c == '<' {
            if let Some(end) = chars[i..].iter().position(|&c| c == '>').map(|p| p + i) {
                let inner: String = chars[i + 1..end].iter().collect();
                let lower = inner.to_ascii_lowercase();
                if lower.starts_with("http") {
                    out.push_str(&inner);
                    i = end + 1;
                    continue;
                }
                if lower.trim_end_matches('/').trim() == "br" || lower.starts_with('/') || lower.chars().all(|c| c.is_ascii_alphabetic()) {
                    out.push(' ');
                    i = end + 1;
                    continue;
                }
            }
        }
        if c == '|' {
            out.push(' ');
            i += 1;
            continue;
        }
        out.push(c);
        i += 1;
    }
    out
}

/// Markdown to visible text. Headings, list items, table rows and lines inside code
/// fences become paragraphs of their own so they never merge into a neighbouring sentence.
pub fn strip_markdown(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_fence = false;
    for line in text.lines() {
        if is_fence(line) {
            in_fence = !in_fence;
            out.push('\n');
            continue;
        }
        if in_fence {
            out.push('\n');
            out.push_str(line.trim());
            out.push_str("\n\n");
            continue;
        }
        if is_rule(line) {
            out.push('\n');
            continue;
        }
        match strip_block_marker(line) {
            Some(rest) => {
                out.push('\n');
                out.push_str(strip_inline(rest).trim());
                out.push_str("\n\n");
            }
            None => {
                out.push_str(strip_inline(line).trim());
                out.push('\n');
            }
        }
    }
    out
}

const ABBREVIATIONS: &[&str] = &[
    "e.g", "i.e", "etc", "vs", "mr", "mrs", "ms", "dr", "prof", "inc", "ltd", "co", "corp", "jr", "sr", "st", "no",
    "approx", "fig", "est", "dept", "u.s", "a.k.a", "cf", "al",
];

const CLOSERS: &[char] = &[')', ']', '"', '\'', '’', '”', '*'];

/// Byte ranges of paragraphs: text separated by blank lines.
fn paragraphs(text: &str) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    let mut end = 0;
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        if line.trim().is_empty() {
            if let Some(s) = start.take() {
                out.push((s, end));
            }
        } else {
            start.get_or_insert(offset);
            end = offset + line.trim_end().len();
        }
        offset += line.len();
    }
    if let Some(s) = start {
        out.push((s, end));
    }
    out
}

/// The alphanumeric-and-dots word ending right before byte `i`.
fn word_before(text: &str, i: usize) -> &str {
    let start = text[..i]
        .char_indices()
        .rev()
        .take_while(|(_, c)| c.is_alphanumeric() || *c == '.')
        .last()
        .map_or(i, |(j, _)| j);
    &text[start..i]
}

fn is_boundary(para: &str, term_start: usize, cluster: &str, after: usize) -> bool {
    if cluster.matches('.').count() >= 2 {
        return false;
    }
    let rest = &para[after..];
    let Some(next) = rest.chars().next() else {
        return true;
    };
    if !next.is_whitespace() {
        return false;
    }
    let Some(first) = rest.trim_start().chars().next() else {
        return true;
    };
    if first.is_lowercase() {
        return false;
    }
    if cluster.starts_with('.') {
        let word = word_before(para, term_start);
        let lower = word.trim_start_matches('.').to_lowercase();
        if ABBREVIATIONS.contains(&lower.as_str()) {
            return false;
        }
        let mut chars = word.chars();
        if let (Some(c), None) = (chars.next(), chars.next()) {
            if c.is_uppercase() {
                return false;
            }
        }
    }
    true
}

/// Sentences of already-stripped text, in order, trimmed, non-overlapping, and together
/// covering every non-whitespace character.
pub fn split_stripped(text: &str) -> Vec<Sentence> {
    let mut out = Vec::new();
    let mut push = |start: usize, end: usize| {
        let slice = &text[start..end];
        let lead = slice.len() - slice.trim_start().len();
        let trimmed = slice.trim();
        if !trimmed.is_empty() {
            out.push(Sentence {
                text: trimmed.to_string(),
                start: start + lead,
                end: start + lead + trimmed.len(),
            });
        }
    };
    for (p_start, p_end) in paragraphs(text) {
        let para = &text[p_start..p_end];
        let mut sentence_start = 0;
        let mut iter = para.char_indices().peekable();
        while let Some((i, c)) = iter.next() {
            if !matches!(c, '.' | '!' | '?') {
                continue;
            }
            let mut after = i + c.len_utf8();
            while let Some(&(j, d)) = iter.peek() {
                if matches!(d, '.' | '!' | '?') || CLOSERS.contains(&d) {
                    after = j + d.len_utf8();
                    iter.next();
                } else {
                    break;
                }
            }
            let cluster = para[i..after].trim_end_matches(CLOSERS);
            if is_boundary(para, i, cluster, after) {
                push(p_start + sentence_start, p_start + after);
                sentence_start = after;
            }
        }
        push(p_start + sentence_start, p_end);
    }
    out
}

/// Strips markdown, then splits into sentences. Spans refer to the stripped text.
pub fn split_sentences(description: &str) -> Vec<Sentence> {
    split_stripped(&strip_markdown(description))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TokenKind {
    Word,
    Number,
    /// `0x…` literal, possibly abbreviated as `0xAB…CD`.
    Hex,
    /// Identifier directly followed by `(`.
    Call,
    /// Code-style identifier: underscores, inner capitals, or letters mixed with digits.
    Ident,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Token {
    pub text: String,
    pub kind: TokenKind,
    pub start: usize,
    pub end: usize,
}

fn is_hex(c: char) -> bool {
    c.is_ascii_hexdigit()
}

/// Length in bytes of an ellipsis at the start of `s`: `…`, `..` or `...`.
fn ellipsis_len(s: &str) -> usize {
    if s.starts_with('…') {
        '…'.len_utf8()
    } else if s.starts_with("...") {
        3
    } else if s.starts_with("..") {
        2
    } else {
        0
    }
}

fn scan_while(s: &str, from: usize, pred: impl Fn(char) -> bool) -> usize {
    s[from..].char_indices().find(|(_, c)| !pred(*c)).map_or(s.len(), |(j, _)| from + j)
}

fn scan_number(s: &str, start: usize) -> usize {
    let b = s.as_bytes();
    let digit_at = |k: usize| b.get(k).is_some_and(u8::is_ascii_digit);
    let mut i = scan_while(s, start, |c| c.is_ascii_digit());
    // thousands groups
    while b.get(i) == Some(&b',') && (1..=3).all(|k| digit_at(i + k)) && !digit_at(i + 4) {
        i += 4;
    }
    if b.get(i) == Some(&b'.') && digit_at(i + 1) {
        i = scan_while(s, i + 1, |c| c.is_ascii_digit());
    }
    if matches!(b.get(i), Some(b'e' | b'E')) && digit_at(i + 1) {
        let j = scan_while(s, i + 1, |c| c.is_ascii_digit());
        if !b.get(j).is_some_and(|c| c.is_ascii_alphabetic()) {
            i = j;
        }
    }
    if matches!(b.get(i), Some(b'k' | b'K' | b'm' | b'M' | b'b' | b'B')) && !b.get(i + 1).is_some_and(u8::is_ascii_alphanumeric) {
        i += 1;
    }
    i
}

fn word_kind(word: &str) -> TokenKind {
    let has_underscore = word.contains('_');
    let has_digit = word.chars().any(|c| c.is_ascii_digit());
    let inner_cap = word
        .chars()
        .zip(word.chars().skip(1))
        .any(|(a, b)| a.is_lowercase() && b.is_uppercase());
    if has_underscore || has_digit || inner_cap {
        TokenKind::Ident
    } else {
        TokenKind::Word
    }
}

/// Tokens of one sentence. `n't` is split off its verb; hyphenated and apostrophe words
/// stay whole.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut i = 0;
    let push = |out: &mut Vec<Token>, start: usize, end: usize, kind: TokenKind| {
        out.push(Token {
            text: text[start..end].to_string(),
            kind,
            start,
            end,
        })
    };
    while i < text.len() {
        let c = text[i..].chars().next().expect("in bounds");
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        let rest = &text[i..];
        if rest.starts_with("0x") && rest[2..].starts_with(is_hex) {
            let mut end = scan_while(text, i + 2, is_hex);
            let dots = ellipsis_len(&text[end..]);
            if dots > 0 {
                let tail = scan_while(text, end + dots, is_hex);
                // a trailing ellipsis with no suffix still belongs to the abbreviation
                end = tail;
            }
            push(&mut out, i, end, TokenKind::Hex);
            i = end;
            continue;
        }
        if c.is_ascii_digit() {
            let end = scan_number(text, i);
            if text[end..].starts_with(|d: char| d.is_alphanumeric() || d == '_') {
                let end = scan_while(text, end, |d| d.is_alphanumeric() || d == '_');
                push(&mut out, i, end, TokenKind::Ident);
                i = end;
            } else {
                push(&mut out, i, end, TokenKind::Number);
                i = end;
            }
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let mut end = scan_while(text, i, |d| d.is_alphanumeric() || d == '_');
            loop {
                let mut chars = text[end..].chars();
                match (chars.next(), chars.next()) {
                    (Some('-' | '\'' | '’'), Some(d)) if d.is_alphabetic() => {
                        let joiner = text[end..].chars().next().unwrap().len_utf8();
                        end = scan_while(text, end + joiner, |d| d.is_alphanumeric() || d == '_');
                    }
                    _ => break,
                }
            }
            let word = &text[i..end];
            let lower = word.to_lowercase();
            if lower.ends_with("n't") && word.len() > 3 {
                let split = end - 3;
                push(&mut out, i, split, TokenKind::Word);
                push(&mut out, split, end, TokenKind::Word);
            } else if text[end..].starts_with('(') {
                push(&mut out, i, end, TokenKind::Call);
            } else {
                push(&mut out, i, end, word_kind(word));
            }
            i = end;
            continue;
        }
        let dots = ellipsis_len(rest);
        let len = if dots > 0 { dots } else { c.len_utf8() };
        push(&mut out, i, i + len, TokenKind::Punct);
        i += len;
    }
    out
}

/// A non-negative decimal `mantissa / 10^scale`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decimal {
    pub mantissa: U256,
    pub scale: u32,
}

impl Decimal {
    pub fn integer(value: U256) -> Self {
        Decimal { mantissa: value, scale: 0 }
    }

    /// Multiplies by `10^k`, lowering the scale first.
    pub fn times_pow10(self, k: u32) -> Option<Self> {
        let drop = k.min(self.scale);
        let up = k - drop;
        let mantissa = self.mantissa.checked_mul(U256::exp10(up as usize))?;
        Some(Decimal {
            mantissa,
            scale: self.scale - drop,
        })
    }

    /// Exact test of `self == raw / 10^decimals`.
    pub fn equals_scaled(&self, raw: U256, decimals: u32) -> bool {
        if decimals > 77 || self.scale > 77 {
            return false;
        }
        let lhs = U512::from(self.mantissa) * U512::exp10(decimals as usize);
        let rhs = U512::from(raw) * U512::exp10(self.scale as usize);
        lhs == rhs
    }
}

/// Parses `1,000`, `1.5`, `7e17`, `500k`, `1.5M`. `None` for anything else.
pub fn parse_number(text: &str) -> Option<Decimal> {
    let text = text.trim();
    let (body, multiplier) = match text.chars().last()? {
        'k' | 'K' => (&text[..text.len() - 1], 3),
        'm' | 'M' => (&text[..text.len() - 1], 6),
        'b' | 'B' => (&text[..text.len() - 1], 9),
        _ => (text, 0),
    };
    let (body, exponent) = match body.find(['e', 'E']) {
        Some(pos) => (&body[..pos], body[pos + 1..].parse::<u32>().ok()?),
        None => (body, 0),
    };
    let mut groups = body.split('.').next().unwrap_or("").split(',');
    let first = groups.next().unwrap_or("");
    if first.is_empty() || groups.any(|g| g.len() != 3) || (body.contains(',') && first.len() > 3) {
        return None;
    }
    let body: String = body.chars().filter(|c| *c != ',').collect();
    let (int, frac) = body.split_once('.').unwrap_or((&body, ""));
    if int.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int}{frac}");
    let mantissa = U256::from_dec_str(&digits).ok()?;
    Decimal {
        mantissa,
        scale: frac.len() as u32,
    }
    .times_pow10(multiplier + exponent)
}

fn multiplier_word(word: &str) -> Option<u32> {
    match word.to_lowercase().as_str() {
        "thousand" => Some(3),
        "million" | "mm" => Some(6),
        "billion" | "bn" => Some(9),
        _ => None,
    }
}

/// Numeric values written in a token stream, with `1.5 million` style multipliers applied.
/// Both the bare and the multiplied reading are returned.
pub fn number_values(tokens: &[Token]) -> Vec<Decimal> {
    let mut out = Vec::new();
    for (k, token) in tokens.iter().enumerate() {
        if token.kind != TokenKind::Number {
            continue;
        }
        let Some(value) = parse_number(&token.text) else {
            continue;
        };
        out.push(value);
        if let Some(m) = tokens.get(k + 1).and_then(|t| multiplier_word(&t.text)) {
            out.extend(value.times_pow10(m));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(description: &str) -> Vec<String> {
        split_sentences(description).into_iter().map(|s| s.text).collect()
    }

    #[test]
    fn splits_on_terminal_punctuation() {
        assert_eq!(texts("Transfer funds. Update oracle."), vec!["Transfer funds.", "Update oracle."]);
        assert!(texts("").is_empty());
        assert!(texts("  \n\n ").is_empty());
        assert_eq!(texts("Send 1.5 ETH to 0xAB… now."), vec!["Send 1.5 ETH to 0xAB… now."]);
        assert_eq!(texts("Send it to 0xab...cd now. Done!"), vec!["Send it to 0xab...cd now.", "Done!"]);
    }

    #[test]
    fn guards_abbreviations_and_lowercase_continuations() {
        assert_eq!(texts("Pay vendors, e.g. Gauntlet. Then stop."), vec!["Pay vendors, e.g. Gauntlet.", "Then stop."]);
        assert_eq!(texts("See Fig. 3 for details."), vec!["See Fig. 3 for details."]);
        assert_eq!(texts("Signed by J. Smith today."), vec!["Signed by J. Smith today."]);
        assert_eq!(texts("It works. and more"), vec!["It works. and more"]);
        assert_eq!(texts("Really?! Yes."), vec!["Really?!", "Yes."]);
        assert_eq!(texts("(Do it.) Then go."), vec!["(Do it.)", "Then go."]);
    }

    #[test]
    fn markdown_blocks_are_separate() {
        let md = "# Summary\nThis proposal does [two things](https://x.org):\n- raise the cap\n- lower the fee\n\n```\nfoo()\n```\n**Bold** `code` here";
        assert_eq!(
            texts(md),
            vec!["Summary", "This proposal does two things:", "raise the cap", "lower the fee", "foo()", "Bold code here"]
        );
    }

    #[test]
    fn spans_point_into_stripped_text() {
        let stripped = strip_markdown("Hello there. General Kenobi!\n\nSecond para");
        for s in split_stripped(&stripped) {
            assert_eq!(&stripped[s.start..s.end], s.text);
        }
    }

    #[test]
    fn tokens() {
        let toks = tokenize("Call setVotingPeriod(1,000) on 0xAB…CD, don't pay 1.5M USDC to _setPendingGov.");
        let pairs: Vec<(&str, TokenKind)> = toks.iter().map(|t| (t.text.as_str(), t.kind)).collect();
        use TokenKind::*;
        assert_eq!(
            pairs,
            vec![
                ("Call", Word),
                ("setVotingPeriod", Call),
                ("(", Punct),
                ("1,000", Number),
                (")", Punct),
                ("on", Word),
                ("0xAB…CD", Hex),
                (",", Punct),
                ("do", Word),
                ("n't", Word),
                ("pay", Word),
                ("1.5M", Number),
                ("USDC", Word),
                ("to", Word),
                ("_setPendingGov", Ident),
                (".", Punct),
            ]
        );
        assert_eq!(tokenize("v2 vote-escrowed 3CRV")[1].text, "vote-escrowed");
        assert_eq!(tokenize("v2 vote-escrowed 3CRV")[2].kind, Ident);
    }

    #[test]
    fn numbers() {
        let n = |s: &str| parse_number(s).unwrap();
        assert_eq!(n("1,000"), Decimal::integer(U256::from(1000)));
        assert_eq!(n("1.5M"), Decimal::integer(U256::from(1_500_000)));
        assert_eq!(n("500k"), Decimal::integer(U256::from(500_000)));
        assert_eq!(n("7e17"), Decimal::integer(U256::from(700_000_000_000_000_000u64)));
        assert_eq!(n("0.25"), Decimal { mantissa: U256::from(25), scale: 2 });
        assert!(parse_number("1,00").is_none());
        assert!(n("500").equals_scaled(U256::from(500) * U256::exp10(18), 18));
        assert!(n("0.25").equals_scaled(U256::from(25) * U256::exp10(16), 18));
        assert!(!n("0.25").equals_scaled(U256::from(25), 0));
        let values = number_values(&tokenize("about 2.5 million tokens"));
        assert!(values.contains(&Decimal::integer(U256::from(2_500_000))));
    }
}
