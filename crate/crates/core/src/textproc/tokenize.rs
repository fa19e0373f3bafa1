use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Synthetic sentence-start symbol.
pub const START: &str = "START";

const PUNCT: &[char] = &['.', ',', '!', '?', ';', ':', '\'', '"', '(', ')'];
const CLITICS: &[&str] = &["n't", "'s", "'d", "'ll", "'re", "'ve", "'m"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedSentence {
    pub tokens: Vec<String>,
    pub raw: String,
}

impl TokenizedSentence {
    pub fn from_text(raw: &str) -> Self {
        // A fresh token list never begins with START, so this cannot fail.
        normalize(tokenize(raw), raw).expect("tokenizer never emits START first")
    }

    /// Tokens after START.
    pub fn words(&self) -> &[String] {
        &self.tokens[1..]
    }

    /// Words joined by single spaces: the surface string the tokenizer sees
    /// as a fixed point.
    pub fn surface(&self) -> String {
        self.words().join(" ")
    }
}

fn clitic_suffix(s: &str) -> Option<&'static str> {
    let lower = s.to_lowercase();
    CLITICS
        .iter()
        .copied()
        .find(|c| lower.len() > c.len() && lower.ends_with(c))
}

fn is_clitic(s: &str) -> bool {
    let lower = s.to_lowercase();
    CLITICS.contains(&lower.as_str())
}

fn split_chunk(s: &str, out: &mut Vec<String>) {
    if s.is_empty() {
        return;
    }
    if is_clitic(s) {
        out.push(s.to_string());
        return;
    }
    let last = s.chars().next_back().unwrap();
    if PUNCT.contains(&last) {
        let cut = s.len() - last.len_utf8();
        split_chunk(&s[..cut], out);
        out.push(last.to_string());
        return;
    }
    let first = s.chars().next().unwrap();
    if PUNCT.contains(&first) {
        out.push(first.to_string());
        split_chunk(&s[first.len_utf8()..], out);
        return;
    }
    if let Some(clitic) = clitic_suffix(s) {
        let cut = s.len() - clitic.len();
        split_chunk(&s[..cut], out);
        out.push(s[cut..].to_string());
        return;
    }
    out.push(s.to_string());
}

/// Whitespace split, then punctuation and clitics detached as their own tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        split_chunk(chunk, &mut out);
    }
    out
}

/// Prepends START. Feeding an already-normalized token list back in is an error.
pub fn normalize(tokens: Vec<String>, raw: &str) -> Result<TokenizedSentence> {
    if tokens.first().map(String::as_str) == Some(START) {
        return Err(Error::InvalidInput(
            "token list already begins with START".into(),
        ));
    }
    let mut with_start = Vec::with_capacity(tokens.len() + 1);
    with_start.push(START.to_string());
    with_start.extend(tokens);
    Ok(TokenizedSentence {
        tokens: with_start,
        raw: raw.to_string(),
    })
}
