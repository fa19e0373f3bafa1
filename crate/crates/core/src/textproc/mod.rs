//! Tokenization, START normalization and part-of-speech tagging.

mod tagger;
mod tokenize;

use std::collections::HashMap;
use std::path::Path;

pub use tagger::{TaggedSentence, TaggedTokens, Tagger, PENN_TAGS, SENTINEL_TAG};
pub use tokenize::{normalize, tokenize, TokenizedSentence, START};

use crate::error::{Error, Result};

const BUNDLED_FIXTURE: &str = include_str!("../../data/tagged_fixture.tsv");

/// Parses `token<TAB>TAG` lines with blank lines between sentences.
pub fn parse_pretagged(text: &str) -> Result<Vec<TaggedTokens>> {
    let mut out = Vec::new();
    let mut cur: TaggedTokens = (Vec::new(), Vec::new());
    for (n, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !cur.0.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            continue;
        }
        let (tok, tag) = line
            .split_once('\t')
            .filter(|(t, g)| !t.is_empty() && !g.is_empty() && !g.contains('\t'))
            .ok_or_else(|| {
                Error::Format(format!("pre-tagged line {}: expected token<TAB>TAG", n + 1))
            })?;
        cur.0.push(tok.to_string());
        cur.1.push(tag.to_string());
    }
    if !cur.0.is_empty() {
        out.push(cur);
    }
    Ok(out)
}

pub fn read_pretagged(path: impl AsRef<Path>) -> Result<Vec<TaggedTokens>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_pretagged(&text)
}

/// The shipped tagged corpus (story-style sentences, Penn tags).
pub fn bundled_fixture() -> Vec<TaggedTokens> {
    parse_pretagged(BUNDLED_FIXTURE).expect("bundled fixture is well formed")
}

/// Deterministic train/held-out partition of the bundled fixture: every
/// fifth sentence is held out.
pub fn bundled_fixture_split() -> (Vec<TaggedTokens>, Vec<TaggedTokens>) {
    let (mut train, mut held) = (Vec::new(), Vec::new());
    for (i, s) in bundled_fixture().into_iter().enumerate() {
        if i % 5 == 4 {
            held.push(s);
        } else {
            train.push(s);
        }
    }
    (train, held)
}

/// Key that identifies a sentence independently of how it was tokenized.
fn surface_key(text: &str) -> String {
    text.chars().filter(|c| !c.is_whitespace()).collect()
}

/// Turns raw ending text into a tagged sentence, either with the bundled
/// tagger or by looking up externally tagged sentences.
#[derive(Debug, Clone)]
pub enum Annotator {
    Tagger(Tagger),
    /// Pre-tagged sentences keyed by their text with whitespace removed.
    Pretagged(HashMap<String, TaggedSentence>),
}

impl Annotator {
    pub fn pretagged(sentences: &[TaggedTokens]) -> Result<Annotator> {
        let mut map = HashMap::new();
        for (tokens, tags) in sentences {
            let tagged = TaggedSentence::from_pretagged(tokens, tags)?;
            map.insert(surface_key(&tokens.concat()), tagged);
        }
        Ok(Annotator::Pretagged(map))
    }

    /// Tagger trained on the bundled fixture.
    pub fn bundled(epochs: usize, seed: u64) -> Result<Annotator> {
        Ok(Annotator::Tagger(Tagger::train(&bundled_fixture(), epochs, seed)?))
    }

    pub fn annotate(&self, raw: &str) -> Result<TaggedSentence> {
        match self {
            Annotator::Tagger(t) => t.tag_text(raw),
            Annotator::Pretagged(map) => {
                let mut tagged = map.get(&surface_key(raw)).cloned().ok_or_else(|| {
                    Error::InvalidInput(format!("no pre-tagged entry for {raw:?}"))
                })?;
                tagged.sentence.raw = raw.to_string();
                Ok(tagged)
            }
        }
    }
}
