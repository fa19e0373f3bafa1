use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::textproc::tokenize;

pub const UNK: u32 = 0;
pub const BOS: u32 = 1;
pub const BOUNDARY: u32 = 2;

const SPECIALS: [&str; 3] = ["<unk>", "<s>", "</s>"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    tokens: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, u32>,
    min_count: usize,
}

impl Vocabulary {
    /// Tokens seen fewer than `min_count` times map to `<unk>`. Ids are
    /// assigned by descending frequency, ties broken alphabetically.
    pub fn build<S: AsRef<str>>(corpus: &[Vec<S>], min_count: usize) -> Vocabulary {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for seq in corpus {
            for t in seq {
                *counts.entry(t.as_ref()).or_default() += 1;
            }
        }
        let mut kept: Vec<(&str, usize)> = counts
            .into_iter()
            .filter(|(t, c)| *c >= min_count && !SPECIALS.contains(t))
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let tokens: Vec<String> = SPECIALS
            .iter()
            .map(|s| s.to_string())
            .chain(kept.into_iter().map(|(t, _)| t.to_string()))
            .collect();
        Self::from_tokens(tokens, min_count)
    }

    pub fn from_tokens(tokens: Vec<String>, min_count: usize) -> Vocabulary {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary {
            tokens,
            index,
            min_count,
        }
    }

    /// Rebuilds the lookup table after deserialization.
    pub fn reindexed(self) -> Vocabulary {
        Self::from_tokens(self.tokens, self.min_count)
    }

    /// Size including the special tokens.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn min_count(&self) -> usize {
        self.min_count
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<u32> {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }

    /// Sentence tokens followed by the boundary token.
    pub fn encode_sentence(&self, sentence: &str) -> Vec<u32> {
        let mut ids = self.encode(&tokenize(sentence));
        ids.push(BOUNDARY);
        ids
    }

    /// Concatenated sentences, each closed by the boundary token (no `<s>`).
    pub fn encode_sentences<S: AsRef<str>>(&self, sentences: &[S]) -> Vec<u32> {
        sentences
            .iter()
            .flat_map(|s| self.encode_sentence(s.as_ref()))
            .collect()
    }

    /// Full training sequence: `<s>` then the sentences.
    pub fn encode_story<S: AsRef<str>>(&self, sentences: &[S]) -> Vec<u32> {
        let mut ids = vec![BOS];
        ids.extend(self.encode_sentences(sentences));
        ids
    }
}

/// Tokens of all sentences of a story, for vocabulary counting.
pub fn story_tokens<S: AsRef<str>>(sentences: &[S]) -> Vec<String> {
    sentences
        .iter()
        .flat_map(|s| tokenize(s.as_ref()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(lines: &[&str]) -> Vec<Vec<String>> {
        lines
            .iter()
            .map(|l| l.split_whitespace().map(String::from).collect())
            .collect()
    }

    #[test]
    fn threshold_collapses_rare_tokens() {
        // counts: the=4, dog=3, cat=2, ran=1
        let c = corpus(&["the dog ran", "the dog", "the cat", "the cat dog"]);
        let v = Vocabulary::build(&c, 3);
        assert_eq!(v.tokens(), ["<unk>", "<s>", "</s>", "the", "dog"]);
        assert_eq!(v.id("cat"), UNK);
        assert_eq!(v.id("ran"), UNK);
        assert_eq!(v.encode(&["the", "cat"]), vec![3, UNK]);
    }

    #[test]
    fn nothing_collapses_when_all_frequent() {
        let c = corpus(&["a b c", "a b c", "c b a"]);
        let v = Vocabulary::build(&c, 3);
        assert_eq!(v.len(), 3 + 3);
        assert!(["a", "b", "c"].iter().all(|t| v.id(t) != UNK));
    }

    #[test]
    fn story_encoding() {
        let c = corpus(&["He ran . She sat ."]);
        let v = Vocabulary::build(&c, 1);
        let ids = v.encode_story(&["He ran.", "She sat."]);
        assert_eq!(ids[0], BOS);
        assert_eq!(ids.iter().filter(|&&i| i == BOUNDARY).count(), 2);
        assert_eq!(ids.len(), 1 + 3 + 1 + 3 + 1);
        assert_eq!(story_tokens(&["He ran.", "Ok"]), ["He", "ran", ".", "Ok"]);
    }
}
