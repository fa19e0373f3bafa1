//! Style features: sentence length, word n-grams over a POS-backoff sequence,
//! and character n-grams. Values are occurrence counts min-max scaled into
//! `[0, 1]` with statistics from the fitting set.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textproc::TaggedSentence;

const FORMAT_NAME: &str = "stylecloze-feature-space";
const FORMAT_VERSION: u32 = 1;

/// Tag prefixes of content words: nouns, verbs, adjectives, adverbs.
pub const CONTENT_TAG_PREFIXES: [&str; 4] = ["NN", "VB", "JJ", "RB"];

pub fn is_content_tag(tag: &str) -> bool {
    CONTENT_TAG_PREFIXES.iter().any(|p| tag.starts_with(p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Length,
    Word,
    Char,
}

/// Which string the character n-grams are read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CharSource {
    /// Tokens (without START) joined by single spaces, so `helped.` reads
    /// as `helped .`.
    #[default]
    Tokens,
    /// The untouched input string.
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub length: bool,
    pub word: bool,
    pub char: bool,
    pub word_min_n: usize,
    pub word_max_n: usize,
    pub char_k: usize,
    pub min_count: usize,
    pub binary: bool,
    pub char_source: CharSource,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            length: true,
            word: true,
            char: true,
            word_min_n: 1,
            word_max_n: 5,
            char_k: 4,
            min_count: 5,
            binary: false,
            char_source: CharSource::Tokens,
        }
    }
}

impl FeatureConfig {
    pub fn word_only() -> Self {
        FeatureConfig {
            length: false,
            char: false,
            ..Default::default()
        }
    }

    pub fn char_only() -> Self {
        FeatureConfig {
            length: false,
            word: false,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.word && (self.word_min_n == 0 || self.word_min_n > self.word_max_n) {
            return Err(Error::InvalidConfig(format!(
                "bad word n-gram range {}..={}",
                self.word_min_n, self.word_max_n
            )));
        }
        if self.char && self.char_k == 0 {
            return Err(Error::InvalidConfig("char n-gram width must be positive".into()));
        }
        Ok(())
    }
}

/// Tokens with content words replaced by their tag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackoffSequence(pub Vec<String>);

pub fn backoff(sentence: &TaggedSentence) -> Result<BackoffSequence> {
    let tokens = sentence.tokens();
    if tokens.len() != sentence.tags.len() {
        return Err(Error::InvalidInput(format!(
            "{} tokens but {} tags",
            tokens.len(),
            sentence.tags.len()
        )));
    }
    Ok(BackoffSequence(
        tokens
            .iter()
            .zip(&sentence.tags)
            .map(|(tok, tag)| if is_content_tag(tag) { tag.clone() } else { tok.clone() })
            .collect(),
    ))
}

/// All contiguous n-grams for `min_n <= n <= max_n`, joined by single spaces,
/// shortest first.
pub fn word_ngrams(seq: &[String], min_n: usize, max_n: usize) -> Vec<String> {
    let mut out = Vec::new();
    for n in min_n.max(1)..=max_n {
        out.extend(seq.windows(n).map(|w| w.join(" ")));
    }
    out
}

/// Sliding window of `k` characters, no padding.
pub fn char_ngrams(text: &str, k: usize) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    if k == 0 {
        return Vec::new();
    }
    chars.windows(k).map(|w| w.iter().collect()).collect()
}

/// Sparse feature vector with values in `[0, 1]`, sorted by index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleVector {
    pub dim: usize,
    pub entries: Vec<(usize, f64)>,
}

impl StyleVector {
    pub fn zeros(dim: usize) -> Self {
        StyleVector {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |e| e.0)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| dense[i] * v).sum()
    }

    /// Appends dense values after the current dimensions.
    pub fn extended(&self, extra: &[f64]) -> StyleVector {
        let mut entries = self.entries.clone();
        entries.extend(extra.iter().enumerate().map(|(k, &v)| (self.dim + k, v)));
        StyleVector {
            dim: self.dim + extra.len(),
            entries,
        }
    }

    /// Keeps only the entries whose index passes `keep`.
    pub fn masked(&self, keep: impl Fn(usize) -> bool) -> StyleVector {
        StyleVector {
            dim: self.dim,
            entries: self.entries.iter().copied().filter(|&(i, _)| keep(i)).collect(),
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for &(i, x) in &self.entries {
            v[i] = x;
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEntry {
    pub family: Family,
    pub feature: String,
    pub index: usize,
    pub min: f64,
    pub max: f64,
}

impl FeatureEntry {
    pub fn scale(&self, raw: f64) -> f64 {
        let range = self.max - self.min;
        if range > 0.0 {
            ((raw - self.min) / range).clamp(0.0, 1.0)
        } else if raw >= self.max && raw > 0.0 {
            1.0
        } else {
            0.0
        }
    }

    /// Display form used in reports: char n-grams quoted, length named.
    pub fn display(&self) -> String {
        match self.family {
            Family::Length => "length".into(),
            Family::Word => self.feature.clone(),
            Family::Char => format!("'{}'", self.feature),
        }
    }
}

/// Fitted vocabulary of style features with per-feature scaling statistics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureSpace {
    config: FeatureConfig,
    entries: Vec<FeatureEntry>,
    index: HashMap<(Family, String), usize>,
    fitted: bool,
}

type Key = (Family, String);

fn raw_counts(config: &FeatureConfig, sentence: &TaggedSentence) -> Result<BTreeMap<Key, f64>> {
    let mut counts: BTreeMap<Key, f64> = BTreeMap::new();
    if config.length {
        counts.insert((Family::Length, "LENGTH".into()), sentence.sentence.words().len() as f64);
    }
    if config.word {
        let seq = backoff(sentence)?;
        for g in word_ngrams(&seq.0, config.word_min_n, config.word_max_n) {
            *counts.entry((Family::Word, g)).or_default() += 1.0;
        }
    }
    if config.char {
        let source = match config.char_source {
            CharSource::Tokens => sentence.sentence.surface(),
            CharSource::Raw => sentence.sentence.raw.clone(),
        };
        for g in char_ngrams(&source, config.char_k) {
            *counts.entry((Family::Char, g)).or_default() += 1.0;
        }
    }
    Ok(counts)
}

impl FeatureSpace {
    pub fn fit(config: &FeatureConfig, train: &[TaggedSentence]) -> Result<FeatureSpace> {
        config.validate()?;
        if train.is_empty() {
            return Err(Error::InsufficientData("no training endings to fit features on".into()));
        }
        let docs: Vec<BTreeMap<Key, f64>> = train
            .iter()
            .map(|s| raw_counts(config, s))
            .collect::<Result<_>>()?;
        let mut totals: BTreeMap<&Key, f64> = BTreeMap::new();
        for doc in &docs {
            for (k, &c) in doc {
                *totals.entry(k).or_default() += c;
            }
        }
        let mut entries = Vec::new();
        let mut index = HashMap::new();
        for (key, total) in totals {
            if key.0 != Family::Length && total < config.min_count as f64 {
                continue;
            }
            let i = entries.len();
            entries.push(FeatureEntry {
                family: key.0,
                feature: key.1.clone(),
                index: i,
                min: f64::INFINITY,
                max: f64::NEG_INFINITY,
            });
            index.insert(key.clone(), i);
        }
        // Per retained feature: number of documents containing it and the
        // extreme values among those; absent documents contribute 0.
        let mut seen = vec![0usize; entries.len()];
        for doc in &docs {
            for (k, &c) in doc {
                let Some(&i) = index.get(k) else { continue };
                let v = if config.binary && k.0 != Family::Length { c.min(1.0) } else { c };
                let e = &mut entries[i];
                e.min = e.min.min(v);
                e.max = e.max.max(v);
                seen[i] += 1;
            }
        }
        for (e, n) in entries.iter_mut().zip(seen) {
            if n < docs.len() {
                e.min = e.min.min(0.0);
                e.max = e.max.max(0.0);
            }
        }
        Ok(FeatureSpace {
            config: config.clone(),
            entries,
            index,
            fitted: true,
        })
    }

    pub fn is_fitted(&self) -> bool {
        self.fitted
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[FeatureEntry] {
        &self.entries
    }

    pub fn lookup(&self, family: Family, feature: &str) -> Option<usize> {
        self.index.get(&(family, feature.to_string())).copied()
    }

    fn ensure_fitted(&self) -> Result<()> {
        if !self.fitted {
            return Err(Error::InvalidState("feature space has not been fitted".into()));
        }
        Ok(())
    }

    /// Unscaled values (counts, or 0/1 in binary mode) of retained features.
    pub fn raw_values(&self, sentence: &TaggedSentence) -> Result<Vec<(usize, f64)>> {
        self.ensure_fitted()?;
        let mut out: Vec<(usize, f64)> = raw_counts(&self.config, sentence)?
            .into_iter()
            .filter_map(|(k, c)| {
                let i = *self.index.get(&k)?;
                let v = if self.config.binary && k.0 != Family::Length { c.min(1.0) } else { c };
                Some((i, v))
            })
            .collect();
        out.sort_by_key(|e| e.0);
        Ok(out)
    }

    pub fn transform(&self, sentence: &TaggedSentence) -> Result<StyleVector> {
        let raw = self.raw_values(sentence)?;
        let entries = raw
            .into_iter()
            .filter_map(|(i, v)| {
                let e = &self.entries[i];
                let s = e.scale(v);
                (s != 0.0 || e.family == Family::Length).then_some((i, s))
            })
            .collect();
        Ok(StyleVector {
            dim: self.dim(),
            entries,
        })
    }

    pub fn transform_all(&self, sentences: &[TaggedSentence]) -> Result<Vec<StyleVector>> {
        sentences.iter().map(|s| self.transform(s)).collect()
    }

    /// Fraction of sentences in which each feature has a non-zero raw value.
    pub fn document_frequency(&self, sentences: &[TaggedSentence]) -> Result<Vec<f64>> {
        let mut df = vec![0.0; self.dim()];
        for s in sentences {
            for (i, v) in self.raw_values(s)? {
                if v > 0.0 {
                    df[i] += 1.0;
                }
            }
        }
        let n = sentences.len().max(1) as f64;
        Ok(df.into_iter().map(|c| c / n).collect())
    }

    /// Versioned JSON-lines: a header line, then one line per feature.
    pub fn to_jsonl(&self) -> Result<String> {
        self.ensure_fitted()?;
        let mut out = String::new();
        let header = serde_json::json!({
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "config": self.config,
        });
        writeln!(out, "{header}").unwrap();
        for e in &self.entries {
            writeln!(out, "{}", serde_json::to_string(e)?).unwrap();
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<FeatureSpace> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: serde_json::Value = serde_json::from_str(
            lines.next().ok_or_else(|| Error::Format("empty feature space file".into()))?,
        )?;
        if header["format"] != FORMAT_NAME || header["version"] != FORMAT_VERSION {
            return Err(Error::Format("unsupported feature space format or version".into()));
        }
        let config: FeatureConfig = serde_json::from_value(header["config"].clone())?;
        let mut entries = Vec::new();
        let mut index = HashMap::new();
        for line in lines {
            let e: FeatureEntry = serde_json::from_str(line)?;
            if e.index != entries.len() {
                return Err(Error::Format(format!(
                    "feature indices must be dense, expected {} got {}",
                    entries.len(),
                    e.index
                )));
            }
            index.insert((e.family, e.feature.clone()), e.index);
            entries.push(e);
        }
        Ok(FeatureSpace {
            config,
            entries,
            index,
            fitted: true,
        })
    }

    pub fn fingerprint(&self) -> String {
        crate::fingerprint_bytes(self.to_jsonl().unwrap_or_default().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textproc::{TaggedSentence, START};
    use std::collections::HashMap;

    fn tagged(pairs: &[(&str, &str)]) -> TaggedSentence {
        let toks: Vec<String> = pairs.iter().map(|p| p.0.to_string()).collect();
        let tags: Vec<String> = pairs.iter().map(|p| p.1.to_string()).collect();
        TaggedSentence::from_pretagged(&toks, &tags).unwrap()
    }

    fn strs(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn backoff_examples() {
        let s = tagged(&[("to", "TO"), ("the", "DT"), (".", ".")]);
        assert_eq!(backoff(&s).unwrap().0, strs(&[START, "to", "the", "."]));
        let s = tagged(&[("John", "NNP"), ("hates", "VBZ"), ("dogs", "NNS"), (".", ".")]);
        assert_eq!(backoff(&s).unwrap().0, strs(&[START, "NNP", "VBZ", "NNS", "."]));
        let s = tagged(&[("She", "PRP"), ("slept", "VBD"), ("!", ".")]);
        assert_eq!(backoff(&s).unwrap().0, strs(&[START, "She", "VBD", "!"]));
    }

    #[test]
    fn backoff_length_mismatch() {
        let mut s = tagged(&[("She", "PRP")]);
        s.tags.push("NN".into());
        assert!(matches!(backoff(&s), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn backoff_is_stable_on_its_output() {
        let s = tagged(&[("She", "PRP"), ("slept", "VBD"), ("in", "IN"), ("it", "PRP"), ("!", ".")]);
        let once = backoff(&s).unwrap();
        let again = TaggedSentence {
            sentence: crate::textproc::TokenizedSentence {
                tokens: once.0.clone(),
                raw: String::new(),
            },
            tags: s.tags.clone(),
        };
        let twice = backoff(&again).unwrap();
        for (i, tag) in s.tags.iter().enumerate() {
            if !is_content_tag(tag) {
                assert_eq!(once.0[i], twice.0[i]);
            }
        }
    }

    #[test]
    fn word_ngram_examples() {
        assert_eq!(word_ngrams(&strs(&[START]), 1, 5), strs(&[START]));
        let got = word_ngrams(&strs(&[START, "NNP", "VBD"]), 1, 5);
        assert_eq!(
            got,
            strs(&[START, "NNP", "VBD", "START NNP", "NNP VBD", "START NNP VBD"])
        );
    }

    #[test]
    fn char_ngram_examples() {
        assert!(char_ngrams("abc", 4).is_empty());
        assert!(char_ngrams("He helped .", 4).contains(&"ed .".to_string()));
        // windows: "and ", "nd a", "d an", " and"
        assert_eq!(char_ngrams("and and", 4), strs(&["and ", "nd a", "d an", " and"]));
    }

    fn fit_fixture() -> Vec<TaggedSentence> {
        vec![
            tagged(&[("He", "PRP"), ("slept", "VBD"), (".", ".")]),
            tagged(&[("He", "PRP"), ("ran", "VBD"), ("home", "RB"), (".", ".")]),
            tagged(&[("She", "PRP"), ("slept", "VBD"), (".", ".")]),
            tagged(&[("He", "PRP"), ("slept", "VBD"), ("!", ".")]),
            tagged(&[("They", "PRP"), ("ate", "VBD"), (".", ".")]),
        ]
    }

    fn small_config() -> FeatureConfig {
        FeatureConfig {
            char: false,
            word_max_n: 2,
            min_count: 3,
            ..Default::default()
        }
    }

    #[test]
    fn fit_and_transform_match_hand_computation() {
        let space = FeatureSpace::fit(&small_config(), &fit_fixture()).unwrap();
        let names: Vec<&str> = space.entries().iter().map(|e| e.feature.as_str()).collect();
        assert_eq!(
            names,
            ["LENGTH", ".", "He", "He VBD", "START", "START He", "VBD", "VBD ."]
        );
        let len = &space.entries()[0];
        assert_eq!((len.min, len.max), (3.0, 4.0));

        let v = space.transform(&fit_fixture()[1]).unwrap();
        assert_eq!(
            v.entries,
            vec![(0, 1.0), (1, 1.0), (2, 1.0), (3, 1.0), (4, 1.0), (5, 1.0), (6, 1.0)]
        );
        let v = space.transform(&fit_fixture()[2]).unwrap();
        assert_eq!(v.entries, vec![(0, 0.0), (1, 1.0), (4, 1.0), (6, 1.0), (7, 1.0)]);
    }

    #[test]
    fn test_time_values_are_clipped() {
        let space = FeatureSpace::fit(&small_config(), &fit_fixture()).unwrap();
        let long = tagged(&[
            ("He", "PRP"), ("slept", "VBD"), ("and", "CC"), ("He", "PRP"), ("slept", "VBD"),
            ("and", "CC"), ("He", "PRP"), ("slept", "VBD"), (".", "."),
        ]);
        let v = space.transform(&long).unwrap();
        assert!(v.entries.iter().all(|&(_, x)| (0.0..=1.0).contains(&x)));
        assert_eq!(v.get(0), 1.0);
    }

    #[test]
    fn no_retained_ngrams_leaves_only_length() {
        let space = FeatureSpace::fit(&small_config(), &fit_fixture()).unwrap();
        let mut odd = tagged(&[("Wow", "UH"), ("wow", "UH")]);
        odd.sentence.tokens[0] = "BEGIN".into();
        let v = space.transform(&odd).unwrap();
        assert_eq!(v.entries.len(), 1);
        assert_eq!(v.entries[0].0, 0);
    }

    #[test]
    fn longest_training_ending_has_length_one() {
        let space = FeatureSpace::fit(&FeatureConfig::default(), &fit_fixture()).unwrap();
        let v = space.transform(&fit_fixture()[1]).unwrap();
        assert_eq!(v.get(space.lookup(Family::Length, "LENGTH").unwrap()), 1.0);
    }

    #[test]
    fn min_count_boundary() {
        let mk = |n: usize| -> Vec<TaggedSentence> {
            (0..n).map(|_| tagged(&[("zz", "UH")])).collect()
        };
        let cfg = FeatureConfig {
            char: false,
            ..Default::default()
        };
        let four = FeatureSpace::fit(&cfg, &mk(4)).unwrap();
        assert!(four.lookup(Family::Word, "zz").is_none());
        let five = FeatureSpace::fit(&cfg, &mk(5)).unwrap();
        assert!(five.lookup(Family::Word, "zz").is_some());
    }

    #[test]
    fn fit_requires_data_and_transform_requires_fit() {
        assert!(matches!(
            FeatureSpace::fit(&FeatureConfig::default(), &[]),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            FeatureSpace::default().transform(&fit_fixture()[0]),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn fit_matches_independent_count_oracle() {
        // Twenty endings, counted by hand-rolled loops rather than the
        // library's n-gram helpers.
        let words = ["He", "She", "slept", "ran", "the", "dog", "home", "."];
        let tags = ["PRP", "PRP", "VBD", "VBD", "DT", "NN", "RB", "."];
        let mut sentences = Vec::new();
        for i in 0..20usize {
            let len = 2 + i % 4;
            let pairs: Vec<(&str, &str)> = (0..len)
                .map(|j| {
                    let k = (i * 3 + j * 5) % words.len();
                    (words[k], tags[k])
                })
                .collect();
            sentences.push(tagged(&pairs));
        }
        let cfg = FeatureConfig::default();
        let space = FeatureSpace::fit(&cfg, &sentences).unwrap();

        let mut oracle: HashMap<(Family, String), usize> = HashMap::new();
        for s in &sentences {
            let seq: Vec<String> = s
                .tokens()
                .iter()
                .zip(&s.tags)
                .map(|(t, g)| {
                    let content = ["NN", "VB", "JJ", "RB"].iter().any(|p| g.starts_with(p));
                    if content { g.clone() } else { t.clone() }
                })
                .collect();
            for a in 0..seq.len() {
                for b in a + 1..=seq.len().min(a + 5) {
                    *oracle.entry((Family::Word, seq[a..b].join(" "))).or_default() += 1;
                }
            }
            let surface: Vec<char> = s.sentence.surface().chars().collect();
            let mut a = 0;
            while a + 4 <= surface.len() {
                let g: String = surface[a..a + 4].iter().collect();
                *oracle.entry((Family::Char, g)).or_default() += 1;
                a += 1;
            }
        }
        let mut expected: Vec<(Family, String)> = oracle
            .into_iter()
            .filter(|(_, c)| *c >= 5)
            .map(|(k, _)| k)
            .collect();
        expected.push((Family::Length, "LENGTH".into()));
        expected.sort();
        let got: Vec<(Family, String)> = space
            .entries()
            .iter()
            .map(|e| (e.family, e.feature.clone()))
            .collect();
        assert_eq!(got, expected);
        for s in &sentences {
            let v = space.transform(s).unwrap();
            assert!(v.entries.iter().all(|&(_, x)| (0.0..=1.0).contains(&x)));
        }
    }

    #[test]
    fn fitting_set_never_needs_clipping() {
        let space = FeatureSpace::fit(&small_config(), &fit_fixture()).unwrap();
        for s in fit_fixture() {
            for (i, raw) in space.raw_values(&s).unwrap() {
                let e = &space.entries()[i];
                assert!(raw >= e.min && raw <= e.max);
            }
        }
    }

    #[test]
    fn binary_mode_caps_counts() {
        let cfg = FeatureConfig {
            binary: true,
            min_count: 1,
            char: false,
            ..Default::default()
        };
        let s = tagged(&[("the", "DT"), ("the", "DT"), ("the", "DT")]);
        let space = FeatureSpace::fit(&cfg, std::slice::from_ref(&s)).unwrap();
        let i = space.lookup(Family::Word, "the").unwrap();
        assert_eq!(space.entries()[i].max, 1.0);
        let raw = space.raw_values(&s).unwrap();
        assert!(raw.iter().any(|&(j, v)| j == i && v == 1.0));
    }

    #[test]
    fn jsonl_round_trip() {
        let space = FeatureSpace::fit(&FeatureConfig::default(), &fit_fixture()).unwrap();
        let text = space.to_jsonl().unwrap();
        let back = FeatureSpace::from_jsonl(&text).unwrap();
        assert_eq!(back, space);
        assert_eq!(back.fingerprint(), space.fingerprint());
        assert!(FeatureSpace::from_jsonl("{\"format\":\"other\"}").is_err());
    }

    #[test]
    fn start_never_in_char_ngrams() {
        let space = FeatureSpace::fit(
            &FeatureConfig { min_count: 1, ..Default::default() },
            &fit_fixture(),
        )
        .unwrap();
        assert!(space
            .entries()
            .iter()
            .filter(|e| e.family == Family::Char)
            .all(|e| !e.feature.contains("STAR")));
        assert!(space.lookup(Family::Word, "START He").is_some());
    }
}
