//! Greedy averaged-perceptron part-of-speech tagger.
//!
//! Left-to-right decoding with the usual word-shape and tag-history features.
//! Frequent unambiguous words are tagged from a lexicon and skip the model.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tokenize::{TokenizedSentence, START};
use crate::error::{Error, Result};

/// Tag given to the START token.
pub const SENTINEL_TAG: &str = "-START-";

/// Penn Treebank tags, including punctuation tags.
pub const PENN_TAGS: &[&str] = &[
    "CC", "CD", "DT", "EX", "FW", "IN", "JJ", "JJR", "JJS", "LS", "MD", "NN", "NNS", "NNP",
    "NNPS", "PDT", "POS", "PRP", "PRP$", "RB", "RBR", "RBS", "RP", "SYM", "TO", "UH", "VB",
    "VBD", "VBG", "VBN", "VBP", "VBZ", "WDT", "WP", "WP$", "WRB", ".", ",", ":", "``", "''",
    "-LRB-", "-RRB-", "$", "#", "HYPH", "NFP", "ADD", "AFX", "XX", "_SP",
];

const FORMAT_HEADER: &str = "stylecloze-tagger";
const FORMAT_VERSION: u32 = 1;

const LEXICON_MIN_FREQ: usize = 20;
const LEXICON_MIN_RATIO: f64 = 0.97;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedSentence {
    pub sentence: TokenizedSentence,
    pub tags: Vec<String>,
}

impl TaggedSentence {
    /// Builds a tagged sentence from externally supplied tokens and tags
    /// (no START in the input).
    pub fn from_pretagged(tokens: &[String], tags: &[String]) -> Result<Self> {
        if tokens.len() != tags.len() {
            return Err(Error::InvalidInput(format!(
                "{} tokens but {} tags",
                tokens.len(),
                tags.len()
            )));
        }
        let raw = tokens.join(" ");
        let sentence = super::normalize(tokens.to_vec(), &raw)?;
        let mut all_tags = Vec::with_capacity(tags.len() + 1);
        all_tags.push(SENTINEL_TAG.to_string());
        all_tags.extend(tags.iter().cloned());
        Ok(TaggedSentence {
            sentence,
            tags: all_tags,
        })
    }

    pub fn tokens(&self) -> &[String] {
        &self.sentence.tokens
    }
}

/// A sentence of (token, tag) pairs used for training, without START.
pub type TaggedTokens = (Vec<String>, Vec<String>);

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Tagger {
    classes: Vec<String>,
    weights: HashMap<String, Vec<f64>>,
    lexicon: HashMap<String, String>,
    epochs: usize,
    seed: u64,
}

fn normalize_word(word: &str) -> String {
    if word.chars().all(|c| c.is_ascii_digit() || c == '.' || c == ',') && word.chars().any(|c| c.is_ascii_digit()) {
        "!DIGITS".into()
    } else {
        word.to_lowercase()
    }
}

fn suffix(word: &str, n: usize) -> &str {
    let start = word
        .char_indices()
        .rev()
        .nth(n - 1)
        .map(|(i, _)| i)
        .unwrap_or(0);
    &word[start..]
}

fn prefix1(word: &str) -> &str {
    word.char_indices()
        .nth(1)
        .map(|(i, _)| &word[..i])
        .unwrap_or(word)
}

/// Context: two padding symbols, normalized words, two padding symbols.
fn context_of(words: &[String]) -> Vec<String> {
    let mut ctx = Vec::with_capacity(words.len() + 4);
    ctx.push("-START-".into());
    ctx.push("-START2-".into());
    ctx.extend(words.iter().map(|w| normalize_word(w)));
    ctx.push("-END-".into());
    ctx.push("-END2-".into());
    ctx
}

fn features(i: usize, raw: &str, ctx: &[String], prev: &str, prev2: &str) -> Vec<String> {
    let i = i + 2;
    let word = &ctx[i];
    let shape = if raw.chars().next().is_some_and(char::is_uppercase) {
        "upper"
    } else {
        "lower"
    };
    vec![
        "bias".into(),
        format!("i suffix {}", suffix(word, 3)),
        format!("i suffix2 {}", suffix(word, 2)),
        format!("i pref1 {}", prefix1(word)),
        format!("i shape {shape}"),
        format!("i-1 tag {prev}"),
        format!("i-2 tag {prev2}"),
        format!("i tag+i-2 tag {prev} {prev2}"),
        format!("i word {word}"),
        format!("i-1 tag+i word {prev} {word}"),
        format!("i-1 word {}", ctx[i - 1]),
        format!("i-1 suffix {}", suffix(&ctx[i - 1], 3)),
        format!("i-2 word {}", ctx[i - 2]),
        format!("i+1 word {}", ctx[i + 1]),
        format!("i+1 suffix {}", suffix(&ctx[i + 1], 3)),
        format!("i+2 word {}", ctx[i + 2]),
    ]
}

/// Weight accumulators used only while training.
struct Averager {
    totals: HashMap<String, Vec<f64>>,
    stamps: HashMap<String, Vec<u64>>,
    instances: u64,
}

impl Averager {
    fn bump(&mut self, weights: &mut HashMap<String, Vec<f64>>, feat: &str, class: usize, delta: f64, n_classes: usize) {
        let w = weights
            .entry(feat.to_string())
            .or_insert_with(|| vec![0.0; n_classes]);
        let totals = self
            .totals
            .entry(feat.to_string())
            .or_insert_with(|| vec![0.0; n_classes]);
        let stamps = self
            .stamps
            .entry(feat.to_string())
            .or_insert_with(|| vec![0; n_classes]);
        totals[class] += (self.instances - stamps[class]) as f64 * w[class];
        stamps[class] = self.instances;
        w[class] += delta;
    }

    fn finish(mut self, weights: &mut HashMap<String, Vec<f64>>) {
        for (feat, w) in weights.iter_mut() {
            let totals = self.totals.remove(feat).unwrap_or_else(|| vec![0.0; w.len()]);
            let stamps = self.stamps.remove(feat).unwrap_or_else(|| vec![0; w.len()]);
            for c in 0..w.len() {
                let total = totals[c] + (self.instances - stamps[c]) as f64 * w[c];
                w[c] = total / self.instances.max(1) as f64;
            }
        }
        weights.retain(|_, w| w.iter().any(|&x| x != 0.0));
    }
}

impl Tagger {
    pub fn is_trained(&self) -> bool {
        !self.classes.is_empty()
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn epochs(&self) -> usize {
        self.epochs
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn predict(&self, feats: &[String]) -> usize {
        let mut scores = vec![0.0; self.classes.len()];
        for f in feats {
            if let Some(w) = self.weights.get(f) {
                for (s, x) in scores.iter_mut().zip(w) {
                    *s += x;
                }
            }
        }
        let mut best = 0;
        for (c, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = c;
            }
        }
        best
    }

    fn class_index(&self, tag: &str) -> Option<usize> {
        self.classes.binary_search_by(|c| c.as_str().cmp(tag)).ok()
    }

    fn tag_words(&self, words: &[String]) -> Vec<String> {
        let ctx = context_of(words);
        let mut prev = "-START-".to_string();
        let mut prev2 = "-START2-".to_string();
        let mut out = Vec::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            let tag = match self.lexicon.get(w.as_str()) {
                Some(t) => t.clone(),
                None => {
                    let feats = features(i, w, &ctx, &prev, &prev2);
                    self.classes[self.predict(&feats)].clone()
                }
            };
            prev2 = std::mem::replace(&mut prev, tag.clone());
            out.push(tag);
        }
        out
    }

    /// Tags one sentence. START gets [`SENTINEL_TAG`].
    pub fn tag(&self, sentence: &TokenizedSentence) -> Result<TaggedSentence> {
        if !self.is_trained() {
            return Err(Error::InvalidState("tagger has not been trained".into()));
        }
        if sentence.tokens.first().map(String::as_str) != Some(START) {
            return Err(Error::InvalidInput("sentence must begin with START".into()));
        }
        let mut tags = Vec::with_capacity(sentence.tokens.len());
        tags.push(SENTINEL_TAG.to_string());
        tags.extend(self.tag_words(sentence.words()));
        Ok(TaggedSentence {
            sentence: sentence.clone(),
            tags,
        })
    }

    pub fn tag_text(&self, raw: &str) -> Result<TaggedSentence> {
        self.tag(&TokenizedSentence::from_text(raw))
    }

    /// Token-level accuracy against gold tags.
    pub fn accuracy(&self, corpus: &[TaggedTokens]) -> Result<f64> {
        if !self.is_trained() {
            return Err(Error::InvalidState("tagger has not been trained".into()));
        }
        let (mut right, mut total) = (0usize, 0usize);
        for (words, gold) in corpus {
            let guess = self.tag_words(words);
            right += guess.iter().zip(gold).filter(|(a, b)| a == b).count();
            total += gold.len();
        }
        Ok(if total == 0 { 1.0 } else { right as f64 / total as f64 })
    }

    pub fn train(corpus: &[TaggedTokens], epochs: usize, seed: u64) -> Result<Tagger> {
        if corpus.iter().all(|(w, _)| w.is_empty()) {
            return Err(Error::InsufficientData("empty tagged corpus".into()));
        }
        let mut counts: BTreeMap<&str, BTreeMap<&str, usize>> = BTreeMap::new();
        let mut classes: Vec<String> = Vec::new();
        for (words, tags) in corpus {
            if words.len() != tags.len() {
                return Err(Error::InvalidInput(format!(
                    "sentence has {} tokens but {} tags",
                    words.len(),
                    tags.len()
                )));
            }
            for (w, t) in words.iter().zip(tags) {
                if t == SENTINEL_TAG {
                    return Err(Error::InvalidInput(format!("reserved tag {t} in corpus")));
                }
                *counts.entry(w).or_default().entry(t).or_default() += 1;
                classes.push(t.clone());
            }
        }
        classes.sort();
        classes.dedup();

        let mut lexicon = HashMap::new();
        for (word, tags) in &counts {
            let n: usize = tags.values().sum();
            let (best, &m) = tags.iter().max_by_key(|(t, &c)| (c, std::cmp::Reverse(*t))).unwrap();
            if n >= LEXICON_MIN_FREQ && m as f64 / n as f64 >= LEXICON_MIN_RATIO {
                lexicon.insert(word.to_string(), best.to_string());
            }
        }

        let mut tagger = Tagger {
            classes,
            weights: HashMap::new(),
            lexicon,
            epochs,
            seed,
        };
        let n_classes = tagger.classes.len();
        let mut avg = Averager {
            totals: HashMap::new(),
            stamps: HashMap::new(),
            instances: 0,
        };
        let mut order: Vec<usize> = (0..corpus.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..epochs {
            order.shuffle(&mut rng);
            for &s in &order {
                let (words, gold) = &corpus[s];
                let ctx = context_of(words);
                let mut prev = "-START-".to_string();
                let mut prev2 = "-START2-".to_string();
                for (i, w) in words.iter().enumerate() {
                    let guess = match tagger.lexicon.get(w.as_str()) {
                        Some(t) => t.clone(),
                        None => {
                            let feats = features(i, w, &ctx, &prev, &prev2);
                            let guess = tagger.predict(&feats);
                            let truth = tagger.class_index(&gold[i]).unwrap();
                            avg.instances += 1;
                            if guess != truth {
                                for f in &feats {
                                    avg.bump(&mut tagger.weights, f, truth, 1.0, n_classes);
                                    avg.bump(&mut tagger.weights, f, guess, -1.0, n_classes);
                                }
                            }
                            tagger.classes[guess].clone()
                        }
                    };
                    prev2 = std::mem::replace(&mut prev, guess);
                }
            }
        }
        avg.finish(&mut tagger.weights);
        Ok(tagger)
    }

    /// Versioned flat-text model: header, metadata, lexicon, then
    /// `w<TAB>feature<TAB>tag<TAB>weight` triples in sorted order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{FORMAT_HEADER}\t{FORMAT_VERSION}").unwrap();
        writeln!(out, "epochs\t{}", self.epochs).unwrap();
        writeln!(out, "seed\t{}", self.seed).unwrap();
        writeln!(out, "classes\t{}", self.classes.join("\t")).unwrap();
        let lexicon: BTreeMap<_, _> = self.lexicon.iter().collect();
        for (word, tag) in lexicon {
            writeln!(out, "lex\t{word}\t{tag}").unwrap();
        }
        let weights: BTreeMap<_, _> = self.weights.iter().collect();
        for (feat, w) in weights {
            for (c, &x) in w.iter().enumerate() {
                if x != 0.0 {
                    writeln!(out, "w\t{feat}\t{}\t{x:?}", self.classes[c]).unwrap();
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Tagger> {
        let bad = |line: usize, why: &str| Error::Format(format!("tagger model line {line}: {why}"));
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, header) = lines.next().ok_or_else(|| bad(1, "empty model"))?;
        if header != format!("{FORMAT_HEADER}\t{FORMAT_VERSION}") {
            return Err(bad(1, "unsupported header or version"));
        }
        let mut tagger = Tagger::default();
        for (n, line) in lines {
            let fields: Vec<&str> = line.split('\t').collect();
            match fields.as_slice() {
                ["epochs", v] => tagger.epochs = v.parse().map_err(|_| bad(n, "bad epochs"))?,
                ["seed", v] => tagger.seed = v.parse().map_err(|_| bad(n, "bad seed"))?,
                ["classes", rest @ ..] => {
                    tagger.classes = rest.iter().map(|s| s.to_string()).collect();
                    if !tagger.classes.windows(2).all(|w| w[0] < w[1]) {
                        return Err(bad(n, "classes must be sorted and unique"));
                    }
                }
                ["lex", word, tag] => {
                    tagger.lexicon.insert(word.to_string(), tag.to_string());
                }
                ["w", feat, tag, weight] => {
                    let c = tagger.class_index(tag).ok_or_else(|| bad(n, "unknown tag"))?;
                    let x: f64 = weight.parse().map_err(|_| bad(n, "bad weight"))?;
                    let n_classes = tagger.classes.len();
                    tagger
                        .weights
                        .entry(feat.to_string())
                        .or_insert_with(|| vec![0.0; n_classes])[c] = x;
                }
                [""] => {}
                _ => return Err(bad(n, "unrecognized record")),
            }
        }
        if !tagger.is_trained() {
            return Err(Error::Format("tagger model declares no classes".into()));
        }
        Ok(tagger)
    }
}
