//! Interpolated Kneser-Ney n-gram model with a single absolute discount.
//!
//! The highest order uses raw counts; lower orders use continuation counts
//! (number of distinct left extensions), except for n-grams that begin with
//! `<s>`, which cannot be extended and keep raw counts. The recursion bottoms
//! out in the uniform distribution over every id except `<s>`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::vocab::{Vocabulary, BOS};
use super::{check_ids, LanguageModel};
use crate::error::{Error, Result};

const FORMAT_NAME: &str = "stylecloze-kn";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct HistoryStats {
    total: f64,
    types: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NGramLm {
    vocab: Vocabulary,
    order: usize,
    discount: f64,
    /// Raw counts per order (index 0 = unigrams).
    counts: Vec<HashMap<Vec<u32>, u64>>,
    /// Count used in the estimate at each order: raw at the top, continuation below.
    adjusted: Vec<HashMap<Vec<u32>, u64>>,
    histories: Vec<HashMap<Vec<u32>, HistoryStats>>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    order: usize,
    discount: f64,
    vocab: Vocabulary,
}

#[derive(Serialize, Deserialize)]
struct Record {
    ngram: Vec<String>,
    count: u64,
    continuation: u64,
}

impl NGramLm {
    /// Trains on id sequences, each beginning with `<s>`.
    pub fn train(vocab: Vocabulary, sequences: &[Vec<u32>], order: usize, discount: f64) -> Result<NGramLm> {
        if order < 1 {
            return Err(Error::InvalidConfig("n-gram order must be at least 1".into()));
        }
        if !(discount > 0.0 && discount < 1.0) {
            return Err(Error::InvalidConfig(format!("discount must lie in (0, 1), got {discount}")));
        }
        let mut counts = vec![HashMap::new(); order];
        for seq in sequences {
            if seq.first() != Some(&BOS) {
                return Err(Error::InvalidInput("training sequences must start with <s>".into()));
            }
            check_ids(&vocab, &seq[1..])?;
            for i in 1..seq.len() {
                for k in 1..=order.min(i + 1) {
                    *counts[k - 1].entry(seq[i + 1 - k..=i].to_vec()).or_insert(0) += 1;
                }
            }
        }
        Ok(Self::from_counts(vocab, order, discount, counts))
    }

    fn from_counts(
        vocab: Vocabulary,
        order: usize,
        discount: f64,
        counts: Vec<HashMap<Vec<u32>, u64>>,
    ) -> NGramLm {
        let mut adjusted: Vec<HashMap<Vec<u32>, u64>> = vec![HashMap::new(); order];
        adjusted[order - 1] = counts[order - 1].clone();
        for k in 1..order {
            for (g, &c) in &counts[k - 1] {
                if g[0] == BOS {
                    adjusted[k - 1].insert(g.clone(), c);
                }
            }
            for g in counts[k].keys() {
                *adjusted[k - 1].entry(g[1..].to_vec()).or_insert(0) += 1;
            }
        }
        let mut histories = vec![HashMap::new(); order];
        for (k, level) in adjusted.iter().enumerate() {
            for (g, &c) in level {
                let h: &mut HistoryStats = histories[k].entry(g[..k].to_vec()).or_default();
                h.total += c as f64;
                h.types += 1.0;
            }
        }
        NGramLm {
            vocab,
            order,
            discount,
            counts,
            adjusted,
            histories,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    fn uniform(&self) -> f64 {
        1.0 / (self.vocab.len() - 1) as f64
    }

    /// `p(word | history)` where `history` holds at most `order - 1` ids.
    fn prob(&self, history: &[u32], word: u32) -> f64 {
        if word == BOS {
            return 0.0;
        }
        let mut p = self.uniform();
        for k in 0..=history.len() {
            let h = &history[history.len() - k..];
            let Some(stats) = self.histories[k].get(h) else {
                continue;
            };
            let mut g = h.to_vec();
            g.push(word);
            let c = self.adjusted[k].get(&g).copied().unwrap_or(0) as f64;
            p = (c - self.discount).max(0.0) / stats.total
                + self.discount * stats.types / stats.total * p;
        }
        p
    }

    fn history_of<'a>(&self, full: &'a [u32]) -> &'a [u32] {
        &full[full.len().saturating_sub(self.order - 1)..]
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        let header = Header {
            format: FORMAT_NAME.into(),
            version: FORMAT_VERSION,
            order: self.order,
            discount: self.discount,
            vocab: self.vocab.clone(),
        };
        writeln!(out, "{}", serde_json::to_string(&header)?).unwrap();
        for k in 0..self.order {
            let sorted: BTreeMap<&Vec<u32>, &u64> = self.counts[k].iter().collect();
            for (g, &c) in sorted {
                let rec = Record {
                    ngram: g.iter().map(|&i| self.vocab.token(i).to_string()).collect(),
                    count: c,
                    continuation: self.adjusted[k].get(g).copied().unwrap_or(0),
                };
                writeln!(out, "{}", serde_json::to_string(&rec)?).unwrap();
            }
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<NGramLm> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Header = serde_json::from_str(
            lines.next().ok_or_else(|| Error::Format("empty n-gram model file".into()))?,
        )?;
        if header.format != FORMAT_NAME || header.version != FORMAT_VERSION {
            return Err(Error::Format("unsupported n-gram model format or version".into()));
        }
        if header.order < 1 {
            return Err(Error::Format("n-gram order must be at least 1".into()));
        }
        let vocab = header.vocab.reindexed();
        let mut counts = vec![HashMap::new(); header.order];
        for line in lines {
            let rec: Record = serde_json::from_str(line)?;
            let n = rec.ngram.len();
            if n == 0 || n > header.order {
                return Err(Error::Format(format!("n-gram of length {n} in order-{} model", header.order)));
            }
            let ids: Vec<u32> = rec.ngram.iter().map(|t| vocab.id(t)).collect();
            counts[n - 1].insert(ids, rec.count);
        }
        Ok(Self::from_counts(vocab, header.order, header.discount, counts))
    }
}

impl LanguageModel for NGramLm {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn next_distribution(&self, history: &[u32]) -> Result<Vec<f64>> {
        check_ids(&self.vocab, history)?;
        let mut full = vec![BOS];
        full.extend_from_slice(history);
        let h = self.history_of(&full);
        Ok((0..self.vocab.len() as u32).map(|w| self.prob(h, w)).collect())
    }

    fn seq_logprob(&self, tokens: &[u32], context: Option<&[u32]>) -> Result<f64> {
        if tokens.is_empty() {
            return Err(Error::InvalidInput("cannot score an empty sequence".into()));
        }
        check_ids(&self.vocab, tokens)?;
        let mut full = vec![BOS];
        if let Some(ctx) = context {
            check_ids(&self.vocab, ctx)?;
            full.extend_from_slice(ctx);
        }
        let mut total = 0.0;
        for &t in tokens {
            total += self.prob(self.history_of(&full), t).ln();
            full.push(t);
        }
        Ok(total)
    }
}
