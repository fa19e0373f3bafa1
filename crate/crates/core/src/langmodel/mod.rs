//! Language models for story scoring and the PMI ratio
//! `log p(ending | story) - log p(ending)`.
//!
//! Stories are encoded as `<s> s1 </s> s2 </s> ... s5 </s>`. A model's start
//! state has consumed `<s>`; context and ending token ids never contain it.

mod kn;
mod neural;
mod vocab;

pub use kn::NGramLm;
pub use neural::{NeuralConfig, NeuralLm, TrainingLog, PARAM_BLOCKS};
pub use vocab::{story_tokens, Vocabulary, BOS, BOUNDARY, UNK};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Common scoring interface of the n-gram and recurrent models.
pub trait LanguageModel: Sync {
    fn vocab(&self) -> &Vocabulary;

    /// Distribution over all vocabulary ids for the token following
    /// `<s> history`. `<s>` itself always has probability zero for the
    /// n-gram model and is never a target for either model.
    fn next_distribution(&self, history: &[u32]) -> Result<Vec<f64>>;

    /// Sum of per-token log-probabilities of `tokens`, optionally after
    /// `context`. Without context the model starts fresh.
    fn seq_logprob(&self, tokens: &[u32], context: Option<&[u32]>) -> Result<f64>;
}

/// Rejects ids the model cannot score.
pub(crate) fn check_ids(vocab: &Vocabulary, ids: &[u32]) -> Result<()> {
    for &id in ids {
        if id as usize >= vocab.len() || id == BOS {
            return Err(Error::InvalidInput(format!(
                "token id {id} is not a scorable vocabulary id"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmiScore {
    pub log_conditional: f64,
    pub log_marginal: f64,
    pub log_ratio: f64,
}

impl PmiScore {
    pub fn new(log_conditional: f64, log_marginal: f64) -> Self {
        PmiScore {
            log_conditional,
            log_marginal,
            log_ratio: log_conditional - log_marginal,
        }
    }

    pub fn as_features(&self) -> [f64; 3] {
        [self.log_conditional, self.log_marginal, self.log_ratio]
    }
}

pub fn pmi<L: LanguageModel + ?Sized>(lm: &L, context: &[u32], ending: &[u32]) -> Result<PmiScore> {
    if ending.is_empty() {
        return Err(Error::InvalidInput("empty ending".into()));
    }
    let conditional = lm.seq_logprob(ending, Some(context))?;
    let marginal = lm.seq_logprob(ending, None)?;
    Ok(PmiScore::new(conditional, marginal))
}
