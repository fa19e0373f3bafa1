//! Stylometric classification of story endings.
//!
//! The crate detects which writing task produced a story ending (an
//! author's own ending, a coherent ending for someone else's story, or a
//! deliberately wrong one) from style features alone, applies the resulting
//! classifier to the story cloze task, and combines it with language-model
//! PMI scores.
//!
//! Modules, bottom up:
//! - [`corpus`]: CSV ingestion, splits and experiment datasets
//! - [`textproc`]: tokenizer and averaged-perceptron POS tagger
//! - [`features`]: length, backoff word n-grams and character n-grams
//! - [`linmodel`]: L2-regularized logistic regression
//! - [`langmodel`]: Kneser-Ney and LSTM language models, PMI scoring
//! - [`harness`]: experiments, cloze evaluation, ablations and reports
//! - [`config`]: run configuration shared by the command-line tool
//! - [`pipeline`]: config-driven runs behind each command
//! - [`synthetic`]: generated corpora with planted markers

pub mod config;
pub mod corpus;
pub mod error;
pub mod features;
pub mod harness;
pub mod langmodel;
pub mod linmodel;
pub mod pipeline;
pub mod synthetic;
pub mod textproc;

pub use error::{Error, Result};

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Hex SHA-256 of arbitrary bytes, truncated to 16 bytes.
pub fn fingerprint_bytes(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    hex::encode(&digest[..16])
}

/// Fingerprint of a value's JSON serialization.
pub fn fingerprint<T: Serialize + ?Sized>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("serializable value");
    fingerprint_bytes(&json)
}
