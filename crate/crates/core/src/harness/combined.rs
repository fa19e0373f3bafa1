use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{annotate_endings, decide, labels_for, ClozeDecision};
use crate::corpus::{Choice, ClozeInstance, DatasetSplit, Ending, Experiment};
use crate::error::{Error, Result};
use crate::features::{FeatureConfig, FeatureSpace, StyleVector};
use crate::langmodel::{pmi, LanguageModel, PmiScore};
use crate::linmodel::grid_search;
use crate::textproc::Annotator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LmMode {
    /// Compare `log p(ending | story)`.
    ConditionalOnly,
    /// Compare `log p(ending | story) - log p(ending)`.
    Pmi,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LmClozeDecision {
    pub id: String,
    pub chosen: Choice,
    pub scores: [PmiScore; 2],
}

fn score_ending<L: LanguageModel + ?Sized>(lm: &L, context: &[String], ending: &str) -> Result<PmiScore> {
    let vocab = lm.vocab();
    pmi(lm, &vocab.encode_sentences(context), &vocab.encode_sentence(ending))
}

pub fn lm_cloze_decide<L: LanguageModel + ?Sized>(
    lm: &L,
    instance: &ClozeInstance,
    mode: LmMode,
) -> Result<LmClozeDecision> {
    let a = score_ending(lm, &instance.context, &instance.ending_a)?;
    let b = score_ending(lm, &instance.context, &instance.ending_b)?;
    let (sa, sb) = match mode {
        LmMode::ConditionalOnly => (a.log_conditional, b.log_conditional),
        LmMode::Pmi => (a.log_ratio, b.log_ratio),
    };
    Ok(LmClozeDecision {
        id: instance.id.clone(),
        chosen: if sb > sa { Choice::B } else { Choice::A },
        scores: [a, b],
    })
}

pub fn lm_cloze_eval<L: LanguageModel + ?Sized>(lm: &L, instances: &[ClozeInstance], mode: LmMode) -> Result<f64> {
    super::cloze_eval(|inst| lm_cloze_decide(lm, inst, mode).map(|d| d.chosen), instances)
}

/// Min-max statistics for the three LM features, fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmScaler {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl LmScaler {
    pub fn fit(rows: &[[f64; 3]]) -> Result<LmScaler> {
        if rows.is_empty() {
            return Err(Error::InsufficientData("no rows to fit LM feature scaling".into()));
        }
        let mut min = [f64::INFINITY; 3];
        let mut max = [f64::NEG_INFINITY; 3];
        for row in rows {
            for j in 0..3 {
                if !row[j].is_finite() {
                    return Err(Error::DegenerateData(format!("non-finite LM feature {}", row[j])));
                }
                min[j] = min[j].min(row[j]);
                max[j] = max[j].max(row[j]);
            }
        }
        Ok(LmScaler { min, max })
    }

    pub fn apply(&self, row: &[f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for j in 0..3 {
            let span = self.max[j] - self.min[j];
            if span > 0.0 {
                out[j] = ((row[j] - self.min[j]) / span).clamp(0.0, 1.0);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CombinedReport {
    pub accuracy: f64,
    pub selected_lambda: f64,
    pub grid: Vec<(f64, f64)>,
    pub style_dim: usize,
    /// Weights of the conditional, marginal and ratio features.
    pub lm_weights: [f64; 3],
    pub scaler: LmScaler,
    pub dataset_fingerprint: String,
    pub space_fingerprint: String,
    pub decisions: Vec<ClozeDecision>,
}

impl CombinedReport {
    pub fn to_text(&self) -> String {
        format!(
            "combined style + LM model\n{:<18}{:.4}\n{:<18}{}\n{:<18}{}\n{:<18}{:.4} {:.4} {:.4}\n{:<18}{}\n",
            "accuracy",
            self.accuracy,
            "lambda",
            super::format_lambda(self.selected_lambda),
            "style features",
            self.style_dim,
            "lm weights",
            self.lm_weights[0],
            self.lm_weights[1],
            self.lm_weights[2],
            "dataset",
            self.dataset_fingerprint,
        )
    }
}

fn lm_rows<L: LanguageModel + ?Sized>(
    lm: &L,
    endings: &[Ending],
    contexts: &HashMap<&str, &[String; 4]>,
) -> Result<Vec<[f64; 3]>> {
    endings
        .par_iter()
        .map(|e| {
            let ctx = contexts.get(e.source_id.as_str()).ok_or_else(|| {
                Error::InvalidInput(format!("no story context for ending of {}", e.source_id))
            })?;
            Ok(score_ending(lm, &ctx[..], &e.text)?.as_features())
        })
        .collect()
}

/// Style vectors extended with the three scaled LM features.
fn extended(space: &FeatureSpace, tagged: &[crate::textproc::TaggedSentence], lm: &[[f64; 3]], scaler: &LmScaler) -> Result<Vec<StyleVector>> {
    tagged
        .iter()
        .zip(lm)
        .map(|(t, row)| Ok(space.transform(t)?.extended(&scaler.apply(row))))
        .collect()
}

/// Trains right-vs-wrong on style plus LM features and evaluates it on
/// `test` with the two-step cloze rule. `contexts` must cover every
/// instance the training and dev endings come from.
pub fn combined_train_eval<L: LanguageModel + ?Sized>(
    split: &DatasetSplit,
    contexts: &[ClozeInstance],
    test: &[ClozeInstance],
    lm: &L,
    features: &FeatureConfig,
    grid: &[f64],
    annotator: &Annotator,
) -> Result<CombinedReport> {
    if test.is_empty() {
        return Err(Error::InsufficientData("no cloze test instances".into()));
    }
    let exp = Experiment::RightVsWrong;
    let context_map: HashMap<&str, &[String; 4]> =
        contexts.iter().map(|i| (i.id.as_str(), &i.context)).collect();

    let train_tagged = annotate_endings(annotator, &split.train)?;
    let dev_tagged = annotate_endings(annotator, &split.dev)?;
    let train_y = labels_for(exp, &split.train)?;
    let dev_y = labels_for(exp, &split.dev)?;
    let train_lm = lm_rows(lm, &split.train, &context_map)?;
    let dev_lm = lm_rows(lm, &split.dev, &context_map)?;

    let space = FeatureSpace::fit(features, &train_tagged)?;
    let scaler = LmScaler::fit(&train_lm)?;
    let train_x = extended(&space, &train_tagged, &train_lm, &scaler)?;
    let dev_x = extended(&space, &dev_tagged, &dev_lm, &scaler)?;
    let result = grid_search(&train_x, &train_y, &dev_x, &dev_y, grid)?;
    let model = result.model;

    let decisions: Vec<ClozeDecision> = test
        .par_iter()
        .map(|inst| {
            let mut p = [0.0; 2];
            for (slot, which) in [Choice::A, Choice::B].into_iter().enumerate() {
                let tagged = annotator.annotate(inst.ending(which))?;
                let row = score_ending(lm, &inst.context, inst.ending(which))?.as_features();
                let x = space.transform(&tagged)?.extended(&scaler.apply(&row));
                p[slot] = model.predict_proba(&x)?;
            }
            Ok(decide(&inst.id, p[0], p[1]))
        })
        .collect::<Result<_>>()?;
    let correct = test
        .iter()
        .zip(&decisions)
        .filter(|(i, d)| i.gold == d.chosen)
        .count();

    let d = space.dim();
    Ok(CombinedReport {
        accuracy: correct as f64 / test.len() as f64,
        selected_lambda: result.selected_lambda,
        grid: result.scores,
        style_dim: d,
        lm_weights: [model.weights[d], model.weights[d + 1], model.weights[d + 2]],
        scaler,
        dataset_fingerprint: split.fingerprint(),
        space_fingerprint: space.fingerprint(),
        decisions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaler_maps_training_range_to_unit_interval() {
        let s = LmScaler::fit(&[[-10.0, -4.0, 1.0], [-2.0, -4.0, 3.0]]).unwrap();
        assert_eq!(s.apply(&[-10.0, -4.0, 3.0]), [0.0, 0.0, 1.0]);
        assert_eq!(s.apply(&[-6.0, 0.0, 10.0]), [0.5, 0.0, 1.0]);
        assert_eq!(s.apply(&[-20.0, -4.0, 0.0]), [0.0, 0.0, 0.0]);
        assert!(LmScaler::fit(&[]).is_err());
        assert!(LmScaler::fit(&[[f64::NAN, 0.0, 0.0]]).is_err());
    }
}
