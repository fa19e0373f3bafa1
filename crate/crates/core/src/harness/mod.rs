//! Experiment runners and analyses built on the lower-level modules.
//!
//! Every report type serializes to canonical JSON (sorted keys) with
//! [`to_canonical_json`] and renders as an aligned text table via its
//! `to_text` method.

mod analysis;
mod cloze;
mod combined;

pub use analysis::{
    ablation, salient_features, surface_stats, AblationFamily, AblationReport, ClassStats,
    SalientReport, SurfaceStats,
};
pub use cloze::{
    cloze_decide, cloze_eval, decide, paired_as_cloze, paired_choice_eval, ClozeDecision,
    RulePath,
};
pub use combined::{
    combined_train_eval, lm_cloze_decide, lm_cloze_eval, CombinedReport, LmClozeDecision,
    LmMode, LmScaler,
};

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{DatasetSplit, Ending, Experiment, Label};
use crate::error::{Error, Result};
use crate::features::{FeatureConfig, FeatureSpace, StyleVector};
use crate::linmodel::{grid_search, LinearModel};
use crate::textproc::{Annotator, TaggedSentence};

/// Serializes with object keys in sorted order and a trailing newline.
pub fn to_canonical_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let value = serde_json::to_value(value)?;
    let mut out = serde_json::to_string_pretty(&value)?;
    out.push('\n');
    Ok(out)
}

/// Tags every text in parallel, preserving order.
pub fn annotate_texts<S: AsRef<str> + Sync>(annotator: &Annotator, texts: &[S]) -> Result<Vec<TaggedSentence>> {
    texts.par_iter().map(|t| annotator.annotate(t.as_ref())).collect()
}

pub fn annotate_endings(annotator: &Annotator, endings: &[Ending]) -> Result<Vec<TaggedSentence>> {
    endings.par_iter().map(|e| annotator.annotate(&e.text)).collect()
}

/// Binary targets for an experiment; any other label is an error.
pub fn labels_for(experiment: Experiment, endings: &[Ending]) -> Result<Vec<bool>> {
    endings
        .iter()
        .map(|e| {
            if e.label == experiment.positive() {
                Ok(true)
            } else if e.label == experiment.negative() {
                Ok(false)
            } else {
                Err(Error::InvalidInput(format!(
                    "{} ending from {} does not belong to {}",
                    e.label.name(),
                    e.source_id,
                    experiment.id()
                )))
            }
        })
        .collect()
}

/// A fitted feature space with a model trained on it.
#[derive(Debug, Clone)]
pub struct StyleClassifier {
    pub space: FeatureSpace,
    pub model: LinearModel,
    /// `(lambda, dev accuracy)` for every grid point.
    pub grid_scores: Vec<(f64, f64)>,
}

impl StyleClassifier {
    /// Fits the features on `train`, then picks lambda on `dev`.
    pub fn fit(
        config: &FeatureConfig,
        train: &[TaggedSentence],
        train_y: &[bool],
        dev: &[TaggedSentence],
        dev_y: &[bool],
        grid: &[f64],
    ) -> Result<StyleClassifier> {
        let space = FeatureSpace::fit(config, train)?;
        let train_x = space.transform_all(train)?;
        let dev_x = space.transform_all(dev)?;
        let result = grid_search(&train_x, train_y, &dev_x, dev_y, grid)?;
        Ok(StyleClassifier {
            model: result.model.bind(space.fingerprint()),
            grid_scores: result.scores,
            space,
        })
    }

    pub fn vector(&self, sentence: &TaggedSentence) -> Result<StyleVector> {
        self.space.transform(sentence)
    }

    /// Posterior of the positive class.
    pub fn posterior(&self, sentence: &TaggedSentence) -> Result<f64> {
        self.model.predict_proba(&self.space.transform(sentence)?)
    }

    pub fn accuracy(&self, sentences: &[TaggedSentence], ys: &[bool]) -> Result<f64> {
        self.model.accuracy(&self.space.transform_all(sentences)?, ys)
    }

    pub fn selected_lambda(&self) -> f64 {
        self.model.lambda
    }
}

/// Tagged and labeled endings of one split part.
#[derive(Debug, Clone)]
pub struct LabeledPart {
    pub sentences: Vec<TaggedSentence>,
    pub labels: Vec<bool>,
}

impl LabeledPart {
    pub fn new(experiment: Experiment, annotator: &Annotator, endings: &[Ending]) -> Result<Self> {
        Ok(LabeledPart {
            labels: labels_for(experiment, endings)?,
            sentences: annotate_endings(annotator, endings)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldReport {
    pub fold: usize,
    pub accuracy: f64,
    pub selected_lambda: f64,
    pub grid: Vec<(f64, f64)>,
    pub dataset_fingerprint: String,
    pub space_fingerprint: String,
    pub feature_count: usize,
    pub sizes: [usize; 3],
}

/// Fits on train, tunes on dev, scores test.
pub fn run_fold(
    experiment: Experiment,
    fold: usize,
    split: &DatasetSplit,
    features: &FeatureConfig,
    grid: &[f64],
    annotator: &Annotator,
) -> Result<FoldReport> {
    if split.test.is_empty() {
        return Err(Error::InsufficientData(format!("fold {fold} has no test endings")));
    }
    let parts = [
        LabeledPart::new(experiment, annotator, &split.train)?,
        LabeledPart::new(experiment, annotator, &split.dev)?,
        LabeledPart::new(experiment, annotator, &split.test)?,
    ];
    run_tagged_fold(fold, split, &parts, features, grid)
}

/// [`run_fold`] on already annotated train, dev and test parts.
pub(crate) fn run_tagged_fold(
    fold: usize,
    split: &DatasetSplit,
    parts: &[LabeledPart; 3],
    features: &FeatureConfig,
    grid: &[f64],
) -> Result<FoldReport> {
    let [train, dev, test] = parts;
    let clf = StyleClassifier::fit(
        features,
        &train.sentences,
        &train.labels,
        &dev.sentences,
        &dev.labels,
        grid,
    )?;
    Ok(FoldReport {
        fold,
        accuracy: clf.accuracy(&test.sentences, &test.labels)?,
        selected_lambda: clf.selected_lambda(),
        grid: clf.grid_scores.clone(),
        dataset_fingerprint: split.fingerprint(),
        space_fingerprint: clf.space.fingerprint(),
        feature_count: clf.space.dim(),
        sizes: [split.train.len(), split.dev.len(), split.test.len()],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub positive: Label,
    pub negative: Label,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    pub selected_lambdas: Vec<f64>,
    pub dataset_fingerprints: Vec<String>,
    pub folds: Vec<FoldReport>,
    pub config: serde_json::Value,
}

impl ExperimentReport {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "experiment {} ({} vs {})\n{:>4}  {:>8}  {:>8}  {:>8}  {:>6}  {:>6}  {:>6}  {}\n",
            self.experiment,
            self.positive.name(),
            self.negative.name(),
            "fold",
            "accuracy",
            "lambda",
            "features",
            "train",
            "dev",
            "test",
            "dataset",
        );
        for f in &self.folds {
            out.push_str(&format!(
                "{:>4}  {:>8.4}  {:>8}  {:>8}  {:>6}  {:>6}  {:>6}  {}\n",
                f.fold,
                f.accuracy,
                format_lambda(f.selected_lambda),
                f.feature_count,
                f.sizes[0],
                f.sizes[1],
                f.sizes[2],
                f.dataset_fingerprint,
            ));
        }
        out.push_str(&format!("mean  {:>8.4}\n", self.mean_accuracy));
        out
    }
}

pub(crate) fn format_lambda(lambda: f64) -> String {
    format!("{lambda:e}")
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Runs every fold (in parallel) and averages the test accuracies.
pub fn run_experiment(
    experiment: Experiment,
    folds: &[DatasetSplit],
    features: &FeatureConfig,
    grid: &[f64],
    annotator: &Annotator,
    config: serde_json::Value,
) -> Result<ExperimentReport> {
    if folds.is_empty() {
        return Err(Error::InsufficientData(format!("{} has no folds", experiment.id())));
    }
    let reports: Vec<FoldReport> = folds
        .par_iter()
        .enumerate()
        .map(|(i, split)| run_fold(experiment, i, split, features, grid, annotator))
        .collect::<Result<_>>()?;
    let fold_accuracies: Vec<f64> = reports.iter().map(|f| f.accuracy).collect();
    Ok(ExperimentReport {
        experiment: experiment.id().to_string(),
        positive: experiment.positive(),
        negative: experiment.negative(),
        mean_accuracy: mean(&fold_accuracies),
        fold_accuracies,
        selected_lambdas: reports.iter().map(|f| f.selected_lambda).collect(),
        dataset_fingerprints: reports.iter().map(|f| f.dataset_fingerprint.clone()).collect(),
        folds: reports,
        config,
    })
}

/// Trains the right-vs-wrong classifier used by the cloze evaluations.
pub fn train_cloze_classifier(
    split: &DatasetSplit,
    features: &FeatureConfig,
    grid: &[f64],
    annotator: &Annotator,
) -> Result<StyleClassifier> {
    let exp = Experiment::RightVsWrong;
    let train = LabeledPart::new(exp, annotator, &split.train)?;
    let dev = LabeledPart::new(exp, annotator, &split.dev)?;
    StyleClassifier::fit(features, &train.sentences, &train.labels, &dev.sentences, &dev.labels, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textproc::TaggedTokens;

    fn toy_annotator(words: &[&str]) -> Annotator {
        let sentences: Vec<TaggedTokens> = words
            .iter()
            .map(|w| {
                let toks: Vec<String> = w.split(' ').map(String::from).collect();
                let tags = toks.iter().map(|_| "NN".to_string()).collect();
                (toks, tags)
            })
            .collect();
        Annotator::pretagged(&sentences).unwrap()
    }

    #[test]
    fn canonical_json_sorts_keys() {
        #[derive(Serialize)]
        struct S {
            zeta: u8,
            alpha: u8,
        }
        let json = to_canonical_json(&S { zeta: 1, alpha: 2 }).unwrap();
        assert!(json.find("alpha").unwrap() < json.find("zeta").unwrap());
        assert!(json.ends_with('\n'));
    }

    #[test]
    fn labels_follow_experiment_classes() {
        let e = |l| Ending::new("x".into(), l, "s".into());
        let ys = labels_for(Experiment::OriginalVsWrong, &[e(Label::Original), e(Label::Wrong)]).unwrap();
        assert_eq!(ys, [true, false]);
        assert!(labels_for(Experiment::OriginalVsWrong, &[e(Label::Right)]).is_err());
    }

    #[test]
    fn mean_matches_folds() {
        assert_eq!(mean(&[0.5, 1.0, 0.75]), 0.75);
        assert_eq!(mean(&[]), 0.0);
    }

    #[test]
    fn annotation_preserves_order() {
        let a = toy_annotator(&["a b .", "c ."]);
        let tagged = annotate_texts(&a, &["c .", "a b ."]).unwrap();
        assert_eq!(tagged[0].tokens().len(), 3);
        assert_eq!(tagged[1].tokens().len(), 4);
    }
}
