//! End-to-end runs driven by a [`RunConfig`]: load inputs, build datasets,
//! call the harness and package the result as text plus canonical JSON.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{Input, LmKind, RunConfig};
use crate::corpus::{
    build_experiment_dataset, cloze_endings, cloze_parts, load_cloze_set, load_paired_choice,
    load_roc_stories, split_cloze_endings, ClozeInstance, DatasetSplit, Experiment, Label, Story,
};
use crate::error::{Error, Result};
use crate::harness::{
    self, ablation, annotate_texts, cloze_decide, combined_train_eval, lm_cloze_eval,
    paired_as_cloze, paired_choice_eval, run_experiment, salient_features, surface_stats,
    train_cloze_classifier, AblationFamily, ExperimentReport, LabeledPart, LmMode, RulePath,
    StyleClassifier,
};
use crate::langmodel::{story_tokens, LanguageModel, NGramLm, NeuralLm, TrainingLog, Vocabulary};
use crate::textproc::{read_pretagged, Annotator, Tagger};

/// Expected value of a headline number on the official data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Target {
    pub name: &'static str,
    pub expected: f64,
    pub tolerance: f64,
}

impl Target {
    pub const fn new(name: &'static str, expected: f64, tolerance: f64) -> Self {
        Target {
            name,
            expected,
            tolerance,
        }
    }

    pub fn check(&self, observed: f64) -> Check {
        Check {
            name: self.name.to_string(),
            passed: (observed - self.expected).abs() <= self.tolerance,
            detail: format!("{observed:.4} vs {:.4} ± {}", self.expected, self.tolerance),
        }
    }
}

pub mod targets {
    use super::Target;

    pub const EXP1: Target = Target::new("exp1 accuracy", 0.645, 0.015);
    pub const EXP2: Target = Target::new("exp2 mean accuracy", 0.685, 0.02);
    pub const EXP3: Target = Target::new("exp3 mean accuracy", 0.756, 0.02);
    pub const CLOZE: Target = Target::new("cloze style-only accuracy", 0.724, 0.015);
    pub const ABLATE_WORD: Target = Target::new("word-only accuracy", 0.612, 0.02);
    pub const ABLATE_CHAR: Target = Target::new("char-only accuracy", 0.639, 0.02);
    pub const ABLATE_FULL: Target = Target::new("full accuracy", 0.645, 0.015);
    pub const LEN_ORIGINAL: Target = Target::new("original mean length", 11.0, 0.2);
    pub const LEN_RIGHT: Target = Target::new("right mean length", 8.75, 0.2);
    pub const LEN_WRONG: Target = Target::new("wrong mean length", 8.47, 0.2);
    pub const PRP: [Target; 3] = [
        Target::new("original PRP %", 10.1, 0.8),
        Target::new("right PRP %", 9.7, 0.8),
        Target::new("wrong PRP %", 7.4, 0.8),
    ];
    pub const LM_CONDITIONAL: Target = Target::new("conditional-only LM accuracy", 0.55, 0.02);
    pub const LM_PMI: Target = Target::new("PMI LM accuracy", 0.677, 0.02);
    pub const COMBINED: Target = Target::new("combined accuracy", 0.752, 0.02);
    pub const PAIRED: Target = Target::new("paired-choice accuracy", 0.535, 0.035);
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Result of one command.
#[derive(Debug, Clone)]
pub struct Output {
    pub name: String,
    pub text: String,
    pub json: String,
    pub checks: Vec<Check>,
}

impl Output {
    fn new<T: Serialize>(name: &str, text: String, report: &T, checks: Vec<Check>) -> Result<Output> {
        Ok(Output {
            name: name.to_string(),
            text,
            json: harness::to_canonical_json(report)?,
            checks,
        })
    }

    /// Writes `<name>.txt` and `<name>.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        for (ext, body) in [("txt", &self.text), ("json", &self.json)] {
            let path = dir.join(format!("{}.{ext}", self.name));
            std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClozeReport {
    pub accuracy: f64,
    pub selected_lambda: f64,
    pub grid: Vec<(f64, f64)>,
    pub feature_count: usize,
    pub instances: usize,
    pub labels_differ: usize,
    pub flipped: usize,
    pub ties: usize,
    pub dataset_fingerprint: String,
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LmClozeReport {
    pub kind: LmKind,
    pub conditional_accuracy: f64,
    pub pmi_accuracy: f64,
    pub vocab_size: usize,
    pub instances: usize,
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LmTrainReport {
    pub kind: LmKind,
    pub stories: usize,
    pub vocab_size: usize,
    pub artifact: Option<PathBuf>,
    pub log: Option<TrainingLog>,
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedChoiceReport {
    pub accuracy: f64,
    pub retrained: bool,
    pub items: usize,
    pub selected_lambda: f64,
    pub config: serde_json::Value,
}

/// A trained language model of either kind.
pub enum TrainedLm {
    Kn(NGramLm),
    Neural(NeuralLm),
}

impl TrainedLm {
    pub fn as_dyn(&self) -> &dyn LanguageModel {
        match self {
            TrainedLm::Kn(m) => m,
            TrainedLm::Neural(m) => m,
        }
    }
}

fn lm_artifact_exists(kind: LmKind, path: &Path) -> bool {
    match kind {
        LmKind::Kn => path.is_file(),
        LmKind::Neural => path.with_extension("bin").is_file(),
    }
}

/// Commands that run against data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Stats,
    Exp1,
    Exp2,
    Exp3,
    Cloze,
    LmTrain,
    LmCloze,
    Combine,
    Ablate,
    Salient,
    PairedChoice,
}

impl Command {
    /// Inputs that must be configured before the command starts.
    pub fn required_inputs(self, config: &RunConfig) -> Vec<Input> {
        use Input::*;
        let lm_stored = config
            .paths
            .lm_artifact
            .as_deref()
            .is_some_and(|p| lm_artifact_exists(config.lm.kind, p));
        let mut inputs = match self {
            Command::Stats | Command::Exp2 | Command::Exp3 | Command::Salient => vec![ClozeDev, ClozeTest, Roc],
            Command::Exp1 | Command::Cloze | Command::Ablate => vec![ClozeDev, ClozeTest],
            Command::LmTrain => vec![Roc],
            Command::LmCloze => vec![ClozeTest],
            Command::Combine => vec![ClozeDev, ClozeTest],
            Command::PairedChoice if config.retrain => vec![Copa, CopaTrain],
            Command::PairedChoice => vec![Copa, ClozeDev, ClozeTest],
        };
        if matches!(self, Command::LmCloze | Command::Combine) && !lm_stored {
            inputs.push(Roc);
        }
        inputs
    }
}

/// Loads inputs lazily as commands need them.
pub struct Pipeline {
    pub config: RunConfig,
}

impl Pipeline {
    /// Validates the config for the given inputs before any work starts.
    pub fn new(config: RunConfig, required: &[Input]) -> Result<Pipeline> {
        config.validate(required)?;
        Ok(Pipeline { config })
    }

    /// Validates the config for `command`, then runs it.
    pub fn run_command(config: RunConfig, command: Command) -> Result<Output> {
        let required = command.required_inputs(&config);
        let p = Pipeline::new(config, &required)?;
        match command {
            Command::Stats => p.stats(),
            Command::Exp1 => p.experiment(Experiment::RightVsWrong),
            Command::Exp2 => p.experiment(Experiment::OriginalVsRight),
            Command::Exp3 => p.experiment(Experiment::OriginalVsWrong),
            Command::Cloze => p.cloze(),
            Command::LmTrain => p.lm_train(),
            Command::LmCloze => p.lm_cloze(),
            Command::Combine => p.combine(),
            Command::Ablate => p.ablate(),
            Command::Salient => p.salient(),
            Command::PairedChoice => p.paired_choice(),
        }
    }

    pub fn annotator(&self) -> Result<Annotator> {
        let p = &self.config.paths;
        if let Some(path) = &p.pretagged {
            return Annotator::pretagged(&read_pretagged(path)?);
        }
        let seed = self.config.tagger_seed();
        let epochs = self.config.tagger.epochs;
        match &p.tagger_fixture {
            Some(path) => Ok(Annotator::Tagger(Tagger::train(&read_pretagged(path)?, epochs, seed)?)),
            None => Annotator::bundled(epochs, seed),
        }
    }

    pub fn roc(&self) -> Result<Vec<Story>> {
        let mut stories = Vec::new();
        for path in &self.config.paths.roc {
            stories.extend(load_roc_stories(path)?);
        }
        Ok(stories)
    }

    fn required(path: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
        path.clone()
            .ok_or_else(|| Error::InvalidConfig(format!("no path configured for {what}")))
    }

    pub fn cloze_dev(&self) -> Result<Vec<ClozeInstance>> {
        load_cloze_set(Self::required(&self.config.paths.cloze_dev, "cloze_dev")?)
    }

    pub fn cloze_test(&self) -> Result<Vec<ClozeInstance>> {
        load_cloze_set(Self::required(&self.config.paths.cloze_test, "cloze_test")?)
    }

    /// Train/dev from the cloze development file, test from the test file.
    pub fn cloze_split(&self) -> Result<(Vec<ClozeInstance>, Vec<ClozeInstance>, DatasetSplit)> {
        let dev = self.cloze_dev()?;
        let test = self.cloze_test()?;
        let split = cloze_parts(&dev, &test, self.config.dev_fraction, self.config.split_seed())?;
        Ok((dev, test, split))
    }

    pub fn experiment_folds(&self, experiment: Experiment) -> Result<Vec<DatasetSplit>> {
        let (_, _, split) = self.cloze_split()?;
        let roc = if experiment == Experiment::RightVsWrong {
            Vec::new()
        } else {
            self.roc()?
        };
        build_experiment_dataset(experiment, &roc, &split, self.config.resample_seed())
    }

    pub fn experiment_report(&self, experiment: Experiment) -> Result<ExperimentReport> {
        let folds = self.experiment_folds(experiment)?;
        let c = &self.config;
        run_experiment(experiment, &folds, &c.features, &c.grid, &self.annotator()?, c.echo())
    }

    pub fn experiment(&self, experiment: Experiment) -> Result<Output> {
        let report = self.experiment_report(experiment)?;
        let target = match experiment {
            Experiment::RightVsWrong => targets::EXP1,
            Experiment::OriginalVsRight => targets::EXP2,
            Experiment::OriginalVsWrong => targets::EXP3,
        };
        let checks = vec![target.check(report.mean_accuracy)];
        let name = experiment.id().split('-').next().unwrap_or("exp");
        Output::new(name, report.to_text(), &report, checks)
    }

    pub fn stats(&self) -> Result<Output> {
        let annotator = self.annotator()?;
        let roc = self.roc()?;
        let originals: Vec<&str> = roc.iter().map(Story::ending).collect();
        let mut instances = self.cloze_dev()?;
        instances.extend(self.cloze_test()?);
        let endings = cloze_endings(&instances);
        let mut groups = vec![(Label::Original, annotate_texts(&annotator, &originals)?)];
        for label in [Label::Right, Label::Wrong] {
            let texts: Vec<&str> = endings.iter().filter(|e| e.label == label).map(|e| e.text.as_str()).collect();
            groups.push((label, annotate_texts(&annotator, &texts)?));
        }
        let stats = surface_stats(&groups)?;
        let mut checks = Vec::new();
        for (label, t) in [
            (Label::Original, targets::LEN_ORIGINAL),
            (Label::Right, targets::LEN_RIGHT),
            (Label::Wrong, targets::LEN_WRONG),
        ] {
            if let Some(c) = stats.class(label) {
                checks.push(t.check(c.mean_length));
            }
        }
        let prp: Vec<f64> = [Label::Original, Label::Right, Label::Wrong]
            .iter()
            .map(|l| stats.class(*l).and_then(|c| c.pos.get("PRP").copied()).unwrap_or(0.0))
            .collect();
        for (t, v) in targets::PRP.iter().zip(&prp) {
            checks.push(t.check(*v));
        }
        checks.push(Check {
            name: "PRP ordering original > right > wrong".into(),
            passed: prp[0] > prp[1] && prp[1] > prp[2],
            detail: format!("{:.2} / {:.2} / {:.2}", prp[0], prp[1], prp[2]),
        });
        Output::new("stats", stats.to_text(), &stats, checks)
    }

    pub fn cloze_report(&self) -> Result<ClozeReport> {
        let (_, test, split) = self.cloze_split()?;
        let annotator = self.annotator()?;
        let c = &self.config;
        let clf = train_cloze_classifier(&split, &c.features, &c.grid, &annotator)?;
        let decisions = test
            .iter()
            .map(|inst| cloze_decide(&clf, &annotator, inst))
            .collect::<Result<Vec<_>>>()?;
        let count = |r: RulePath| decisions.iter().filter(|d| d.rule == r).count();
        let correct = test.iter().zip(&decisions).filter(|(i, d)| i.gold == d.chosen).count();
        Ok(ClozeReport {
            accuracy: correct as f64 / test.len().max(1) as f64,
            selected_lambda: clf.selected_lambda(),
            grid: clf.grid_scores.clone(),
            feature_count: clf.space.dim(),
            instances: test.len(),
            labels_differ: count(RulePath::LabelsDiffer),
            flipped: count(RulePath::Flipped),
            ties: count(RulePath::Tie),
            dataset_fingerprint: split.fingerprint(),
            config: c.echo(),
        })
    }

    pub fn cloze(&self) -> Result<Output> {
        let r = self.cloze_report()?;
        let text = format!(
            "{:<16}{:.4}\n{:<16}{}\n{:<16}{}\n{:<16}{} / {} / {}\n{:<16}{}\n",
            "accuracy",
            r.accuracy,
            "lambda",
            harness::format_lambda(r.selected_lambda),
            "instances",
            r.instances,
            "differ/flip/tie",
            r.labels_differ,
            r.flipped,
            r.ties,
            "dataset",
            r.dataset_fingerprint
        );
        let checks = vec![targets::CLOZE.check(r.accuracy)];
        Output::new("cloze", text, &r, checks)
    }

    fn lm_training_data(&self) -> Result<(Vocabulary, Vec<Vec<u32>>)> {
        let roc = self.roc()?;
        if roc.is_empty() {
            return Err(Error::InsufficientData("no ROC stories for LM training".into()));
        }
        let tokens: Vec<Vec<String>> = roc.iter().map(|s| story_tokens(&s.sentences)).collect();
        let vocab = Vocabulary::build(&tokens, self.config.lm.vocab_min_count);
        let seqs = roc.iter().map(|s| vocab.encode_story(&s.sentences)).collect();
        Ok((vocab, seqs))
    }

    /// Trains the configured LM from the ROC stories.
    pub fn train_lm(&self) -> Result<(TrainedLm, Option<TrainingLog>)> {
        let (vocab, seqs) = self.lm_training_data()?;
        let lm = &self.config.lm;
        match lm.kind {
            LmKind::Kn => Ok((TrainedLm::Kn(NGramLm::train(vocab, &seqs, lm.order, lm.discount)?), None)),
            LmKind::Neural => {
                let mut cfg = lm.neural.clone();
                cfg.seed = self.config.lm_seed();
                let (model, log) = NeuralLm::train(vocab, &seqs, cfg)?;
                Ok((TrainedLm::Neural(model), Some(log)))
            }
        }
    }

    /// Loads the LM artifact when it exists, otherwise trains one.
    pub fn lm(&self) -> Result<TrainedLm> {
        if let Some(path) = &self.config.paths.lm_artifact {
            if lm_artifact_exists(self.config.lm.kind, path) {
                return match self.config.lm.kind {
                    LmKind::Kn => {
                        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                        Ok(TrainedLm::Kn(NGramLm::from_jsonl(&text)?))
                    }
                    LmKind::Neural => Ok(TrainedLm::Neural(NeuralLm::load(path)?)),
                };
            }
        }
        Ok(self.train_lm()?.0)
    }

    pub fn lm_train(&self) -> Result<Output> {
        let (lm, log) = self.train_lm()?;
        let artifact = match (&self.config.paths.lm_artifact, self.config.out_dir()?) {
            (Some(p), _) => Some(p.clone()),
            (None, Some(dir)) => Some(dir.join(match lm {
                TrainedLm::Kn(_) => "lm.jsonl",
                TrainedLm::Neural(_) => "lm",
            })),
            (None, None) => None,
        };
        if let Some(path) = &artifact {
            match &lm {
                TrainedLm::Kn(m) => std::fs::write(path, m.to_jsonl()?).map_err(|e| Error::io(path, e))?,
                TrainedLm::Neural(m) => m.save(path)?,
            }
        }
        let report = LmTrainReport {
            kind: self.config.lm.kind,
            stories: self.roc()?.len(),
            vocab_size: lm.as_dyn().vocab().len(),
            artifact,
            log,
            config: self.config.echo(),
        };
        let mut text = format!(
            "{:<12}{:?}\n{:<12}{}\n{:<12}{}\n",
            "kind", report.kind, "stories", report.stories, "vocabulary", report.vocab_size
        );
        if let Some(log) = &report.log {
            for e in &log.epochs {
                text.push_str(&format!(
                    "epoch {:>3}  loss {:.4}  valid ppl {}\n",
                    e.epoch,
                    e.train_loss,
                    e.validation_perplexity.map_or("-".into(), |p| format!("{p:.2}"))
                ));
            }
        }
        if let Some(a) = &report.artifact {
            text.push_str(&format!("{:<12}{}\n", "artifact", a.display()));
        }
        Output::new("lm-train", text, &report, Vec::new())
    }

    pub fn lm_cloze(&self) -> Result<Output> {
        let test = self.cloze_test()?;
        let lm = self.lm()?;
        let m = lm.as_dyn();
        let report = LmClozeReport {
            kind: self.config.lm.kind,
            conditional_accuracy: lm_cloze_eval(m, &test, LmMode::ConditionalOnly)?,
            pmi_accuracy: lm_cloze_eval(m, &test, LmMode::Pmi)?,
            vocab_size: m.vocab().len(),
            instances: test.len(),
            config: self.config.echo(),
        };
        let text = format!(
            "{:<20}{:.4}\n{:<20}{:.4}\n",
            "conditional-only", report.conditional_accuracy, "pmi", report.pmi_accuracy
        );
        let checks = match report.kind {
            LmKind::Neural => vec![
                targets::LM_CONDITIONAL.check(report.conditional_accuracy),
                targets::LM_PMI.check(report.pmi_accuracy),
            ],
            LmKind::Kn => Vec::new(),
        };
        Output::new("lm-cloze", text, &report, checks)
    }

    pub fn combine(&self) -> Result<Output> {
        let (dev, test, split) = self.cloze_split()?;
        let lm = self.lm()?;
        let c = &self.config;
        let report = combined_train_eval(&split, &dev, &test, lm.as_dyn(), &c.features, &c.grid, &self.annotator()?)?;
        let checks = match c.lm.kind {
            LmKind::Neural => vec![targets::COMBINED.check(report.accuracy)],
            LmKind::Kn => Vec::new(),
        };
        Output::new("combine", report.to_text(), &report, checks)
    }

    pub fn ablate(&self) -> Result<Output> {
        let (_, _, split) = self.cloze_split()?;
        let c = &self.config;
        let report = ablation(&AblationFamily::ALL, &split, &c.features, &c.grid, &self.annotator()?, c.echo())?;
        let mut checks = Vec::new();
        for (f, t) in [
            (AblationFamily::Word, targets::ABLATE_WORD),
            (AblationFamily::Char, targets::ABLATE_CHAR),
            (AblationFamily::Full, targets::ABLATE_FULL),
        ] {
            if let Some(acc) = report.accuracy(f) {
                checks.push(t.check(acc));
            }
        }
        Output::new("ablate", report.to_text(), &report, checks)
    }

    pub fn salient(&self) -> Result<Output> {
        let annotator = self.annotator()?;
        let c = &self.config;
        let mut text = String::new();
        let mut reports = Vec::new();
        for exp in [Experiment::RightVsWrong, Experiment::OriginalVsRight] {
            let split = self.experiment_folds(exp)?.swap_remove(0);
            let train = LabeledPart::new(exp, &annotator, &split.train)?;
            let dev = LabeledPart::new(exp, &annotator, &split.dev)?;
            let clf = StyleClassifier::fit(&c.features, &train.sentences, &train.labels, &dev.sentences, &dev.labels, &c.grid)?;
            let report = salient_features(exp, &clf, &train.sentences, c.salient_k, c.salient_min_doc_freq)?;
            text.push_str(&report.to_text());
            text.push('\n');
            reports.push(report);
        }
        Output::new("salient", text, &reports, Vec::new())
    }

    pub fn paired_choice(&self) -> Result<Output> {
        let c = &self.config;
        let items = load_paired_choice(Self::required(&c.paths.copa, "copa")?)?;
        let annotator = self.annotator()?;
        let clf = if c.retrain {
            let train_items = load_paired_choice(Self::required(&c.paths.copa_train, "copa_train")?)?;
            let as_cloze: Vec<ClozeInstance> = train_items.iter().map(paired_as_cloze).collect();
            let split = split_cloze_endings(&as_cloze, c.dev_fraction, c.split_seed())?;
            train_cloze_classifier(&split, &c.features, &c.grid, &annotator)?
        } else {
            let (_, _, split) = self.cloze_split()?;
            train_cloze_classifier(&split, &c.features, &c.grid, &annotator)?
        };
        let report = PairedChoiceReport {
            accuracy: paired_choice_eval(&clf, &annotator, &items)?,
            retrained: c.retrain,
            items: items.len(),
            selected_lambda: clf.selected_lambda(),
            config: c.echo(),
        };
        let text = format!(
            "{:<12}{:.4}\n{:<12}{}\n{:<12}{}\n",
            "accuracy",
            report.accuracy,
            "items",
            report.items,
            "retrained",
            report.retrained
        );
        let checks = if c.retrain { Vec::new() } else { vec![targets::PAIRED.check(report.accuracy)] };
        Output::new("paired-choice", text, &report, checks)
    }
}
