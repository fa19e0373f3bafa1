use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_tagged_fold, FoldReport, LabeledPart, StyleClassifier};
use crate::corpus::{DatasetSplit, Experiment, Label};
use crate::error::{Error, Result};
use crate::features::FeatureConfig;
use crate::linmodel::{top_features, SalientFeatures};
use crate::textproc::{Annotator, TaggedSentence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AblationFamily {
    Word,
    Char,
    Full,
}

impl AblationFamily {
    pub const ALL: [AblationFamily; 3] = [AblationFamily::Word, AblationFamily::Char, AblationFamily::Full];

    pub fn name(self) -> &'static str {
        match self {
            AblationFamily::Word => "word",
            AblationFamily::Char => "char",
            AblationFamily::Full => "full",
        }
    }

    /// `base` restricted to this family. LENGTH only stays in `Full`.
    pub fn config(self, base: &FeatureConfig) -> FeatureConfig {
        match self {
            AblationFamily::Word => FeatureConfig {
                length: false,
                char: false,
                word: true,
                ..base.clone()
            },
            AblationFamily::Char => FeatureConfig {
                length: false,
                word: false,
                char: true,
                ..base.clone()
            },
            AblationFamily::Full => base.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationReport {
    pub rows: Vec<(AblationFamily, FoldReport)>,
    pub config: serde_json::Value,
}

impl AblationReport {
    pub fn accuracy(&self, family: AblationFamily) -> Option<f64> {
        self.rows.iter().find(|(f, _)| *f == family).map(|(_, r)| r.accuracy)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{:<8}{:>10}{:>10}{:>10}\n", "family", "accuracy", "lambda", "features");
        for (family, r) in &self.rows {
            out.push_str(&format!(
                "{:<8}{:>10.4}{:>10}{:>10}\n",
                family.name(),
                r.accuracy,
                super::format_lambda(r.selected_lambda),
                r.feature_count
            ));
        }
        out
    }
}

/// Re-runs the right-vs-wrong experiment once per feature family. Endings
/// are tagged once and shared across families.
pub fn ablation(
    families: &[AblationFamily],
    split: &DatasetSplit,
    base: &FeatureConfig,
    grid: &[f64],
    annotator: &Annotator,
    config: serde_json::Value,
) -> Result<AblationReport> {
    if families.is_empty() {
        return Err(Error::InvalidConfig("no ablation families requested".into()));
    }
    if split.test.is_empty() {
        return Err(Error::InsufficientData("ablation split has no test endings".into()));
    }
    let exp = Experiment::RightVsWrong;
    let parts = [
        LabeledPart::new(exp, annotator, &split.train)?,
        LabeledPart::new(exp, annotator, &split.dev)?,
        LabeledPart::new(exp, annotator, &split.test)?,
    ];
    let rows = families
        .par_iter()
        .map(|&f| Ok((f, run_tagged_fold(0, split, &parts, &f.config(base), grid)?)))
        .collect::<Result<_>>()?;
    Ok(AblationReport { rows, config })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassStats {
    pub label: Label,
    pub endings: usize,
    /// Tokens per ending, START excluded.
    pub mean_length: f64,
    /// Percentage of tokens carrying each tag.
    pub pos: BTreeMap<String, f64>,
    /// Percentage of tokens equal to each word.
    pub words: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceStats {
    pub classes: Vec<ClassStats>,
}

fn percentages(counts: HashMap<&str, usize>, total: usize) -> BTreeMap<String, f64> {
    counts
        .into_iter()
        .map(|(k, c)| (k.to_string(), 100.0 * c as f64 / total as f64))
        .collect()
}

/// Length, tag and word distributions of each labeled group.
pub fn surface_stats(groups: &[(Label, Vec<TaggedSentence>)]) -> Result<SurfaceStats> {
    let classes = groups
        .iter()
        .map(|(label, sentences)| {
            let mut tags: HashMap<&str, usize> = HashMap::new();
            let mut words: HashMap<&str, usize> = HashMap::new();
            let mut total = 0;
            for s in sentences {
                // Position 0 is START.
                for (w, t) in s.tokens().iter().zip(&s.tags).skip(1) {
                    *tags.entry(t).or_default() += 1;
                    *words.entry(w).or_default() += 1;
                    total += 1;
                }
            }
            if total == 0 {
                return Err(Error::InsufficientData(format!(
                    "no tokens among {} endings",
                    label.name()
                )));
            }
            Ok(ClassStats {
                label: *label,
                endings: sentences.len(),
                mean_length: total as f64 / sentences.len() as f64,
                pos: percentages(tags, total),
                words: percentages(words, total),
            })
        })
        .collect::<Result<_>>()?;
    Ok(SurfaceStats { classes })
}

impl SurfaceStats {
    pub fn class(&self, label: Label) -> Option<&ClassStats> {
        self.classes.iter().find(|c| c.label == label)
    }

    /// Keys ranked by their summed percentage over all classes.
    fn top_keys(&self, table: impl Fn(&ClassStats) -> &BTreeMap<String, f64>, n: usize) -> Vec<String> {
        let mut total: BTreeMap<&str, f64> = BTreeMap::new();
        for c in &self.classes {
            for (k, v) in table(c) {
                *total.entry(k).or_default() += v;
            }
        }
        let mut keys: Vec<(&str, f64)> = total.into_iter().collect();
        keys.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
        keys.into_iter().take(n).map(|(k, _)| k.to_string()).collect()
    }

    fn table(&self, title: &str, table: impl Fn(&ClassStats) -> &BTreeMap<String, f64> + Copy, n: usize) -> String {
        let mut out = format!("{title:<12}");
        for c in &self.classes {
            out.push_str(&format!("{:>10}", c.label.name()));
        }
        out.push('\n');
        for key in self.top_keys(table, n) {
            out.push_str(&format!("{key:<12}"));
            for c in &self.classes {
                out.push_str(&format!("{:>10.2}", table(c).get(&key).copied().unwrap_or(0.0)));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{:<12}", "class");
        for c in &self.classes {
            out.push_str(&format!("{:>10}", c.label.name()));
        }
        out.push_str(&format!("\n{:<12}", "endings"));
        for c in &self.classes {
            out.push_str(&format!("{:>10}", c.endings));
        }
        out.push_str(&format!("\n{:<12}", "mean length"));
        for c in &self.classes {
            out.push_str(&format!("{:>10.2}", c.mean_length));
        }
        out.push_str("\n\n");
        out.push_str(&self.table("POS %", |c| &c.pos, 15));
        out.push('\n');
        out.push_str(&self.table("word %", |c| &c.words, 15));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SalientReport {
    pub experiment: String,
    pub positive: Label,
    pub negative: Label,
    pub min_doc_freq: f64,
    pub features: SalientFeatures,
}

/// Heaviest `k` features per class among those in at least `min_doc_freq`
/// of the training endings.
pub fn salient_features(
    experiment: Experiment,
    classifier: &StyleClassifier,
    train: &[TaggedSentence],
    k: usize,
    min_doc_freq: f64,
) -> Result<SalientReport> {
    Ok(SalientReport {
        experiment: experiment.id().to_string(),
        positive: experiment.positive(),
        negative: experiment.negative(),
        min_doc_freq,
        features: top_features(&classifier.model, &classifier.space, train, k, min_doc_freq)?,
    })
}

impl SalientReport {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{}\n{:<24}{:>8}{:>8}  {:<24}{:>8}{:>8}\n",
            self.experiment,
            self.positive.name(),
            "weight",
            "freq",
            self.negative.name(),
            "weight",
            "freq"
        );
        let (pos, neg) = (&self.features.positive, &self.features.negative);
        for i in 0..pos.len().max(neg.len()) {
            match pos.get(i) {
                Some(f) => out.push_str(&format!(
                    "{:<24}{:>8.2}{:>7.1}%  ",
                    f.feature,
                    f.weight,
                    100.0 * f.doc_freq
                )),
                None => out.push_str(&format!("{:<41}", "")),
            }
            if let Some(f) = neg.get(i) {
                out.push_str(&format!(
                    "{:<24}{:>8.2}{:>7.1}%",
                    f.feature,
                    -f.weight,
                    100.0 * f.doc_freq
                ));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textproc::TaggedSentence;

    fn tagged(words: &[&str], tags: &[&str]) -> TaggedSentence {
        let w: Vec<String> = words.iter().map(|s| s.to_string()).collect();
        let t: Vec<String> = tags.iter().map(|s| s.to_string()).collect();
        TaggedSentence::from_pretagged(&w, &t).unwrap()
    }

    #[test]
    fn single_ending_counts() {
        let stats = surface_stats(&[(Label::Right, vec![tagged(&["Hi", "."], &["UH", "."])])]).unwrap();
        let c = stats.class(Label::Right).unwrap();
        assert_eq!(c.mean_length, 2.0);
        assert_eq!(c.words.len(), 2);
        assert_eq!(c.words["Hi"], 50.0);
        assert_eq!(c.words["."], 50.0);
        assert_eq!(c.pos["UH"], 50.0);
    }

    #[test]
    fn tables_sum_to_hundred() {
        let group = vec![
            tagged(&["He", "ran", "home", "."], &["PRP", "VBD", "NN", "."]),
            tagged(&["She", "sat", "."], &["PRP", "VBD", "."]),
            tagged(&["Ann", "laughed", "loudly", "!"], &["NNP", "VBD", "RB", "."]),
        ];
        let stats = surface_stats(&[(Label::Original, group.clone()), (Label::Wrong, group[..1].to_vec())]).unwrap();
        for c in &stats.classes {
            assert!((c.pos.values().sum::<f64>() - 100.0).abs() < 1e-9);
            assert!((c.words.values().sum::<f64>() - 100.0).abs() < 1e-9);
        }
        assert_eq!(stats.classes[0].mean_length, 11.0 / 3.0);
        assert!(stats.to_text().contains("PRP"));
    }

    #[test]
    fn empty_group_is_an_error() {
        assert!(surface_stats(&[(Label::Right, vec![])]).is_err());
    }

    #[test]
    fn family_configs() {
        let base = FeatureConfig::default();
        let w = AblationFamily::Word.config(&base);
        assert!(w.word && !w.char && !w.length);
        let c = AblationFamily::Char.config(&base);
        assert!(!c.word && c.char && !c.length);
        assert_eq!(AblationFamily::Full.config(&base), base);
    }
}
