//! Run configuration: input paths, seeds and model settings.
//!
//! Loaded from JSON; any field may be omitted. Paths left unset are looked
//! up in the data directory named by `STYLECLOZE_DATA`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureConfig;
use crate::langmodel::NeuralConfig;
use crate::linmodel::DEFAULT_GRID;

pub const DATA_DIR_ENV: &str = "STYLECLOZE_DATA";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// ROC story files (all are concatenated).
    pub roc: Vec<PathBuf>,
    pub cloze_dev: Option<PathBuf>,
    pub cloze_test: Option<PathBuf>,
    /// Paired-choice evaluation file.
    pub copa: Option<PathBuf>,
    /// Paired-choice training file, used with `retrain`.
    pub copa_train: Option<PathBuf>,
    /// Tagged sentences for training the tagger instead of the bundled set.
    pub tagger_fixture: Option<PathBuf>,
    /// Externally tagged endings; replaces the tagger when set.
    pub pretagged: Option<PathBuf>,
    /// Trained LM artifact: loaded when it exists, written by `lm-train`.
    /// A stem for the neural model, a JSON-lines file for the n-gram model.
    pub lm_artifact: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LmKind {
    Kn,
    Neural,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LmConfig {
    pub kind: LmKind,
    pub order: usize,
    pub discount: f64,
    pub vocab_min_count: usize,
    pub neural: NeuralConfig,
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig {
            kind: LmKind::Kn,
            order: 3,
            discount: 0.75,
            vocab_min_count: 3,
            neural: NeuralConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaggerConfig {
    pub epochs: usize,
}

impl Default for TaggerConfig {
    fn default() -> Self {
        TaggerConfig { epochs: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub seed: u64,
    pub dev_fraction: f64,
    pub features: FeatureConfig,
    pub grid: Vec<f64>,
    pub lm: LmConfig,
    pub tagger: TaggerConfig,
    pub out: Option<PathBuf>,
    pub retrain: bool,
    /// Salient features reported per class.
    pub salient_k: usize,
    pub salient_min_doc_freq: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            paths: Paths::default(),
            seed: 13,
            dev_fraction: 0.1,
            features: FeatureConfig::default(),
            grid: DEFAULT_GRID.to_vec(),
            lm: LmConfig::default(),
            tagger: TaggerConfig::default(),
            out: None,
            retrain: false,
            salient_k: 5,
            salient_min_doc_freq: 0.05,
        }
    }
}

/// Inputs a command needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Input {
    Roc,
    ClozeDev,
    ClozeTest,
    Copa,
    CopaTrain,
}

impl Input {
    fn name(self) -> &'static str {
        match self {
            Input::Roc => "roc",
            Input::ClozeDev => "cloze_dev",
            Input::ClozeTest => "cloze_test",
            Input::Copa => "copa",
            Input::CopaTrain => "copa_train",
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Value embedded in reports.
    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }

    pub fn split_seed(&self) -> u64 {
        self.seed
    }

    pub fn resample_seed(&self) -> u64 {
        self.seed.wrapping_add(1)
    }

    pub fn tagger_seed(&self) -> u64 {
        self.seed.wrapping_add(2)
    }

    pub fn lm_seed(&self) -> u64 {
        self.seed.wrapping_add(3)
    }

    /// Fills unset paths from `dir`.
    pub fn fill_from_data_dir(&mut self, dir: &Path) -> Result<()> {
        let found = discover(dir)?;
        let p = &mut self.paths;
        if p.roc.is_empty() {
            p.roc = found.roc;
        }
        for (slot, value) in [
            (&mut p.cloze_dev, found.cloze_dev),
            (&mut p.cloze_test, found.cloze_test),
            (&mut p.copa, found.copa),
            (&mut p.copa_train, found.copa_train),
        ] {
            if slot.is_none() {
                *slot = value;
            }
        }
        Ok(())
    }

    /// Fills unset paths from the directory in `STYLECLOZE_DATA`, if any.
    pub fn fill_from_env(&mut self) -> Result<()> {
        match std::env::var_os(DATA_DIR_ENV) {
            Some(dir) if !dir.is_empty() => self.fill_from_data_dir(Path::new(&dir)),
            _ => Ok(()),
        }
    }

    fn path_of(&self, input: Input) -> Vec<&Path> {
        let p = &self.paths;
        fn one(o: &Option<PathBuf>) -> Vec<&Path> {
            o.iter().map(|x| x.as_path()).collect()
        }
        match input {
            Input::Roc => p.roc.iter().map(|x| x.as_path()).collect(),
            Input::ClozeDev => one(&p.cloze_dev),
            Input::ClozeTest => one(&p.cloze_test),
            Input::Copa => one(&p.copa),
            Input::CopaTrain => one(&p.copa_train),
        }
    }

    /// Checks settings, that every `required` input is configured, and that
    /// every configured input file exists.
    pub fn validate(&self, required: &[Input]) -> Result<()> {
        if !(self.dev_fraction > 0.0 && self.dev_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "dev_fraction must lie in (0, 1), got {}",
                self.dev_fraction
            )));
        }
        if self.grid.is_empty() || self.grid.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(Error::InvalidConfig("grid must hold finite non-negative values".into()));
        }
        for &input in required {
            if self.path_of(input).is_empty() {
                return Err(Error::InvalidConfig(format!(
                    "no path configured for {} (set it in the config or {DATA_DIR_ENV})",
                    input.name()
                )));
            }
        }
        let p = &self.paths;
        let mut files: Vec<&PathBuf> = p.roc.iter().collect();
        files.extend(
            [&p.cloze_dev, &p.cloze_test, &p.copa, &p.copa_train, &p.tagger_fixture, &p.pretagged]
                .into_iter()
                .flatten(),
        );
        for f in files {
            if !f.is_file() {
                return Err(Error::io(
                    f,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "input file not found"),
                ));
            }
        }
        Ok(())
    }

    /// Output directory, created on demand.
    pub fn out_dir(&self) -> Result<Option<&Path>> {
        match &self.out {
            Some(dir) => {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                Ok(Some(dir))
            }
            None => Ok(None),
        }
    }
}

/// Input files found in a data directory by name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Discovered {
    pub roc: Vec<PathBuf>,
    pub cloze_dev: Option<PathBuf>,
    pub cloze_test: Option<PathBuf>,
    pub copa: Option<PathBuf>,
    pub copa_train: Option<PathBuf>,
}

/// Classifies the CSV files of `dir` by name: `*rocstories*` are story
/// files, `*cloze*val*` and `*cloze*test*` the cloze splits, and `*copa*`
/// the paired-choice sets (`train` or `dev` in the name marks training data).
pub fn discover(dir: &Path) -> Result<Discovered> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
        .collect();
    files.sort();
    let mut out = Discovered::default();
    for f in files {
        let name = f.file_name().unwrap_or_default().to_string_lossy().to_lowercase();
        if name.contains("cloze") {
            if name.contains("val") {
                out.cloze_dev.get_or_insert(f);
            } else if name.contains("test") {
                out.cloze_test.get_or_insert(f);
            }
        } else if name.contains("rocstories") {
            out.roc.push(f);
        } else if name.contains("copa") {
            if name.contains("train") || name.contains("dev") {
                out.copa_train.get_or_insert(f);
            } else {
                out.copa.get_or_insert(f);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.paths.roc = vec!["a.csv".into(), "b.csv".into()];
        cfg.paths.cloze_dev = Some("dev.csv".into());
        cfg.features.binary = true;
        cfg.grid = vec![0.1, 0.3];
        cfg.lm.kind = LmKind::Neural;
        cfg.lm.neural.hidden_dim = 7;
        cfg.seed = 99;
        let back = RunConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_json().unwrap(), cfg.to_json().unwrap());
    }

    #[test]
    fn partial_json_uses_defaults() {
        let cfg = RunConfig::from_json(r#"{"seed": 4, "lm": {"order": 4}}"#).unwrap();
        assert_eq!(cfg.seed, 4);
        assert_eq!(cfg.lm.order, 4);
        assert_eq!(cfg.lm.discount, 0.75);
        assert_eq!(cfg.features, FeatureConfig::default());
        assert!(RunConfig::from_json(r#"{"sed": 4}"#).is_err());
    }

    #[test]
    fn derived_seeds_differ() {
        let cfg = RunConfig::default();
        let seeds = [cfg.split_seed(), cfg.resample_seed(), cfg.tagger_seed(), cfg.lm_seed()];
        for i in 0..4 {
            for j in i + 1..4 {
                assert_ne!(seeds[i], seeds[j]);
            }
        }
    }

    #[test]
    fn validation() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::default();
        assert!(matches!(cfg.validate(&[Input::Roc]), Err(Error::InvalidConfig(_))));
        cfg.paths.roc = vec![dir.path().join("missing.csv")];
        assert!(matches!(cfg.validate(&[Input::Roc]), Err(Error::Io { .. })));
        let f = dir.path().join("roc.csv");
        std::fs::write(&f, "x").unwrap();
        cfg.paths.roc = vec![f];
        cfg.validate(&[Input::Roc]).unwrap();
        cfg.dev_fraction = 1.0;
        assert!(cfg.validate(&[]).is_err());
    }

    #[test]
    fn discovers_official_names() {
        let dir = tempfile::tempdir().unwrap();
        for name in [
            "ROCStories__spring2016 - ROCStories_spring2016.csv",
            "ROCStories_winter2017 - ROCStories_winter2017.csv",
            "cloze_test_val__spring2016 - cloze_test_ALL_val.csv",
            "cloze_test_test__spring2016 - cloze_test_ALL_test.csv",
            "copa_test.csv",
            "copa_dev.csv",
            "notes.txt",
        ] {
            std::fs::write(dir.path().join(name), "").unwrap();
        }
        let found = discover(dir.path()).unwrap();
        assert_eq!(found.roc.len(), 2);
        assert!(found.cloze_dev.unwrap().to_string_lossy().contains("val"));
        assert!(found.cloze_test.unwrap().to_string_lossy().contains("ALL_test"));
        assert!(found.copa.unwrap().ends_with("copa_test.csv"));
        assert!(found.copa_train.unwrap().ends_with("copa_dev.csv"));
    }
}
