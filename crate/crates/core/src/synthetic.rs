//! Small generated corpora with planted style markers, for examples and
//! tests that must run without the official data.
//!
//! Sentences are drawn from the bundled tagged fixture, so the bundled
//! tagger knows their vocabulary. A class marker, when set, is inserted
//! before the final punctuation of every ending of that class.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::corpus::{
    write_cloze_set, write_paired_choice, write_roc_stories, Choice, ClozeInstance, PairedChoice, Story,
};
use crate::error::Result;
use crate::textproc::bundled_fixture;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub roc_stories: usize,
    pub cloze_dev: usize,
    pub cloze_test: usize,
    pub paired: usize,
    pub original_marker: Option<String>,
    pub right_marker: Option<String>,
    pub wrong_marker: Option<String>,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            roc_stories: 600,
            cloze_dev: 100,
            cloze_test: 60,
            paired: 40,
            original_marker: Some("qq".into()),
            right_marker: Some("zz".into()),
            wrong_marker: None,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub roc: Vec<Story>,
    pub cloze_dev: Vec<ClozeInstance>,
    pub cloze_test: Vec<ClozeInstance>,
    pub paired: Vec<PairedChoice>,
}

fn with_marker(sentence: &str, marker: &Option<String>) -> String {
    let Some(m) = marker else {
        return sentence.to_string();
    };
    match sentence.rsplit_once(' ') {
        Some((body, last)) if last.chars().all(|c| c.is_ascii_punctuation()) => format!("{body} {m} {last}"),
        _ => format!("{sentence} {m}"),
    }
}

impl SyntheticCorpus {
    pub fn generate(cfg: &SyntheticConfig) -> SyntheticCorpus {
        let pool: Vec<String> = bundled_fixture().into_iter().map(|(toks, _)| toks.join(" ")).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let pick = |rng: &mut ChaCha8Rng| pool.choose(rng).expect("fixture is not empty").clone();

        let roc = (0..cfg.roc_stories)
            .map(|i| {
                let mut sentences: [String; 5] = std::array::from_fn(|_| pick(&mut rng));
                sentences[4] = with_marker(&sentences[4], &cfg.original_marker);
                Story {
                    id: format!("roc-{i}"),
                    title: Some(format!("Story {i}")),
                    sentences,
                }
            })
            .collect();

        let instance = |prefix: &str, i: usize, rng: &mut ChaCha8Rng| {
            let context = std::array::from_fn(|_| pick(rng));
            let right = with_marker(&pick(rng), &cfg.right_marker);
            let wrong = with_marker(&pick(rng), &cfg.wrong_marker);
            let gold = if rng.gen_bool(0.5) { Choice::A } else { Choice::B };
            let (ending_a, ending_b) = match gold {
                Choice::A => (right, wrong),
                Choice::B => (wrong, right),
            };
            ClozeInstance {
                id: format!("{prefix}-{i}"),
                context,
                ending_a,
                ending_b,
                gold,
            }
        };
        let cloze_dev = (0..cfg.cloze_dev).map(|i| instance("dev", i, &mut rng)).collect();
        let cloze_test = (0..cfg.cloze_test).map(|i| instance("test", i, &mut rng)).collect();
        let paired = (0..cfg.paired)
            .map(|i| {
                let c = instance("pair", i, &mut rng);
                PairedChoice {
                    id: c.id,
                    premise: c.context[0].clone(),
                    alt1: c.ending_a,
                    alt2: c.ending_b,
                    gold: c.gold,
                }
            })
            .collect();
        SyntheticCorpus {
            roc,
            cloze_dev,
            cloze_test,
            paired,
        }
    }

    /// Writes the CSV files under names the data-directory lookup
    /// recognizes.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let roc = dir.join("rocstories_synthetic.csv");
        let dev = dir.join("cloze_val_synthetic.csv");
        let test = dir.join("cloze_test_synthetic.csv");
        let copa = dir.join("copa_test_synthetic.csv");
        write_roc_stories(&roc, &self.roc)?;
        write_cloze_set(&dev, &self.cloze_dev)?;
        write_cloze_set(&test, &self.cloze_test)?;
        write_paired_choice(&copa, &self.paired)?;
        Ok(vec![roc, dev, test, copa])
    }

    /// Writes the files and returns a config pointing at them, with a
    /// reduced grid and a small neural LM.
    pub fn write_config(&self, dir: &Path) -> Result<RunConfig> {
        self.write_to(dir)?;
        let mut cfg = RunConfig::default();
        cfg.fill_from_data_dir(dir)?;
        cfg.grid = vec![1e-4, 1e-2];
        cfg.lm.neural.embed_dim = 16;
        cfg.lm.neural.hidden_dim = 16;
        cfg.lm.neural.epochs = 2;
        cfg.lm.neural.dropout = 0.0;
        Ok(cfg)
    }
}
