//! Corpus ingestion: ROC stories, story-cloze sets, paired-choice sets, and the
//! labeled ending datasets built from them.
//!
//! Everything here is deterministic. Splits and resamples draw from a
//! ChaCha stream seeded by the caller, so the same files and seeds always give
//! the same datasets.

use std::fs::File;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ROC_HEADER: [&str; 7] = [
    "storyid",
    "storytitle",
    "sentence1",
    "sentence2",
    "sentence3",
    "sentence4",
    "sentence5",
];

pub const CLOZE_HEADER: [&str; 8] = [
    "InputStoryid",
    "InputSentence1",
    "InputSentence2",
    "InputSentence3",
    "InputSentence4",
    "RandomFifthSentenceQuiz1",
    "RandomFifthSentenceQuiz2",
    "AnswerRightEnding",
];

pub const PAIRED_CHOICE_HEADER: [&str; 5] = ["id", "premise", "alt1", "alt2", "gold"];

/// Human-readable description of every CSV schema the toolkit reads.
pub fn schemas() -> String {
    format!(
        "ROC stories CSV (RFC-4180, UTF-8, header row required):\n  {}\n\
         Story cloze CSV (AnswerRightEnding is 1 or 2):\n  {}\n\
         Paired-choice CSV (gold is 1 or 2; premise is not used by the style model):\n  {}\n\
         Pre-tagged endings: one `token<TAB>TAG` per line, blank line between sentences.\n",
        ROC_HEADER.join(","),
        CLOZE_HEADER.join(","),
        PAIRED_CHOICE_HEADER.join(","),
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Story {
    pub id: String,
    pub title: Option<String>,
    pub sentences: [String; 5],
}

impl Story {
    pub fn ending(&self) -> &str {
        &self.sentences[4]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Choice {
    A,
    B,
}

impl Choice {
    pub fn other(self) -> Choice {
        match self {
            Choice::A => Choice::B,
            Choice::B => Choice::A,
        }
    }

    fn from_gold(field: &str) -> Option<Choice> {
        match field.trim() {
            "1" => Some(Choice::A),
            "2" => Some(Choice::B),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClozeInstance {
    pub id: String,
    pub context: [String; 4],
    pub ending_a: String,
    pub ending_b: String,
    pub gold: Choice,
}

impl ClozeInstance {
    pub fn ending(&self, which: Choice) -> &str {
        match which {
            Choice::A => &self.ending_a,
            Choice::B => &self.ending_b,
        }
    }

    /// The same instance with its endings (and gold) swapped.
    pub fn swapped(&self) -> ClozeInstance {
        ClozeInstance {
            id: self.id.clone(),
            context: self.context.clone(),
            ending_a: self.ending_b.clone(),
            ending_b: self.ending_a.clone(),
            gold: self.gold.other(),
        }
    }

    /// Right endings first, then wrong ones.
    fn endings(&self) -> [Ending; 2] {
        let (right, wrong) = match self.gold {
            Choice::A => (&self.ending_a, &self.ending_b),
            Choice::B => (&self.ending_b, &self.ending_a),
        };
        [
            Ending::new(right.clone(), Label::Right, self.id.clone()),
            Ending::new(wrong.clone(), Label::Wrong, self.id.clone()),
        ]
    }
}

/// A premise with two alternatives, e.g. a COPA question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairedChoice {
    pub id: String,
    pub premise: String,
    pub alt1: String,
    pub alt2: String,
    pub gold: Choice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Original,
    Right,
    Wrong,
}

impl Label {
    pub fn name(self) -> &'static str {
        match self {
            Label::Original => "original",
            Label::Right => "right",
            Label::Wrong => "wrong",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ending {
    pub text: String,
    pub label: Label,
    pub source_id: String,
}

impl Ending {
    pub fn new(text: String, label: Label, source_id: String) -> Self {
        Ending {
            text,
            label,
            source_id,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<Ending>,
    pub dev: Vec<Ending>,
    pub test: Vec<Ending>,
    pub seed: u64,
}

impl DatasetSplit {
    pub fn parts(&self) -> [(&'static str, &[Ending]); 3] {
        [
            ("train", &self.train),
            ("dev", &self.dev),
            ("test", &self.test),
        ]
    }

    /// Content hash of the split, stable across runs and platforms.
    pub fn fingerprint(&self) -> String {
        crate::fingerprint(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Experiment {
    RightVsWrong,
    OriginalVsRight,
    OriginalVsWrong,
}

impl Experiment {
    /// Label treated as the positive class by the classifier.
    pub fn positive(self) -> Label {
        match self {
            Experiment::RightVsWrong => Label::Right,
            Experiment::OriginalVsRight | Experiment::OriginalVsWrong => Label::Original,
        }
    }

    pub fn negative(self) -> Label {
        match self {
            Experiment::RightVsWrong => Label::Wrong,
            Experiment::OriginalVsRight => Label::Right,
            Experiment::OriginalVsWrong => Label::Wrong,
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            Experiment::RightVsWrong => "exp1-right-vs-wrong",
            Experiment::OriginalVsRight => "exp2-original-vs-right",
            Experiment::OriginalVsWrong => "exp3-original-vs-wrong",
        }
    }

    pub fn fold_count(self) -> usize {
        match self {
            Experiment::RightVsWrong => 1,
            _ => 5,
        }
    }
}

fn open_csv(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file))
}

/// Reads all rows, checking that each has exactly `width` fields.
fn read_rows(path: &Path, width: usize) -> Result<Vec<(usize, csv::StringRecord)>> {
    let file_name = path.display().to_string();
    let mut reader = open_csv(path)?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::io(path, std::io::Error::other(e.to_string())),
            _ => Error::MalformedRow {
                file: file_name.clone(),
                row,
                reason: e.to_string(),
            },
        })?;
        if record.len() != width {
            return Err(Error::MalformedRow {
                file: file_name,
                row,
                reason: format!("expected {width} columns, found {}", record.len()),
            });
        }
        rows.push((row, record));
    }
    Ok(rows)
}

fn non_empty(file: &Path, row: usize, column: &str, value: &str) -> Result<String> {
    if value.trim().is_empty() {
        return Err(Error::MalformedRow {
            file: file.display().to_string(),
            row,
            reason: format!("empty {column}"),
        });
    }
    Ok(value.to_string())
}

fn sentence_array<const N: usize>(
    path: &Path,
    row: usize,
    record: &csv::StringRecord,
    first: usize,
) -> Result<[String; N]> {
    let mut out: [String; N] = std::array::from_fn(|_| String::new());
    for (k, slot) in out.iter_mut().enumerate() {
        *slot = non_empty(path, row, &format!("sentence {}", k + 1), &record[first + k])?;
    }
    Ok(out)
}

pub fn load_roc_stories(path: impl AsRef<Path>) -> Result<Vec<Story>> {
    let path = path.as_ref();
    read_rows(path, ROC_HEADER.len())?
        .into_iter()
        .map(|(row, rec)| {
            let title = rec[1].trim();
            Ok(Story {
                id: non_empty(path, row, "story id", &rec[0])?,
                title: (!title.is_empty()).then(|| title.to_string()),
                sentences: sentence_array(path, row, &rec, 2)?,
            })
        })
        .collect()
}

pub fn load_cloze_set(path: impl AsRef<Path>) -> Result<Vec<ClozeInstance>> {
    let path = path.as_ref();
    read_rows(path, CLOZE_HEADER.len())?
        .into_iter()
        .map(|(row, rec)| {
            let gold = Choice::from_gold(&rec[7]).ok_or_else(|| Error::MalformedRow {
                file: path.display().to_string(),
                row,
                reason: format!("gold answer must be 1 or 2, found {:?}", &rec[7]),
            })?;
            Ok(ClozeInstance {
                id: non_empty(path, row, "instance id", &rec[0])?,
                context: sentence_array(path, row, &rec, 1)?,
                ending_a: non_empty(path, row, "ending 1", &rec[5])?,
                ending_b: non_empty(path, row, "ending 2", &rec[6])?,
                gold,
            })
        })
        .collect()
}

pub fn load_paired_choice(path: impl AsRef<Path>) -> Result<Vec<PairedChoice>> {
    let path = path.as_ref();
    read_rows(path, PAIRED_CHOICE_HEADER.len())?
        .into_iter()
        .map(|(row, rec)| {
            let gold = Choice::from_gold(&rec[4]).ok_or_else(|| Error::MalformedRow {
                file: path.display().to_string(),
                row,
                reason: format!("gold must be 1 or 2, found {:?}", &rec[4]),
            })?;
            Ok(PairedChoice {
                id: non_empty(path, row, "id", &rec[0])?,
                premise: rec[1].to_string(),
                alt1: non_empty(path, row, "alt1", &rec[2])?,
                alt2: non_empty(path, row, "alt2", &rec[3])?,
                gold,
            })
        })
        .collect()
}

/// Number of instances held out for development: `ceil(n * fraction)`,
/// kept inside `1..n` so neither side is empty.
pub fn dev_count(n: usize, dev_fraction: f64) -> usize {
    ((n as f64 * dev_fraction).ceil() as usize).clamp(1, n - 1)
}

/// Splits cloze instances into train/dev endings at the instance level.
/// The returned split has an empty test part.
pub fn split_cloze_endings(
    instances: &[ClozeInstance],
    dev_fraction: f64,
    seed: u64,
) -> Result<DatasetSplit> {
    if !(dev_fraction > 0.0 && dev_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "dev fraction must lie in (0, 1), got {dev_fraction}"
        )));
    }
    if instances.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 cloze instances to split, got {}",
            instances.len()
        )));
    }
    let n_dev = dev_count(instances.len(), dev_fraction);
    let mut order: Vec<usize> = (0..instances.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut in_dev = vec![false; instances.len()];
    for &i in &order[..n_dev] {
        in_dev[i] = true;
    }

    let mut split = DatasetSplit {
        seed,
        ..Default::default()
    };
    for (inst, dev) in instances.iter().zip(in_dev) {
        let target = if dev { &mut split.dev } else { &mut split.train };
        target.extend(inst.endings());
    }
    Ok(split)
}

/// Right and wrong endings of every instance, in file order.
pub fn cloze_endings(instances: &[ClozeInstance]) -> Vec<Ending> {
    instances.iter().flat_map(|i| i.endings()).collect()
}

/// Train/dev from the cloze development file, test from the cloze test file.
pub fn cloze_parts(
    dev_instances: &[ClozeInstance],
    test_instances: &[ClozeInstance],
    dev_fraction: f64,
    seed: u64,
) -> Result<DatasetSplit> {
    let mut split = split_cloze_endings(dev_instances, dev_fraction, seed)?;
    split.test = cloze_endings(test_instances);
    Ok(split)
}

fn keep_label(endings: &[Ending], label: Label) -> Vec<Ending> {
    endings.iter().filter(|e| e.label == label).cloned().collect()
}

/// Builds the labeled splits for one experiment.
///
/// `cloze` holds right/wrong endings for train, dev and test (see
/// [`cloze_parts`]). Original-vs-new experiments yield five folds, each pairing
/// the new endings with an equal number of sampled ROC final sentences.
pub fn build_experiment_dataset(
    experiment: Experiment,
    roc: &[Story],
    cloze: &DatasetSplit,
    resample_seed: u64,
) -> Result<Vec<DatasetSplit>> {
    if experiment == Experiment::RightVsWrong {
        let mut split = cloze.clone();
        split.seed = resample_seed;
        return Ok(vec![split]);
    }

    let new_label = experiment.negative();
    let train = keep_label(&cloze.train, new_label);
    let dev = keep_label(&cloze.dev, new_label);
    let test = keep_label(&cloze.test, new_label);
    let need = train.len() + dev.len() + test.len();
    if need == 0 {
        return Err(Error::InsufficientData(format!(
            "no {} endings to pair with originals",
            new_label.name()
        )));
    }
    if roc.len() < need {
        return Err(Error::InsufficientData(format!(
            "need {need} ROC stories per fold, only {} available",
            roc.len()
        )));
    }
    let cloze_ids: std::collections::HashSet<&str> = cloze
        .parts()
        .iter()
        .flat_map(|(_, part)| part.iter().map(|e| e.source_id.as_str()))
        .collect();
    if let Some(s) = roc.iter().find(|s| cloze_ids.contains(s.id.as_str())) {
        return Err(Error::InvalidInput(format!(
            "ROC story {} also appears in the cloze data",
            s.id
        )));
    }

    let folds = experiment.fold_count();
    let mut rng = ChaCha8Rng::seed_from_u64(resample_seed);
    let mut order: Vec<usize> = (0..roc.len()).collect();
    order.shuffle(&mut rng);
    let disjoint = folds * need <= roc.len();

    let mut out = Vec::with_capacity(folds);
    for fold in 0..folds {
        let sample: Vec<usize> = if disjoint {
            order[fold * need..(fold + 1) * need].to_vec()
        } else {
            order.shuffle(&mut rng);
            order[..need].to_vec()
        };
        let originals: Vec<Ending> = sample
            .iter()
            .map(|&i| Ending::new(roc[i].ending().to_string(), Label::Original, roc[i].id.clone()))
            .collect();
        let (o_train, rest) = originals.split_at(train.len());
        let (o_dev, o_test) = rest.split_at(dev.len());
        let interleave = |news: &[Ending], origs: &[Ending]| -> Vec<Ending> {
            news.iter()
                .zip(origs)
                .flat_map(|(n, o)| [o.clone(), n.clone()])
                .collect()
        };
        out.push(DatasetSplit {
            train: interleave(&train, o_train),
            dev: interleave(&dev, o_dev),
            test: interleave(&test, o_test),
            seed: resample_seed.wrapping_add(fold as u64),
        });
    }
    Ok(out)
}

fn write_csv<const N: usize>(
    path: &Path,
    header: [&str; N],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<()> {
    let io = |e: csv::Error| Error::io(path, std::io::Error::other(e.to_string()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn gold_field(c: Choice) -> String {
    match c {
        Choice::A => "1".into(),
        Choice::B => "2".into(),
    }
}

pub fn write_roc_stories(path: impl AsRef<Path>, stories: &[Story]) -> Result<()> {
    write_csv(
        path.as_ref(),
        ROC_HEADER,
        stories.iter().map(|s| {
            let mut row = vec![s.id.clone(), s.title.clone().unwrap_or_default()];
            row.extend(s.sentences.iter().cloned());
            row
        }),
    )
}

pub fn write_cloze_set(path: impl AsRef<Path>, instances: &[ClozeInstance]) -> Result<()> {
    write_csv(
        path.as_ref(),
        CLOZE_HEADER,
        instances.iter().map(|i| {
            let mut row = vec![i.id.clone()];
            row.extend(i.context.iter().cloned());
            row.extend([i.ending_a.clone(), i.ending_b.clone(), gold_field(i.gold)]);
            row
        }),
    )
}

pub fn write_paired_choice(path: impl AsRef<Path>, items: &[PairedChoice]) -> Result<()> {
    write_csv(
        path.as_ref(),
        PAIRED_CHOICE_HEADER,
        items.iter().map(|i| {
            vec![
                i.id.clone(),
                i.premise.clone(),
                i.alt1.clone(),
                i.alt2.clone(),
                gold_field(i.gold),
            ]
        }),
    )
}
