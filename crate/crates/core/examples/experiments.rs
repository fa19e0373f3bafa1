// Runs the three ending-classification experiments on a synthetic corpus
// where each class carries its own marker word.
//
//     cargo run --release --example experiments

use stylecloze::corpus::{build_experiment_dataset, cloze_parts, Experiment};
use stylecloze::features::FeatureConfig;
use stylecloze::harness::{run_experiment, to_canonical_json};
use stylecloze::synthetic::{SyntheticConfig, SyntheticCorpus};
use stylecloze::textproc::Annotator;

fn main() -> stylecloze::Result<()> {
    let corpus = SyntheticCorpus::generate(&SyntheticConfig::default());
    let annotator = Annotator::bundled(5, 1)?;
    let split = cloze_parts(&corpus.cloze_dev, &corpus.cloze_test, 0.1, 13)?;
    let grid = [1e-3, 1e-1];

    for exp in [Experiment::RightVsWrong, Experiment::OriginalVsRight, Experiment::OriginalVsWrong] {
        let folds = build_experiment_dataset(exp, &corpus.roc, &split, 14)?;
        let report = run_experiment(exp, &folds, &FeatureConfig::default(), &grid, &annotator, serde_json::json!({}))?;
        println!("{}", report.to_text());
        if exp == Experiment::RightVsWrong {
            let json = to_canonical_json(&report)?;
            println!("{}", &json[..json.len().min(300)]);
        }
    }
    Ok(())
}
