// Feature-family ablation, surface statistics and salient features on a
// synthetic corpus.
//
//     cargo run --release --example analyses

use stylecloze::corpus::{cloze_endings, cloze_parts, Experiment, Label};
use stylecloze::features::FeatureConfig;
use stylecloze::harness::{
    ablation, annotate_texts, salient_features, surface_stats, train_cloze_classifier, AblationFamily,
};
use stylecloze::synthetic::{SyntheticConfig, SyntheticCorpus};
use stylecloze::textproc::Annotator;

fn main() -> stylecloze::Result<()> {
    let corpus = SyntheticCorpus::generate(&SyntheticConfig::default());
    let annotator = Annotator::bundled(5, 1)?;
    let split = cloze_parts(&corpus.cloze_dev, &corpus.cloze_test, 0.1, 13)?;
    let features = FeatureConfig::default();
    let grid = [1e-3, 1e-1];

    let report = ablation(&AblationFamily::ALL, &split, &features, &grid, &annotator, serde_json::json!({}))?;
    println!("{}", report.to_text());

    let originals: Vec<&str> = corpus.roc.iter().map(|s| s.ending()).collect();
    let endings = cloze_endings(&corpus.cloze_test);
    let of = |label: Label| -> Vec<&str> {
        endings.iter().filter(|e| e.label == label).map(|e| e.text.as_str()).collect()
    };
    let stats = surface_stats(&[
        (Label::Original, annotate_texts(&annotator, &originals)?),
        (Label::Right, annotate_texts(&annotator, &of(Label::Right))?),
        (Label::Wrong, annotate_texts(&annotator, &of(Label::Wrong))?),
    ])?;
    println!("{}", stats.to_text());

    let clf = train_cloze_classifier(&split, &features, &grid, &annotator)?;
    let train = annotate_texts(&annotator, &split.train.iter().map(|e| e.text.as_str()).collect::<Vec<_>>())?;
    let salient = salient_features(Experiment::RightVsWrong, &clf, &train, 5, 0.05)?;
    print!("{}", salient.to_text());
    Ok(())
}
