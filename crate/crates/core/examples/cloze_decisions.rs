// Story cloze with the style classifier, a Kneser-Ney LM and both together.
//
//     cargo run --release --example cloze_decisions

use stylecloze::corpus::cloze_parts;
use stylecloze::features::FeatureConfig;
use stylecloze::harness::{
    cloze_decide, cloze_eval, combined_train_eval, decide, lm_cloze_eval, train_cloze_classifier, LmMode,
};
use stylecloze::langmodel::{story_tokens, NGramLm, Vocabulary};
use stylecloze::synthetic::{SyntheticConfig, SyntheticCorpus};
use stylecloze::textproc::Annotator;

fn main() -> stylecloze::Result<()> {
    for (pa, pb) in [(0.8, 0.3), (0.9, 0.7), (0.2, 0.4), (0.5, 0.5)] {
        let d = decide("example", pa, pb);
        println!("P(right) = ({pa}, {pb}) -> {:?} via {:?}", d.chosen, d.rule);
    }

    let corpus = SyntheticCorpus::generate(&SyntheticConfig::default());
    let annotator = Annotator::bundled(5, 1)?;
    let split = cloze_parts(&corpus.cloze_dev, &corpus.cloze_test, 0.1, 13)?;
    let features = FeatureConfig::default();
    let grid = [1e-3, 1e-1];

    let clf = train_cloze_classifier(&split, &features, &grid, &annotator)?;
    let style = cloze_eval(
        |inst| cloze_decide(&clf, &annotator, inst).map(|d| d.chosen),
        &corpus.cloze_test,
    )?;
    println!("\nstyle-only accuracy {style:.3}");

    let tokens: Vec<Vec<String>> = corpus.roc.iter().map(|s| story_tokens(&s.sentences)).collect();
    let vocab = Vocabulary::build(&tokens, 2);
    let seqs: Vec<Vec<u32>> = corpus.roc.iter().map(|s| vocab.encode_story(&s.sentences)).collect();
    let lm = NGramLm::train(vocab, &seqs, 3, 0.75)?;
    for mode in [LmMode::ConditionalOnly, LmMode::Pmi] {
        println!("LM {mode:?} accuracy {:.3}", lm_cloze_eval(&lm, &corpus.cloze_test, mode)?);
    }

    let combined = combined_train_eval(&split, &corpus.cloze_dev, &corpus.cloze_test, &lm, &features, &grid, &annotator)?;
    print!("\n{}", combined.to_text());
    Ok(())
}
