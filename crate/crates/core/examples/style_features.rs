// Fits a feature space on a handful of tagged endings and prints the
// features it keeps and the scaled vector of one ending.
//
//     cargo run --example style_features

use stylecloze::features::{backoff, char_ngrams, word_ngrams, FeatureConfig, FeatureSpace};
use stylecloze::textproc::Annotator;

fn main() -> stylecloze::Result<()> {
    let annotator = Annotator::bundled(5, 1)?;
    let endings = [
        "Ben loved the game.",
        "Sara hated the long walk!",
        "We played the game again.",
        "Jake liked the old car.",
        "Ben finished the long book.",
        "They walked home quickly.",
    ];
    let tagged = endings
        .iter()
        .map(|e| annotator.annotate(e))
        .collect::<stylecloze::Result<Vec<_>>>()?;

    let seq = backoff(&tagged[0])?;
    println!("backoff: {}", seq.0.join(" "));
    println!("bigrams: {:?}", word_ngrams(&seq.0, 2, 2));
    println!("char 4-grams of 'game.': {:?}", char_ngrams("game.", 4));

    let config = FeatureConfig {
        min_count: 2,
        ..FeatureConfig::default()
    };
    let space = FeatureSpace::fit(&config, &tagged)?;
    println!("\n{} features with at least {} occurrences", space.dim(), config.min_count);
    for e in space.entries().iter().take(12) {
        println!("  {:>3} {:<16} [{}, {}]", e.index, e.display(), e.min, e.max);
    }

    let v = space.transform(&tagged[1])?;
    println!("\nvector for {:?}:", endings[1]);
    for (i, x) in &v.entries {
        println!("  {:<16} {x:.3}", space.entries()[*i].display());
    }
    Ok(())
}
