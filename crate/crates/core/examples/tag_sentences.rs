// Tokenizes a few endings, trains the averaged-perceptron tagger on the
// bundled fixture and reports held-out accuracy.
//
//     cargo run --example tag_sentences

use stylecloze::textproc::{bundled_fixture_split, tokenize, Tagger, TokenizedSentence};

fn main() -> stylecloze::Result<()> {
    for text in ["She didn't want to go.", "\"Wow!\" he said, and they'd left."] {
        println!("{text:40} -> {:?}", tokenize(text));
    }

    let (train, held_out) = bundled_fixture_split();
    let tagger = Tagger::train(&train, 5, 1)?;
    println!(
        "\ntrained on {} sentences, held-out accuracy {:.3}",
        train.len(),
        tagger.accuracy(&held_out)?
    );

    let sentence = TokenizedSentence::from_text("Sara bought a new car.");
    let tagged = tagger.tag(&sentence)?;
    for (tok, tag) in tagged.tokens().iter().zip(&tagged.tags) {
        println!("  {tok:<8} {tag}");
    }

    let restored = Tagger::from_text(&tagger.to_text())?;
    assert_eq!(restored.tag(&sentence)?, tagged);
    Ok(())
}
