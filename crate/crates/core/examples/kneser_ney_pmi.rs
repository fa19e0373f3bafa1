// Trains a trigram Kneser-Ney model on a few stories and scores two
// candidate endings by conditional probability and by PMI.
//
//     cargo run --example kneser_ney_pmi

use stylecloze::langmodel::{pmi, story_tokens, LanguageModel, NGramLm, Vocabulary};

fn main() -> stylecloze::Result<()> {
    let stories: Vec<Vec<&str>> = vec![
        vec!["The sky was dark.", "It started to rain.", "We stayed inside."],
        vec!["The sky was clear.", "The sun was out.", "We went to the beach."],
        vec!["It was raining.", "We took an umbrella.", "We stayed inside."],
        vec!["It started to rain.", "The sky was dark.", "We stayed inside."],
        vec!["The sun was out.", "It was hot.", "We went swimming."],
    ];
    let tokens: Vec<Vec<String>> = stories.iter().map(|s| story_tokens(s)).collect();
    let vocab = Vocabulary::build(&tokens, 1);
    let seqs: Vec<Vec<u32>> = stories.iter().map(|s| vocab.encode_story(s)).collect();
    let lm = NGramLm::train(vocab, &seqs, 3, 0.75)?;

    let dist = lm.next_distribution(&[])?;
    println!("vocabulary {}, next-token mass {:.12}", lm.vocab().len(), dist.iter().sum::<f64>());

    let context = lm.vocab().encode_sentences(&["The sky was dark.", "It started to rain."]);
    for ending in ["We stayed inside.", "We went to the beach."] {
        let ids = lm.vocab().encode_sentence(ending);
        let s = pmi(&lm, &context, &ids)?;
        println!(
            "{ending:24} log p(e|s) {:8.3}  log p(e) {:8.3}  ratio {:6.3}",
            s.log_conditional, s.log_marginal, s.log_ratio
        );
    }
    Ok(())
}
