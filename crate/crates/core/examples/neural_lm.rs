// Trains a tiny LSTM language model, prints per-epoch losses, saves and
// reloads the checkpoint.
//
//     cargo run --release --example neural_lm

use stylecloze::langmodel::{story_tokens, LanguageModel, NeuralConfig, NeuralLm, Vocabulary};
use stylecloze::synthetic::{SyntheticConfig, SyntheticCorpus};

fn main() -> stylecloze::Result<()> {
    let corpus = SyntheticCorpus::generate(&SyntheticConfig {
        roc_stories: 50,
        ..SyntheticConfig::default()
    });
    let tokens: Vec<Vec<String>> = corpus.roc.iter().map(|s| story_tokens(&s.sentences)).collect();
    let vocab = Vocabulary::build(&tokens, 2);
    let seqs: Vec<Vec<u32>> = corpus.roc.iter().map(|s| vocab.encode_story(&s.sentences)).collect();

    let config = NeuralConfig {
        embed_dim: 16,
        hidden_dim: 16,
        dropout: 0.0,
        learning_rate: 0.01,
        epochs: 5,
        batch_size: 8,
        validation_fraction: 0.1,
        ..NeuralConfig::default()
    };
    let before = NeuralLm::new(vocab.clone(), config.clone())?.mean_cross_entropy(&seqs)?;
    let (lm, log) = NeuralLm::train(vocab, &seqs, config)?;
    println!("{} parameters, initial cross-entropy {before:.3}", lm.parameter_count());
    for e in &log.epochs {
        println!("  epoch {} train loss {:.3}", e.epoch, e.train_loss);
    }
    println!("final cross-entropy {:.3}", lm.mean_cross_entropy(&seqs)?);

    let dir = std::env::temp_dir().join("stylecloze-neural-example");
    std::fs::create_dir_all(&dir).map_err(|e| stylecloze::Error::io(&dir, e))?;
    let stem = dir.join("lm");
    lm.save(&stem)?;
    let back = NeuralLm::load(&stem)?;
    let probe = &seqs[0][1..];
    assert_eq!(back.seq_logprob(probe, None)?, lm.seq_logprob(probe, None)?);
    println!("checkpoint written to {}", stem.display());
    Ok(())
}
