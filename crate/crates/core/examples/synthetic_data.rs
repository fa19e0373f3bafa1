// Writes a small synthetic corpus in the official CSV layouts, ready for
// the command-line tool:
//
//     cargo run --example synthetic_data -- /tmp/stylecloze-data
//     STYLECLOZE_DATA=/tmp/stylecloze-data cargo run -- exp1

use std::path::{Path, PathBuf};

use stylecloze::synthetic::{SyntheticConfig, SyntheticCorpus};

fn main() -> stylecloze::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("stylecloze-synthetic"));
    write_corpus(&dir)
}

fn write_corpus(dir: &Path) -> stylecloze::Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| stylecloze::Error::io(dir, e))?;
    let corpus = SyntheticCorpus::generate(&SyntheticConfig::default());
    for path in corpus.write_to(dir)? {
        println!("{}", path.display());
    }
    Ok(())
}
