use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use stylecloze::config::{LmKind, RunConfig};
use stylecloze::corpus::schemas;
use stylecloze::pipeline::{Command, Pipeline};
use stylecloze::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_CHECK: u8 = 3;

#[derive(Parser)]
#[command(name = "stylecloze", version, about = "Story-ending style classifier and cloze evaluation")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// JSON run configuration; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed for splits, resampling, tagger and LM.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for report and model files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Use 0/1 presence features instead of scaled counts.
    #[arg(long, global = true)]
    binary_features: bool,
    /// Retrain on the paired-choice training file instead of transferring.
    #[arg(long, global = true)]
    retrain: bool,
    /// Pre-tagged endings (token<TAB>tag lines, blank line between sentences).
    #[arg(long, global = true)]
    pretagged: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    lm: Option<LmArg>,
    /// Data directory; defaults to $STYLECLOZE_DATA.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Print the JSON report instead of the table.
    #[arg(long, global = true)]
    json: bool,
    /// Compare headline numbers with their official-data targets; exit 3 on a miss.
    #[arg(long, global = true)]
    check: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum LmArg {
    Kn,
    Neural,
}

#[derive(Subcommand)]
enum Cmd {
    /// Ending lengths, POS and word distributions per class.
    Stats,
    /// Right vs wrong endings.
    Exp1,
    /// Original vs right endings, five resamples.
    Exp2,
    /// Original vs wrong endings, five resamples.
    Exp3,
    /// Style-only story cloze accuracy.
    Cloze,
    /// Train the language model on the ROC stories.
    LmTrain,
    /// Story cloze with the language model alone.
    LmCloze,
    /// Story cloze with style and LM features together.
    Combine,
    /// Word-only, char-only and full feature sets.
    Ablate,
    /// Most heavily weighted features.
    Salient,
    /// Apply the cloze classifier to a premise/alternatives dataset.
    PairedChoice,
    /// Print the expected CSV layouts.
    Schema,
}

impl Cmd {
    fn command(&self) -> Option<Command> {
        Some(match self {
            Cmd::Stats => Command::Stats,
            Cmd::Exp1 => Command::Exp1,
            Cmd::Exp2 => Command::Exp2,
            Cmd::Exp3 => Command::Exp3,
            Cmd::Cloze => Command::Cloze,
            Cmd::LmTrain => Command::LmTrain,
            Cmd::LmCloze => Command::LmCloze,
            Cmd::Combine => Command::Combine,
            Cmd::Ablate => Command::Ablate,
            Cmd::Salient => Command::Salient,
            Cmd::PairedChoice => Command::PairedChoice,
            Cmd::Schema => return None,
        })
    }
}

fn build_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(|e| match e {
            Error::Io { .. } => Error::InvalidConfig(e.to_string()),
            e => e,
        })?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    if cli.binary_features {
        cfg.features.binary = true;
    }
    if cli.retrain {
        cfg.retrain = true;
    }
    if let Some(p) = &cli.pretagged {
        cfg.paths.pretagged = Some(p.clone());
    }
    if let Some(lm) = cli.lm {
        cfg.lm.kind = match lm {
            LmArg::Kn => LmKind::Kn,
            LmArg::Neural => LmKind::Neural,
        };
    }
    match &cli.data {
        Some(dir) => cfg.fill_from_data_dir(dir)?,
        None => cfg.fill_from_env()?,
    }
    Ok(cfg)
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if matches!(e, Error::InvalidConfig(_)) { EXIT_USAGE } else { EXIT_DATA })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let Some(command) = cli.command.command() else {
        emit(&schemas());
        return ExitCode::SUCCESS;
    };
    let config = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let out_dir = config.out.clone();
    let output = match Pipeline::run_command(config, command) {
        Ok(o) => o,
        Err(e) => return fail(&e),
    };
    emit(if cli.json { &output.json } else { &output.text });
    if let Some(dir) = out_dir {
        let written = std::fs::create_dir_all(&dir)
            .map_err(|e| Error::io(&dir, e))
            .and_then(|_| output.write_to(&dir));
        if let Err(e) = written {
            return fail(&e);
        }
    }
    if cli.check {
        for c in &output.checks {
            eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        if output.checks.iter().any(|c| !c.passed) {
            return ExitCode::from(EXIT_CHECK);
        }
    }
    ExitCode::SUCCESS
}
