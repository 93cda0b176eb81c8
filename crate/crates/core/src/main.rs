use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use medcoder::pipeline::{full_run, run_command, Command, RunConfig};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cli {
    GenSynthetic,
    Ingest,
    TrainText,
    TrainRanker,
    TrainTabular,
    TuneEnsemble,
    Predict,
    Explain,
    Evaluate,
    Report,
    /// Every stage in order.
    All,
}

/// ICD-10 code prediction from notes, diagnosis phrases and structured data.
///
/// Log verbosity follows MEDCODER_LOG (error, warn, info, debug, trace).
#[derive(Debug, Parser)]
#[command(name = "medcoder", version)]
struct Args {
    #[arg(value_enum)]
    command: Cli,
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config output root.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn commands(cli: Cli, config: &RunConfig) -> Vec<Command> {
    let one = match cli {
        Cli::GenSynthetic => Command::GenSynthetic,
        Cli::Ingest => Command::Ingest,
        Cli::TrainText => Command::TrainText,
        Cli::TrainRanker => Command::TrainRanker,
        Cli::TrainTabular => Command::TrainTabular,
        Cli::TuneEnsemble => Command::TuneEnsemble,
        Cli::Predict => Command::Predict,
        Cli::Explain => Command::Explain,
        Cli::Evaluate => Command::Evaluate,
        Cli::Report => Command::Report,
        Cli::All => return full_run(config),
    };
    vec![one]
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MEDCODER_LOG", "info")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = RunConfig::load(&args.config).and_then(|mut config| {
        if let Some(seed) = args.seed {
            config.seed = seed;
        }
        if let Some(out) = &args.out {
            config.out_dir = out.clone();
        }
        for c in commands(args.command, &config) {
            run_command(&config, c)?;
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            eprintln!("medcoder: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
