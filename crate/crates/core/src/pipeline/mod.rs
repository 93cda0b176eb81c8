//! The ten CLI stages. Each reads upstream artifacts from
//! `<out_dir>/<stage>/` and writes only into `<out_dir>/<command>/`.

mod config;
mod io;
mod stages;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

pub use config::{CorpusConfig, EnsembleConfig, ExplainConfig, RunConfig};
pub use io::{read_jsonl, write_jsonl};
pub use stages::{
    load_ingested, Ingested, ModalityScores, SearchSummary, ADMISSIONS_FILE, AGREEMENT_FILE, EVIDENCE_FILE,
    METRICS_FILE, PER_CODE_FILE, PREDICTIONS_FILE, REPORT_FILE, SEARCH_FILE,
};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Command {
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
}

impl Command {
    pub const ALL: [Command; 10] = [
        Command::GenSynthetic,
        Command::Ingest,
        Command::TrainText,
        Command::TrainRanker,
        Command::TrainTabular,
        Command::TuneEnsemble,
        Command::Predict,
        Command::Explain,
        Command::Evaluate,
        Command::Report,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Command::GenSynthetic => "gen-synthetic",
            Command::Ingest => "ingest",
            Command::TrainText => "train-text",
            Command::TrainRanker => "train-ranker",
            Command::TrainTabular => "train-tabular",
            Command::TuneEnsemble => "tune-ensemble",
            Command::Predict => "predict",
            Command::Explain => "explain",
            Command::Evaluate => "evaluate",
            Command::Report => "report",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Usage(format!("unknown command {s:?}")))
    }
}

/// Runs one stage and returns its output directory.
pub fn run_command(config: &RunConfig, command: Command) -> Result<PathBuf> {
    let mut config = config.clone();
    config.finalize()?;
    let run = stages::Run::new(&config);
    log::info!("{command}: writing to {}", run.stage_dir(command).display());
    match command {
        Command::GenSynthetic => run.gen_synthetic(),
        Command::Ingest => run.ingest(),
        Command::TrainText => run.train_text(),
        Command::TrainRanker => run.train_ranker(),
        Command::TrainTabular => run.train_tabular(),
        Command::TuneEnsemble => run.tune_ensemble(),
        Command::Predict => run.predict(),
        Command::Explain => run.explain(),
        Command::Evaluate => run.evaluate(),
        Command::Report => run.report(),
    }?;
    Ok(run.stage_dir(command))
}

/// The stages a full run executes, in order. `gen-synthetic` is included
/// only for synthetic corpora.
pub fn full_run(config: &RunConfig) -> Vec<Command> {
    Command::ALL
        .into_iter()
        .filter(|c| *c != Command::GenSynthetic || matches!(config.corpus, CorpusConfig::Synthetic { .. }))
        .collect()
}
