mod commands;
mod runlog;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::runlog::Failure;

#[derive(Parser, Debug, Clone)]
#[command(name = "bioforge", version, about = "Bilingual biomedical instruction-data pipeline")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,

    /// Run ingest, curate, forge, plan and stats in order (and eval when a
    /// predictions file exists).
    #[arg(long)]
    pub all: bool,

    /// Dataset registry (JSONL of dataset descriptors).
    #[arg(long, global = true)]
    pub registry: Option<PathBuf>,

    /// Directory holding `<dataset_id>/<split>.<ext>` source files.
    #[arg(long, global = true)]
    pub corpus_root: Option<PathBuf>,

    /// Template bank (JSONL); the built-in bank when omitted.
    #[arg(long, global = true)]
    pub templates: Option<PathBuf>,

    #[arg(long, global = true, env = "BIOFORGE_SEED", default_value_t = 42)]
    pub seed: u64,

    /// Output root; every command writes only below it.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// Worker thread cap.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Evaluate a seeded random subset of this many test instances per dataset.
    #[arg(long, global = true)]
    pub sample_n: Option<usize>,

    /// Plan only this stage (1 or 2); both by default.
    #[arg(long, global = true, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub stage: Option<u8>,

    /// Model generations, JSONL of `{instance_id, raw_text}`; defaults to
    /// `<out>/predictions.jsonl`.
    #[arg(long, global = true)]
    pub predictions: Option<PathBuf>,

    /// Split multi-label NER/RE datasets into one extra dataset per label.
    #[arg(long, global = true)]
    pub decompose: bool,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Parse source corpora into unified JSONL.
    Ingest,
    /// Deduplicate and drop train documents that overlap the test split.
    Curate,
    /// Render instruction instances from curated corpora.
    Forge,
    /// Build the two-stage plan and training manifests.
    Plan,
    /// Score model generations against curated test data.
    Eval,
    /// Print per-task instance counts.
    Stats,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Curate => "curate",
            Command::Forge => "forge",
            Command::Plan => "plan",
            Command::Eval => "eval",
            Command::Stats => "stats",
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| Failure::Config(format!("--jobs: {e}")))?;
    }
    let steps: Vec<Command> = match (cli.command, cli.all) {
        (Some(c), false) => vec![c],
        (None, true) => {
            let mut steps = vec![
                Command::Ingest,
                Command::Curate,
                Command::Forge,
                Command::Plan,
                Command::Stats,
            ];
            if commands::predictions_path(cli).is_file() {
                steps.push(Command::Eval);
            }
            steps
        }
        (Some(_), true) => return Err(Failure::Config("--all cannot be combined with a subcommand".into())),
        (None, false) => return Err(Failure::Config("a subcommand or --all is required".into())),
    };
    for step in steps {
        commands::execute(step, cli)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bioforge: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
