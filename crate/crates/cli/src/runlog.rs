use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::Cli;

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("missing input: {}", .0.display())]
    MissingInput(PathBuf),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Pipeline(#[from] bioforge::Error),
}

impl Failure {
    /// 1 for missing inputs and pipeline failures, 2 for bad configuration.
    pub fn exit_code(&self) -> u8 {
        use bioforge::Error as E;
        match self {
            Failure::MissingInput(_) => 1,
            Failure::Config(_) => 2,
            Failure::Pipeline(
                E::Json { .. }
                | E::UnknownDataset(_)
                | E::DuplicateDataset(_)
                | E::UnknownTaskType(_)
                | E::UnknownLanguage(_)
                | E::InvalidTemplate { .. }
                | E::NoTemplate(..)
                | E::MissingSlotData(_)
                | E::InvalidManifest(_),
            ) => 2,
            Failure::Pipeline(_) => 1,
        }
    }
}

pub type CliResult<T> = Result<T, Failure>;

pub fn require(path: &Path) -> CliResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Failure::MissingInput(path.to_path_buf()))
    }
}

#[derive(Debug, Serialize)]
struct Config {
    registry: Option<String>,
    corpus_root: Option<String>,
    templates: Option<String>,
    seed: u64,
    output_root: String,
    jobs: Option<usize>,
    sample_n: Option<usize>,
    stage: Option<u8>,
    predictions: Option<String>,
    decompose: bool,
}

#[derive(Debug, Serialize)]
struct FileDigest {
    path: String,
    sha256: String,
}

/// Everything needed to reproduce a command's artifacts. Deliberately free
/// of timestamps so identical runs write identical logs.
#[derive(Debug, Serialize)]
pub struct RunLog {
    command: String,
    config: Config,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
    counts: BTreeMap<String, serde_json::Value>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn show(p: &Option<PathBuf>) -> Option<String> {
    p.as_ref().map(|p| p.display().to_string())
}

/// Command context: resolved paths plus the log being accumulated.
pub struct Run<'a> {
    pub cli: &'a Cli,
    log: RunLog,
}

impl<'a> Run<'a> {
    pub fn new(command: &str, cli: &'a Cli) -> Self {
        let config = Config {
            registry: show(&cli.registry),
            corpus_root: show(&cli.corpus_root),
            templates: show(&cli.templates),
            seed: cli.seed,
            output_root: cli.out.display().to_string(),
            jobs: cli.jobs,
            sample_n: cli.sample_n,
            stage: cli.stage,
            predictions: show(&cli.predictions),
            decompose: cli.decompose,
        };
        Run {
            cli,
            log: RunLog {
                command: command.to_string(),
                config,
                inputs: Vec::new(),
                outputs: Vec::new(),
                counts: BTreeMap::new(),
            },
        }
    }

    pub fn out(&self, rel: &str) -> PathBuf {
        self.cli.out.join(rel)
    }

    fn relative(&self, path: &Path) -> String {
        path.strip_prefix(&self.cli.out).unwrap_or(path).display().to_string()
    }

    pub fn read_input(&mut self, path: &Path) -> CliResult<String> {
        require(path)?;
        let bytes = std::fs::read(path).map_err(|e| bioforge::Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        self.log.inputs.push(FileDigest {
            path: self.relative(path),
            sha256: sha256_hex(&bytes),
        });
        String::from_utf8(bytes).map_err(|_| Failure::Config(format!("{} is not UTF-8", path.display())))
    }

    /// Writes `contents` to `<out>/<rel>` and records its digest.
    pub fn write_output(&mut self, rel: &str, contents: &str) -> CliResult<()> {
        let path = self.out(rel);
        bioforge::jsonl::write_string(&path, contents)?;
        self.log.outputs.push(FileDigest {
            path: rel.to_string(),
            sha256: sha256_hex(contents.as_bytes()),
        });
        Ok(())
    }

    /// Records the digest of a file some library call already wrote.
    pub fn record_output(&mut self, path: &Path) -> CliResult<()> {
        let bytes = std::fs::read(path).map_err(|e| bioforge::Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        self.log.outputs.push(FileDigest {
            path: self.relative(path),
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    pub fn count(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("count serializes");
        self.log.counts.insert(key.to_string(), v);
    }

    pub fn finish(self) -> CliResult<()> {
        let rel = format!("logs/{}.log.json", self.log.command);
        let body = serde_json::to_string_pretty(&self.log).expect("log serializes") + "\n";
        let path = self.out(&rel);
        bioforge::jsonl::write_string(&path, &body)?;
        Ok(())
    }
}
