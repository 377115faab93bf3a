//! `negest`: dataset generation, training, evaluation on physical states,
//! protocol verification and spectral statistics.

mod config;
mod eval;
mod gen;
mod spectrum;
mod train;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::ConfigFile;

#[derive(Parser, Debug)]
#[command(name = "negest", version, about = "Estimate logarithmic negativity from partial-transpose moments")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every command.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// `key = value` file; flags and NEGEST_* variables override it.
    #[arg(long, env = "NEGEST_CONFIG", global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; every random draw derives from it.
    #[arg(long, env = "NEGEST_SEED", global = true)]
    pub seed: Option<u64>,
    /// Output file.
    #[arg(long, env = "NEGEST_OUT", global = true)]
    pub out: Option<PathBuf>,
    /// Moment order(s) M, i.e. the number of copies.
    #[arg(long = "m-copies", env = "NEGEST_M_COPIES", global = true)]
    pub m_copies: Option<String>,
    /// Model file(s), comma-separated.
    #[arg(long, env = "NEGEST_MODEL", global = true)]
    pub model: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a labelled corpus of random GPS and MPS states.
    GenDataset(gen::GenArgs),
    /// Train a network on half of a corpus and report its test error.
    Train(train::TrainArgs),
    /// Compare estimators along a physical experiment.
    EvalPhysical(eval::EvalArgs),
    /// Check the moment identities and the shot-noise law.
    VerifyProtocol(verify::VerifyArgs),
    /// Partial-transpose spectra of random states against the semicircle law.
    SpectrumHist(spectrum::SpectrumArgs),
}

/// Whether every contract check of a command passed.
pub enum Outcome {
    Passed,
    ChecksFailed,
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let cfg = ConfigFile::load(cli.common.config.as_deref())?;
    let keys = match &cli.command {
        Command::GenDataset(_) => gen::KEYS,
        Command::Train(_) => train::KEYS,
        Command::EvalPhysical(_) => eval::KEYS,
        Command::VerifyProtocol(_) => verify::KEYS,
        Command::SpectrumHist(_) => spectrum::KEYS,
    };
    let mut known = vec!["seed", "out", "m_copies", "model"];
    known.extend_from_slice(keys);
    cfg.warn_unknown(&known);
    let common = &cli.common;
    match cli.command {
        Command::GenDataset(a) => gen::run(common, a, &cfg),
        Command::Train(a) => train::run(common, a, &cfg),
        Command::EvalPhysical(a) => eval::run(common, a, &cfg),
        Command::VerifyProtocol(a) => verify::run(common, a, &cfg),
        Command::SpectrumHist(a) => spectrum::run(common, a, &cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NEGEST_LOG", "info")).init();
    match run(Cli::parse()) {
        Ok(Outcome::Passed) => ExitCode::SUCCESS,
        Ok(Outcome::ChecksFailed) => {
            log::error!("one or more checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::from(2)
        }
    }
}
