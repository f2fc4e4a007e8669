use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qmelab_cli::commands;
use qmelab_cli::settings::{Experiment, Settings, SEED_ENV};

/// Kernel mean embeddings and their quantum counterpart: exact oracles,
/// simulated swap tests and resource-scaling experiments.
#[derive(Parser)]
#[command(name = "qmelab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mean embedding inner product K(X, Y), optionally the Gram block.
    Gram(Settings),
    /// Biased squared MMD by the classical or a quantum path.
    Mmd(Settings),
    /// Overlap of the two quantum mean embeddings.
    QmeInner(Settings),
    /// Embedding norm N_X, classically or through a reference state.
    Norm(Settings),
    /// Same-distribution MMD against sample size.
    Convergence(Settings),
    /// Kernel reproduction error against truncation dimension.
    TruncationStudy(Settings),
    /// Swap-test noise against shot count.
    ShotNoise(Settings),
    /// Classical versus quantum resource counters against sample size.
    Scaling(Settings),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, settings) = match cli.command {
        Command::Gram(s) => (Experiment::Gram, s),
        Command::Mmd(s) => (Experiment::Mmd, s),
        Command::QmeInner(s) => (Experiment::QmeInner, s),
        Command::Norm(s) => (Experiment::Norm, s),
        Command::Convergence(s) => (Experiment::Convergence, s),
        Command::TruncationStudy(s) => (Experiment::TruncationStudy, s),
        Command::ShotNoise(s) => (Experiment::ShotNoise, s),
        Command::Scaling(s) => (Experiment::Scaling, s),
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    let result = settings.resolve(experiment, env_seed.as_deref()).and_then(|s| {
        let out = commands::run(experiment, &s)?;
        out.write(s.output.as_deref(), &mut std::io::stdout().lock())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qmelab {}: {e}", experiment.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
