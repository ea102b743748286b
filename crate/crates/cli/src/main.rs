mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stylesim::replay::CorpusFormat;

/// Replay dialogue corpora through style-adaptation policies.
#[derive(Debug, Parser)]
#[command(name = "stylesim", version, about)]
struct Cli {
    /// Worker threads for session-level parallelism.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the per-corpus scaler and persona centroid.
    FitPersona(FitPersonaArgs),
    /// Run the policy ablation and write tables and plots.
    Simulate(SimulateArgs),
    /// Recompute comparison statistics from a summary table.
    Stats(StatsArgs),
    /// Convert an external corpus export to session JSONL.
    Convert(ConvertArgs),
}

#[derive(Debug, Args)]
struct FitPersonaArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated policy kinds with default parameters.
    #[arg(long)]
    policies: Option<String>,
    /// Comma-separated window sizes for predictive synchrony.
    #[arg(long)]
    windows: Option<String>,
    /// Also run the generator-in-the-loop replay.
    #[arg(long)]
    closed_loop: bool,
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// A summary.csv written by `simulate`.
    #[arg(long)]
    summary: PathBuf,
    /// Supplies resamples, SESOI, pairing and baseline.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Policy label to compare against.
    #[arg(long)]
    baseline: Option<String>,
}

#[derive(Debug, Args)]
struct ConvertArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_parser = parse_format)]
    format: CorpusFormat,
    /// Destination JSONL file.
    #[arg(long)]
    out: PathBuf,
    /// Corpus tag used for generated session ids.
    #[arg(long)]
    name: Option<String>,
}

fn parse_format(s: &str) -> Result<CorpusFormat, String> {
    s.parse().map_err(|e: stylesim::Error| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::FitPersona(a) => commands::fit_persona(&a.config, a.out),
        Command::Simulate(a) => commands::simulate(commands::SimulateOptions {
            config: a.config,
            seed: a.seed,
            out: a.out,
            policies: a.policies,
            windows: a.windows,
            closed_loop: a.closed_loop,
            jobs: cli.jobs,
        }),
        Command::Stats(a) => commands::stats(commands::StatsCommand {
            summary: a.summary,
            config: a.config,
            seed: a.seed,
            out: a.out,
            baseline: a.baseline,
        }),
        Command::Convert(a) => commands::convert(&a.input, a.format, &a.out, a.name),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
