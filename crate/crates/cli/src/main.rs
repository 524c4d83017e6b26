use clap::{Parser, Subcommand};

use rankdrift_cli::commands::{self, EvalArgs, GenerateArgs, ScoreArgs};

/// Streaming anomaly detection for dynamic directed graphs.
#[derive(Parser)]
#[command(name = "rankdrift", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score an edge stream window by window.
    Score(ScoreArgs),
    /// Generate a synthetic stream, optionally with injected anomalies.
    Generate(GenerateArgs),
    /// Evaluate a score table against ground-truth window labels.
    Eval(EvalArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Score(args) => commands::run_score(args),
        Command::Generate(args) => commands::run_generate(args),
        Command::Eval(args) => commands::run_eval(args),
    };
    if let Err(err) = result {
        eprintln!("rankdrift: {err:#}");
        std::process::exit(1);
    }
}
