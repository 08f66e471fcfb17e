mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "stratincon",
    version,
    about = "Strategy inconsistency analysis for MOBA match logs"
)]
struct Cli {
    /// Workspace directory.
    #[arg(
        long,
        global = true,
        env = "STRATINCON_WORKSPACE",
        default_value = "workspace"
    )]
    workspace: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic matches (log to stdout, or `<id>.log` and
    /// `<id>.truth.jsonl` under `--out`).
    Gen(GenArgs),
    /// Parse, validate and store match logs in the workspace.
    Ingest(IngestArgs),
    /// Check match logs without storing them.
    Validate(ValidateArgs),
    /// Train a predictor on the workspace matches.
    Train(TrainArgs),
    /// Score a stored model and the persistence baseline.
    Eval(EvalArgs),
    /// Detect inconsistencies and write analysis bundles.
    Analyze(AnalyzeArgs),
    /// Serve the read-only HTTP API.
    Serve(ServeArgs),
    /// Print a match's inconsistency report as a text table.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolicyKind {
    Structured,
    Deterministic,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 2200)]
    frames: usize,
    /// Matches to generate, with seeds `seed..seed+count`.
    #[arg(long, default_value_t = 1)]
    count: u64,
    #[arg(long, value_enum, default_value_t = PolicyKind::Structured)]
    policy: PolicyKind,
    /// Deviations injected per match.
    #[arg(long, default_value_t = 0)]
    deviations: usize,
    /// Output directory. Without it a single log goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the truth sidecar when printing to stdout.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Log files; `-` or none reads stdin.
    files: Vec<PathBuf>,
    /// Store logs even when validation reports findings.
    #[arg(long)]
    allow_findings: bool,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Log files; `-` or none reads stdin.
    files: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    hidden: Option<usize>,
    /// Predict coordinates as an offset from the last observed position.
    #[arg(long)]
    residual: bool,
    /// Stop after this many epochs without validation improvement.
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    weight_decay: Option<f64>,
    /// Hold out the last N matches (by id) for validation.
    #[arg(long, default_value_t = 0)]
    validation_matches: usize,
    /// Comma-separated match ids; defaults to every stored match.
    #[arg(long, value_delimiter = ',')]
    matches: Vec<String>,
    #[arg(long, default_value = "default")]
    model: String,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long, default_value = "default")]
    model: String,
    #[arg(long, value_delimiter = ',')]
    matches: Vec<String>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Match ids; defaults to every stored match.
    ids: Vec<String>,
    #[arg(long, default_value = "default")]
    model: String,
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    /// Also flag coordinate discrepancies beyond `--coord-delta`.
    #[arg(long)]
    coord_alerts: bool,
    #[arg(long, default_value_t = 0.1)]
    coord_delta: f64,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: String,
    /// Origin allowed by CORS; any origin when omitted.
    #[arg(long)]
    ui_origin: Option<String>,
}

#[derive(Debug, Args)]
struct ExportArgs {
    id: String,
    /// Priority event id whose impacts fill the impact column.
    #[arg(long)]
    event: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let ws = cli.workspace;
    match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Ingest(a) => commands::ingest(&ws, a),
        Command::Validate(a) => commands::validate(a),
        Command::Train(a) => commands::train(&ws, a),
        Command::Eval(a) => commands::eval(&ws, a),
        Command::Analyze(a) => commands::analyze(&ws, a),
        Command::Serve(a) => commands::serve(&ws, a),
        Command::Export(a) => commands::export(&ws, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version.
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            // Keep the paragraph before clap's usage hint.
            let text = e.render().to_string();
            let summary: Vec<&str> = text
                .lines()
                .map(str::trim)
                .take_while(|l| !l.is_empty())
                .collect();
            let err = CliError::usage(summary.join(" ").trim_start_matches("error: "));
            eprintln!("{err}");
            return ExitCode::from(err.exit);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit)
        }
    }
}
