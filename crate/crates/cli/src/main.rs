use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sppb_cli::{run_from_path, Step};
use sppb_forecast::CutoffTable;

#[derive(Parser)]
#[command(name = "sppb", version, about = "Four-year-ahead SPPB forecasting pipeline")]
struct Cli {
    /// Worker threads for cross-validation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Repeat for more progress output on stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Print the default scoring cutoffs and exit.
    #[arg(long)]
    show_cutoffs: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic cohort file.
    Synth(Args),
    /// Build the supervised wave-pair dataset.
    Build(Args),
    /// Cross-validate and fit the configured model.
    Train(Args),
    /// Grid search every configured family.
    Sweep(Args),
    /// TreeSHAP attributions for the best boosted model.
    Explain(Args),
    /// Retrain on the top-ranked features.
    Simplify(Args),
    /// Run every step from data to simplified models.
    Replicate(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(short, long)]
    config: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.show_cutoffs {
        let table = CutoffTable::default();
        println!("{}", serde_json::to_string_pretty(&table).expect("cutoffs serialize"));
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!("sppb: a subcommand is required (see --help)");
        return ExitCode::from(2);
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("sppb: cannot set up {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let (step, args) = match command {
        Command::Synth(a) => (Step::Synth, a),
        Command::Build(a) => (Step::Build, a),
        Command::Train(a) => (Step::Train, a),
        Command::Sweep(a) => (Step::Sweep, a),
        Command::Explain(a) => (Step::Explain, a),
        Command::Simplify(a) => (Step::Simplify, a),
        Command::Replicate(a) => (Step::Replicate, a),
    };
    match run_from_path(&args.config, step, cli.verbose) {
        Ok(outputs) => {
            for p in outputs {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("sppb {}: {e}", step.name());
            ExitCode::from(e.exit_code())
        }
    }
}
