use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "ane", version, about = "Grow ReLU networks by adaptive network enhancement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML config file.
    Run { config: PathBuf },
    /// Render a partition export as SVG.
    Render { partition: PathBuf, output: PathBuf },
    /// Print the run table of an output directory.
    Report { outdir: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config } => ane_cli::RunConfig::load(&config).and_then(|cfg| {
            let summary = ane_cli::run(&cfg)?;
            println!(
                "{}: {} ({} params), xi_rel {:.6}, error {:.6}, {} loops -> {}",
                summary.status,
                summary.structure,
                summary.params,
                summary.xi_rel,
                summary.error,
                summary.loops,
                cfg.outdir.display()
            );
            Ok(())
        }),
        Command::Render { partition, output } => ane_cli::render(&partition, &output),
        Command::Report { outdir } => ane_cli::report(&outdir).map(|t| print!("{t}")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
