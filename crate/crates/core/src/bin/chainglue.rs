use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use chainglue::chain::{site_cap_from_env, DEFAULT_SITE_CAP};
use chainglue::experiments::{exit_code, run, Command, ExperimentConfig, RunOptions};

#[derive(Parser)]
#[command(name = "chainglue", version, about = "Gluing sweeps, error certificates, truncation and Lieb-Robinson scans")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for independent sweep cells.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Largest chain handled by exact diagonalization.
    #[arg(long, global = true)]
    cap: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Build circuits by iterated gluing over the (γ, α) grid.
    Glue,
    /// Compare quasi-adiabatic transport errors with η*·f*.
    Certify,
    /// Tabulate ‖k(s) − k_α(s)‖ over s and α.
    Truncation,
    /// Scan commutator norms and fit Lieb-Robinson constants.
    Lr,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let command = match cli.command {
        Sub::Glue => Command::Glue,
        Sub::Certify => Command::Certify,
        Sub::Truncation => Command::Truncation,
        Sub::Lr => Command::Lr,
    };
    let Some(config_path) = cli.config else {
        eprintln!("error: --config <path> is required");
        return ExitCode::from(2);
    };
    let cfg = match ExperimentConfig::load(&config_path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e) as u8);
        }
    };
    let cap = cli.cap.unwrap_or_else(|| site_cap_from_env(DEFAULT_SITE_CAP));
    let out = cli.out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("results"));
    let opts = RunOptions {
        out,
        jobs: cli.jobs.max(1),
        cap,
    };
    match run(command, &cfg, &opts) {
        Ok(summary) => {
            for f in &summary.files {
                println!("{}", f.display());
            }
            match summary.failure {
                None => ExitCode::SUCCESS,
                Some(e) => {
                    eprintln!("error: {e} (partial results written)");
                    ExitCode::from(exit_code(&e) as u8)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
