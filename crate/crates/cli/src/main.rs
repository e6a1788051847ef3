use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rigidity_lab::cli::{run, Command, RunOptions};

#[derive(Parser)]
#[command(
    name = "rigidity-lab",
    version,
    about = "Lyapunov-exponent rigidity experiments on hyperbolic surfaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Enumerate closed-geodesic classes and write the length table.
    Census(Common),
    /// Refine the orbit census along the epsilon ladder and report exponents.
    Rigidity(Common),
    /// Monte Carlo Liouville entropy next to the census growth exponent.
    Entropy(Common),
    /// Stable/unstable solutions, exponent and trace chains of one profile.
    Riccati(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Seed overriding the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (cmd, c) = match cli.command {
        Cmd::Census(c) => (Command::Census, c),
        Cmd::Rigidity(c) => (Command::Rigidity, c),
        Cmd::Entropy(c) => (Command::Entropy, c),
        Cmd::Riccati(c) => (Command::Riccati, c),
    };
    let opts = RunOptions {
        config: c.config,
        out: c.out,
        threads: c.threads,
        seed: c.seed,
    };
    match run(cmd, &opts) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
