use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use forge_cli::{run, Command, Invocation};

/// Statevector ADAPT-VQE with entanglement forging.
#[derive(Parser, Debug)]
#[command(name = "forge-vqe", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `[output] dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; overrides `[engine] threads`.
    #[arg(long)]
    threads: Option<usize>,
    /// Continue from a checkpoint (adapt, edef) or read it (resources).
    #[arg(long)]
    resume: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let inv = Invocation {
        config: args.config,
        out: args.out,
        threads: args.threads,
        resume: args.resume,
    };
    match run(args.command, &inv) {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("forge-vqe {}: {e}", args.command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
