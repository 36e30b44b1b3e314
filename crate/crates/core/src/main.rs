use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use viscostring::harness::{output_dir, run_with_threads, ExperimentConfig, Task};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Simulate,
    Steer,
    Pair,
    Diagnose,
    Verify,
}

impl From<Command> for Task {
    fn from(c: Command) -> Self {
        match c {
            Command::Simulate => Task::Simulate,
            Command::Steer => Task::Steer,
            Command::Pair => Task::Pair,
            Command::Diagnose => Task::Diagnose,
            Command::Verify => Task::Verify,
        }
    }
}

/// Viscoelastic string with memory: simulation, steering and diagnostics.
#[derive(Debug, Parser)]
#[command(name = "viscostring", version)]
struct Cli {
    command: Command,
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `[output] dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, env = "VISCOSTRING_THREADS")]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let outcome = ExperimentConfig::load(&cli.config).and_then(|config| {
        let task = config.resolve_task(Some(cli.command.into()))?;
        let out = output_dir(&config, cli.out.as_deref());
        run_with_threads(&config, task, &out, cli.threads)
    });
    match outcome {
        Ok(done) => {
            println!("{} finished in {:.2}s; wrote {}", done.task.name(), done.wall_seconds, done.out_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
