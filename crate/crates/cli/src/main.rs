use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wqed_cli::{cmd_convergence, cmd_run, cmd_sweep, cmd_validate, CliError, RunOptions};

#[derive(Parser)]
#[command(name = "wqed", version, about = "Disorder-averaged multi-excitation dynamics of a waveguide-coupled atomic chain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment file (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Override a config entry, e.g. `ensemble.n_realizations=10`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory; defaults to `outputs.directory`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, env = "WQED_WORKERS")]
    workers: Option<usize>,
    /// Master seed; replaces `ensemble.master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress progress lines on standard error.
    #[arg(long)]
    quiet: bool,
}

impl Common {
    fn options(&self) -> RunOptions {
        RunOptions {
            overrides: self.overrides.clone(),
            out: self.out.clone(),
            workers: self.workers,
            seed: self.seed,
            progress: !self.quiet,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one ensemble and write its archive.
    Run(Common),
    /// Run one ensemble per value of an axis.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// n_clean, w_bar (units of π), directionality, beta or n_realizations.
        #[arg(long)]
        axis: Option<String>,
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
    },
    /// Diff of a realization-count ladder against the reference count.
    Convergence(Common),
    /// Parse and check a config without running it.
    Validate(Common),
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(c) => {
            let m = cmd_run(&c.config, &c.options())?;
            println!("wrote {} files for {} realizations", m.files.len(), m.n_realizations);
        }
        Command::Sweep { common, axis, values } => {
            for (dir, m) in cmd_sweep(&common.config, axis.as_deref(), values.as_deref(), &common.options())? {
                println!("{}: {} realizations", dir.display(), m.n_realizations);
            }
        }
        Command::Convergence(c) => {
            let (report, line) = cmd_convergence(&c.config, &c.options())?;
            for r in &report.rows {
                println!("{:>6}  Diff = {:.6e}  ({:.3}%)", r.count, r.diff, 100.0 * r.relative);
            }
            println!("{line}");
        }
        Command::Validate(c) => println!("{}", cmd_validate(&c.config, &c.options())?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
