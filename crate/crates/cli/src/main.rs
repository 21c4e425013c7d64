mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use relaxed_control::{BlockOrder, Error, Mode};

use config::{PwmCycle, Settings};

#[derive(Parser)]
#[command(name = "relaxctl", version, about = "Relaxed-control descent experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the descent on one benchmark and write its CSVs.
    Solve {
        /// double-tank, hybrid-lqr or mobile-network (may come from --config).
        problem: Option<String>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Reproduce one of the three result tables.
    Table {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=3))]
        n: u8,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Derivative, minimizer and costate diagnostics for a benchmark.
    Check { problem: String },
    /// PWM-project a mixture dumped by `solve`.
    Project {
        problem: String,
        /// final_control.csv written by `solve`.
        mixture: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args, Default)]
struct RunArgs {
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    /// general or convexified; defaults to the benchmark's natural mode.
    #[arg(long)]
    mode: Option<Mode>,
    /// PWM cycle length in seconds.
    #[arg(long, conflicts_with = "pwm_cycle_steps")]
    pwm_cycle: Option<f64>,
    /// PWM cycle length in grid cells.
    #[arg(long)]
    pwm_cycle_steps: Option<usize>,
    /// alternating or ascending.
    #[arg(long)]
    pwm_order: Option<BlockOrder>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// `key = value` file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl RunArgs {
    fn settings(&self, problem: Option<String>) -> Result<Settings, Error> {
        let flags = Settings {
            problem,
            dt: self.dt,
            iters: self.iters,
            alpha: self.alpha,
            beta: self.beta,
            eta: self.eta,
            mode: self.mode,
            pwm_cycle: match (self.pwm_cycle, self.pwm_cycle_steps) {
                (Some(t), _) => Some(PwmCycle::Seconds(t)),
                (None, Some(n)) => Some(PwmCycle::Steps(n)),
                (None, None) => None,
            },
            pwm_order: self.pwm_order,
            out: self.out.clone(),
            network: Default::default(),
        };
        let file = match &self.config {
            Some(path) => Settings::from_file(path)?,
            None => Settings::default(),
        };
        Ok(flags.over(file))
    }
}

/// Exit status on success: 0, or 1 when a check failed.
fn dispatch(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Solve { problem, run } => commands::solve(config::RunConfig::resolve(run.settings(problem)?)?),
        Command::Table { n, run } => commands::table(n, run.settings(None)?),
        Command::Check { problem } => commands::check(&problem),
        Command::Project { problem, mixture, run } => {
            commands::project(config::RunConfig::resolve(run.settings(Some(problem))?)?, &mixture)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::UnknownProblem(_) | Error::InvalidConfig(_) | Error::InvalidGrid(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("relaxctl: {} error: {e}", e.class());
            ExitCode::from(exit_code(&e))
        }
    }
}
