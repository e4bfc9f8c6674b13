use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use tandem_bounds::Parallelism;
use tandem_bounds_cli::config::{self, ScenarioFile};
use tandem_bounds_cli::report::Table;
use tandem_bounds_cli::sweep::{self, InverseMode};

/// Transient delay bounds and simulations for multi-hop fading tandems.
#[derive(Parser)]
#[command(name = "tbound", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep bound families over the file's grid.
    Bound(Common),
    /// Monte Carlo violation probabilities over the file's grid.
    Simulate(Common),
    /// Bounds next to the simulation with a validity verdict per row.
    Compare(Common),
    /// Smallest delay target or SNR meeting a violation probability.
    Inverse {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        eps: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Delay,
    Snr,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    file: PathBuf,
    /// `key=value` or `section.key=value`; repeatable.
    #[arg(long = "override", short = 'o')]
    overrides: Vec<String>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `all` or a comma-separated list of stationary, sotat, wtb, wtb_delayed.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Evaluation slot t.
    #[arg(long)]
    t_eval: Option<usize>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

impl Common {
    fn load(&self) -> Result<ScenarioFile> {
        let mut overrides = self.overrides.clone();
        if let Some(n) = self.trials {
            overrides.push(format!("sim.trials={n}"));
        }
        if let Some(s) = self.seed {
            overrides.push(format!("sim.seed={s}"));
        }
        if let Some(t) = self.t_eval {
            overrides.push(format!("eval.t={t}"));
        }
        config::load(&self.file, &overrides)
    }

    fn parallelism(&self) -> Parallelism {
        match self.workers {
            0 => Parallelism::Auto,
            1 => Parallelism::Sequential,
            n => Parallelism::Threads(n),
        }
    }

    fn families(&self, file: &ScenarioFile) -> Result<Vec<tandem_bounds::BoundFamily>> {
        let requested = match &self.family {
            Some(spec) => sweep::parse_families(spec)?,
            None => None,
        };
        Ok(requested.unwrap_or_else(|| sweep::default_families(file)))
    }

    fn emit(&self, table: &Table) -> Result<()> {
        let csv = table.to_csv();
        match &self.out {
            Some(path) => fs::write(path, csv).with_context(|| format!("cannot write {}", path.display())),
            None => {
                print!("{csv}");
                Ok(())
            }
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Bound(c) => {
            let file = c.load()?;
            let (table, warnings) = sweep::cmd_bound(&file, &c.families(&file)?, c.parallelism())?;
            for w in &warnings {
                eprintln!("warning: {w}");
            }
            c.emit(&table)?;
        }
        Command::Simulate(c) => {
            let file = c.load()?;
            c.emit(&sweep::cmd_simulate(&file, c.parallelism())?)?;
        }
        Command::Compare(c) => {
            let file = c.load()?;
            let (table, failed) = sweep::cmd_compare(&file, &c.families(&file)?, c.parallelism())?;
            c.emit(&table)?;
            if failed {
                eprintln!("error: at least one bound fell below the simulated probability");
                return Ok(ExitCode::from(2));
            }
        }
        Command::Inverse { common: c, mode, eps } => {
            let file = c.load()?;
            let mode = match mode {
                Mode::Delay => InverseMode::Delay,
                Mode::Snr => InverseMode::Snr,
            };
            c.emit(&sweep::cmd_inverse(
                &file,
                mode,
                eps,
                &c.families(&file)?,
                c.parallelism(),
            )?)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
