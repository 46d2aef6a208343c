//! `unfold-homog`: Young function certificates, homogenized energy tables
//! and invariant suites, driven by JSON configs.

mod config;
mod hom_cmd;
mod manifest;
mod verify_cmd;
mod young_cmd;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand, ValueEnum};

use config::{Config, Task, VerifyTask, SCHEMA_VERSION};
use manifest::{now, OutputDir, RunManifest, TaskStatus};
use unfold_homog::harness::config_hash;

#[derive(Debug, Parser)]
#[command(name = "unfold-homog", version, about = "Periodic unfolding and homogenization toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for reports, tables and the run manifest.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, env = "UNFOLD_HOMOG_THREADS")]
    threads: Option<usize>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Report format on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Growth certificates and Luxemburg norms.
    Young {
        #[command(subcommand)]
        action: YoungAction,
    },
    /// Cell problems and homogenized energy tables.
    Hom {
        #[command(subcommand)]
        action: HomAction,
    },
    /// Invariant suites: unfold, two-scale, sweep, relaxation.
    Verify { suite: String },
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum YoungAction {
    Check,
    Norm,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum HomAction {
    Solve,
    Table,
}

/// What a command produced; files go to `--out`.
#[derive(Debug)]
pub struct Outcome {
    pub report: serde_json::Value,
    pub csv: String,
    pub files: Vec<(String, Vec<u8>)>,
    pub tasks: Vec<TaskStatus>,
    pub exit: i32,
}

impl Command {
    fn label(&self) -> String {
        match self {
            Command::Young { action } => format!("young {}", format!("{action:?}").to_lowercase()),
            Command::Hom { action } => format!("hom {}", format!("{action:?}").to_lowercase()),
            Command::Verify { suite } => format!("verify {suite}"),
        }
    }

    fn task_name(&self) -> &'static str {
        match self {
            Command::Young { .. } => "young",
            Command::Hom { .. } => "hom",
            Command::Verify { .. } => "verify",
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config> {
    let config = match &cli.config {
        Some(path) => config::load(path)?,
        None => match cli.command {
            Command::Verify { .. } => {
                Config { schema_version: SCHEMA_VERSION, seed: None, task: Task::Verify(VerifyTask::default()) }
            }
            _ => bail!("--config is required for {}", cli.command.label()),
        },
    };
    if config.task.name() != cli.command.task_name() {
        bail!("config task is {:?} but the command is {:?}", config.task.name(), cli.command.label());
    }
    Ok(config)
}

fn execute(cli: &Cli, config: &Config, seed: u64) -> Result<Outcome> {
    match (&cli.command, &config.task) {
        (Command::Young { action: YoungAction::Check }, Task::Young(t)) => young_cmd::check(t),
        (Command::Young { action: YoungAction::Norm }, Task::Young(t)) => young_cmd::norm(t, seed),
        (Command::Hom { action }, Task::Hom(t)) => {
            let mode = match action {
                HomAction::Solve => hom_cmd::Mode::Solve,
                HomAction::Table => hom_cmd::Mode::Table,
            };
            hom_cmd::run(t, mode, seed)
        }
        (Command::Verify { suite }, Task::Verify(t)) => verify_cmd::run(suite, t, seed),
        _ => unreachable!("task kind checked in load_config"),
    }
}

fn run(cli: &Cli) -> Result<i32> {
    let started_at = now();
    if let Command::Verify { suite } = &cli.command {
        if !verify_cmd::SUITES.contains(&suite.as_str()) {
            bail!("unknown suite {suite:?}; available suites: {}", verify_cmd::SUITES.join(", "));
        }
    }
    let mut config = load_config(cli)?;
    let seed = cli.seed.or(config.seed).unwrap_or(0);
    config.seed = Some(seed);

    let threads = match cli.threads {
        Some(0) => bail!("--threads must be positive"),
        Some(k) => k,
        None => rayon::current_num_threads(),
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    let outcome = pool.install(|| execute(cli, &config, seed))?;

    let mut stdout = std::io::stdout().lock();
    match cli.format {
        Format::Json => writeln!(stdout, "{}", serde_json::to_string_pretty(&outcome.report)?)?,
        Format::Csv => write!(stdout, "{}", outcome.csv)?,
    }

    if let Some(dir) = &cli.out {
        let mut out = OutputDir::create(dir)?;
        for (name, bytes) in &outcome.files {
            out.write(name, bytes)?;
        }
        let config_json = serde_json::to_value(&config)?;
        out.finish(RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: cli.command.label(),
            config_hash: config_hash(&config_json),
            config: config_json,
            seed,
            threads,
            started_at,
            finished_at: now(),
            exit_code: outcome.exit,
            tasks: outcome.tasks,
            outputs: Vec::new(),
        })?;
    }
    Ok(outcome.exit)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
