//! `relcentral` command-line front end.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use relcentral::PotentialKind;
use serde::Serialize;

use crate::config::{resolve_setup, ConfigFile};

#[derive(Debug, Parser)]
#[command(name = "relcentral", version, about = "Relativistic central-force experiments")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Rest mass.
    #[arg(long, global = true, allow_negative_numbers = true)]
    m: Option<f64>,
    /// Speed of light.
    #[arg(long, global = true, allow_negative_numbers = true)]
    c: Option<f64>,
    /// Coupling constant of the potential.
    #[arg(long, global = true, allow_negative_numbers = true)]
    k: Option<f64>,
    /// coulomb or constant-momentum.
    #[arg(long, global = true)]
    potential: Option<PotentialKind>,
    /// JSON config with keys m, c, k, potential, command, params.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the resolved config and the result as one JSON document.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Directory for CSV/JSON output files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the equations of motion and export the trajectory.
    Simulate(commands::SimulateArgs),
    /// Classify an (ell, h) pair for the Coulomb potential, or a whole grid.
    Classify(commands::ClassifyArgs),
    /// Circular orbit of a given radius.
    Circular(commands::CircularArgs),
    /// Period function of a centre of the Clairaut system.
    Period(commands::PeriodArgs),
    /// Build a candidate isochronous family and measure its period constants.
    Bertrand(commands::BertrandArgs),
    /// Runge-Lenz frame analysis of a Coulomb orbit.
    Rungelenz(commands::RungeLenzArgs),
    /// Integrate into a collision and fit its asymptotics.
    Collision(commands::CollisionArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Classify(_) => "classify",
            Command::Circular(_) => "circular",
            Command::Period(_) => "period",
            Command::Bertrand(_) => "bertrand",
            Command::Rungelenz(_) => "rungelenz",
            Command::Collision(_) => "collision",
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(relcentral::Error),
    Io(anyhow::Error),
}

impl From<relcentral::Error> for CliError {
    fn from(e: relcentral::Error) -> Self {
        CliError::Domain(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.into())
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    fn report(&self) -> (u8, serde_json::Value) {
        let (exit, code, message) = match self {
            CliError::Usage(m) => (2, "usage", m.clone()),
            CliError::Domain(e) => (1, e.code(), e.to_string()),
            CliError::Io(e) => (1, "io", format!("{e:#}")),
        };
        (exit, serde_json::json!({ "code": code, "message": message }))
    }
}

/// What a command hands back: the resolved params, a result document and a
/// one-line summary.
pub struct Report {
    pub params: serde_json::Value,
    pub result: serde_json::Value,
    pub summary: String,
}

impl Report {
    pub fn new<P: Serialize>(params: &P, result: serde_json::Value, summary: String) -> Self {
        Self {
            params: serde_json::to_value(params).expect("params serialize"),
            result,
            summary,
        }
    }
}

pub struct Context {
    pub setup: config::Setup,
    pub file: ConfigFile,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
}

impl Context {
    /// Path of an output file, creating the directory on first use.
    pub fn output(&self, name: &str) -> Result<Option<PathBuf>, CliError> {
        let Some(dir) = &self.out else {
            return Ok(None);
        };
        std::fs::create_dir_all(dir).map_err(|e| anyhow::anyhow!("cannot create {}: {e}", dir.display()))?;
        Ok(Some(dir.join(name)))
    }

    pub fn pool(&self) -> Result<rayon::ThreadPool, CliError> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.jobs {
            if n == 0 {
                return Err(CliError::Usage("--jobs must be at least 1".into()));
            }
            b = b.num_threads(n);
        }
        b.build().map_err(|e| CliError::Io(e.into()))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let g = cli.global;
    let file = match &g.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let name = cli.command.name();
    if let Some(cmd) = &file.command {
        if cmd != name {
            return Err(CliError::Usage(format!("config is for `{cmd}`, not `{name}`")));
        }
    }
    let setup = resolve_setup(&file, g.m, g.c, g.k, g.potential);
    let ctx = Context {
        setup,
        file,
        out: g.out,
        jobs: g.jobs,
    };
    let report = match &cli.command {
        Command::Simulate(a) => commands::simulate(a, &ctx)?,
        Command::Classify(a) => commands::classify(a, &ctx)?,
        Command::Circular(a) => commands::circular(a, &ctx)?,
        Command::Period(a) => commands::period(a, &ctx)?,
        Command::Bertrand(a) => commands::bertrand(a, &ctx)?,
        Command::Rungelenz(a) => commands::rungelenz(a, &ctx)?,
        Command::Collision(a) => commands::collision(a, &ctx)?,
    };
    if g.json {
        let doc = serde_json::json!({
            "m": ctx.setup.m,
            "c": ctx.setup.c,
            "k": ctx.setup.k,
            "potential": ctx.setup.potential,
            "command": name,
            "params": report.params,
            "result": report.result,
        });
        println!("{}", serde_json::to_string_pretty(&doc).expect("json values serialize"));
    } else {
        println!("{}", report.summary);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (exit, doc) = e.report();
            eprintln!("{doc}");
            ExitCode::from(exit)
        }
    }
}
