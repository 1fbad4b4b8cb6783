mod commands;
mod config;
mod error;
mod output;

use clap::{Args, Parser, Subcommand};
use config::{RunConfig, Suite};
use error::CliError;
use output::OutputDir;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;
use toml::{Table, Value};

#[derive(Parser)]
#[command(name = "translab", version, about = "Rotationally symmetric translating solitons of curvature flows")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Only report errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the bowl-type translator and fit its tail.
    Bowl(BowlArgs),
    /// Construct the catenoidal translator with a given neck radius.
    Catenoid(CatenoidArgs),
    /// Run the property and barrier suites.
    Verify(VerifyArgs),
    /// List the registry keys.
    List,
}

#[derive(Args)]
struct BowlArgs {
    /// Registry key such as `mean:n=3` (see `translab list`).
    #[arg(long)]
    curvature: Option<String>,
    /// Outer radius of the integration.
    #[arg(long, allow_negative_numbers = true)]
    rmax: Option<f64>,
    /// Expected regime; a mismatch with the detected one is an error.
    #[arg(long, value_enum)]
    regime: Option<RegimeArg>,
    /// Fit window as `lo,hi`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    fit_window: Option<Vec<f64>>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum RegimeArg {
    Auto,
    Nondegenerate,
    Degenerate,
}

#[derive(Args)]
struct CatenoidArgs {
    /// Registry key such as `mean:n=3` (see `translab list`).
    #[arg(long)]
    curvature: Option<String>,
    /// Neck radius.
    #[arg(long = "R", allow_negative_numbers = true)]
    radius: Option<f64>,
    /// Outer radius of the integration.
    #[arg(long, allow_negative_numbers = true)]
    rmax: Option<f64>,
    /// Handoff slope angle in radians.
    #[arg(long, allow_negative_numbers = true)]
    handoff: Option<f64>,
    /// Tail fit window as `lo,hi`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    fit_window: Option<Vec<f64>>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite to run; `all` skips the barrier suite for unsigned functions.
    #[arg(long, value_enum)]
    suite: Option<Suite>,
    /// Registry key such as `mean:n=3` (see `translab list`).
    #[arg(long)]
    curvature: Option<String>,
    /// Random ordered slope pairs for the ordering suite.
    #[arg(long)]
    pairs: Option<usize>,
}

fn put(t: &mut Table, key: &str, v: impl Into<Value>) {
    t.insert(key.into(), v.into());
}

fn window(w: &Option<Vec<f64>>) -> Option<Value> {
    w.as_ref().map(|w| Value::Array(w.iter().map(|&x| Value::Float(x)).collect()))
}

/// Command-line overrides as a configuration table.
fn flag_table(cli: &Cli) -> Table {
    let mut top = Table::new();
    let mut section = Table::new();
    if let Some(o) = &cli.out {
        put(&mut top, "out", o.display().to_string());
    }
    if let Some(s) = cli.seed {
        put(&mut top, "seed", s as i64);
    }
    let name = match &cli.command {
        Command::Bowl(a) => {
            if let Some(c) = &a.curvature {
                put(&mut top, "curvature", c.as_str());
            }
            if let Some(r) = a.rmax {
                put(&mut section, "rmax", r);
            }
            if let Some(r) = a.regime {
                let s = match r {
                    RegimeArg::Auto => "auto",
                    RegimeArg::Nondegenerate => "nondegenerate",
                    RegimeArg::Degenerate => "degenerate",
                };
                put(&mut section, "regime", s);
            }
            if let Some(w) = window(&a.fit_window) {
                section.insert("fit_window".into(), w);
            }
            "bowl"
        }
        Command::Catenoid(a) => {
            if let Some(c) = &a.curvature {
                put(&mut top, "curvature", c.as_str());
            }
            if let Some(r) = a.radius {
                put(&mut section, "radius", r);
            }
            if let Some(r) = a.rmax {
                put(&mut section, "rmax", r);
            }
            if let Some(h) = a.handoff {
                put(&mut section, "handoff", h);
            }
            if let Some(w) = window(&a.fit_window) {
                section.insert("fit_window".into(), w);
            }
            "catenoid"
        }
        Command::Verify(a) => {
            if let Some(c) = &a.curvature {
                put(&mut top, "curvature", c.as_str());
            }
            if let Some(s) = a.suite {
                let v = Value::try_from(s).expect("suite serializes");
                section.insert("suite".into(), v);
            }
            if let Some(p) = a.pairs {
                put(&mut section, "pairs", p as i64);
            }
            "verify"
        }
        Command::List => "list",
    };
    if !section.is_empty() {
        top.insert(name.into(), Value::Table(section));
    }
    top
}

type CommandFn = fn(&RunConfig, &mut OutputDir) -> Result<commands::Outcome, CliError>;

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = match config::load(cli.config.as_deref(), config::env_table(std::env::vars()), flag_table(cli)) {
        Ok(c) => c,
        Err(e) => {
            // Without a valid configuration only an explicit --out is known.
            if let Some(dir) = &cli.out {
                if let Ok(mut out) = OutputDir::create(dir) {
                    let _ = out.json("error.json", &e.report());
                }
            }
            return Err(e);
        }
    };
    let (name, run): (&str, CommandFn) = match cli.command {
        Command::List => {
            print!("{}", commands::list());
            return Ok(());
        }
        Command::Bowl(_) => ("bowl", commands::bowl),
        Command::Catenoid(_) => ("catenoid", commands::catenoid),
        Command::Verify(_) => ("verify", commands::verify),
    };
    let start = Instant::now();
    let mut out = OutputDir::create(&cfg.out)?;
    let result = run(&cfg, &mut out);
    let wall = start.elapsed().as_secs_f64();
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            let _ = out.json("error.json", &e.report());
            return Err(e);
        }
    };
    out.manifest(name, &cfg, wall, &outcome.checks)?;
    if !cli.quiet {
        println!("{}", outcome.summary);
        for c in &outcome.checks {
            println!("  [{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
        }
        println!("wrote {} file(s) to {}", out.files().len(), out.root().display());
    }
    let failed: Vec<String> = outcome.checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Checks(failed))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = serde_json::to_string(&e.report()).unwrap_or_else(|_| e.to_string());
            eprintln!("{report}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
