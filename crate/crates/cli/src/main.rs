//! `polychain`: experiments on meromorphic extension of functions into
//! chains of circles.
//!
//! Exit status: 0 when the verdict passes, 2 when a structural hypothesis is
//! violated (or the checked identity fails), 1 on errors.

mod commands;
mod output;
mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use polychain::config::{ChainConfig, ExperimentConfig};

#[derive(Parser)]
#[command(name = "polychain", version, about = "Meromorphic-extension experiments on chains of circles")]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Overrides {
    /// Experiment file (TOML); flags below override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Parameter samples along the chain.
    #[arg(long, global = true)]
    nt: Option<usize>,
    /// Angular samples for quadratures.
    #[arg(long, global = true)]
    ntheta: Option<usize>,
    /// Annulus samples for order detection.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Retained Laurent band K.
    #[arg(long, global = true)]
    band: Option<usize>,
    /// Extendibility tolerance (relative tail energy).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Allowed center-pole order.
    #[arg(long, global = true)]
    nu: Option<usize>,
    /// Registry id, or a JSON file of tabulated samples.
    #[arg(long, global = true)]
    function: Option<String>,
    /// Chain preset (hyperbolic, horicycle, mixed, translating, segment) or a
    /// CSV file with columns t, re_c, im_c, r.
    #[arg(long, global = true)]
    chain: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Discriminant cloud, its components and the connectivity condition.
    Discriminant,
    /// Extendibility defects and complex moments on every circle.
    MomentTest,
    /// Zero and pole branches, traveling counts and branch balance.
    Track,
    /// Extendibility, pole reduction and order detection in sequence.
    Verify,
    /// Argument-principle integral I(q) with a grid-convergence table.
    Iq,
    /// Built-in test functions.
    ListFunctions,
    /// Evaluates a decomposition JSON written by `verify` at points `re,im`.
    EvalFit {
        path: PathBuf,
        #[arg(required = true, allow_hyphen_values = true)]
        points: Vec<String>,
    },
}

/// Rows `t, re_c, im_c, r` (header optional).
fn read_chain_csv(path: &Path) -> Result<ChainConfig> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path)?;
    let mut rows = vec![];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let vals: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match vals {
            Ok(v) if v.len() == 4 => rows.push([v[0], v[1], v[2], v[3]]),
            Err(_) if i == 0 => continue,
            _ => bail!("{}: line {} needs four numbers t, re_c, im_c, r", path.display(), i + 1),
        }
    }
    Ok(ChainConfig::Tabulated { rows })
}

fn load_config(o: &Overrides) -> Result<ExperimentConfig> {
    let mut cfg = match &o.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let mut cfg: ExperimentConfig = toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
            // Sample files are relative to the config file.
            if let (Some(file), Some(dir)) = (&cfg.function_file, p.parent()) {
                cfg.function_file = Some(dir.join(file).to_string_lossy().into_owned());
            }
            cfg
        }
        None => ExperimentConfig::default(),
    };
    if let Some(v) = o.nt {
        cfg.grid.nt = v;
    }
    if let Some(v) = o.ntheta {
        cfg.grid.ntheta = v;
    }
    if let Some(v) = o.samples {
        cfg.fit.samples = v;
    }
    if let Some(v) = o.band {
        cfg.grid.band = v;
        cfg.grid.n = cfg.grid.n.max((2 * v + 2).next_power_of_two());
    }
    if let Some(v) = o.tol {
        cfg.tol.merom = v;
    }
    if let Some(v) = o.nu {
        cfg.nu = v;
    }
    if let Some(f) = &o.function {
        if f.ends_with(".json") || Path::new(f).is_file() {
            cfg.function_file = Some(f.clone());
        } else {
            cfg.function = f.clone();
            cfg.function_file = None;
        }
    }
    if let Some(c) = &o.chain {
        cfg.chain = if Path::new(c).is_file() { read_chain_csv(Path::new(c))? } else { ChainConfig::preset(c)? };
    }
    if let Some(d) = &o.out {
        cfg.out = d.to_string_lossy().into_owned();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<commands::Verdict> {
    match cli.command {
        Command::ListFunctions => {
            commands::list_functions();
            return Ok(commands::Verdict::Pass);
        }
        Command::EvalFit { path, points } => return commands::eval_fit(&path, &points),
        _ => {}
    }
    let cfg = load_config(&cli.overrides)?;
    let ctx = commands::Context::new(cfg)?;
    match cli.command {
        Command::Discriminant => commands::discriminant(ctx),
        Command::MomentTest => commands::moment_test(ctx),
        Command::Track => commands::track(ctx),
        Command::Verify => commands::verify(ctx),
        Command::Iq => commands::iq(ctx),
        Command::ListFunctions | Command::EvalFit { .. } => unreachable!(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(commands::Verdict::Pass) => ExitCode::SUCCESS,
        Ok(commands::Verdict::Violation) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<polychain::Error>() {
                Some(polychain::Error::Extendibility { .. } | polychain::Error::Structural(_)) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
