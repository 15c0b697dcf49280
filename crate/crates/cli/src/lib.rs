//! The `somor` command-line tool.
//!
//! Exit codes: 0 success or PASS, 1 validation FAIL, 2 usage error,
//! 3 numerical precondition failure.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{parse_grid, parse_list, parse_pair, parse_param, parse_points, CommandKind, Method, MsdSpec, PointSpec, RunConfig};
use somor::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "somor", version, about = "Second-order moment matching and Loewner model reduction")]
struct Cli {
    /// Run from a JSON configuration instead of a subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Residual tolerance for PASS/FAIL.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the mass-spring-damper chain benchmark.
    GenMsd {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        #[arg(long, default_value_t = 0.1)]
        c: f64,
        #[arg(long, default_value_t = 1.5)]
        k: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a reduced model and a validation report.
    Reduce(Box<ReduceArgs>),
    /// Export |W(iω)| in dB and the unwrapped phase as CSV.
    Bode {
        /// System or model files.
        #[arg(required = true)]
        models: Vec<PathBuf>,
        /// count:lo:hi
        #[arg(long)]
        grid: Option<String>,
        /// Transfer entry as output,input (zero-based).
        #[arg(long)]
        entry: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a reduced model against the full system.
    Validate {
        #[arg(long)]
        full: PathBuf,
        #[arg(long)]
        reduced: PathBuf,
        /// Compare full transfer matrices here instead of the stored points.
        #[arg(long, allow_hyphen_values = true, conflicts_with = "grid")]
        points: Option<String>,
        #[arg(long)]
        grid: Option<String>,
    },
}

#[derive(Args, Debug)]
struct ReduceArgs {
    #[arg(long, value_enum)]
    method: Method,
    /// Full-order system.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Tangential data (.json or .csv) for the Loewner methods.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
    /// re,im;re,im;...
    #[arg(long, allow_hyphen_values = true, conflicts_with = "grid")]
    points: Option<String>,
    /// count:lo:hi[:imag|real|negative_real]
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, allow_hyphen_values = true, conflicts_with = "output_grid")]
    output_points: Option<String>,
    #[arg(long)]
    output_grid: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    directions: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    output_directions: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    f2: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    f1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    g: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    h0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    h1: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    mhat: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    khat: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    rp: Option<String>,
    /// Poles to place, re,im;re,im;...
    #[arg(long, allow_hyphen_values = true)]
    targets: Option<String>,
    /// a,b in D̂ = aM̂ + bK̂.
    #[arg(long, allow_hyphen_values = true)]
    rayleigh: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    /// Comma-separated positive weights, one per point.
    #[arg(long, allow_hyphen_values = true)]
    dfree: Option<String>,
}

fn point_spec(points: Option<String>, grid: Option<String>) -> Result<Option<PointSpec>> {
    match (points, grid) {
        (Some(p), _) => Ok(Some(PointSpec::Points(parse_points(&p)?))),
        (None, Some(g)) => Ok(Some(PointSpec::Grid(parse_grid(&g)?))),
        (None, None) => Ok(None),
    }
}

fn opt_param(text: Option<String>) -> Result<Option<config::ParamSpec>> {
    text.map(|t| parse_param(&t)).transpose()
}

fn config_from_command(cmd: Command) -> Result<RunConfig> {
    Ok(match cmd {
        Command::GenMsd { n, m, c, k, out } => {
            let mut cfg = RunConfig::new(CommandKind::GenMsd);
            cfg.msd = Some(MsdSpec { n, m, c, k });
            cfg.out = Some(out);
            cfg
        }
        Command::Reduce(a) => {
            let mut cfg = RunConfig::new(CommandKind::Reduce);
            cfg.method = Some(a.method);
            cfg.input = a.input;
            cfg.data = a.data;
            cfg.out = Some(a.out);
            cfg.report = a.report;
            cfg.points = point_spec(a.points, a.grid)?;
            cfg.output_points = point_spec(a.output_points, a.output_grid)?;
            cfg.directions = opt_param(a.directions)?;
            cfg.output_directions = opt_param(a.output_directions)?;
            cfg.params.f2 = opt_param(a.f2)?;
            cfg.params.f1 = opt_param(a.f1)?;
            cfg.params.g = opt_param(a.g)?;
            cfg.params.h0 = opt_param(a.h0)?;
            cfg.params.h1 = opt_param(a.h1)?;
            cfg.params.mhat = opt_param(a.mhat)?;
            cfg.params.khat = opt_param(a.khat)?;
            cfg.params.rp = opt_param(a.rp)?;
            cfg.targets = a.targets.map(|t| parse_points(&t)).transpose()?;
            cfg.rayleigh = a.rayleigh.map(|t| parse_pair(&t)).transpose()?;
            cfg.theta = a.theta;
            cfg.dfree = a.dfree.map(|t| parse_list(&t)).transpose()?;
            cfg
        }
        Command::Bode { models, grid, entry, out } => {
            let mut cfg = RunConfig::new(CommandKind::Bode);
            cfg.models = models;
            cfg.grid = grid.map(|g| parse_grid(&g)).transpose()?;
            cfg.entry = entry
                .map(|e| {
                    let v = parse_list(&e)?;
                    match v.as_slice() {
                        [i, j] if *i >= 0.0 && *j >= 0.0 && i.fract() == 0.0 && j.fract() == 0.0 => {
                            Ok([*i as usize, *j as usize])
                        }
                        _ => Err(Error::InvalidParameter(format!("entry must be two indices, got {e:?}"))),
                    }
                })
                .transpose()?;
            cfg.out = Some(out);
            cfg
        }
        Command::Validate { full, reduced, points, grid } => {
            let mut cfg = RunConfig::new(CommandKind::Validate);
            cfg.full = Some(full);
            cfg.reduced = Some(reduced);
            cfg.points = point_spec(points, grid)?;
            cfg
        }
    })
}

fn resolve_config(cli: Cli) -> Result<RunConfig> {
    let mut cfg = match (cli.config, cli.command) {
        (Some(_), Some(_)) => {
            return Err(Error::InvalidParameter("give either --config or a subcommand, not both".into()))
        }
        (Some(path), None) => RunConfig::from_json(&std::fs::read_to_string(&path)?)?,
        (None, Some(cmd)) => config_from_command(cmd)?,
        (None, None) => return Err(Error::InvalidParameter("no command given; see --help".into())),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(tol) = cli.tol {
        cfg.tol = tol;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(feature = "parallel")]
fn configure_threads() {
    if let Some(n) = std::env::var("SOMOR_NUM_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // A second call in the same process fails harmlessly.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

#[cfg(not(feature = "parallel"))]
fn configure_threads() {}

/// Parses `args` (including the program name), runs the command and
/// returns the exit code. Messages go to stdout, errors to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    match resolve_config(cli).and_then(|cfg| commands::execute(&cfg)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}: {e}", e.name());
            if e.is_usage() {
                EXIT_USAGE
            } else {
                EXIT_NUMERICAL
            }
        }
    }
}
