//! `hubfield` command-line front end.
//!
//! Exit codes: 0 on success, 1 when a solver reports a domain error, 2 on
//! usage errors (bad flags, unreadable inputs, invalid parameters).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain {
        module: &'static str,
        source: hubfield::Error,
    },
}

impl CliError {
    /// Input and parameter problems are usage errors; the rest are domain errors of `module`.
    pub fn from_lib(module: &'static str) -> impl Fn(hubfield::Error) -> CliError {
        move |e| {
            use hubfield::Error as E;
            match e {
                E::Io(_)
                | E::Json(_)
                | E::Parse { .. }
                | E::EmptyField
                | E::InvalidConfig(_)
                | E::InvalidGrid(_)
                | E::InvalidDensity(_)
                | E::GridMismatch(_) => CliError::Usage(format!("{module}: {e}")),
                source => CliError::Domain { module, source },
            }
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Domain { module, source } => write!(f, "{module}: {source}"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "hubfield", version, about = "Continuous location-routing solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimal facility density for one or more values of eps (warm-started in the order given).
    Solve(SolveArgs),
    /// Main hub: minimizer of the limit functional.
    Hub(HubArgs),
    /// 1D transport-map scheme for mass-dependent routing costs.
    #[command(name = "masscoupled1d")]
    MassCoupled(MassCoupledArgs),
    /// Quantization constant of the unit-area regular hexagon.
    Hexconst(HexArgs),
    /// Fits the exponent of min F against eps over a decreasing sweep.
    Scaling(SolveArgs),
    /// Airfreight demand field from centroid records.
    Demand(DemandArgs),
    /// Breguet cost curves and the fitted total-cost exponent.
    CostCurve(CostCurveArgs),
    /// Optimal density for the location cost alone.
    Pureloc(PurelocArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// JSON file with parameters; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file (CSV, or JSON for a .json extension).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    /// Resource density file.
    #[arg(long)]
    pub rho: Option<PathBuf>,
    /// Location weight; repeat or comma-separate for a sweep.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub eps: Vec<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub p: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub d: Option<i64>,
    /// Routing kernel exponent.
    #[arg(long, allow_negative_numbers = true)]
    pub q: Option<f64>,
    /// Routing kernel coefficient.
    #[arg(long = "K", allow_negative_numbers = true)]
    pub k: Option<f64>,
    /// Iteration formula: derived or paper.
    #[arg(long)]
    pub mode: Option<String>,
    /// Multiplier handling: renorm or bisect.
    #[arg(long)]
    pub mult: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub tol: Option<f64>,
    #[arg(long = "max-iter", allow_negative_numbers = true)]
    pub max_iter: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    pub damping: Option<f64>,
    /// Per-iteration diagnostics CSV.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct HubArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub rho: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub p: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub d: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    pub q: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct MassCoupledArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub rho: Option<PathBuf>,
    /// Location cost coefficient.
    #[arg(long = "A", allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// Routing cost coefficient.
    #[arg(long = "B", allow_negative_numbers = true)]
    pub b: Option<f64>,
    /// Wasserstein exponent for the reported cost.
    #[arg(long, allow_negative_numbers = true)]
    pub p: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub q: Option<f64>,
    #[arg(long = "K", allow_negative_numbers = true)]
    pub k: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub tol: Option<f64>,
    #[arg(long = "max-iter", allow_negative_numbers = true)]
    pub max_iter: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    pub damping: Option<f64>,
    /// Also write the transport map as CSV `x,T,T_prime`.
    #[arg(long = "map-out")]
    pub map_out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct HexArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, allow_negative_numbers = true)]
    pub p: Option<f64>,
    /// `start:stop:step`, emitted as CSV `p,C`.
    #[arg(long, allow_hyphen_values = true)]
    pub sweep: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct DemandArgs {
    #[command(flatten)]
    pub common: Common,
    /// CSV with columns x,y,PC,TSL,MD,HT[,TSE].
    #[arg(long)]
    pub centroids: Option<PathBuf>,
    /// JSON with C0..C5.
    #[arg(long)]
    pub coef: Option<PathBuf>,
    /// Domain bounds `x0,x1[,y0,y1]`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub bounds: Vec<f64>,
    /// Cells per axis `nx[,ny]`.
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    /// JSON `{"polygon": [[x, y], ...]}` restricting the domain.
    #[arg(long)]
    pub polygon: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub bandwidth: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct CostCurveArgs {
    #[command(flatten)]
    pub common: Common,
    /// JSON `{"E": .., "k_c": .., "eta_p": ..}`.
    #[arg(long)]
    pub aircraft: Option<PathBuf>,
    #[arg(long = "range-min", allow_negative_numbers = true)]
    pub range_min: Option<f64>,
    #[arg(long = "range-max", allow_negative_numbers = true)]
    pub range_max: Option<f64>,
    /// Number of log-spaced ranges.
    #[arg(long, allow_negative_numbers = true)]
    pub points: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    pub scale: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct PurelocArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub rho: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub p: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub d: Option<i64>,
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("HUBFIELD_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("HUBFIELD_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = init_threads().and_then(|_| match cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::Hub(a) => commands::hub(a),
        Command::MassCoupled(a) => commands::mass_coupled(a),
        Command::Hexconst(a) => commands::hexconst(a),
        Command::Scaling(a) => commands::scaling(a),
        Command::Demand(a) => commands::demand(a),
        Command::CostCurve(a) => commands::cost_curve(a),
        Command::Pureloc(a) => commands::pureloc(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ CliError::Usage(_)) => {
            eprintln!("error: {e}");
            eprintln!("run `hubfield --help` for usage");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
