//! `levy-isamp`: asymptotically optimal importance sampling for Monte Carlo
//! pricing of European, basket and Asian puts in the variance gamma model.
//!
//! Subcommands: `optimize` (compute the tilt), `price` (run the estimator),
//! `sweep` (variance as a function of a Dirac tilt), `table` (reproduce the
//! built-in benchmark tables). Exit codes: 0 success, 2 configuration error,
//! 3 solver or numerical error.

mod config;
mod presets;
mod table;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use levy_isamp_core::{
    price_importance, solve_asian, solve_european, sweep_theta, CgfModel, Error as CoreError,
    PayoffSpec, TiltMeasure, TiltSolution, VarianceGammaModel,
};

use config::{PayoffKindConfig, RunConfig};

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration: exit code 2.
    Config(String),
    /// Solver or numerical failure: exit code 3.
    Numeric(String),
}

impl CliError {
    fn numeric(e: CoreError) -> Self {
        CliError::Numeric(e.to_string())
    }

    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Numeric(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(name = "levy-isamp", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the asymptotically optimal tilt for the configured contract.
    Optimize {
        #[command(flatten)]
        common: Common,
    },
    /// Price the configured contract by Monte Carlo.
    Price {
        #[command(flatten)]
        common: Common,
        /// `auto` (optimize first), `none` (plain Monte Carlo) or a path to a
        /// tilt JSON file (a serialized measure or optimizer output).
        #[arg(long, default_value = "auto")]
        tilt: String,
    },
    /// Importance-sampling variance as a function of a scalar Dirac tilt.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Tilt grid `start:end:step`, e.g. `-4:0:0.25`.
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
    },
    /// Reproduce a built-in benchmark table (CSV on stdout).
    Table {
        which: table::Which,
        #[arg(long)]
        n_samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_samples: Option<usize>,
    /// Worker threads (0 = all cores). Falls back to LEVY_ISAMP_WORKERS,
    /// then to the config file.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum, default_value_t = Output::Json)]
    output: Output,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Json,
    Csv,
}

struct Run {
    model: VarianceGammaModel,
    payoff: PayoffSpec,
    n_samples: usize,
    grid_cells: usize,
    seed: u64,
    workers: usize,
    output: Output,
    kind: PayoffKindConfig,
}

impl Run {
    fn new(common: &Common) -> Result<Self, CliError> {
        let cfg = RunConfig::from_file(&common.config)?;
        let model = cfg.build_model()?;
        let payoff = cfg.build_payoff(model.dim())?;
        let env_workers = std::env::var("LEVY_ISAMP_WORKERS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok());
        Ok(Run {
            payoff,
            n_samples: common.n_samples.or(cfg.mc.n_samples).unwrap_or(100_000),
            grid_cells: cfg.grid_cells(),
            seed: common.seed.or(cfg.mc.seed).unwrap_or(42),
            workers: common
                .workers
                .or(env_workers)
                .or(cfg.mc.workers)
                .unwrap_or(0),
            output: common.output,
            kind: cfg.payoff.kind,
            model,
        })
    }

    fn optimize(&self) -> Result<TiltSolution, CliError> {
        match self.kind {
            PayoffKindConfig::VanillaPut | PayoffKindConfig::BasketPut => {
                solve_european(&self.model, &self.payoff).map_err(CliError::numeric)
            }
            PayoffKindConfig::AsianPut => {
                solve_asian(&self.model, self.payoff.strike, self.payoff.maturity, self.grid_cells)
                    .map_err(CliError::numeric)
            }
        }
    }
}

fn cmd_optimize(common: &Common) -> Result<(), CliError> {
    let run = Run::new(common)?;
    let solution = run.optimize()?;
    println!(
        "{}",
        serde_json::to_string_pretty(&solution).expect("solution serializes")
    );
    Ok(())
}

fn load_tilt_file(path: &str, dim: usize) -> Result<TiltMeasure, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read tilt file {path}: {e}")))?;
    let measure = serde_json::from_str::<TiltMeasure>(&text)
        .or_else(|_| serde_json::from_str::<TiltSolution>(&text).map(|s| s.measure))
        .map_err(|e| CliError::Config(format!("{path}: not a tilt measure or solution: {e}")))?;
    if measure.dim() != dim {
        return Err(CliError::Config(format!(
            "tilt dimension {} does not match model dimension {dim}",
            measure.dim()
        )));
    }
    Ok(measure)
}

fn cmd_price(common: &Common, tilt: &str) -> Result<(), CliError> {
    let run = Run::new(common)?;
    let measure = match tilt {
        "auto" => run.optimize()?.measure,
        "none" => TiltMeasure::zero(run.payoff.maturity, run.model.dim()),
        path => load_tilt_file(path, run.model.dim())?,
    };
    let report = price_importance(
        &run.model,
        &run.payoff,
        &measure,
        run.grid_cells,
        run.n_samples,
        run.seed,
        run.workers,
    )
    .map_err(CliError::numeric)?;
    match run.output {
        Output::Json => println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("report serializes")
        ),
        Output::Csv => {
            println!("estimate,std_error,sample_variance,n_samples,seed");
            println!(
                "{},{},{},{},{}",
                report.estimate,
                report.std_error,
                report.sample_variance,
                report.n_samples,
                report.seed
            );
        }
    }
    Ok(())
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Config(format!(
            "grid must be start:end:step, got {spec:?}"
        )));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.parse::<f64>()
                .map_err(|e| CliError::Config(format!("bad grid component {p:?}: {e}")))
        })
        .collect::<Result<_, _>>()?;
    let (start, end, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) || end < start {
        return Err(CliError::Config("grid needs end >= start and step > 0".into()));
    }
    let count = ((end - start) / step + 1.5).floor() as usize;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

fn cmd_sweep(common: &Common, grid: &str) -> Result<(), CliError> {
    let run = Run::new(common)?;
    if run.model.dim() != 1 {
        return Err(CliError::Config("sweep requires a single-asset model".into()));
    }
    let thetas = parse_grid(grid)?;
    let points = sweep_theta(
        &run.model,
        &run.payoff,
        &thetas,
        run.grid_cells,
        run.n_samples,
        run.seed,
        run.workers,
    )
    .map_err(CliError::numeric)?;
    match run.output {
        Output::Json => println!(
            "{}",
            serde_json::to_string_pretty(&points).expect("points serialize")
        ),
        Output::Csv => {
            println!("theta,variance,stderr");
            for p in points {
                println!("{},{},{}", p.theta, p.variance, p.std_error);
            }
        }
    }
    Ok(())
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Optimize { common } => cmd_optimize(common),
        Command::Price { common, tilt } => cmd_price(common, tilt),
        Command::Sweep { common, grid } => cmd_sweep(common, grid),
        Command::Table {
            which,
            n_samples,
            seed,
            workers,
        } => table::run(
            *which,
            n_samples.unwrap_or(100_000),
            seed.unwrap_or(42),
            workers.unwrap_or_else(|| {
                std::env::var("LEVY_ISAMP_WORKERS")
                    .ok()
                    .and_then(|v| v.parse().ok())
                    .unwrap_or(0)
            }),
        ),
    }
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {}", e.message());
        std::process::exit(e.exit_code());
    }
}
