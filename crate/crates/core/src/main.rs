use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use hetmg::economics::UtilitySpec;
use hetmg::model::GameConfig;
use hetmg::phaselab::{self, PhaseLabError, RefineSpec, SweepSpec, SweepTable};
use hetmg::replica::{self, ReplicaError};
use hetmg::sim::{self, SigmaEstimator, SimConfig};

const THRESHOLD_FAILURE: u8 = 1;
const USAGE: u8 = 2;
const NONERGODIC: u8 = 3;

/// Compare-report entries beyond this many standard errors fail the run.
const Z_LIMIT: f64 = 4.0;

#[derive(Parser)]
#[command(name = "hetmg", version, about = "Minority Game with heterogeneous impacts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stationary replica solution as JSON.
    Solve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Critical point of the configuration's group shape.
    Critical {
        #[arg(long)]
        config: PathBuf,
    },
    /// One seeded simulation run as JSON.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Simulation against theory with z-scores; fails if any |z| > 4.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Two-group sweep over (lambda1, impact1), written as CSV.
    Sweep {
        #[arg(long, default_value_t = 0.4)]
        alpha: f64,
        /// Comma separated utilities, e.g. `const,linear,pow:0.5,sat`.
        #[arg(long, default_value = "")]
        utilities: String,
        /// Output file; standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// SVG heatmap of one column of a sweep CSV.
    Heatmap {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        column: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Grid search for the most profitable two-group shape.
    Maxprofit {
        #[arg(long, default_value_t = 0.4)]
        alpha: f64,
        #[arg(long)]
        utility: String,
        /// Number of local refinements after the coarse grid.
        #[arg(long, default_value_t = 2)]
        levels: usize,
        #[command(flatten)]
        grid: GridArgs,
    },
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, default_value_t = SimConfig::default().n_agents)]
    agents: usize,
    #[arg(long, default_value_t = SimConfig::default().gamma)]
    gamma: f64,
    #[arg(long, default_value_t = SimConfig::default().seed)]
    seed: u64,
    #[arg(long, default_value_t = SimConfig::default().transient_steps)]
    transient: usize,
    #[arg(long, default_value_t = SimConfig::default().measure_steps)]
    measure: usize,
    #[arg(long)]
    impact_weighted: bool,
    /// Read the volatility from the choice expectation instead of the
    /// sampled choices.
    #[arg(long)]
    expected_sigma: bool,
}

impl SimArgs {
    fn to_config(&self) -> SimConfig {
        SimConfig {
            n_agents: self.agents,
            gamma: self.gamma,
            transient_steps: self.transient,
            measure_steps: self.measure,
            seed: self.seed,
            impact_weighted_update: self.impact_weighted,
            sigma_estimator: if self.expected_sigma {
                SigmaEstimator::Expected
            } else {
                SigmaEstimator::Sampled
            },
        }
    }
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, default_value_t = 0.01)]
    lambda1_min: f64,
    #[arg(long, default_value_t = 0.99)]
    lambda1_max: f64,
    #[arg(long, default_value_t = 99)]
    lambda1_points: usize,
    #[arg(long, default_value_t = 0.01)]
    impact1_min: f64,
    #[arg(long, default_value_t = 1.0)]
    impact1_max: f64,
    #[arg(long, default_value_t = 100)]
    impact1_points: usize,
}

impl GridArgs {
    fn lambda1(&self) -> Vec<f64> {
        phaselab::linspace(self.lambda1_min, self.lambda1_max, self.lambda1_points)
    }

    fn impact1(&self) -> Vec<f64> {
        phaselab::linspace(self.impact1_min, self.impact1_max, self.impact1_points)
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(e: impl std::fmt::Display) -> Self {
        Self { code: USAGE, message: e.to_string() }
    }
}

impl From<ReplicaError> for Failure {
    fn from(e: ReplicaError) -> Self {
        let code = match e {
            ReplicaError::NonErgodic { .. } => NONERGODIC,
            _ => USAGE,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<PhaseLabError> for Failure {
    fn from(e: PhaseLabError) -> Self {
        match e {
            PhaseLabError::Replica(r) => r.into(),
            PhaseLabError::AllNonErgodic => Self { code: NONERGODIC, message: e.to_string() },
            other => Self::usage(other),
        }
    }
}

fn read_config(path: &Path) -> Result<GameConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    GameConfig::from_json(&text).map_err(Failure::usage)
}

fn print_json(value: &impl Serialize) -> Result<(), Failure> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value).map_err(Failure::usage)?;
    writeln!(out).map_err(Failure::usage)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Solve { config } => {
            print_json(&replica::solve(&read_config(&config)?)?)?;
        }
        Command::Critical { config } => {
            print_json(&replica::critical_point(&read_config(&config)?)?)?;
        }
        Command::Simulate { config, sim } => {
            let result = sim::run_measure(&read_config(&config)?, &sim.to_config()).map_err(Failure::usage)?;
            print_json(&result)?;
        }
        Command::Compare { config, sim } => {
            let report = phaselab::compare(&read_config(&config)?, &sim.to_config())?;
            print_json(&report)?;
            if report.max_abs_z() > Z_LIMIT {
                eprintln!("some |z| exceeds {Z_LIMIT}");
                return Ok(THRESHOLD_FAILURE);
            }
        }
        Command::Sweep { alpha, utilities, out, grid } => {
            let spec = SweepSpec {
                alpha,
                lambda1_grid: grid.lambda1(),
                impact1_grid: grid.impact1(),
                utilities: UtilitySpec::parse_list(&utilities).map_err(Failure::usage)?,
            };
            let table = phaselab::sweep(&spec)?;
            match out {
                Some(path) => {
                    let file = File::create(&path)
                        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
                    table.write_csv(BufWriter::new(file))?;
                }
                None => table.write_csv(io::stdout().lock())?,
            }
        }
        Command::Heatmap { input, column, out } => {
            let file = File::open(&input)
                .map_err(|e| Failure::usage(format!("{}: {e}", input.display())))?;
            let table = SweepTable::read_csv(file)?;
            phaselab::render_heatmap(&table, &column, &out)?;
        }
        Command::Maxprofit { alpha, utility, levels, grid } => {
            let utility: UtilitySpec = utility.parse().map_err(Failure::usage)?;
            let spec = RefineSpec {
                lambda1_grid: grid.lambda1(),
                impact1_grid: grid.impact1(),
                levels,
            };
            print_json(&phaselab::find_max_profit(utility, alpha, &spec)?)?;
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
