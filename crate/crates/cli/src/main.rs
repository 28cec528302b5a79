use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use macgame::equilibrium::{ack_design, AckSuppressionDesign};
use macgame::{ApModel, BackoffConfig, PhyProfile, TrafficRatio};
use macgame_cli::analysis::{ack_utility_curve, ne_utility_curve, solve, utility_curve};
use macgame_cli::presets::{self, PRESETS};
use macgame_cli::simulate::{run_all, write_runs};
use macgame_cli::{CliError, ScenarioFile, Table};

const DEFAULT_OUT: &str = "macgame-out";

#[derive(Parser)]
#[command(name = "macgame", version, about = "Contention games, mechanism design and slotted WLAN simulation")]
struct Cli {
    /// Output directory [default: ./macgame-out for simulations, stdout for tables]
    #[arg(long, global = true, env = "MACGAME_OUT_DIR")]
    out: Option<PathBuf>,
    /// Base seed; overrides the scenario file
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Equilibrium, optima and mechanism-design parameters
    Solve(ModelArgs),
    /// Dense curve samples with marker rows
    Curves {
        #[command(subcommand)]
        kind: CurveKind,
    },
    /// Run a scenario file
    Simulate {
        file: PathBuf,
        #[arg(long)]
        replicas: Option<u32>,
    },
    /// Regenerate the data of a figure
    Preset {
        name: String,
        #[arg(long)]
        replicas: Option<u32>,
    },
    ListPresets,
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Uplink/downlink ratio, a positive number or "inf"
    #[arg(long, default_value = "1")]
    k: String,
    /// PHY preset (b11, g6, n600)
    #[arg(long, default_value = "b11")]
    phy: String,
    #[arg(long, value_enum, default_value_t = ApKind::Legacy)]
    ap: ApKind,
    /// Access probability of a fixed AP
    #[arg(long)]
    tau_ap: Option<f64>,
    #[arg(long, default_value_t = 16)]
    cw_min: u32,
    #[arg(long, default_value_t = 1024)]
    cw_max: u32,
    #[arg(long, default_value_t = 6)]
    retry_limit: u32,
}

#[derive(Clone, Copy, ValueEnum)]
enum ApKind {
    Legacy,
    Fixed,
    None,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, default_value_t = 1000)]
    grid: usize,
    /// Upper end of the tau axis
    #[arg(long, default_value_t = 1.0)]
    tau_max: f64,
}

#[derive(Subcommand)]
enum CurveKind {
    /// Utility vs tau, against fixed interference --p or on the homogeneous outcome
    Utility {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        p: Option<f64>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Utility at the equilibrium induced by a fixed tau_AP
    NeUtility {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Delivered uplink of a deviating station under ACK suppression
    AckUtility {
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value = "b11")]
        phy: String,
        /// Punishment slope [default: designed value]
        #[arg(long)]
        alpha: Option<f64>,
        /// Threshold [default: designed value]
        #[arg(long)]
        gamma: Option<f64>,
        #[command(flatten)]
        grid: GridArgs,
    },
}

impl ModelArgs {
    fn k(&self) -> Result<TrafficRatio, CliError> {
        let k: TrafficRatio = self.k.parse().map_err(|e: macgame::Error| CliError::Usage(e.to_string()))?;
        if k.value() <= 0.0 {
            return Err(CliError::Usage("k must be positive or \"inf\"".into()));
        }
        Ok(k)
    }

    fn phy(&self) -> Result<PhyProfile, CliError> {
        PhyProfile::preset(&self.phy).map_err(CliError::from_solver)
    }

    fn ap(&self) -> Result<ApModel, CliError> {
        match self.ap {
            ApKind::Legacy => Ok(ApModel::Legacy(
                BackoffConfig::new(self.cw_min, self.cw_max, self.retry_limit).map_err(CliError::from_solver)?,
            )),
            ApKind::Fixed => match self.tau_ap {
                Some(v) if (0.0..=1.0).contains(&v) => Ok(ApModel::Fixed(v)),
                Some(v) => Err(CliError::Usage(format!("--tau-ap {v} outside [0, 1]"))),
                None => Err(CliError::Usage("--ap fixed needs --tau-ap".into())),
            },
            ApKind::None => Ok(ApModel::Absent),
        }
    }
}

fn emit(table: &Table, out: Option<&Path>, file: &str) -> Result<(), CliError> {
    match out {
        Some(dir) => {
            let path = dir.join(file);
            table.write_atomic(&path)?;
            println!("{}", path.display());
        }
        None => print!("{}", table.to_csv()),
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let Format::Csv = cli.format;
    let out = cli.out.as_deref();
    match cli.command {
        Command::Solve(m) => {
            let table = solve(m.n, m.k()?, &m.phy()?, &m.ap()?).map_err(CliError::from_solver)?;
            emit(&table, out, "solve.csv")
        }
        Command::Curves { kind } => {
            let (table, file) = match kind {
                CurveKind::Utility { model, p, grid } => (
                    utility_curve(model.n, model.k()?, &model.phy()?, &model.ap()?, p, grid.grid, grid.tau_max),
                    "utility.csv",
                ),
                CurveKind::NeUtility { model, grid } => {
                    (ne_utility_curve(model.n, model.k()?, &model.phy()?, grid.grid, grid.tau_max), "ne_utility.csv")
                }
                CurveKind::AckUtility { n, phy, alpha, gamma, grid } => {
                    if n == 0 {
                        return Err(CliError::Usage("--n must be at least 1".into()));
                    }
                    let phy = PhyProfile::preset(&phy).map_err(CliError::from_solver)?;
                    let d = ack_design(n, &phy);
                    let design = AckSuppressionDesign::new(gamma.unwrap_or(d.gamma), alpha.unwrap_or(d.alpha))
                        .map_err(CliError::from_solver)?;
                    (ack_utility_curve(n, &phy, design, grid.grid, grid.tau_max), "ack_utility.csv")
                }
            };
            emit(&table.map_err(CliError::from_solver)?, out, file)
        }
        Command::Simulate { file, replicas } => {
            let text = std::fs::read_to_string(&file)
                .map_err(|e| CliError::Scenario(format!("cannot read {}: {e}", file.display())))?;
            let parsed = ScenarioFile::parse(&text).map_err(|e| CliError::Scenario(format!("{}: {e}", file.display())))?;
            if replicas == Some(0) {
                return Err(CliError::Usage("--replicas must be at least 1".into()));
            }
            let seed = cli.seed.unwrap_or(parsed.scenario.seed);
            let runs = run_all(&parsed, seed, replicas.unwrap_or(parsed.replicas)).map_err(CliError::from_simulation)?;
            let dir = out.map_or_else(|| PathBuf::from(DEFAULT_OUT), Path::to_path_buf).join(&parsed.scenario.name);
            for path in write_runs(&dir, &runs)? {
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::Preset { name, replicas } => {
            if replicas == Some(0) {
                return Err(CliError::Usage("--replicas must be at least 1".into()));
            }
            let dir = out.map_or_else(|| PathBuf::from(DEFAULT_OUT), Path::to_path_buf);
            for path in presets::run_preset(&name, &dir, cli.seed, replicas)? {
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::ListPresets => {
            for p in PRESETS {
                println!("{:<6} {}", p.name, p.description);
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
