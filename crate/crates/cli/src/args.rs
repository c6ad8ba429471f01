use clap::{Args, Parser, Subcommand, ValueEnum};
use fopid_core::freq::CapMode;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "fopid", version, about = "Fractional-order PID tuning: model reduction, tuning and analysis")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Directory that receives every output file.
    #[arg(long, global = true, env = "FOPID_OUT_DIR", default_value = "fopid-out")]
    pub out_dir: PathBuf,
    /// TOML run configuration; command-line flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every randomized start.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Simulation step in seconds.
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// Simulation horizon in seconds.
    #[arg(long, global = true)]
    pub t_end: Option<f64>,
    /// Order of the dead-time Pade approximation.
    #[arg(long, global = true)]
    pub pade_order: Option<usize>,
    /// Zero-pole pairs of the Oustaloup filter (odd).
    #[arg(long, global = true)]
    pub oustaloup_order: Option<usize>,
    /// Lower edge of the Oustaloup band in rad/s.
    #[arg(long, global = true)]
    pub band_low: Option<f64>,
    /// Upper edge of the Oustaloup band in rad/s.
    #[arg(long, global = true)]
    pub band_high: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit reduced-order templates to a plant by H2 mismatch.
    Reduce(ReduceArgs),
    /// Solve the frequency-domain specification equations for a controller.
    TuneFreq(TuneFreqArgs),
    /// Minimize integral performance indices of the closed-loop step response.
    TuneTime(TuneTimeArgs),
    /// Simulate the closed-loop step response of a plant and controller.
    Simulate(SimulateArgs),
    /// Frequency curves, step metrics and gain sweeps.
    Analyze {
        #[command(subcommand)]
        what: AnalyzeCommand,
    },
    /// Recompute the benchmark tables and compare against the bundled reference values.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TemplateArg {
    Foptd,
    Soptd,
    Nioptd1,
    Nioptd2,
    Rank,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    /// Plant definition file, or a bundled plant name (p1..p4).
    #[arg(long)]
    pub plant: String,
    #[arg(long, value_enum, default_value = "rank")]
    pub template: TemplateArg,
    /// Perturbed simplex starts per template.
    #[arg(long)]
    pub starts: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CapModeArg {
    Equality,
    Bound,
}

impl From<CapModeArg> for CapMode {
    fn from(m: CapModeArg) -> Self {
        match m {
            CapModeArg::Equality => CapMode::Equality,
            CapModeArg::Bound => CapMode::Bound,
        }
    }
}

#[derive(Debug, Args)]
pub struct TuneFreqArgs {
    /// Reduced-model file written by `reduce`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub phase_margin_deg: f64,
    /// Gain crossover frequency in rad/s.
    #[arg(long)]
    pub gain_crossover: f64,
    #[arg(long, default_value_t = -40.0, allow_negative_numbers = true)]
    pub t_cap_db: f64,
    #[arg(long, default_value_t = 10.0)]
    pub t_cap_freq: f64,
    #[arg(long, default_value_t = -40.0, allow_negative_numbers = true)]
    pub s_cap_db: f64,
    #[arg(long, default_value_t = 0.01)]
    pub s_cap_freq: f64,
    /// How the sensitivity caps enter the equations.
    #[arg(long, value_enum, default_value = "equality")]
    pub cap_mode: CapModeArg,
    /// Perturbed restarts in addition to the default seed.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Controller file used as the starting point.
    #[arg(long)]
    pub x0: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IndexArg {
    Iae,
    Itae,
    Ise,
    Itse,
    Istes,
    Istse,
    Sum,
    All,
}

#[derive(Debug, Args)]
pub struct TuneTimeArgs {
    /// Plant definition file, or a bundled plant name (p1..p4).
    #[arg(long)]
    pub plant: String,
    #[arg(long, value_enum, default_value = "all")]
    pub index: IndexArg,
    /// Box as ten comma-separated numbers: lower and upper bound for Kp, Ki, Kd, lambda, mu.
    #[arg(long, value_delimiter = ',')]
    pub bounds: Option<Vec<f64>>,
    /// Simplex starts per index.
    #[arg(long)]
    pub starts: Option<usize>,
    /// Random candidates screened to choose the starts.
    #[arg(long)]
    pub screen: Option<usize>,
    /// Evaluation budget per simplex pass.
    #[arg(long)]
    pub max_evals: Option<usize>,
}

#[derive(Debug, Args)]
pub struct LoopArgs {
    /// Plant definition file, or a bundled plant name (p1..p4).
    #[arg(long)]
    pub plant: String,
    /// Controller file with kp, ki, kd, lambda and mu.
    #[arg(long)]
    pub controller: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub lp: LoopArgs,
    /// Time of a load step at the plant input.
    #[arg(long)]
    pub disturbance_time: Option<f64>,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub disturbance_magnitude: f64,
}

#[derive(Debug, Args)]
pub struct BandArgs {
    #[arg(long, default_value_t = 1e-3)]
    pub omega_min: f64,
    #[arg(long, default_value_t = 1e3)]
    pub omega_max: f64,
    #[arg(long, default_value_t = 400)]
    pub points: usize,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Open-loop Bode data of controller times plant.
    Bode {
        #[command(flatten)]
        lp: LoopArgs,
        #[command(flatten)]
        band: BandArgs,
    },
    /// Sensitivity and complementary sensitivity magnitudes.
    Sens {
        #[command(flatten)]
        lp: LoopArgs,
        #[command(flatten)]
        band: BandArgs,
    },
    /// Step response with overshoot, rise and settling time.
    Step {
        #[command(flatten)]
        lp: LoopArgs,
    },
    /// Step metrics with the controller gains scaled by each multiplier.
    Sweep {
        #[command(flatten)]
        lp: LoopArgs,
        #[arg(long, value_delimiter = ',', default_value = "0.7,1.0,1.3,1.5")]
        gains: Vec<f64>,
    },
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// Comma-separated table numbers 1..7, or `all`.
    #[arg(long, value_delimiter = ',', default_value = "all")]
    pub tables: Vec<String>,
}
