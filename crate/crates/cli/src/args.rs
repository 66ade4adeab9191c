use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "tickwork", version, about = "Simulate and analyse quantum ticking clocks")]
pub struct Cli {
    /// Seed for every random stream.
    #[arg(long, global = true, env = "TICKWORK_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Worker threads for trajectory sampling (0 uses every core).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    /// Write results to this file instead of standard output.
    #[arg(short = 'o', long, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Jsonl,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Jsonl => "jsonl",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    EigDerivative,
    SlopeFit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AllanMode {
    Formula,
    Trajectory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Order {
    First,
    Exact,
}

#[derive(Debug, Args)]
pub struct SpecArg {
    /// Clock spec JSON file.
    #[arg(long, value_name = "FILE")]
    pub spec: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlotArg {
    /// Emit long-format CSV ready for plotting.
    #[arg(long)]
    pub plot_data: bool,
}

#[derive(Debug, Args)]
pub struct PairArgs {
    /// Spec of clock A.
    #[arg(long, value_name = "FILE")]
    pub spec_a: PathBuf,
    /// Spec of clock B.
    #[arg(long, value_name = "FILE")]
    pub spec_b: PathBuf,
    /// Length of every sequence.
    #[arg(long)]
    pub horizon: f64,
    /// Number of sequences.
    #[arg(long, default_value_t = 1000)]
    pub n_seq: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a spec and report its property flags.
    Validate {
        #[command(flatten)]
        spec: SpecArg,
        /// Absolute tolerance for the Hermiticity, positivity and trace checks.
        #[arg(long, default_value_t = 1e-12)]
        tolerance: f64,
        /// Output format.
        #[arg(long, value_enum, default_value = "json")]
        out: Format,
    },
    /// Tick-number distribution on a time grid.
    Evolve {
        #[command(flatten)]
        spec: SpecArg,
        /// Time grid as start:stop:step.
        #[arg(long, value_name = "A:B:STEP")]
        times: String,
        /// Highest register bin.
        #[arg(long, default_value_t = 64)]
        n_max: usize,
        /// Output format.
        #[arg(long, value_enum, default_value = "csv")]
        out: Format,
        #[command(flatten)]
        plot: PlotArg,
    },
    /// Asymptotic tick rate, variance rate and R1.
    Fcs {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, value_enum, default_value = "eig-derivative")]
        method: Method,
        /// Output format.
        #[arg(long, value_enum, default_value = "json")]
        out: Format,
    },
    /// Waiting-time density, moments and R2.
    WaitingTime {
        #[command(flatten)]
        spec: SpecArg,
        /// Density grid as start:stop:step; extended until the tail is negligible.
        #[arg(long, value_name = "A:B:STEP")]
        grid: Option<String>,
        /// Output format.
        #[arg(long, value_enum, default_value = "csv")]
        out: Format,
        #[command(flatten)]
        plot: PlotArg,
    },
    /// Allan variance from the rates or from one sampled record.
    Allan {
        #[command(flatten)]
        spec: SpecArg,
        /// Averaging times.
        #[arg(long, value_delimiter = ',', required = true)]
        tau: Vec<f64>,
        #[arg(long, value_enum, default_value = "formula")]
        mode: AllanMode,
        /// Number of two-sample terms per averaging time (trajectory mode).
        #[arg(long, default_value_t = 2000)]
        bins: usize,
        /// Output format.
        #[arg(long, value_enum, default_value = "csv")]
        out: Format,
        #[command(flatten)]
        plot: PlotArg,
    },
    /// Sample independent tick records of one clock.
    Sample {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long)]
        horizon: f64,
        /// Number of trajectories.
        #[arg(long, default_value_t = 1)]
        n_traj: usize,
        /// Output format.
        #[arg(long, value_enum, default_value = "jsonl")]
        out: Format,
    },
    /// Sample labelled tick sequences of two clocks.
    Pair {
        #[command(flatten)]
        pair: PairArgs,
        /// Output format.
        #[arg(long, value_enum, default_value = "jsonl")]
        out: Format,
    },
    /// Distribution of B's count at A's n-th tick.
    RelativeCounts {
        #[command(flatten)]
        pair: PairArgs,
        /// Tick index of clock A.
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Output format.
        #[arg(long, value_enum, default_value = "csv")]
        out: Format,
        #[command(flatten)]
        plot: PlotArg,
    },
    /// First-tick distribution of the discrete-time bit register.
    Discrete {
        #[command(flatten)]
        spec: SpecArg,
        /// Step length.
        #[arg(long)]
        delta: f64,
        /// Number of steps.
        #[arg(long)]
        steps: usize,
        #[arg(long, value_enum, default_value = "first")]
        order: Order,
        /// Output format.
        #[arg(long, value_enum, default_value = "csv")]
        out: Format,
        #[command(flatten)]
        plot: PlotArg,
    },
    /// Koashi-Imoto decomposition of a channel.
    Ki {
        /// Channel JSON file with "dim" and "kraus".
        #[arg(long, value_name = "FILE")]
        channel: PathBuf,
        /// Output format.
        #[arg(long, value_enum, default_value = "json")]
        out: Format,
    },
    /// Register freezing under repeated readout.
    Zeno {
        /// Rabi frequency.
        #[arg(long)]
        omega: f64,
        /// Total evolution time.
        #[arg(long)]
        time: f64,
        /// Numbers of readouts.
        #[arg(long, value_delimiter = ',', required = true)]
        m: Vec<usize>,
        /// Readout schedule: fixed or jitter:WIDTH.
        #[arg(long, default_value = "fixed")]
        schedule: String,
        /// Output format.
        #[arg(long, value_enum, default_value = "json")]
        out: Format,
        #[command(flatten)]
        plot: PlotArg,
    },
    /// Angle-state clock with shifted readout bases.
    Swp {
        /// Hilbert-space dimension.
        #[arg(long)]
        dim: usize,
        /// Level spacing.
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        /// Basis shifts in [0, 1).
        #[arg(long, value_delimiter = ',', default_value = "0.5")]
        alphas: Vec<f64>,
        /// Output format.
        #[arg(long, value_enum, default_value = "json")]
        out: Format,
        #[command(flatten)]
        plot: PlotArg,
    },
}
