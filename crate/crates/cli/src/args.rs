use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pinlab_core::validation::DEFAULT_SEED;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "pinlab", version, about = "Exact pinning and wetting polymer computations")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags that never change numeric output and are left out of the recorded config.
#[derive(Debug, Args)]
pub struct Global {
    /// Base seed; replica `r` draws from stream `r` of this seed.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct KernelArgs {
    /// Kernel JSON `{alpha, sv, mode, sigma_k?, n_max}`, as a file path or inline.
    #[arg(long, conflicts_with_all = ["alpha", "sigma_k", "n_max"])]
    pub kernel: Option<String>,
    #[arg(long, required_unless_present = "kernel")]
    pub alpha: Option<f64>,
    /// Slowly varying part as JSON, e.g. `{"variant":"log_power","exponent":1}`.
    #[arg(long)]
    pub sv: Option<String>,
    /// Total finite mass; below 1 makes the kernel transient.
    #[arg(long)]
    pub sigma_k: Option<f64>,
    #[arg(long)]
    pub n_max: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryArg {
    FreeWithInfinity,
    FreeFiniteTail,
    Constrained,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
pub enum Command {
    /// Masses, tails and normalizing sequences of a kernel.
    KernelInfo {
        #[command(flatten)]
        kernel: KernelArgs,
        /// Sizes to tabulate (default: powers of ten up to n_max).
        #[arg(long, value_delimiter = ',')]
        points: Vec<usize>,
    },
    /// Infinite- and finite-volume free energies over a grid of beta.
    FreeEnergy {
        #[command(flatten)]
        kernel: KernelArgs,
        /// `start:stop:step`, inclusive of `stop`.
        #[arg(long, allow_hyphen_values = true)]
        beta_grid: String,
        #[arg(long = "N", value_delimiter = ',', default_value = "1000")]
        n: Vec<usize>,
    },
    /// Exact log Z, mean and variance of the contact count for every listed N.
    Observables {
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        beta: Vec<f64>,
        #[arg(long = "N", value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, value_enum, default_value_t = BoundaryArg::FreeWithInfinity)]
        boundary: BoundaryArg,
    },
    /// Exact contact-set draws.
    Sample {
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long = "N")]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        replicas: usize,
        #[arg(long, value_enum, default_value_t = BoundaryArg::FreeWithInfinity)]
        boundary: BoundaryArg,
        /// Binary search over prefix sums instead of a linear scan.
        #[arg(long)]
        prefix_search: bool,
    },
    /// Endpoint law of the wetting walk; `eps` curves sit at beta = eps/sqrt(N).
    WettingEndpoint {
        #[arg(long = "N")]
        n: usize,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        beta_list: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        eps_list: Vec<f64>,
    },
    /// Monte Carlo check of the stable and local-time samplers.
    StableCheck {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Regenerative-set draws with their tilt weights.
    LimitLaw {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        eps: f64,
        #[arg(long)]
        transient: bool,
        #[arg(long, default_value_t = 1e-3)]
        mesh: f64,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Finite-size scaling along xi(beta) = qN.
    Fss {
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long = "N", value_delimiter = ',', default_value = "1000,10000,100000")]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
        q: Vec<f64>,
    },
    /// Distances between two samples or point sets read from CSV.
    SetCompare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Zero-based column to read from both files.
        #[arg(long, default_value_t = 0)]
        column: usize,
    },
    /// Runs the acceptance criteria.
    Validate {
        /// Deterministic and closed-form criteria only.
        #[arg(long)]
        quick: bool,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::KernelInfo { .. } => "kernel-info",
            Command::FreeEnergy { .. } => "free-energy",
            Command::Observables { .. } => "observables",
            Command::Sample { .. } => "sample",
            Command::WettingEndpoint { .. } => "wetting-endpoint",
            Command::StableCheck { .. } => "stable-check",
            Command::LimitLaw { .. } => "limit-law",
            Command::Fss { .. } => "fss",
            Command::SetCompare { .. } => "set-compare",
            Command::Validate { .. } => "validate",
        }
    }
}
