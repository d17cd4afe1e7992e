use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rankdep_core::evaluator::DEFAULT_SEED;

/// Robust rank-dependent evaluation of ambiguous payoffs.
#[derive(Debug, Parser)]
#[command(name = "rankdep", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    pub output: OutputFormat,

    /// Seed of the randomized batteries.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Order {
    Fsd,
    Ssd,
    #[value(name = "phissd")]
    PhiSsd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Demo {
    Ellsberg,
}

/// The preference triple, in the utility / distortion / penalty grammars.
#[derive(Debug, Clone, Args)]
pub struct PrefArgs {
    /// `identity | affine:a,b | exp:a | power:r[@lo,hi] | pwl:x1,y1;x2,y2;...`
    #[arg(long, default_value = "identity")]
    pub utility: String,

    /// `identity | power:a | prelec:alpha,beta | tk:gamma | es:lambda | var:lambda | dualpower:k | pwl:p1,y1;...`
    #[arg(long, default_value = "identity")]
    pub distortion: String,

    /// `maxmin:simplex | maxmin:[prior;prior;...] | entropic:theta@prior | gini:theta@prior | table:file.csv`
    #[arg(long, default_value = "maxmin:simplex")]
    pub penalty: String,
}

/// Where the state ids come from when no variable is evaluated.
#[derive(Debug, Clone, Args)]
pub struct StateArgs {
    /// Variable whose state ids are used.
    #[arg(long, conflicts_with = "states")]
    pub scenario: Option<PathBuf>,

    /// Comma-separated state ids.
    #[arg(long)]
    pub states: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a variable: value in utility units, per-state utilities, minimizing prior, certainty equivalent.
    Evaluate {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        pref: PrefArgs,
    },
    /// Certainty equivalent of a variable.
    Ce {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        pref: PrefArgs,
    },
    /// Compare two variables on the same state set.
    Compare {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        scenario2: PathBuf,
        #[command(flatten)]
        pref: PrefArgs,
    },
    /// Stochastic dominance of the first variable over the second, state by state.
    Dominance {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        scenario2: PathBuf,
        #[arg(long, value_enum, default_value_t = Order::Fsd)]
        order: Order,
        /// Utility for phissd.
        #[arg(long)]
        utility: Option<String>,
        /// Restrict to one state.
        #[arg(long)]
        state: Option<String>,
    },
    /// Brute-force minimal penalty c_min(q) over a lattice of utility vectors.
    Cmin {
        #[command(flatten)]
        states: StateArgs,
        #[arg(long)]
        penalty: String,
        /// Prior q, `uniform` or `w1=p1,w2=p2,...`.
        #[arg(long)]
        prior: String,
        /// Lattice `lo:hi:step` per state.
        #[arg(long, default_value = "-5:5:0.1", allow_hyphen_values = true)]
        grid: String,
    },
    /// Randomized property batteries; exits with 3 on any violation.
    Battery {
        #[command(flatten)]
        states: StateArgs,
        #[command(flatten)]
        pref: PrefArgs,
        #[arg(long, default_value_t = 200)]
        cases: usize,
        /// Also compare against the same preference with this penalty.
        #[arg(long)]
        penalty2: Option<String>,
    },
    /// Long-only mean-risk portfolio selection on a scenario panel.
    Portfolio {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        pref: PrefArgs,
        /// Prior of the mean term: `uniform`, `w1=p1,...`, or `reference` for the
        /// zero-penalty prior of the penalty.
        #[arg(long)]
        mean_prior: String,
        /// Maximum number of objective evaluations.
        #[arg(long, default_value_t = 20_000)]
        budget: usize,
        /// Denominator of the coarse simplex grid.
        #[arg(long, default_value_t = 10)]
        resolution: usize,
        /// Include every evaluated point in the report.
        #[arg(long)]
        trace: bool,
    },
    /// Built-in worked examples.
    Demo {
        #[arg(value_enum)]
        which: Demo,
    },
}
