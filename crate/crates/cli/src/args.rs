use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "breakeven", version, about = "Basket credit pricing, hedging drift and break-even correlations")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Price a basket payoff.
    Price(#[command(flatten)] Model),
    /// Sensitivities of the basket value to each survival probability.
    Deltas {
        #[command(flatten)]
        model: Model,
        /// Central bumps instead of analytic differentiation.
        #[arg(long)]
        bump: bool,
    },
    /// Drift of the delta-hedged position, split by name pair.
    Drift(#[command(flatten)] Model),
    /// Flat break-even correlation of a first-p-to-default basket.
    Breakeven(#[command(flatten)] Model),
    /// Break-even correlation matrix implied by the spread dynamics.
    Matrix {
        #[command(flatten)]
        model: Model,
        /// Fit rank-p factor loadings.
        #[arg(long)]
        rank: Option<usize>,
        /// Where to write the loadings (with --rank).
        #[arg(long)]
        loadings_out: Option<PathBuf>,
    },
    /// Simulate survival-probability paths.
    Simulate {
        #[command(flatten)]
        model: Model,
        /// Clayton dynamics volatility scale.
        #[arg(long)]
        sigma0: Option<f64>,
    },
    /// Delta-hedge a basket along simulated or loaded paths.
    Hedge {
        #[command(flatten)]
        model: Model,
        /// Paths CSV written by `simulate`; simulated in-process otherwise.
        #[arg(long)]
        paths_file: Option<PathBuf>,
        /// Rolling window in steps; switches to the empirical break-even
        /// correlation over the candidate grid.
        #[arg(long)]
        window: Option<usize>,
        /// Exponential smoothing weight for the break-even series (0.3 is usual).
        #[arg(long)]
        smooth: Option<f64>,
        #[arg(long)]
        lookback: Option<usize>,
    },
    /// Synthetic studies: four-name break-even grids and ten-name skews.
    Scenario(Scenario),
    /// Largest residual of the replication condition on a grid.
    CheckPde {
        #[command(flatten)]
        model: Model,
        #[arg(long)]
        sigma0: Option<f64>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        grid_q: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        grid_x: Option<Vec<f64>>,
    },
}

/// Market, copula, payoff, dynamics and numerics flags shared by the
/// subcommands.
#[derive(Debug, Args, Default, Clone)]
pub struct Model {
    /// Name count, or a comma-separated list of names.
    #[arg(long)]
    pub names: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Survival probability of every name.
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub survival: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub hazards: Option<Vec<f64>>,
    #[arg(long)]
    pub quotes: Option<PathBuf>,
    #[arg(long)]
    pub date: Option<String>,
    #[arg(long)]
    pub recovery: Option<f64>,
    #[arg(long)]
    pub maturity: Option<f64>,

    /// Flat one-factor Gaussian loading.
    #[arg(long, allow_negative_numbers = true)]
    pub rho: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub loadings: Option<Vec<f64>>,
    /// Clayton copula parameter.
    #[arg(long)]
    pub theta: Option<f64>,

    /// First-p-to-default of the given order.
    #[arg(long)]
    pub fptd: Option<usize>,
    #[arg(long)]
    pub stop_loss: Option<usize>,
    #[arg(long)]
    pub worst_of_digital: bool,

    #[arg(long, value_delimiter = ',')]
    pub sigma_bar: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub beta: Option<Vec<f64>>,
    /// Survival-probability volatilities (non-Gaussian drift).
    #[arg(long, value_delimiter = ',')]
    pub sigmas: Option<Vec<f64>>,
    /// Uniform spread correlation, or a correlation CSV file.
    #[arg(long, allow_negative_numbers = true)]
    pub spread_corr: Option<String>,
    /// `merton`, `constant`, or `power:ALPHA`.
    #[arg(long)]
    pub xi: Option<String>,

    /// Gauss-Hermite rule with this many nodes.
    #[arg(long)]
    pub hermite: Option<usize>,

    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Exact,
    Euler,
    Clayton,
}

#[derive(Debug, Args)]
pub struct Scenario {
    /// Four-name grid for the first-to-default basket.
    #[arg(long)]
    pub table1: bool,
    /// Four-name grid for the second-to-default basket.
    #[arg(long)]
    pub table2: bool,
    /// Four-name grid for the third-to-default basket.
    #[arg(long)]
    pub table3: bool,
    /// Ten-name break-even skew for a parameter variant.
    #[arg(long, value_enum)]
    pub skew: Option<SkewArg>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Use every k-th grid time in the time average.
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long)]
    pub hermite: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SkewArg {
    Core,
    SpreadVolUp,
    SpreadVolDown,
    IntensityUp,
    IntensityDown,
    BetaUp,
    BetaDown,
}
