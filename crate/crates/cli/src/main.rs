mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use report::Format;

/// Cent-level money tracking on two public ledgers: run scenarios, query and
/// verify their output.
#[derive(Debug, Parser)]
#[command(name = "centledger", version)]
pub struct Cli {
    /// Output format for reports.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    /// Directories searched for relative scenario paths that are not found
    /// in the working directory, separated like PATH.
    #[arg(long, global = true, env = "CENTLEDGER_CONFIG_PATH", hide_env_values = true)]
    pub config_path: Option<std::ffi::OsString>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write its output directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List primary blocks matching a filter.
    Query {
        #[command(flatten)]
        ledger: LedgerArg,
        #[command(flatten)]
        filter: FilterArgs,
        /// Stop after this many blocks.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// List the primary blocks that carried one cent.
    Trace {
        #[command(flatten)]
        ledger: LedgerArg,
        /// Tracking number in hex.
        #[arg(long)]
        cent: String,
        /// Walk backward in time instead of forward.
        #[arg(long)]
        up: bool,
        /// Start at this block reference.
        #[arg(long)]
        from: Option<String>,
    },
    /// Look up a statement reference in the secondary ledger.
    VerifyStatement {
        #[command(flatten)]
        ledger: LedgerArg,
        #[arg(long = "ref")]
        reference: String,
        /// Amount shown on the statement; defaults to the entries in statements.txt.
        #[arg(long)]
        amount: Option<String>,
        /// Date shown on the statement.
        #[arg(long)]
        date: Option<String>,
    },
    /// Compare one day's totals for a region and concept across both ledgers.
    Reconcile {
        #[command(flatten)]
        ledger: LedgerArg,
        #[arg(long)]
        day: String,
        /// Concept prefix at the secondary ledger's level.
        #[arg(long, default_value = "")]
        concept: String,
        /// Region prefix at the secondary ledger's level.
        #[arg(long, default_value = "")]
        region: String,
    },
    /// Check both hash chains and reconcile every bucket.
    VerifyChain {
        #[command(flatten)]
        ledger: LedgerArg,
    },
    /// Audit the registry snapshot: duplicates and issued = live + sink.
    Audit {
        #[command(flatten)]
        ledger: LedgerArg,
    },
    /// Monetary base, velocity and flow series from the primary ledger.
    Stats {
        #[command(subcommand)]
        stat: StatCommand,
    },
    /// Tracking numbers needed for four economies' M2.
    CapacityTable,
    /// Bytes needed to record amounts and a yearly GDP cent by cent.
    StorageEstimate {
        /// Amounts in currency units; repeatable.
        #[arg(long = "amount", default_values_t = [3000u64, 3_000_000])]
        amounts: Vec<u64>,
        /// Yearly GDP in currency units.
        #[arg(long, default_value_t = 14_200_000_000_000)]
        gdp: u128,
        /// Storage price in dollars per terabyte and year.
        #[arg(long, default_value_t = 20.0)]
        usd_per_tb: f64,
    },
    /// Run a signal-injection experiment and report what the ledger shows.
    Experiment {
        #[arg(value_enum)]
        kind: ExperimentKind,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Also print the series and periodogram.
        #[arg(long)]
        series: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum StatCommand {
    /// Cents in circulation, at one time or per day over a window.
    Base {
        #[command(flatten)]
        ledger: LedgerArg,
        /// Time of the reading; defaults to the last block.
        #[arg(long, conflicts_with_all = ["from", "to"])]
        at: Option<String>,
        #[arg(long, requires = "to")]
        from: Option<String>,
        #[arg(long, requires = "from")]
        to: Option<String>,
    },
    /// Circulating volume over the mean base for a window of days.
    Velocity {
        #[command(flatten)]
        ledger: LedgerArg,
        #[arg(long)]
        from: Option<String>,
        #[arg(long)]
        to: Option<String>,
    },
    /// Block amounts summed per period, region and concept.
    Flows {
        #[command(flatten)]
        ledger: LedgerArg,
        #[arg(long, value_enum, default_value_t = PeriodArg::Day)]
        period: PeriodArg,
        /// Group regions at this level; omit to merge them.
        #[arg(long)]
        region_level: Option<usize>,
        /// Group concepts at this level; omit to merge them.
        #[arg(long)]
        concept_level: Option<usize>,
        /// Group on the detailed concept rather than the concept type.
        #[arg(long)]
        detailed: bool,
        #[command(flatten)]
        filter: FilterArgs,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PeriodArg {
    Day,
    Week,
    Month,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExperimentKind {
    Vat,
    Hours,
}

#[derive(Debug, Args)]
pub struct LedgerArg {
    /// Output directory written by `run`.
    #[arg(long)]
    pub ledger: PathBuf,
}

#[derive(Debug, Default, Args)]
pub struct FilterArgs {
    #[arg(long)]
    pub from: Option<String>,
    #[arg(long)]
    pub to: Option<String>,
    #[arg(long)]
    pub region: Option<String>,
    #[arg(long)]
    pub concept: Option<String>,
    /// Party code on either side.
    #[arg(long)]
    pub party: Option<String>,
    #[arg(long)]
    pub min_amount: Option<String>,
    #[arg(long)]
    pub max_amount: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(&cli) {
        Ok(commands::Status::Ok) => ExitCode::SUCCESS,
        Ok(commands::Status::CheckFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("centledger: {e:#}");
            ExitCode::from(2)
        }
    }
}
