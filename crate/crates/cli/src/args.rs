use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use wiretap_core::optimize::Construction;

#[derive(Debug, Clone, Parser)]
#[command(name = "wiretap", version, about = "Wiretap codes from linear codes and universal hashing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output format.
    #[arg(long, value_enum, default_value_t = OutFormat::Json, global = true)]
    pub out: OutFormat,

    /// Show information quantities in bits. Inputs are always nats.
    #[arg(long, global = true)]
    pub bits: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConstructionArg {
    Randomized,
    Deterministic,
}

impl From<ConstructionArg> for Construction {
    fn from(c: ConstructionArg) -> Self {
        match c {
            ConstructionArg::Randomized => Construction::Randomized,
            ConstructionArg::Deterministic => Construction::Deterministic,
        }
    }
}

/// A block length or an inclusive sweep `start:stop:step`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockLengths(pub Vec<usize>);

impl BlockLengths {
    pub fn is_sweep(&self) -> bool {
        self.0.len() > 1
    }
}

impl FromStr for BlockLengths {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<usize> = s
            .split(':')
            .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
            .collect::<Result<_, _>>()?;
        let lengths: Vec<usize> = match parts.as_slice() {
            [n] => vec![*n],
            [start, stop, step] if *step > 0 && start <= stop => (*start..=*stop).step_by(*step).collect(),
            _ => return Err(format!("expected INT or START:STOP:STEP with STEP > 0, got {s:?}")),
        };
        if lengths.contains(&0) {
            return Err("block lengths must be positive".into());
        }
        Ok(BlockLengths(lengths))
    }
}

fn parse_seed(s: &str) -> Result<u64, String> {
    wiretap_core::bits::parse_seed_hex(s).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct SeedArg {
    /// Master seed, up to 16 hex digits.
    #[arg(long, value_parser = parse_seed, default_value = "0")]
    pub seed: u64,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Leakage bound at given rates, or for a constructed code.
    Bound(BoundArgs),
    /// Largest message rate meeting a leakage target.
    Plan(PlanArgs),
    /// Maximize exp(phi) over input laws; secrecy capacity with --bob.
    Optimize(OptimizeArgs),
    /// Build a wiretap code from code and hash specs and describe it.
    Construct(ConstructArgs),
    /// Coupled Monte Carlo trials of the wiretap code over Bob's channel.
    Simulate(SimulateArgs),
    /// Check every bound against exact leakage on small instances.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct BoundArgs {
    /// Eavesdropper channel spec.
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long)]
    pub prefix: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ConstructionArg::Randomized)]
    pub construction: ConstructionArg,
    #[arg(long)]
    pub n: BlockLengths,
    /// ln|L| per symbol in nats.
    #[arg(long, conflicts_with_all = ["code", "hash"])]
    pub rate_l: Option<f64>,
    /// ln|M| per symbol in nats.
    #[arg(long, conflicts_with_all = ["code", "hash"])]
    pub rate_m: Option<f64>,
    /// Take the rates from this code (needs --hash).
    #[arg(long, requires = "hash")]
    pub code: Option<PathBuf>,
    #[arg(long, requires = "code")]
    pub hash: Option<PathBuf>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub confidence: Option<f64>,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Clone, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long)]
    pub prefix: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ConstructionArg::Randomized)]
    pub construction: ConstructionArg,
    #[arg(long)]
    pub n: BlockLengths,
    /// ln|L| per symbol in nats.
    #[arg(long)]
    pub rate_l: f64,
    #[arg(long)]
    pub epsilon: f64,
}

#[derive(Debug, Clone, Args)]
pub struct OptimizeArgs {
    /// Eavesdropper channel spec.
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long)]
    pub prefix: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    pub s: f64,
    /// Legitimate channel spec; adds the secrecy capacity.
    #[arg(long)]
    pub bob: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ConstructArgs {
    #[arg(long)]
    pub code: PathBuf,
    #[arg(long)]
    pub hash: PathBuf,
    #[arg(long)]
    pub prefix: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ConstructionArg::Randomized)]
    pub construction: ConstructionArg,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub code: PathBuf,
    #[arg(long)]
    pub hash: PathBuf,
    /// Bob's channel spec.
    #[arg(long)]
    pub channel: PathBuf,
    /// Eavesdropper channel spec; adds the leakage bound to the report.
    #[arg(long)]
    pub eve: Option<PathBuf>,
    #[arg(long)]
    pub prefix: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ConstructionArg::Randomized)]
    pub construction: ConstructionArg,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    /// Block length for the bound; defaults to the code length.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub confidence: Option<f64>,
    /// Worker threads, 0 for all cores. Does not change the output.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Write one CSV row per trial to this file.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[command(flatten)]
    pub seed: SeedArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Small,
    Full,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = SuiteArg::Small)]
    pub suite: SuiteArg,
}
