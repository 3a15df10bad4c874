use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "spectraclass", version, about = "Fuzzy-logic classification of mass spectra")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify spectra and write one CSV row per input.
    Classify(ClassifyArgs),
    /// Build ensemble peak statistics and compare each group with the ensemble.
    Stats(StatsArgs),
    /// Render classification maps from an annotated batch CSV.
    Map(MapArgs),
    /// Parse a rule base and report diagnostics.
    ValidateRules(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct RuleArgs {
    /// Rule base file, or `builtin:basalt` [env: SPECTRACLASS_RULES]
    #[arg(long, value_name = "PATH|builtin:basalt")]
    pub rules: Option<String>,
    /// Override the rule base's m/z window half-width
    #[arg(long, value_name = "F")]
    pub epsilon: Option<f64>,
    /// Override the minimum membership for a hard label
    #[arg(long, value_name = "F")]
    pub nu: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub rules: RuleArgs,
    /// Worker threads
    #[arg(long, default_value_t = 1, value_name = "N")]
    pub workers: usize,
    /// Output CSV (stdout when omitted)
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Label a spectrum UNK when two classes reach this membership
    #[arg(long, value_name = "F")]
    pub ambiguity: Option<f64>,
    /// Spectrum files, directories or glob patterns
    #[arg(required = true, value_name = "INPUT")]
    pub inputs: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GroupBy {
    /// Group by classified label
    Label,
    /// Group by containing directory
    Directory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeanArg {
    /// Mean over spectra that contain the peak
    Present,
    /// Mean over all spectra, absent peaks counted as zero
    ZeroInclusive,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub rules: RuleArgs,
    /// Worker threads used when grouping by label
    #[arg(long, default_value_t = 1, value_name = "N")]
    pub workers: usize,
    #[arg(long, value_enum, default_value_t = GroupBy::Directory)]
    pub group_by: GroupBy,
    #[arg(long, value_enum, default_value_t = MeanArg::Present)]
    pub mean: MeanArg,
    /// Directory for report_<GROUP>.csv files (stdout when omitted)
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Spectrum files, directories or glob patterns
    #[arg(required = true, value_name = "INPUT")]
    pub inputs: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TopologyArg {
    Rect,
    Hex,
}

#[derive(Debug, Args)]
pub struct MapArgs {
    #[command(flatten)]
    pub rules: RuleArgs,
    /// Grid topology, overriding the `# topology:` header
    #[arg(long, value_enum)]
    pub topology: Option<TopologyArg>,
    /// Palette file of `CODE R G B` lines
    #[arg(long, value_name = "PATH")]
    pub palette: Option<PathBuf>,
    /// Keep spots UNK when their best smoothed membership is below this value
    #[arg(long, value_name = "F")]
    pub floor: Option<f64>,
    /// Output directory
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Batch CSV with `# topology`, `# rows` and `# cols` headers
    #[arg(value_name = "INPUT")]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub rules: RuleArgs,
}
