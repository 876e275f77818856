//! One module per subcommand. Every command reads one JSON config document
//! (flags override fields), writes a manifest plus CSV/JSON artifacts into
//! its output directory, and prints a short summary.

pub mod adam_flow;
pub mod adam_sweep;
pub mod count_laws;
pub mod eval_laws;
pub mod flow;
pub mod m1_example;
pub mod sgd_sweep;
pub mod span;

use std::path::PathBuf;

use clap::Args;

/// Flags shared by every subcommand.
#[derive(Args, Debug)]
pub struct Common {
    /// JSON config document; flags override its fields
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Base seed; overrides the config field and CONSLAW_SEED
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for the manifest and CSV/JSON artifacts
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}
