use std::path::PathBuf;

use clap::Parser;

use crate::config::Command;

/// Exact solutions, Gibbs sampling, inequality audits and volume scans for
/// delta-pinned random-field lattice interfaces.
///
/// Flags override the values of the `--config` file. A run manifest can be
/// passed as `--config` to repeat the run it records.
#[derive(Debug, Parser)]
#[command(name = "pinfield", version)]
pub struct Cli {
    /// Command to run; may instead come from the config file.
    #[arg(value_enum)]
    pub command: Option<Command>,

    /// JSON run configuration, or a manifest of an earlier run.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Lattice dimension.
    #[arg(long)]
    pub d: Option<usize>,

    /// Half-width of the centered box.
    #[arg(long = "L")]
    pub half_width: Option<u32>,

    /// Pinning strength.
    #[arg(long, allow_negative_numbers = true)]
    pub eps: Option<f64>,

    /// Switches to the anharmonic potential with this lower curvature.
    #[arg(long)]
    pub kappa: Option<f64>,

    /// zero | const:h | gauss:sigma | rademacher:h
    #[arg(long)]
    pub disorder: Option<String>,

    /// Explicit fields (`{"d", "L" | "sites", "eta"}`) instead of a random draw.
    #[arg(long)]
    pub eta_file: Option<PathBuf>,

    #[arg(long)]
    pub replicas: Option<usize>,

    /// Master seed for the fields and the chains.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Total sweeps per chain, burn-in included.
    #[arg(long)]
    pub sweeps: Option<usize>,

    #[arg(long)]
    pub burnin: Option<usize>,

    #[arg(long)]
    pub batches: Option<usize>,

    /// Reference pinning strength of the pinned-fraction bound.
    #[arg(long)]
    pub eps0: Option<f64>,

    /// Inequality to audit; repeat for several.
    #[arg(long = "inequality")]
    pub inequalities: Vec<String>,

    /// auto | exact | mcmc
    #[arg(long)]
    pub engine: Option<String>,

    /// overlap | constant_field
    #[arg(long)]
    pub scan_kind: Option<String>,

    /// Comma-separated box half-widths for scan and green.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Vec<u32>,

    /// Field strength of the constant-field scan.
    #[arg(long)]
    pub h: Option<f64>,

    /// Output directory (default: $PINFIELD_OUT, then ./pinfield-out).
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}
