//! Command-line interface.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Debug, Clone, Parser)]
#[command(name = "mpbal", version, about = "Mixed-precision experiments with emulated floating-point formats")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Directory for CSV output.
    #[arg(long, global = true, default_value = "results")]
    pub out: PathBuf,
    /// Seed for every random draw (sketches, right-hand sides, test vectors).
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Table of the built-in floating-point formats.
    Formats,
    /// Three-precision iterative refinement with LU or SPAI preconditioned GMRES.
    ExpIr(IrArgs),
    /// Sparse approximate inverse built in low precision, with feasibility checks.
    ExpSpai(SpaiArgs),
    /// Single-pass Nyström error against rank for several sketch precisions.
    ExpNystrom(NystromArgs),
    /// Storage savings and accuracy of adaptive-precision HODLR matrices.
    ExpHodlr(HodlrArgs),
    /// Write the small bundled fixtures as Matrix Market files.
    Fixtures,
}

#[derive(Debug, Clone, Args)]
pub struct IrArgs {
    /// Matrix Market path, `fixture:<name>`, or a name looked up in $MPBAL_DATA_DIR.
    #[arg(long, default_value = "steam1")]
    pub matrix: String,
    /// Factorization precision.
    #[arg(long, default_value = "fp32")]
    pub uf: String,
    /// Working precision.
    #[arg(long, default_value = "fp64")]
    pub u: String,
    /// Residual precision.
    #[arg(long, default_value = "fp64")]
    pub ur: String,
    /// Comma-separated correction solvers: lu, gmres-lu, gmres-spai.
    #[arg(long, default_value = "gmres-lu,gmres-spai")]
    pub solvers: String,
    /// GMRES relative residual tolerance.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// SPAI column residual tolerance.
    #[arg(long, default_value_t = 0.1)]
    pub tau: f64,
    /// Refinement steps after the initial solve.
    #[arg(long, default_value_t = 20)]
    pub maxit: usize,
    /// Factor the matrix in its natural order instead of a minimum-degree order.
    #[arg(long)]
    pub natural: bool,
    /// Right-hand side: `ones` or `random` (seeded).
    #[arg(long, default_value = "ones")]
    pub rhs: String,
}

#[derive(Debug, Clone, Args)]
pub struct SpaiArgs {
    #[arg(long, default_value = "steam1")]
    pub matrix: String,
    /// Precision the preconditioner is computed in.
    #[arg(long, default_value = "fp32")]
    pub us: String,
    #[arg(long, default_value_t = 0.1)]
    pub tau: f64,
    #[arg(long, default_value_t = 50)]
    pub max_nnz: usize,
    #[arg(long, default_value_t = 10)]
    pub growth_steps: usize,
    #[arg(long, default_value_t = 5)]
    pub candidates: usize,
}

#[derive(Debug, Clone, Args)]
pub struct NystromArgs {
    #[arg(long, default_value = "bcsstm07")]
    pub matrix: String,
    /// Smallest rank; defaults to the step.
    #[arg(long)]
    pub kmin: Option<usize>,
    #[arg(long, default_value_t = 300)]
    pub kmax: usize,
    #[arg(long, default_value_t = 20)]
    pub kstep: usize,
    /// Comma-separated sketch precisions.
    #[arg(long, default_value = "fp64,fp32,fp16")]
    pub precisions: String,
    /// Precision of everything after the sketch.
    #[arg(long, default_value = "fp64")]
    pub working: String,
    /// Sketches per point, seeded seed, seed+1, ...
    #[arg(long, default_value_t = 5)]
    pub runs: usize,
}

#[derive(Debug, Clone, Args)]
pub struct HodlrArgs {
    /// Comma-separated matrices.
    #[arg(long, default_value = "1138_bus,saylr3,nos7")]
    pub matrix: String,
    /// Tree depth, reduced per matrix to what its order allows.
    #[arg(long, default_value_t = 8)]
    pub levels: usize,
    #[arg(long, default_value = "1e-7,1e-4,1e-1")]
    pub eps: String,
    /// Formats available to the levels, any order.
    #[arg(long, default_value = "fp64,fp32,bf16,fp16,fp8-e4m3")]
    pub menu: String,
    /// Random vectors per build for the matvec check (orders up to 512 only).
    #[arg(long, default_value_t = 0)]
    pub matvec_trials: usize,
}
