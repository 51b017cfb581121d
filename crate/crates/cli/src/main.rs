mod commands;
mod config;
mod formats;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use potts_core::admm::SolverChoice;
use potts_core::phantoms::SheppLoganVariant;
use potts_core::NuMode;

#[derive(Parser, Debug)]
#[command(name = "potts", version, about = "Piecewise-constant tomography, deconvolution and segmentation")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render a phantom and its ground-truth labels.
    Phantom(PhantomArgs),
    /// Simulate data from an image.
    Forward(ForwardArgs),
    /// Filtered backprojection of a sinogram.
    Fbp(FbpArgs),
    /// Reconstruct and segment from data.
    Reconstruct(ReconstructArgs),
    /// Exact univariate Potts solution of a signal.
    Potts1d(Potts1dArgs),
    /// Weights and isotropy of a neighborhood system.
    Nbhd(NbhdArgs),
    /// Solve one Tikhonov problem.
    Tikhonov(TikhonovArgs),
    /// Rand index and PSNR between two results.
    Metrics(MetricsArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PhantomKind {
    SheppLogan,
    Geometric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Modified,
    Standard,
}

impl From<VariantArg> for SheppLoganVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Modified => SheppLoganVariant::Modified,
            VariantArg::Standard => SheppLoganVariant::Standard,
        }
    }
}

#[derive(Args, Debug)]
pub struct PhantomArgs {
    #[arg(long, value_enum, default_value = "shepp-logan")]
    pub kind: PhantomKind,
    #[arg(long, default_value_t = 128)]
    pub size: usize,
    #[arg(long, value_enum, default_value = "modified")]
    pub variant: VariantArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OperatorArg {
    Radon,
    Spherical,
    Blur,
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Gaussian,
    Motion,
}

/// Operator selection; any flag given here replaces the config file's
/// `[operator]` table.
#[derive(Args, Debug, Default)]
pub struct OperatorArgs {
    #[arg(long, value_enum)]
    pub operator: Option<OperatorArg>,
    #[arg(long)]
    pub angles: Option<usize>,
    #[arg(long)]
    pub detectors: Option<usize>,
    #[arg(long)]
    pub radii: Option<usize>,
    #[arg(long, value_enum)]
    pub kernel: Option<KernelArg>,
    /// Gaussian width in pixels.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Motion blur length in pixels.
    #[arg(long)]
    pub length: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ForwardArgs {
    /// Input image (CSV with sidecar, PNG or PGM).
    #[arg(long, conflicts_with = "phantom")]
    pub input: Option<PathBuf>,
    /// Generate the input instead of reading it.
    #[arg(long, value_enum)]
    pub phantom: Option<PhantomKind>,
    #[arg(long, default_value_t = 128)]
    pub size: usize,
    #[arg(long, value_enum, default_value = "modified")]
    pub variant: VariantArg,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub operator: OperatorArgs,
    /// Noise level relative to the largest clean sample.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct FbpArgs {
    /// Sinogram CSV; its geometry sidecar must sit next to it.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum NuArg {
    Zero,
    MuOverS,
}

impl From<NuArg> for NuMode {
    fn from(v: NuArg) -> Self {
        match v {
            NuArg::Zero => NuMode::Zero,
            NuArg::MuOverS => NuMode::MuOverS,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Cg,
    Frequency,
    RadonFilter,
}

impl From<SolverArg> for SolverChoice {
    fn from(v: SolverArg) -> Self {
        match v {
            SolverArg::Cg => SolverChoice::Cg,
            SolverArg::Frequency => SolverChoice::Frequency,
            SolverArg::RadonFilter => SolverChoice::RadonFilter,
        }
    }
}

#[derive(Args, Debug, Default)]
pub struct SolveArgs {
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Neighborhood level 0, 1 or 2.
    #[arg(long)]
    pub neighborhood: Option<u8>,
    #[arg(long)]
    pub mu0: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long, value_enum)]
    pub nu_mode: Option<NuArg>,
    #[arg(long)]
    pub stop_tolerance: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub cg_tolerance: Option<f64>,
    #[arg(long)]
    pub cg_max_iterations: Option<usize>,
    #[arg(long, value_enum)]
    pub solver: Option<SolverArg>,
    /// Do not abort when the per-iteration distance bound fails.
    #[arg(long)]
    pub no_certificate: bool,
}

#[derive(Args, Debug)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub solve: SolveArgs,
    /// Ground-truth labels (CSV) to score the segmentation against.
    #[arg(long)]
    pub truth_labels: Option<PathBuf>,
    /// Ground-truth image to score the reconstruction against.
    #[arg(long)]
    pub truth_image: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct Potts1dArgs {
    /// CSV with one sample per line and one column per channel.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub gamma: f64,
    /// Where to write the piecewise-constant solution.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct NbhdArgs {
    #[arg(long, conflicts_with = "displacements")]
    pub level: Option<u8>,
    /// Custom system, e.g. "1,0;0,1;1,1;1,-1".
    #[arg(long)]
    pub displacements: Option<String>,
    #[arg(long, default_value_t = 3600)]
    pub samples: usize,
}

#[derive(Args, Debug)]
pub struct TikhonovArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Anchor image z (default zero).
    #[arg(long)]
    pub anchor: Option<PathBuf>,
    /// Weight w in ‖Av − f‖² + (w/2)‖v − z‖².
    #[arg(long)]
    pub weight: f64,
    #[arg(long, value_enum, default_value = "cg")]
    pub solver: SolverArg,
    #[arg(long)]
    pub cg_tolerance: Option<f64>,
    #[arg(long)]
    pub cg_max_iterations: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct MetricsArgs {
    /// Two label CSV files.
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    pub labels: Option<Vec<PathBuf>>,
    /// Two images: result, then reference.
    #[arg(long, num_args = 2, value_names = ["RESULT", "REFERENCE"])]
    pub images: Option<Vec<PathBuf>>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }

    let result = match &cli.command {
        Command::Phantom(a) => commands::phantom(a),
        Command::Forward(a) => commands::forward(a),
        Command::Fbp(a) => commands::fbp(a),
        Command::Reconstruct(a) => commands::reconstruct(a),
        Command::Potts1d(a) => commands::potts1d(a),
        Command::Nbhd(a) => commands::nbhd(a),
        Command::Tikhonov(a) => commands::tikhonov(a),
        Command::Metrics(a) => commands::metrics(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
