use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "pdestride",
    version,
    about = "Identify governing PDEs from noisy grid data by stability selection"
)]
pub struct Cli {
    /// Worker threads; falls back to PDESTRIDE_THREADS, then to all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Where to write the run manifest (default: next to the main output).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,

    /// Log progress to standard error.
    #[arg(short, long, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Generate Burgers or Gray-Scott ground-truth data.
    Simulate(SimulateArgs),
    /// Add Gaussian noise scaled to the field's standard deviation.
    Noise(NoiseArgs),
    /// Truncated-SVD denoising.
    Denoise(DenoiseArgs),
    /// Sample points and assemble a design matrix.
    Dictionary(DictionaryArgs),
    /// Run one solver at one regularization value.
    Solve(SolveArgs),
    /// Stability selection and refit.
    Stride(StrideArgs),
    /// Success frequency over a grid of designs.
    Achievability(AchievabilityArgs),
    /// Convert a 1D field between binary and CSV.
    Convert(ConvertArgs),
    /// Re-run the command recorded in a manifest and compare outputs.
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    Burgers,
    #[value(name = "grayscott")]
    GrayScott,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub model: ModelName,
    /// Spatial dimensions (Gray-Scott only).
    #[arg(long, default_value_t = 3)]
    pub dims: usize,
    /// Cells per side (default 256 for Burgers, 64 for Gray-Scott).
    #[arg(long)]
    pub grid: Option<usize>,
    /// Use the full 128-cell Gray-Scott grid.
    #[arg(long)]
    pub full: bool,
    /// Keep every n-th step (default 1 for Burgers, 100 for Gray-Scott).
    #[arg(long)]
    pub save_stride: Option<usize>,
    /// First step to save (Gray-Scott only).
    #[arg(long, default_value_t = 0)]
    pub save_start: usize,
    /// Time steps (default 999 for Burgers, 10000 for Gray-Scott).
    #[arg(long)]
    pub steps: Option<usize>,
    /// Seed of the randomized initial condition.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Initial condition as JSON (`{"uniform": {...}}`, `{"given": {...}}`, ...).
    #[arg(long)]
    pub ic: Option<PathBuf>,
    /// Output prefix; files are `<out>_<var>.json` and `.bin`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct NoiseArgs {
    #[arg(long)]
    pub field: PathBuf,
    /// Noise standard deviation as a fraction of the field's.
    #[arg(long)]
    pub sigma: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct DenoiseArgs {
    #[arg(long)]
    pub field: PathBuf,
    /// Keep this many singular values instead of the detected elbow.
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the singular spectrum and chosen rank as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
#[command(group(ArgGroup::new("terms").required(true).args(["preset", "pmax"])))]
pub struct DictionaryArgs {
    /// Field headers; repeat for coupled systems.
    #[arg(long = "field", required = true)]
    pub fields: Vec<PathBuf>,
    /// Name of the field whose time derivative is the response.
    #[arg(long)]
    pub target: Option<String>,
    /// Named dictionary, e.g. burgers-p19 or gray-scott-p69.
    #[arg(long)]
    pub preset: Option<String>,
    /// Enumerate terms up to this monomial degree.
    #[arg(long, requires = "dmax")]
    pub pmax: Option<u32>,
    /// Highest derivative order when enumerating.
    #[arg(long, requires = "pmax")]
    pub dmax: Option<usize>,
    /// Sample points.
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    /// Lower spatial corner of the sampling box, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub lo: Option<Vec<usize>>,
    /// Upper spatial corner (exclusive), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub hi: Option<Vec<usize>>,
    #[arg(long)]
    pub t_lo: Option<usize>,
    #[arg(long)]
    pub t_hi: Option<usize>,
    /// Noise level of the input, recorded in the design metadata.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SolverFlags {
    #[arg(long, default_value = "ihtd")]
    pub solver: String,
    /// Weight floor of randomized LASSO.
    #[arg(long, default_value_t = 0.2)]
    pub alpha: f64,
    /// Ridge parameter of STRidge.
    #[arg(long, default_value_t = 1e-5)]
    pub ridge: f64,
    #[arg(long, default_value_t = 1000)]
    pub maxit: usize,
    #[arg(long, default_value_t = 100)]
    pub subit: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Args, Serialize)]
#[command(group(ArgGroup::new("param").required(true).args(["lambda", "k"])))]
pub struct SolveArgs {
    #[arg(long)]
    pub design: PathBuf,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// Penalty on the standardized system.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Sparsity level (HTP).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct StabilityFlags {
    #[arg(long, default_value_t = 250)]
    pub b: usize,
    #[arg(long, default_value_t = 20)]
    pub m: usize,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.8)]
    pub pith: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct StrideArgs {
    #[arg(long)]
    pub design: PathBuf,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[command(flatten)]
    pub stability: StabilityFlags,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub profile: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    #[value(name = "solver_path", alias = "solver-path")]
    SolverPath,
    Stride,
}

#[derive(Debug, Args, Serialize)]
pub struct AchievabilityArgs {
    #[arg(long, value_enum, default_value = "burgers")]
    pub model: ModelName,
    #[arg(long, value_delimiter = ',', default_value = "p11,p15,p19")]
    pub preset_list: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "40,70,100,150,200,300,400")]
    pub n_list: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0,0.01,0.02,0.05")]
    pub sigma_list: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    #[arg(long, value_enum, default_value = "stride")]
    pub mode: ModeName,
    #[command(flatten)]
    pub solver: SolverFlags,
    #[command(flatten)]
    pub stability: StabilityFlags,
    /// SVD rank kept when denoising noisy data.
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ConvertArgs {
    /// `.json` field header or `.csv` table.
    #[arg(long)]
    pub input: PathBuf,
    /// `.csv` or `.json`; the other format of the input.
    #[arg(long)]
    pub output: PathBuf,
    /// Field name when reading CSV (default: file stem).
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}
