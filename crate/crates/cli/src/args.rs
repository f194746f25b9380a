use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use etoc_core::{Formulation, Problem, Target};

#[derive(Debug, Parser)]
#[command(name = "etoc", version, about = "Energy-time optimal trajectories for wheeled mobile robots")]
#[command(allow_negative_numbers = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one maneuver and write its trajectory and summary.
    Plan(PlanArgs),
    /// Solve a family of targets on an arc of constant radius.
    Sweep(SweepArgs),
    /// Closed-form grid convergence against random-start shooting.
    Bench(BenchArgs),
    /// Check a fresh or saved solution against every invariant.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormulationArg {
    Form1,
    Form2,
    Fixedv,
}

impl From<FormulationArg> for Formulation {
    fn from(f: FormulationArg) -> Self {
        match f {
            FormulationArg::Form1 => Formulation::Form1,
            FormulationArg::Form2 => Formulation::Form2,
            FormulationArg::Fixedv => Formulation::FixedV,
        }
    }
}

/// Weight, formulation and solver controls shared by every solving command.
#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// Energy weight in (0, 1).
    #[arg(long, default_value_t = 0.5)]
    pub mu: f64,

    #[arg(long, value_enum, default_value_t = FormulationArg::Form1)]
    pub formulation: FormulationArg,

    /// Trajectory samples on [0, 1].
    #[arg(long, default_value_t = 201, value_parser = clap::value_parser!(u64).range(2..))]
    pub samples: u64,

    /// Multistart seed.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    /// Initial guess for the unknowns: `Q,tf`, `eps,tf` or `m,tf,vc`.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub guess: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args)]
#[command(group(ArgGroup::new("cartesian").args(["x", "y"]).multiple(true).conflicts_with("polar")))]
#[command(group(ArgGroup::new("polar").args(["r", "alpha_deg"]).multiple(true)))]
pub struct TargetArgs {
    #[arg(long, requires = "y")]
    pub x: Option<f64>,
    #[arg(long, requires = "x")]
    pub y: Option<f64>,
    /// Target distance.
    #[arg(long, requires = "alpha_deg")]
    pub r: Option<f64>,
    /// Target bearing in degrees.
    #[arg(long, requires = "r")]
    pub alpha_deg: Option<f64>,
}

impl TargetArgs {
    pub fn target(&self) -> etoc_core::Result<Target> {
        match (self.x, self.y, self.r, self.alpha_deg) {
            (Some(x), Some(y), _, _) => Target::cartesian(x, y),
            (_, _, Some(r), Some(a)) => Target::polar(r, a.to_radians()),
            _ => Err(etoc_core::Error::InvalidProblem("a target is required: --x/--y or --r/--alpha-deg".into())),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub target: TargetArgs,
    #[command(flatten)]
    pub solve: SolveArgs,
    /// Trajectory file; the summary goes next to it with a `.json` extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Also draw the path and control curve.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

impl PlanArgs {
    pub fn problem(&self) -> etoc_core::Result<Problem> {
        Problem::new(self.solve.mu, self.target.target()?, self.solve.formulation.into())
    }
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub solve: SweepSolveArgs,
    /// Target distance.
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    #[arg(long, default_value_t = 5.0)]
    pub alpha_start: f64,
    #[arg(long, default_value_t = 90.0)]
    pub alpha_end: f64,
    #[arg(long, default_value_t = 12, value_parser = clap::value_parser!(u64).range(1..))]
    pub alpha_steps: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Summary format.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write `paths.svg` and `controls.svg`.
    #[arg(long)]
    pub svg: bool,
}

/// [`SolveArgs`] without `--guess`, which has no meaning across a sweep.
#[derive(Debug, Clone, Args)]
pub struct SweepSolveArgs {
    #[arg(long, default_value_t = 0.5)]
    pub mu: f64,
    #[arg(long, value_enum, default_value_t = FormulationArg::Form1)]
    pub formulation: FormulationArg,
    #[arg(long, default_value_t = 201, value_parser = clap::value_parser!(u64).range(2..))]
    pub samples: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 0.5)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    #[arg(long, default_value_t = 30.0)]
    pub alpha_deg: f64,
    /// `Q` values of the guess grid.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "1.19,1.20,1.21,1.22,1.23")]
    pub grid_q: Vec<f64>,
    /// `tf` values of the guess grid.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "0.92,0.93,0.94,0.95,0.96")]
    pub grid_tf: Vec<f64>,
    /// Half-width of the box around the optimum that counts as a grid success.
    #[arg(long, default_value_t = 0.01)]
    pub grid_tol: f64,
    /// Random starts for each method.
    #[arg(long, default_value_t = 200)]
    pub shooting_starts: usize,
    /// Relative perturbation of the random starts.
    #[arg(long, default_value_t = 0.5)]
    pub spread: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output directory for `bench.csv` and `bench.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Summary JSON written by `etoc plan`.
    #[arg(long, conflicts_with_all = ["x", "y", "r", "alpha_deg", "guess"])]
    pub solution: Option<PathBuf>,
    #[command(flatten)]
    pub target: TargetArgs,
    #[command(flatten)]
    pub solve: SolveArgs,
    /// Solve both free-speed formulations and compare them.
    #[arg(long)]
    pub cross: bool,
    /// Report file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
