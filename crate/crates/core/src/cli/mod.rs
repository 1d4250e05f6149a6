//! Command-line driver: argument parsing, run configuration and output.

mod commands;
mod output;
mod ranges;

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

pub use commands::{
    cmd_precond_bench, cmd_sample, cmd_sinc_study, cmd_solve, cmd_sqrt_study, render_vtk,
    FieldOutput,
};
pub use output::{format_csv, format_vtk, write_atomic, Row, CSV_HEADER};
pub use ranges::{parse_f64_range, parse_usize_range};

use crate::error::{Error, Result};
use crate::fractional::{PreconditionerKind, SolverOptions};
use crate::geometry::{load_geometry, MultipatchSurface};
use crate::linalg::{BpxVariant, CgOptions};

#[derive(Debug, Parser)]
#[command(name = "surfgrf", version, about = "Gaussian random fields on multipatch surfaces")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the (fractional) model problem and report L2 errors.
    Solve(SolveArgs),
    /// Draw one random field realization.
    Sample(SampleArgs),
    /// CG iteration counts for the integer problem.
    PrecondBench(BenchArgs),
    /// Error against sinc quadrature budget.
    SincStudy(SincArgs),
    /// Accuracy of the square-root expansion of the mass matrix.
    SqrtStudy(SqrtArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Builtin name (sphere, torus, cube) or multipatch file.
    #[arg(long, default_value = "sphere")]
    pub geometry: String,
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    /// Relative CG residual tolerance.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub maxit: usize,
    /// CSV output file (stdout if absent).
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value = "3")]
    pub levels: String,
    #[arg(long, default_value = "2")]
    pub degrees: String,
    #[arg(long, default_value = "1")]
    pub betas: String,
    /// diag, ssor, jacobi or none.
    #[arg(long, default_value = "diag")]
    pub precond: String,
    /// Total sinc quadrature budget (default: level-dependent).
    #[arg(long)]
    pub quadrature: Option<usize>,
    /// Plain splitting of beta instead of the improved one.
    #[arg(long)]
    pub plain: bool,
    /// VTK output (single configuration only).
    #[arg(long)]
    pub vtk: Option<PathBuf>,
    /// Each knot span is split into 2^r x 2^r quads in the VTK output.
    #[arg(long, default_value_t = 2)]
    pub subdiv: u32,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 4)]
    pub level: usize,
    #[arg(long, default_value_t = 2)]
    pub degree: usize,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Terms of the square-root expansion.
    #[arg(long, default_value_t = 12)]
    pub khat: usize,
    #[arg(long)]
    pub quadrature: Option<usize>,
    #[arg(long)]
    pub plain: bool,
    #[arg(long, default_value = "diag")]
    pub precond: String,
    #[arg(long)]
    pub vtk: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub subdiv: u32,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value = "1:7")]
    pub levels: String,
    #[arg(long, default_value = "1")]
    pub degrees: String,
    /// Comma list of diag, ssor, jacobi, none.
    #[arg(long, default_value = "diag,ssor")]
    pub variants: String,
}

#[derive(Debug, Args)]
pub struct SincArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value = "4")]
    pub levels: String,
    #[arg(long, default_value = "3")]
    pub degrees: String,
    #[arg(long, default_value = "0.15,0.3,0.5,0.7,0.85")]
    pub betas: String,
    /// Total quadrature budgets.
    #[arg(long, default_value = "10,20,30,50,100")]
    pub ks: String,
    /// Comma list of plain, improved.
    #[arg(long, default_value = "improved")]
    pub plans: String,
    #[arg(long, default_value = "diag")]
    pub precond: String,
}

#[derive(Debug, Args)]
pub struct SqrtArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value = "1,3,5")]
    pub levels: String,
    #[arg(long, default_value = "3")]
    pub degrees: String,
    #[arg(long, default_value = "2:12")]
    pub khats: String,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

/// Preconditioner choice on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    None,
    Jacobi,
    Bpx(BpxVariant),
}

impl Variant {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "none" => Ok(Variant::None),
            "jacobi" => Ok(Variant::Jacobi),
            other => other
                .parse::<BpxVariant>()
                .map(Variant::Bpx)
                .map_err(|_| Error::Config(format!("unknown preconditioner '{other}'"))),
        }
    }

    pub fn is_multilevel(self) -> bool {
        matches!(self, Variant::Bpx(_))
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::None => f.write_str("none"),
            Variant::Jacobi => f.write_str("jacobi"),
            Variant::Bpx(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommandKind {
    Solve,
    Sample,
    PrecondBench,
    SincStudy,
    SqrtStudy,
}

/// Fully validated run description. Construction loads the geometry and
/// checks every value and output path, so a bad configuration fails before
/// anything is computed or written.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: CommandKind,
    pub geometry_label: String,
    surface: Arc<MultipatchSurface>,
    pub levels: Vec<usize>,
    pub degrees: Vec<usize>,
    pub betas: Vec<f64>,
    pub kappa: f64,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
    pub variants: Vec<Variant>,
    /// Fixed total sinc budget for solve and sample.
    pub quadrature: Option<usize>,
    /// Budgets swept by the sinc study.
    pub quadrature_sweep: Vec<usize>,
    pub sqrt_terms: Vec<usize>,
    /// `true` entries use the improved splitting.
    pub plans: Vec<bool>,
    pub improved: bool,
    pub csv: Option<PathBuf>,
    pub vtk: Option<PathBuf>,
    pub subdivisions: u32,
}

const MAX_LEVEL: usize = 12;

fn check_output(path: &Option<PathBuf>) -> Result<()> {
    let Some(p) = path else { return Ok(()) };
    if p.is_dir() {
        return Err(Error::Config(format!("output {} is a directory", p.display())));
    }
    if p.file_name().is_none() {
        return Err(Error::Config(format!("output {} has no file name", p.display())));
    }
    let dir = match p.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    if !dir.is_dir() {
        return Err(Error::Config(format!("output directory {} does not exist", dir.display())));
    }
    Ok(())
}

fn load_surface(name: &str) -> Result<Arc<MultipatchSurface>> {
    let surface = match name {
        "sphere" | "torus" | "cube" => MultipatchSurface::builtin(name)?,
        path => {
            if !Path::new(path).is_file() {
                return Err(Error::Config(format!(
                    "geometry '{path}' is neither a builtin nor a readable file"
                )));
            }
            load_geometry(path)?
        }
    };
    Ok(Arc::new(surface))
}

impl RunConfig {
    fn base(command: CommandKind, c: &CommonArgs) -> Result<Self> {
        Ok(Self {
            command,
            geometry_label: c.geometry.clone(),
            surface: load_surface(&c.geometry)?,
            levels: vec![],
            degrees: vec![],
            betas: vec![],
            kappa: c.kappa,
            seed: 0,
            tol: c.tol,
            max_iter: c.maxit,
            variants: vec![Variant::Bpx(BpxVariant::Diag)],
            quadrature: None,
            quadrature_sweep: vec![],
            sqrt_terms: vec![12],
            plans: vec![true],
            improved: true,
            csv: c.csv.clone(),
            vtk: None,
            subdivisions: 2,
        })
    }

    pub fn from_command(cmd: &Command) -> Result<Self> {
        let cfg = match cmd {
            Command::Solve(a) => Self {
                levels: parse_usize_range(&a.levels)?,
                degrees: parse_usize_range(&a.degrees)?,
                betas: parse_f64_range(&a.betas)?,
                variants: vec![Variant::parse(&a.precond)?],
                quadrature: a.quadrature,
                improved: !a.plain,
                vtk: a.vtk.clone(),
                subdivisions: a.subdiv,
                ..Self::base(CommandKind::Solve, &a.common)?
            },
            Command::Sample(a) => Self {
                levels: vec![a.level],
                degrees: vec![a.degree],
                betas: vec![a.beta],
                seed: a.seed,
                sqrt_terms: vec![a.khat],
                variants: vec![Variant::parse(&a.precond)?],
                quadrature: a.quadrature,
                improved: !a.plain,
                vtk: a.vtk.clone(),
                subdivisions: a.subdiv,
                ..Self::base(CommandKind::Sample, &a.common)?
            },
            Command::PrecondBench(a) => Self {
                levels: parse_usize_range(&a.levels)?,
                degrees: parse_usize_range(&a.degrees)?,
                betas: vec![1.0],
                variants: a.variants.split(',').map(Variant::parse).collect::<Result<_>>()?,
                ..Self::base(CommandKind::PrecondBench, &a.common)?
            },
            Command::SincStudy(a) => Self {
                levels: parse_usize_range(&a.levels)?,
                degrees: parse_usize_range(&a.degrees)?,
                betas: parse_f64_range(&a.betas)?,
                quadrature_sweep: parse_usize_range(&a.ks)?,
                plans: a
                    .plans
                    .split(',')
                    .map(|s| match s.trim() {
                        "plain" => Ok(false),
                        "improved" => Ok(true),
                        o => Err(Error::Config(format!("unknown plan '{o}'"))),
                    })
                    .collect::<Result<_>>()?,
                variants: vec![Variant::parse(&a.precond)?],
                ..Self::base(CommandKind::SincStudy, &a.common)?
            },
            Command::SqrtStudy(a) => Self {
                levels: parse_usize_range(&a.levels)?,
                degrees: parse_usize_range(&a.degrees)?,
                sqrt_terms: parse_usize_range(&a.khats)?,
                seed: a.seed,
                ..Self::base(CommandKind::SqrtStudy, &a.common)?
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        if self.levels.is_empty() || self.degrees.is_empty() {
            return err("empty level or degree list".into());
        }
        if let Some(&j) = self.levels.iter().find(|&&j| j > MAX_LEVEL) {
            return err(format!("level {j} exceeds {MAX_LEVEL}"));
        }
        if let Some(&p) = self.degrees.iter().find(|&&p| !(1..=5).contains(&p)) {
            return err(format!("degree {p} outside 1..=5"));
        }
        if self.command != CommandKind::SqrtStudy {
            if self.betas.is_empty() {
                return err("empty beta list".into());
            }
            if let Some(b) = self.betas.iter().find(|b| !(**b > 0.0) || !b.is_finite()) {
                return err(format!("beta = {b} must be positive"));
            }
            if !(self.kappa > 0.0) || !self.kappa.is_finite() {
                return err(format!("kappa = {} must be positive", self.kappa));
            }
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return err(format!("tolerance {} outside (0, 1)", self.tol));
        }
        if self.max_iter == 0 {
            return err("maxit must be positive".into());
        }
        if self.variants.is_empty() {
            return err("no preconditioner variant".into());
        }
        if self.quadrature == Some(0) || self.quadrature_sweep.contains(&0) {
            return err("quadrature budget must be positive".into());
        }
        if self.command == CommandKind::SincStudy && (self.quadrature_sweep.is_empty() || self.plans.is_empty()) {
            return err("sinc study needs budgets and plans".into());
        }
        if self.sqrt_terms.is_empty() || self.sqrt_terms.contains(&0) {
            return err("square-root expansion needs at least one term".into());
        }
        if self.subdivisions > 6 {
            return err(format!("subdivision exponent {} exceeds 6", self.subdivisions));
        }
        if self.vtk.is_some() && self.levels.len() * self.degrees.len() * self.betas.len() != 1 {
            return err("VTK output needs a single (level, degree, beta) configuration".into());
        }
        if self.csv.is_some() && self.csv == self.vtk {
            return err("CSV and VTK outputs must differ".into());
        }
        check_output(&self.csv)?;
        check_output(&self.vtk)
    }

    pub fn load_surface(&self) -> Result<Arc<MultipatchSurface>> {
        Ok(self.surface.clone())
    }

    pub fn solver_options(&self, variant: Variant) -> SolverOptions {
        SolverOptions {
            cg: CgOptions {
                tol: self.tol,
                max_iter: self.max_iter,
            },
            preconditioner: match variant {
                Variant::None => PreconditionerKind::None,
                Variant::Jacobi => PreconditionerKind::Jacobi,
                Variant::Bpx(v) => PreconditionerKind::Bpx(v),
            },
        }
    }
}

/// Runs a validated configuration and returns the CSV rows and, for
/// `solve` and `sample`, the field for VTK output.
pub fn execute(cfg: &RunConfig) -> Result<(Vec<Row>, Option<FieldOutput>)> {
    match cfg.command {
        CommandKind::Solve => cmd_solve(cfg),
        CommandKind::Sample => cmd_sample(cfg),
        CommandKind::PrecondBench => cmd_precond_bench(cfg).map(|r| (r, None)),
        CommandKind::SincStudy => cmd_sinc_study(cfg).map(|r| (r, None)),
        CommandKind::SqrtStudy => cmd_sqrt_study(cfg).map(|r| (r, None)),
    }
}

/// Entry point of the binary. Outputs are written only after every
/// computation succeeded.
pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let cfg = RunConfig::from_command(&cli.command)?;
    let (rows, field) = execute(&cfg)?;
    let vtk = match (&cfg.vtk, &field) {
        (Some(_), Some(f)) => Some(render_vtk(f, cfg.subdivisions)?),
        _ => None,
    };
    let csv = format_csv(&rows);
    if let (Some(path), Some(text)) = (&cfg.vtk, &vtk) {
        write_atomic(path, text)?;
    }
    match &cfg.csv {
        Some(path) => write_atomic(path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}
