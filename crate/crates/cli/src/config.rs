//! Command-line arguments and their validated form.

use std::path::PathBuf;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qreflect::potentials::{scales_for, DEFAULT_TAIL_TOLERANCE};
use qreflect::units::{self, ATOMIC_MASS_UNIT, HYDROGEN_MASS_U, STANDARD_GRAVITY};
use qreflect::{HomogeneousPotential, PotentialModel, SolverControl, TabulatedPotential};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "qreflect",
    version,
    about = "Quantum reflection of atoms on attractive surface potentials"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reflection probability on an energy grid.
    Reflect(ReflectArgs),
    /// Badlands function Q(z) around its peak.
    Badlands(ProfileArgs),
    /// Special-gauge wall, or the universal walls V_n.
    Wall(WallArgs),
    /// Complex scattering length from a low-energy fit.
    Scatlength(ScatArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    Direct,
    Coupled,
    Transformed,
    Mathieu,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct PotentialArgs {
    /// Homogeneous model `vN`, meaning -C_N/z^N (for example v4).
    #[arg(long, conflicts_with = "table")]
    pub model: Option<String>,
    /// Strength C_N of the model; reduced units, or hartree·a0^N with --atomic-units.
    #[arg(long, default_value_t = 1.0)]
    pub strength: f64,
    /// Two-column potential table in atomic units with a `# C3=.. C4=..` header.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Particle mass in unified atomic mass units.
    #[arg(long, default_value_t = HYDROGEN_MASS_U)]
    pub mass_u: f64,
    /// Gravitational acceleration for E1 conversions, m/s².
    #[arg(long, default_value_t = STANDARD_GRAVITY)]
    pub g: f64,
    /// Allowed relative mismatch between a table and its declared tails.
    #[arg(long, default_value_t = DEFAULT_TAIL_TOLERANCE)]
    pub tail_tol: f64,
}

/// Energy grids. Each flag takes a comma list, or `MIN:MAX:COUNT` for a
/// logarithmic grid.
#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Dimensionless κℓ (needs a -C4/z^4 tail).
    #[arg(long, allow_hyphen_values = true)]
    pub kappa_ell: Option<String>,
    /// Energy in units of the first gravitational level E1.
    #[arg(long = "energy-e1", allow_hyphen_values = true)]
    pub energy_e1: Option<String>,
    /// Energy; reduced (κ²), or hartree with --atomic-units.
    #[arg(long, allow_hyphen_values = true)]
    pub energy: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file; standard output when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Read and write energies in hartree and lengths in bohr.
    #[arg(long)]
    pub atomic_units: bool,
    /// Worker threads for grid rows.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = SolverControl::default().rtol)]
    pub rtol: f64,
    #[arg(long, default_value_t = SolverControl::default().atol)]
    pub atol: f64,
    /// Matching points sit where Q drops below this fraction of its peak.
    #[arg(long, default_value_t = SolverControl::default().matching_threshold)]
    pub matching_threshold: f64,
    /// Cliff-side override of --matching-threshold.
    #[arg(long)]
    pub cliff_threshold: Option<f64>,
    #[arg(long, default_value_t = SolverControl::default().max_steps)]
    pub max_steps: u32,
}

impl SolverArgs {
    pub fn control(&self) -> SolverControl {
        SolverControl {
            rtol: self.rtol,
            atol: self.atol,
            matching_threshold: self.matching_threshold,
            cliff_matching_threshold: self.cliff_threshold,
            max_steps: self.max_steps,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ReflectArgs {
    #[command(flatten)]
    pub potential: PotentialArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, value_enum, default_value_t = MethodChoice::Direct)]
    pub method: MethodChoice,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ProfileArgs {
    #[command(flatten)]
    pub potential: PotentialArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Initial number of z samples; doubled until the peak is resolved.
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct WallArgs {
    /// Tabulate the universal walls V_n for these exponents instead.
    #[arg(long, value_delimiter = ',')]
    pub universal: Vec<u32>,
    #[command(flatten)]
    pub potential: PotentialArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = 401)]
    pub points: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ScatArgs {
    #[command(flatten)]
    pub potential: PotentialArgs,
    #[arg(long, default_value_t = 1e-4)]
    pub kappa_ell_min: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub kappa_ell_max: f64,
    #[arg(long, default_value_t = 8)]
    pub points: usize,
    /// Largest accepted relative RMS deviation of the linear fit.
    #[arg(long, default_value_t = 1e-4)]
    pub residual_threshold: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PotentialSpec {
    Homogeneous { n: u32, strength: f64 },
    Table { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    KappaEll,
    EnergyE1,
    Energy,
}

impl GridKind {
    pub fn column(self, atomic: bool) -> &'static str {
        match self {
            GridKind::KappaEll => "kappa_ell",
            GridKind::EnergyE1 => "e_over_e1",
            GridKind::Energy if atomic => "energy_hartree",
            GridKind::Energy => "energy_reduced",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    pub kind: GridKind,
    pub values: Vec<f64>,
}

/// Validated settings echoed into every output.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub potential: Option<PotentialSpec>,
    pub grid: Option<GridSpec>,
    pub method: Option<MethodChoice>,
    pub solver: Option<SolverControl>,
    pub mass_u: f64,
    pub g: f64,
    pub atomic_units: bool,
    pub format: Format,
    pub output: Option<PathBuf>,
}

/// A grid point resolved to the reduced energy used by the solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub label: f64,
    pub energy: f64,
}

pub struct Resolved {
    pub potential: PotentialModel,
    pub points: Vec<GridPoint>,
}

impl PotentialArgs {
    pub fn mass_me(&self) -> f64 {
        units::mass_in_electron_masses(self.mass_u * ATOMIC_MASS_UNIT)
    }

    pub fn spec(&self) -> Result<PotentialSpec> {
        match (&self.model, &self.table) {
            (Some(m), None) => {
                let n: u32 = m
                    .strip_prefix('v')
                    .or_else(|| m.strip_prefix('V'))
                    .and_then(|s| s.parse().ok())
                    .with_context(|| format!("model must look like v4, got {m:?}"))?;
                Ok(PotentialSpec::Homogeneous {
                    n,
                    strength: self.strength,
                })
            }
            (None, Some(p)) => Ok(PotentialSpec::Table { path: p.clone() }),
            _ => bail!("give exactly one of --model or --table"),
        }
    }

    pub fn load(&self, atomic: bool) -> Result<PotentialModel> {
        ensure!(self.mass_u > 0.0, "mass must be positive");
        Ok(match self.spec()? {
            PotentialSpec::Homogeneous { n, strength } => {
                let c = if atomic {
                    units::reduced_from_hartree(strength, self.mass_me())
                } else {
                    strength
                };
                HomogeneousPotential::new(n, c)?.into()
            }
            PotentialSpec::Table { path } => {
                TabulatedPotential::from_file(&path, self.mass_me(), self.tail_tol)?.into()
            }
        })
    }
}

fn parse_values(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let values = match parts.as_slice() {
        [lo, hi, n] => {
            let (lo, hi): (f64, f64) = (lo.trim().parse()?, hi.trim().parse()?);
            let n: usize = n.trim().parse()?;
            ensure!(
                lo > 0.0 && hi > lo && n >= 2,
                "log grid needs 0 < MIN < MAX and COUNT ≥ 2"
            );
            (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
        }
        [_] => text
            .split(',')
            .map(|s| s.trim().parse::<f64>().with_context(|| format!("bad grid value {s:?}")))
            .collect::<Result<Vec<_>>>()?,
        _ => bail!("grid must be a comma list or MIN:MAX:COUNT, got {text:?}"),
    };
    ensure!(!values.is_empty(), "grid is empty");
    for &v in &values {
        ensure!(v > 0.0 && v.is_finite(), "grid values must be positive, got {v}");
    }
    Ok(values)
}

impl GridArgs {
    pub fn spec(&self) -> Result<GridSpec> {
        let given: Vec<(GridKind, &String)> = [
            (GridKind::KappaEll, self.kappa_ell.as_ref()),
            (GridKind::EnergyE1, self.energy_e1.as_ref()),
            (GridKind::Energy, self.energy.as_ref()),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
        .collect();
        match given.as_slice() {
            [(kind, text)] => Ok(GridSpec {
                kind: *kind,
                values: parse_values(text)?,
            }),
            _ => bail!("give exactly one of --kappa-ell, --energy-e1 or --energy"),
        }
    }
}

impl GridSpec {
    pub fn resolve(&self, potential: &PotentialModel, pot: &PotentialArgs, atomic: bool) -> Result<Vec<GridPoint>> {
        self.values
            .iter()
            .map(|&label| {
                let energy = match self.kind {
                    GridKind::KappaEll => {
                        let c4 = potential
                            .far_c4()
                            .context("--kappa-ell needs a potential with a -C4/z^4 tail")?;
                        label * label / c4
                    }
                    GridKind::EnergyE1 => units::reduced_from_e1_units(label, pot.mass_u * ATOMIC_MASS_UNIT, pot.g)?,
                    GridKind::Energy if atomic => units::reduced_from_hartree(label, pot.mass_me()),
                    GridKind::Energy => label,
                };
                scales_for(potential, energy)?;
                Ok(GridPoint { label, energy })
            })
            .collect()
    }
}

impl RunConfig {
    pub fn new(
        command: &'static str,
        potential: &PotentialArgs,
        grid: Option<GridSpec>,
        method: Option<MethodChoice>,
        solver: Option<SolverControl>,
        output: &OutputArgs,
    ) -> Result<Self> {
        ensure!(output.jobs >= 1, "--jobs must be at least 1");
        Ok(Self {
            command,
            potential: Some(potential.spec()?),
            grid,
            method,
            solver,
            mass_u: potential.mass_u,
            g: potential.g,
            atomic_units: output.atomic_units,
            format: output.format,
            output: output.output.clone(),
        })
    }

    /// Loads the potential and converts the grid to reduced energies.
    pub fn resolve(&self, pot: &PotentialArgs) -> Result<Resolved> {
        let potential = pot.load(self.atomic_units)?;
        if self.method == Some(MethodChoice::Mathieu) {
            ensure!(
                matches!(&potential, PotentialModel::Homogeneous(h) if h.n() == 4),
                "the mathieu method needs --model v4"
            );
        }
        let points = match &self.grid {
            Some(g) => g.resolve(&potential, pot, self.atomic_units)?,
            None => Vec::new(),
        };
        Ok(Resolved { potential, points })
    }
}
