//! The four subcommands. Each returns its table and whether every gate held.

use anyhow::{ensure, Result};
use qreflect::liouville::{
    inversion_center, special_gauge, special_gauge_truncated, universal_integral, universal_integral_quadrature,
    universal_v4, universal_v4_abscissa, universal_vn, wall_sign,
};
use qreflect::mathieu::{self, MathieuControl};
use qreflect::potentials::scales_for;
use qreflect::scattering::{
    scattering_length, solve_coupled, solve_direct, solve_transformed, ScatteringLengthControl, UNITARITY_GATE,
};
use qreflect::{units, Complex64, PotentialModel, SolverControl, WkbField};
use rayon::prelude::*;

use crate::config::{GridKind, GridPoint, MethodChoice, ProfileArgs, ReflectArgs, RunConfig, ScatArgs, WallArgs};
use crate::output::{Cell, Table};

/// Largest accepted spread of `r` across methods in one row.
pub const GAUGE_GATE: f64 = 1e-6;

/// Profiles stop where `Q` has fallen below this fraction of its peak.
const PROFILE_EDGE: f64 = 1e-7;

pub struct Run {
    pub config: RunConfig,
    pub table: Table,
    pub ok: bool,
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?)
}

fn energy_out(energy: f64, atomic: bool, mass_me: f64) -> f64 {
    if atomic {
        units::hartree_from_reduced(energy, mass_me)
    } else {
        energy
    }
}

fn unit_note(atomic: bool) -> &'static str {
    if atomic {
        "lengths in bohr, energies in hartree, wave vectors in 1/bohr"
    } else {
        "reduced units (hbar^2/2m = 1): energy = kappa^2, lengths as in the potential"
    }
}

fn methods_for(choice: MethodChoice, potential: &PotentialModel) -> Vec<MethodChoice> {
    let quartic = matches!(potential, PotentialModel::Homogeneous(h) if h.n() == 4);
    match choice {
        MethodChoice::All if quartic => vec![
            MethodChoice::Direct,
            MethodChoice::Coupled,
            MethodChoice::Transformed,
            MethodChoice::Mathieu,
        ],
        MethodChoice::All => vec![MethodChoice::Direct, MethodChoice::Coupled, MethodChoice::Transformed],
        m => vec![m],
    }
}

fn method_name(m: MethodChoice) -> &'static str {
    match m {
        MethodChoice::Direct => "direct",
        MethodChoice::Coupled => "coupled",
        MethodChoice::Transformed => "transformed",
        MethodChoice::Mathieu => "mathieu",
        MethodChoice::All => "all",
    }
}

struct Outcome {
    r: Complex64,
    reflection: f64,
    unitarity: f64,
    passes: bool,
}

fn run_method(
    m: MethodChoice,
    potential: &PotentialModel,
    energy: f64,
    ctl: &SolverControl,
) -> qreflect::Result<Outcome> {
    let from_ode = |res: qreflect::ScatteringResult| Outcome {
        r: res.r,
        reflection: res.reflection,
        unitarity: res.diagnostics.unitarity_residual,
        passes: res.diagnostics.passes(),
    };
    match m {
        MethodChoice::Direct => solve_direct(potential, energy, ctl).map(from_ode),
        MethodChoice::Coupled => solve_coupled(potential, energy, ctl).map(from_ode),
        MethodChoice::Transformed => {
            let scales = scales_for(potential, energy)?;
            let field = WkbField::new(potential.clone(), energy)?;
            let (cliff, far) = ctl.thresholds();
            let (_, problem) = special_gauge_truncated(&field, scales.kappa * scales.zeta_n, cliff, far)?;
            solve_transformed(&problem, ctl).map(from_ode)
        }
        MethodChoice::Mathieu | MethodChoice::All => {
            let kl = scales_for(potential, energy)?.kappa_ell().unwrap_or(f64::NAN);
            let s = mathieu::solve(kl, &MathieuControl::default())?;
            let unitarity = (s.r.norm_sqr() + s.t.norm_sqr() - 1.0).abs();
            Ok(Outcome {
                r: s.r,
                reflection: s.reflection(),
                unitarity,
                passes: unitarity < UNITARITY_GATE,
            })
        }
    }
}

pub fn reflect(args: &ReflectArgs) -> Result<Run> {
    let ctl = args.solver.control();
    let config = RunConfig::new(
        "reflect",
        &args.potential,
        Some(args.grid.spec()?),
        Some(args.method),
        Some(ctl),
        &args.output,
    )?;
    let resolved = config.resolve(&args.potential)?;
    let atomic = config.atomic_units;
    let mass_me = args.potential.mass_me();
    let methods = methods_for(args.method, &resolved.potential);
    let grid = config.grid.as_ref().expect("reflect always has a grid");
    let has_c4 = resolved.potential.far_c4().is_some();

    let mut columns = vec![
        grid.kind.column(atomic).to_owned(),
        if atomic { "energy_hartree" } else { "energy_reduced" }.to_owned(),
        "kappa".to_owned(),
    ];
    if has_c4 && grid.kind != GridKind::KappaEll {
        columns.push("kappa_ell".into());
    }
    for &m in &methods {
        columns.push(format!("R_{}", method_name(m)));
        columns.push(format!("unitarity_{}", method_name(m)));
    }
    columns.extend(["gauge_residual".to_owned(), "status".to_owned()]);
    let mut table = Table::new(columns);
    table.meta("units", unit_note(atomic));
    table.meta("potential", &resolved.potential);
    table.meta(
        "gates",
        format!("unitarity {UNITARITY_GATE:e}, cross-method r spread {GAUGE_GATE:e}"),
    );

    let row = |p: &GridPoint| -> (Vec<Cell>, bool) {
        let kappa = p.energy.sqrt();
        let mut cells: Vec<Cell> = vec![
            p.label.into(),
            energy_out(p.energy, atomic, mass_me).into(),
            kappa.into(),
        ];
        if has_c4 && grid.kind != GridKind::KappaEll {
            cells.push(resolved.potential.far_c4().map(|c| kappa * c.sqrt()).into());
        }
        let mut problems = Vec::new();
        let mut rs = Vec::new();
        for &m in &methods {
            match run_method(m, &resolved.potential, p.energy, &ctl) {
                Ok(o) => {
                    if !o.passes {
                        problems.push(format!("{} diagnostics above gate", method_name(m)));
                    }
                    rs.push(o.r);
                    cells.push(o.reflection.into());
                    cells.push(o.unitarity.into());
                }
                Err(e) => {
                    problems.push(format!("{}: {e}", method_name(m)));
                    cells.extend([Cell::Empty, Cell::Empty]);
                }
            }
        }
        let spread = (rs.len() > 1).then(|| rs.iter().map(|r| (r - rs[0]).norm()).fold(0.0, f64::max));
        if let Some(s) = spread {
            if !(s < GAUGE_GATE) {
                problems.push(format!("methods disagree by {s:.3e}"));
            }
        }
        cells.push(spread.into());
        let ok = problems.is_empty();
        cells.push(if ok { "ok".into() } else { problems.join("; ").into() });
        (cells, ok)
    };
    let rows: Vec<(Vec<Cell>, bool)> =
        pool(args.output.jobs)?.install(|| resolved.points.par_iter().map(row).collect());
    let mut ok = true;
    for (cells, good) in rows {
        ok &= good;
        table.push(cells);
    }
    Ok(Run { config, table, ok })
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

struct Profile {
    samples: Vec<(f64, f64)>,
    z_peak: f64,
    q_peak: f64,
    multimodal: bool,
}

/// `(z, Q)` samples between the points where `Q` falls to `PROFILE_EDGE`
/// of its peak, refined until at least 50 lie above half maximum.
fn badlands_profile(field: &WkbField, start: usize) -> qreflect::Result<Profile> {
    let peak = field.badlands_peak()?;
    let (lo, hi) = field.matching_interval(PROFILE_EDGE)?;
    let mut n = start.max(3);
    loop {
        let mut zs = log_grid(lo, hi, n);
        let at = zs.partition_point(|&z| z < peak.z);
        zs.insert(at, peak.z);
        let samples = zs
            .into_iter()
            .map(|z| field.badlands(z).map(|q| (z, q)))
            .collect::<qreflect::Result<Vec<_>>>()?;
        let resolved = samples.iter().filter(|s| s.1 >= 0.5 * peak.q).count() >= 50;
        if resolved || n > 1 << 20 {
            return Ok(Profile {
                samples,
                z_peak: peak.z,
                q_peak: peak.q,
                multimodal: peak.multimodal,
            });
        }
        n *= 2;
    }
}

pub fn badlands(args: &ProfileArgs) -> Result<Run> {
    let config = RunConfig::new(
        "badlands",
        &args.potential,
        Some(args.grid.spec()?),
        None,
        None,
        &args.output,
    )?;
    let resolved = config.resolve(&args.potential)?;
    let grid = config.grid.as_ref().expect("badlands always has a grid");
    let mut table = Table::new([grid.kind.column(config.atomic_units), "z", "Q", "Q_over_peak"]);
    table.meta("units", unit_note(config.atomic_units));
    table.meta("potential", &resolved.potential);
    let profiles = pool(args.output.jobs)?.install(|| {
        resolved
            .points
            .par_iter()
            .map(|p| {
                WkbField::new(resolved.potential.clone(), p.energy).and_then(|f| badlands_profile(&f, args.points))
            })
            .collect::<Vec<_>>()
    });
    for (p, prof) in resolved.points.iter().zip(profiles) {
        let Profile {
            samples,
            z_peak,
            q_peak,
            multimodal,
        } = prof?;
        let label = format!("{} = {}", grid.kind.column(config.atomic_units), p.label);
        table.meta(
            format!("peak at {label}"),
            format!(
                "z = {z_peak:?}, Q = {q_peak:?}{}",
                if multimodal { ", several maxima" } else { "" }
            ),
        );
        let field = WkbField::new(resolved.potential.clone(), p.energy)?;
        if let Some((lo, hi)) = field.table_end_badlands()? {
            table.meta(format!("Q/Q_peak at table ends, {label}"), format!("{lo:?}, {hi:?}"));
        }
        for (z, q) in samples {
            table.push(vec![p.label.into(), z.into(), q.into(), (q / q_peak).into()]);
        }
    }
    Ok(Run {
        config,
        table,
        ok: true,
    })
}

fn universal_wall(args: &WallArgs) -> Result<Run> {
    ensure!(args.points >= 3, "--points must be at least 3");
    let config = RunConfig {
        command: "wall",
        potential: None,
        grid: None,
        method: None,
        solver: None,
        mass_u: args.potential.mass_u,
        g: args.potential.g,
        atomic_units: args.output.atomic_units,
        format: args.output.format,
        output: args.output.output.clone(),
    };
    let mut table = Table::new(["n", "x", "z_bold", "V_bold", "symmetry_residual"]);
    table.meta(
        "units",
        "dimensionless: x = z/zeta_n, z_bold = phase/varkappa, V_bold = Q*varkappa^2",
    );
    let mut ok = true;
    for &n in &args.universal {
        let closed = universal_integral(n)?;
        let quad = universal_integral_quadrature(n)?;
        table.meta(format!("I_{n}"), format!("closed form {closed:?}, quadrature {quad:?}"));
        if n == 4 {
            table.meta(
                "peak_4",
                format!("z_* = {:?}, V = {:?}", inversion_center(), universal_v4(0.0)?.1),
            );
        }
        for x in log_grid(1e-3, 1e3, args.points) {
            let (zb, v) = universal_vn(n, x)?;
            let sym = if n == 4 {
                let d = zb - inversion_center();
                let mirror = universal_v4(universal_v4_abscissa(inversion_center() - d)?)?.1;
                let s = (v - mirror).abs();
                ok &= s < 1e-10;
                Cell::Num(s)
            } else {
                Cell::Empty
            };
            table.push(vec![Cell::Int(n.into()), x.into(), zb.into(), v.into(), sym]);
        }
        ok &= (quad - closed).abs() < 1e-9;
    }
    Ok(Run { config, table, ok })
}

pub fn wall(args: &WallArgs) -> Result<Run> {
    if !args.universal.is_empty() {
        return universal_wall(args);
    }
    ensure!(args.points >= 3, "--points must be at least 3");
    let config = RunConfig::new(
        "wall",
        &args.potential,
        Some(args.grid.spec()?),
        None,
        None,
        &args.output,
    )?;
    let resolved = config.resolve(&args.potential)?;
    let grid = config.grid.as_ref().expect("wall always has a grid");
    let mut table = Table::new([grid.kind.column(config.atomic_units), "z", "z_bold", "V_bold", "E_bold"]);
    table.meta(
        "units",
        "z as in the potential; z_bold, V_bold and E_bold dimensionless",
    );
    table.meta("potential", &resolved.potential);
    let walls = pool(args.output.jobs)?.install(|| {
        resolved
            .points
            .par_iter()
            .map(
                |p| -> qreflect::Result<(f64, qreflect::liouville::WallSign, Vec<Vec<Cell>>)> {
                    let scales = scales_for(&resolved.potential, p.energy)?;
                    let scale = scales.kappa * scales.zeta_n;
                    let field = WkbField::new(resolved.potential.clone(), p.energy)?;
                    let (map, problem) = special_gauge(&field, scale)?;
                    let sign = wall_sign(&problem, 2000)?;
                    let (lo, hi) = field.matching_interval(PROFILE_EDGE)?;
                    let rows = log_grid(lo, hi, args.points)
                        .into_iter()
                        .map(|z| {
                            Ok(vec![
                                p.label.into(),
                                z.into(),
                                map.value(z)?.into(),
                                (scale * scale * field.badlands(z)?).into(),
                                (scale * scale).into(),
                            ])
                        })
                        .collect::<qreflect::Result<Vec<_>>>()?;
                    Ok((p.label, sign, rows))
                },
            )
            .collect::<Vec<_>>()
    });
    for wall in walls {
        let (label, sign, rows) = wall?;
        let negative: Vec<String> = sign.negative.iter().map(|(a, b)| format!("[{a:?}, {b:?}]")).collect();
        table.meta(
            format!("V_bold sign, {} = {label}", grid.kind.column(config.atomic_units)),
            format!(
                "min {:?}, max {:?}, negative on z in {}",
                sign.min,
                sign.max,
                if negative.is_empty() {
                    "none".to_owned()
                } else {
                    negative.join(" ")
                }
            ),
        );
        for r in rows {
            table.push(r);
        }
    }
    Ok(Run {
        config,
        table,
        ok: true,
    })
}

pub fn scatlength(args: &ScatArgs) -> Result<Run> {
    let config = RunConfig::new("scatlength", &args.potential, None, None, None, &args.output)?;
    let resolved = config.resolve(&args.potential)?;
    ensure!(
        resolved.potential.far_c4().is_some(),
        "scattering length needs a potential with a -C4/z^4 tail"
    );
    let defaults = ScatteringLengthControl::default();
    let ctl = ScatteringLengthControl {
        kappa_ell_min: args.kappa_ell_min,
        kappa_ell_max: args.kappa_ell_max,
        points: args.points,
        residual_threshold: f64::INFINITY,
        solver: defaults.solver,
    };
    let fit = scattering_length(&resolved.potential, &ctl)?;
    let ok = fit.fit_residual < args.residual_threshold;
    let mut table = Table::new(["a_re", "a_im", "b", "ell", "b_over_ell", "fit_residual", "status"]);
    table.meta(
        "units",
        if config.atomic_units {
            "lengths in bohr"
        } else {
            "lengths as in the potential"
        },
    );
    table.meta("potential", &resolved.potential);
    table.meta(
        "fit",
        format!(
            "(r+1)/(2i kappa) linear in kappa over kappa_ell in [{}, {}], {} points",
            args.kappa_ell_min, args.kappa_ell_max, args.points
        ),
    );
    table.push(vec![
        fit.a.re.into(),
        fit.a.im.into(),
        fit.b.into(),
        fit.ell.into(),
        (fit.b / fit.ell).into(),
        fit.fit_residual.into(),
        if ok {
            "ok".into()
        } else {
            format!("fit residual above {:e}", args.residual_threshold).into()
        },
    ]);
    Ok(Run { config, table, ok })
}
