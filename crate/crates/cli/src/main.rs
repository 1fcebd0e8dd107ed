//! `algebroid-hj`: structure checks, integration and Hamilton-Jacobi
//! residual reports for scenario files.
//!
//! Exit status: 0 when every requested check passes, 1 when a check fails,
//! 2 on bad input.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use algebroid_hj::dynamics::{integrate, verify_lifted_curves, CurveSettings};
use algebroid_hj::hamilton_jacobi::{on_section_points, type1_residual, type2_residuals, Type2Options};
use algebroid_hj::prolongation::{verify_omega, verify_pullback_identities, verify_section_pullback, DualPoint};
use algebroid_hj::report::{to_json_17, ResidualReport};
use algebroid_hj::sampling::Sampler;
use algebroid_hj::scenario::{
    catalog, catalog_names, export_catalog, resolve, write_atomic, Scenario, DEFAULT_HAMILTONIAN,
};
use algebroid_hj::time_extension::{embed, td_verify, TdKind, TdSettings};
use algebroid_hj::Error;

#[derive(Parser)]
#[command(
    name = "algebroid-hj",
    version,
    about = "Hamilton-Jacobi residual checks on Lie algebroids"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Sampling {
    /// Number of sample points.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Tolerance; defaults to the scenario's value for the check.
    #[arg(long)]
    tol: Option<f64>,
    /// RNG seed; defaults to the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct Curves {
    /// Length of the base curves for the lifted-curve check.
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    /// Step of the base-curve integrator.
    #[arg(long, default_value_t = 1e-2)]
    dt: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum HjTheorem {
    #[value(name = "lifted", alias = "5")]
    Lifted,
    Type1,
    Type2,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TdTheorem {
    #[value(name = "lifted", alias = "10")]
    Lifted,
    Type1,
    Type2,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Flag {
    /// Push forward the Hamiltonian section of H rather than of H∘ε.
    AltType2,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Placement {
    /// Points whose image under ε lies on the graph of γ.
    OnSection,
    /// Points drawn from the phase-space box.
    Box,
}

#[derive(Subcommand)]
enum Command {
    /// Algebroid axioms, symplectic-form cross-check and section pullbacks.
    Check {
        scenario: String,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Integrate Hamilton's equations and write a CSV trajectory.
    Integrate {
        scenario: String,
        #[arg(long, default_value = DEFAULT_HAMILTONIAN)]
        hamiltonian: String,
        /// Comma-separated start point `x1,..,xm,mu1,..,mun`.
        #[arg(long)]
        start: String,
        #[arg(long, default_value_t = 0.0)]
        t0: f64,
        #[arg(long)]
        t1: f64,
        #[arg(long, default_value_t = 1e-2)]
        dt: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hamilton-Jacobi residuals for an autonomous scenario.
    Hj {
        scenario: String,
        #[arg(long, value_enum)]
        theorem: HjTheorem,
        #[arg(long)]
        gamma: String,
        #[arg(long)]
        epsilon: Option<String>,
        #[arg(long, value_enum)]
        flag: Vec<Flag>,
        #[arg(long, value_enum, default_value = "on-section")]
        placement: Placement,
        #[command(flatten)]
        sampling: Sampling,
        #[command(flatten)]
        curves: Curves,
    },
    /// Time-dependent residuals through the extended algebroid.
    Td {
        scenario: String,
        #[arg(long, value_enum)]
        theorem: TdTheorem,
        #[arg(long)]
        gamma: String,
        #[arg(long)]
        epsilon: Option<String>,
        #[arg(long, value_enum)]
        flag: Vec<Flag>,
        #[command(flatten)]
        sampling: Sampling,
        #[command(flatten)]
        curves: Curves,
    },
    /// List or export the built-in scenarios.
    Catalog {
        #[arg(long, conflicts_with = "export")]
        list: bool,
        #[arg(long, value_name = "DIR")]
        export: Option<PathBuf>,
    },
}

enum Failure {
    Input(String),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Eval(_) | Error::SingularOmega { .. } | Error::Integration { .. } => Failure::Check(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

#[derive(Serialize)]
struct Bundle<'a> {
    scenario: &'a str,
    pass: bool,
    reports: &'a [ResidualReport],
}

fn emit(text: &str, out: Option<&PathBuf>) -> CliResult<()> {
    match out {
        Some(path) => write_atomic(path, text.as_bytes()).map_err(Failure::from),
        None => {
            use std::io::Write;
            match std::io::stdout().lock().write_all(text.as_bytes()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::Input(e.to_string())),
                _ => Ok(()),
            }
        }
    }
}

fn emit_bundle(scenario: &Scenario, reports: &[ResidualReport], out: Option<&PathBuf>) -> CliResult<bool> {
    let pass = reports.iter().all(|r| r.pass);
    let bundle = Bundle {
        scenario: &scenario.name,
        pass,
        reports,
    };
    emit(&(to_json_17(&bundle) + "\n"), out)?;
    Ok(pass)
}

fn emit_report(report: &ResidualReport, out: Option<&PathBuf>) -> CliResult<bool> {
    emit(&(report.to_json() + "\n"), out)?;
    Ok(report.pass)
}

fn check(name: &str, sampling: &Sampling) -> CliResult<bool> {
    let s = resolve(name)?;
    let tol = sampling.tol.unwrap_or(s.tolerances.structure);
    let seed = sampling.seed.unwrap_or(s.seed);
    let mut sampler = Sampler::new(seed);
    let mut reports = Vec::new();
    let pts = sampler.points_in(&s.domain, sampling.samples);
    reports.push(s.spec.validate(&pts, tol, seed)?);
    let dual = s.dual_samples(sampling.samples, &mut sampler);
    reports.push(verify_omega(
        &s.spec,
        &dual,
        sampling.tol.unwrap_or(s.tolerances.omega),
        seed,
    )?);
    for (section, def) in &s.sections {
        let (spec, gamma, xs) = if s.time_dependent {
            let ext = s.extended(&def.hamiltonian)?;
            let g = ext.lift(&s.time_section(section)?)?;
            let xs = sampler.points_in(&s.extended_domain(Some(section))?, sampling.samples);
            (ext.spec, g, xs)
        } else {
            let xs = sampler.points_in(s.section_domain(section)?, sampling.samples);
            (s.spec.clone(), s.section_estar(section)?, xs)
        };
        let mut p4 = verify_section_pullback(&spec, &gamma, &xs, tol, &mut sampler)?;
        p4.check = format!("section_pullback:{section}");
        let mut l7 = verify_pullback_identities(&spec, &gamma, &xs, tol, &mut sampler)?;
        l7.check = format!("pullback_identities:{section}");
        reports.push(p4);
        reports.push(l7);
    }
    emit_bundle(&s, &reports, sampling.out.as_ref())
}

fn parse_start(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Failure::Input(format!("--start: `{v}` is not a number")))
        })
        .collect()
}

fn run_integrate(
    name: &str,
    hamiltonian: &str,
    start: &str,
    (t0, t1, dt): (f64, f64, f64),
    out: Option<&PathBuf>,
) -> CliResult<bool> {
    let s = resolve(name)?;
    let coords = parse_start(start)?;
    let (m, n) = (s.spec.base_dim(), s.spec.rank());
    if coords.len() != m + n {
        return Err(Failure::Input(format!(
            "--start needs {} values, got {}",
            m + n,
            coords.len()
        )));
    }
    let p = DualPoint::new(coords[..m].to_vec(), coords[m..].to_vec());
    let mut buf = Vec::new();
    let traj = if s.time_dependent {
        let ext = s.extended(hamiltonian)?;
        let p0 = ext.zero_level(t0, &p)?;
        let traj = integrate(&ext.spec, &ext.k, &p0, t0, t1, dt)?;
        traj.write_csv(&ext.spec, &ext.k, &mut buf)?;
        traj
    } else {
        let h = s.hamiltonian(hamiltonian)?;
        let traj = integrate(&s.spec, &h, &p, t0, t1, dt)?;
        traj.write_csv(&s.spec, &h, &mut buf)?;
        traj
    };
    emit(&String::from_utf8(buf).expect("CSV is ASCII"), out)?;
    if let Some(why) = traj.diagnostic {
        eprintln!("trajectory truncated: {why}");
        return Ok(false);
    }
    Ok(true)
}

fn omega_gate(s: &Scenario, samples: usize, seed: u64) -> CliResult<()> {
    let dual = s.dual_samples(samples, &mut Sampler::new(seed));
    let r = verify_omega(&s.spec, &dual, s.tolerances.omega, seed)?;
    if r.pass {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "symplectic form cross-check failed for {} (max {:e}); refusing to run",
            s.name, r.max
        )))
    }
}

#[allow(clippy::too_many_arguments)]
fn run_hj(
    name: &str,
    theorem: HjTheorem,
    gamma: &str,
    epsilon: Option<&str>,
    flags: &[Flag],
    placement: Placement,
    sampling: &Sampling,
    curves: &Curves,
) -> CliResult<bool> {
    let s = resolve(name)?;
    if s.time_dependent {
        return Err(Failure::Input(format!("{} is time-dependent; use `td`", s.name)));
    }
    let seed = sampling.seed.unwrap_or(s.seed);
    omega_gate(&s, sampling.samples, seed)?;
    let def = s.section(gamma)?;
    let h = s.hamiltonian(&def.hamiltonian)?;
    let g = s.section_estar(gamma)?;
    let bx = s.section_domain(gamma)?;
    let mut sampler = Sampler::new(seed);
    let report = match theorem {
        HjTheorem::Lifted => {
            let xs = sampler.points_in(bx, sampling.samples);
            let starts = sampler.points_in(bx, sampling.samples.clamp(1, 5));
            let curve = CurveSettings {
                horizon: curves.horizon,
                dt: curves.dt,
            };
            verify_lifted_curves(
                &s.spec,
                &h,
                &g,
                &xs,
                &starts,
                curve,
                sampling.tol.unwrap_or(s.tolerances.hj),
                seed,
            )?
        }
        HjTheorem::Type1 => {
            let xs = sampler.points_in(bx, sampling.samples);
            type1_residual(&s.spec, &h, &g, &xs, sampling.tol.unwrap_or(s.tolerances.theorem), seed)?
        }
        HjTheorem::Type2 => {
            let eps_name = epsilon.ok_or_else(|| Failure::Input("--theorem type2 needs --epsilon".into()))?;
            let eps = s.morphism(eps_name)?;
            let pts = match placement {
                Placement::OnSection => on_section_points(&s.spec, &g, &eps, &sampler.points_in(bx, sampling.samples))?,
                Placement::Box => s.dual_samples(sampling.samples, &mut sampler),
            };
            let opts = Type2Options {
                alt: flags.contains(&Flag::AltType2),
            };
            type2_residuals(
                &s.spec,
                &h,
                &g,
                &eps,
                &pts,
                sampling.tol.unwrap_or(s.tolerances.theorem),
                seed,
                opts,
            )?
        }
    };
    emit_report(&report, sampling.out.as_ref())
}

fn run_td(
    name: &str,
    theorem: TdTheorem,
    gamma: &str,
    epsilon: Option<&str>,
    flags: &[Flag],
    sampling: &Sampling,
    curves: &Curves,
) -> CliResult<bool> {
    let s = resolve(name)?;
    let seed = sampling.seed.unwrap_or(s.seed);
    let def = s.section(gamma)?;
    let ext = s.extended(&def.hamiltonian)?;
    let section = s.time_section(gamma)?;
    let dual = s.dual_samples(sampling.samples, &mut Sampler::new(seed));
    let t_box = s.time_box.unwrap_or([0.0, 1.0]);
    let ext_dual: Vec<DualPoint> = dual.iter().map(|p| embed(t_box[0], 0.0, p)).collect();
    let r = verify_omega(&ext.spec, &ext_dual, s.tolerances.omega, seed)?;
    if !r.pass {
        return Err(Failure::Check(format!(
            "extended symplectic form cross-check failed (max {:e})",
            r.max
        )));
    }
    let xs = Sampler::new(seed).points_in(&s.extended_domain(Some(gamma))?, sampling.samples);
    let kind = match theorem {
        TdTheorem::Lifted => TdKind::LiftedCurves,
        TdTheorem::Type1 => TdKind::Type1,
        TdTheorem::Type2 => TdKind::Type2,
    };
    let tol = sampling.tol.unwrap_or(match kind {
        TdKind::LiftedCurves => s.tolerances.hj,
        _ => s.tolerances.theorem,
    });
    let settings = TdSettings {
        tol,
        seed,
        curve: CurveSettings {
            horizon: curves.horizon,
            dt: curves.dt,
        },
        type2: Type2Options {
            alt: flags.contains(&Flag::AltType2),
        },
    };
    let eps = epsilon.map(|e| s.morphism_exprs(e)).transpose()?;
    let report = td_verify(kind, &ext, &section, eps, &xs, settings)?;
    emit_report(&report, sampling.out.as_ref())
}

fn run_catalog(list: bool, export: Option<&PathBuf>) -> CliResult<bool> {
    let lines: Vec<String> = match (list, export) {
        (_, Some(dir)) => export_catalog(dir)?.iter().map(|p| p.display().to_string()).collect(),
        (true, None) => catalog()
            .iter()
            .map(|s| format!("{}\t{}", s.name, s.description))
            .collect(),
        (false, None) => catalog_names().map(String::from).collect(),
    };
    emit(&(lines.join("\n") + "\n"), None)?;
    Ok(true)
}

fn run(cli: Cli) -> CliResult<bool> {
    match cli.command {
        Command::Check { scenario, sampling } => check(&scenario, &sampling),
        Command::Integrate {
            scenario,
            hamiltonian,
            start,
            t0,
            t1,
            dt,
            out,
        } => run_integrate(&scenario, &hamiltonian, &start, (t0, t1, dt), out.as_ref()),
        Command::Hj {
            scenario,
            theorem,
            gamma,
            epsilon,
            flag,
            placement,
            sampling,
            curves,
        } => run_hj(
            &scenario,
            theorem,
            &gamma,
            epsilon.as_deref(),
            &flag,
            placement,
            &sampling,
            &curves,
        ),
        Command::Td {
            scenario,
            theorem,
            gamma,
            epsilon,
            flag,
            sampling,
            curves,
        } => run_td(
            &scenario,
            theorem,
            &gamma,
            epsilon.as_deref(),
            &flag,
            &sampling,
            &curves,
        ),
        Command::Catalog { list, export } => run_catalog(list, export.as_ref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
