//! talenti-lab: rearrangement, heat/adjoint solves, bathtub control and the
//! counterexample experiments from the command line.
//!
//! Exit codes: 0 ok, 2 bad input (usage, validation, I/O), 3 numerical or
//! serialization failure, 4 a checked property failed.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use talenti_core::control::bathtub_optimize;
use talenti_core::experiments::{
    counterexample::write_profiles, run_counterexample_full, run_sweep, run_talenti, with_thread_cap,
    ExperimentConfig,
};
use talenti_core::field::{RadialField, SpaceTimeField};
use talenti_core::grid::TimeGrid;
use talenti_core::heat::{solve_adjoint, solve_heat, Scheme};
use talenti_core::io::{self, FieldHeader};
use talenti_core::rearrange::dominates;
use talenti_core::report::to_canonical_json;
use talenti_core::{Error, SchwarzRearrange};

#[derive(Parser)]
#[command(name = "talenti-lab", version, about = "Schwarz rearrangement and bathtub control for the radial heat equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Schwarz rearrangement of a field file (each time level separately).
    Rearrange { input: PathBuf, output: PathBuf },
    /// Checks whether F is dominated by G in the concentration order; JSON on stdout.
    Compare {
        f: PathBuf,
        g: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Solves u_t - Δu = f, u(0) = 0, u = 0 on the sphere.
    Solve {
        #[arg(long)]
        source: PathBuf,
        #[arg(long, default_value = "implicit-euler")]
        scheme: Scheme,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solves the backward problem -p_t - Δp = 0, p(T) = phi.
    Adjoint {
        #[arg(long)]
        terminal: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 256)]
        nt: usize,
        /// Horizon; defaults to the T recorded in the terminal file.
        #[arg(long = "T")]
        horizon: Option<f64>,
    },
    /// Maximises ∫ u_f(T) phi over controls with mass `volume * T * |B|`.
    Optimize {
        #[arg(long)]
        terminal: PathBuf,
        /// Fraction of the space-time volume, in (0, 1).
        #[arg(long)]
        volume: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = 256)]
        nt: usize,
        #[arg(long = "T")]
        horizon: Option<f64>,
    },
    /// Seeded experiments: talenti, counterexample, sweep.
    #[command(subcommand)]
    Experiment(Experiment),
}

#[derive(Subcommand)]
enum Experiment {
    /// Checks u_f(t) ≺ u_{f#}(t) on seeded random admissible sources.
    Talenti {
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs the two-cutoff construction and writes the report.
    Counterexample {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        profiles_dir: Option<PathBuf>,
    },
    /// Tries to falsify maximality of f_phi, f_psi and their average.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Number of random bang-bang adversaries.
        #[arg(long, default_value_t = 16)]
        random: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON with keys R, d, T, V0_fraction, n_r, n_t, scheme, seed (all optional).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    nr: Option<usize>,
    #[arg(long)]
    nt: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long = "R")]
    radius: Option<f64>,
    #[arg(long = "T")]
    horizon: Option<f64>,
    #[arg(long)]
    volume_fraction: Option<f64>,
    #[arg(long)]
    scheme: Option<Scheme>,
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig, Failure> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_json(&read(p)?)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => { $(if let Some(v) = self.$flag { cfg.$field = v; })* };
        }
        set!(nr => n_r, nt => n_t, d => d, radius => radius, horizon => horizon,
             volume_fraction => volume_fraction, scheme => scheme, seed => seed);
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A failed run: message plus exit code.
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Self { code: 2, msg: msg.into() }
    }

    fn contract(msg: impl Into<String>) -> Self {
        Self { code: 4, msg: msg.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Domain(_)
            | Error::GridMismatch(_)
            | Error::Config(_)
            | Error::Validation(_)
            | Error::Parse { .. }
            | Error::Io(_) => 2,
            Error::Numerical { .. }
            | Error::Range { .. }
            | Error::Monotonicity { .. }
            | Error::DegenerateLevel { .. }
            | Error::Json(_) => 3,
            Error::Contract(_) => 4,
        };
        Self { code, msg: e.to_string() }
    }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

/// Output paths must sit in an existing directory; checked before computing.
fn writable(path: &Path) -> Outcome {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if path.file_name().is_none() || !parent.is_dir() {
        return Err(Failure::usage(format!("cannot write {}: no such directory", path.display())));
    }
    if path.is_dir() {
        return Err(Failure::usage(format!("cannot write {}: is a directory", path.display())));
    }
    Ok(())
}

fn write(path: &Path, bytes: &[u8]) -> Outcome {
    io::write_atomic(path, bytes).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

/// JSON to `out` if given, else to stdout.
fn emit(bytes: &[u8], out: Option<&Path>) -> Outcome {
    match out {
        Some(p) => write(p, bytes),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(bytes).map_err(|e| Failure::usage(format!("stdout: {e}")))
        }
    }
}

/// A field file holds either one radial profile (`n_t=0`) or a space-time field.
enum Loaded {
    Radial(RadialField<f64>, FieldHeader),
    SpaceTime(SpaceTimeField<f64>),
}

fn load(path: &Path) -> Result<Loaded, Failure> {
    let text = read(path)?;
    let (header, _) = io::parse_field_text::<f64>(&text)?;
    Ok(if header.n_steps == 0 {
        let (f, h) = io::radial_from_text(&text)?;
        Loaded::Radial(f, h)
    } else {
        Loaded::SpaceTime(io::field_from_text(&text)?)
    })
}

fn load_terminal(path: &Path) -> Result<(RadialField<f64>, FieldHeader), Failure> {
    match load(path)? {
        Loaded::Radial(f, h) => Ok((f, h)),
        Loaded::SpaceTime(_) => Err(Failure::usage(format!("{}: expected a radial profile (n_t=0)", path.display()))),
    }
}

fn time_grid(header: &FieldHeader, horizon: Option<f64>, nt: usize) -> Result<Arc<TimeGrid<f64>>, Failure> {
    Ok(Arc::new(TimeGrid::new(horizon.unwrap_or(header.horizon), nt)?))
}

#[derive(Serialize)]
struct CompareOutput {
    verdict: bool,
    margin: f64,
    node: usize,
    radius: f64,
    /// Time level of the worst margin (space-time inputs only).
    #[serde(skip_serializing_if = "Option::is_none")]
    level: Option<usize>,
    tol: f64,
}

fn compare(f: &Path, g: &Path, tol: f64) -> Outcome {
    if !(tol >= 0.0) {
        return Err(Failure::usage("--tol must be non-negative"));
    }
    let slices = |l: Loaded| match l {
        Loaded::Radial(f, _) => (vec![f], false),
        Loaded::SpaceTime(f) => ((0..f.n_levels()).map(|i| f.slice(i)).collect(), true),
    };
    let (fs, timed) = slices(load(f)?);
    let (gs, _) = slices(load(g)?);
    if fs.len() != gs.len() {
        return Err(Failure::usage("fields have different numbers of time levels"));
    }
    let mut worst: Option<(usize, talenti_core::rearrange::Domination<f64>)> = None;
    for (i, (a, b)) in fs.iter().zip(&gs).enumerate() {
        let d = dominates(a, b, tol)?;
        if worst.as_ref().map_or(true, |(_, w)| d.margin > w.margin) {
            worst = Some((i, d));
        }
    }
    let (level, d) = worst.expect("at least one level");
    let out = CompareOutput {
        verdict: d.holds,
        margin: d.margin,
        node: d.node,
        radius: fs[0].grid().nodes()[d.node],
        level: timed.then_some(level),
        tol,
    };
    eprintln!("f ≺ g: {} (worst margin {:e} at r = {})", d.holds, d.margin, out.radius);
    emit(&to_canonical_json(&out)?, None)
}

#[derive(Serialize)]
struct OptimizeReport {
    c: f64,
    c_interval: [f64; 2],
    objective: f64,
    exact_objective: f64,
    #[serde(rename = "V0")]
    volume: f64,
    radius_curve: Vec<f64>,
    feasibility_residual: f64,
    bisection_steps: usize,
}

fn optimize(terminal: &Path, fraction: f64, out: &Path, report: Option<&Path>, nt: usize, horizon: Option<f64>) -> Outcome {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Failure::usage(format!("--volume must lie in (0, 1), got {fraction}")));
    }
    writable(out)?;
    if let Some(r) = report {
        writable(r)?;
    }
    let (phi, header) = load_terminal(terminal)?;
    let tgrid = time_grid(&header, horizon, nt)?;
    let volume = fraction * tgrid.horizon() * phi.grid().total_volume();
    let (sol, _) = bathtub_optimize(&phi, tgrid, volume)?;
    let rep = OptimizeReport {
        c: sol.multiplier,
        c_interval: [sol.multiplier_interval.0, sol.multiplier_interval.1],
        objective: sol.objective,
        exact_objective: sol.exact_objective,
        volume,
        radius_curve: sol.radius_curve.clone(),
        feasibility_residual: sol.feasibility_residual,
        bisection_steps: sol.bisection_steps,
    };
    let json = to_canonical_json(&rep)?;
    let field = io::field_to_text(sol.control_field());
    write(out, field.as_bytes())?;
    if let Some(r) = report {
        write(r, &json)?;
    }
    eprintln!(
        "c = {:e}, objective = {:e}, r(T-) = {}, feasibility residual {:e}",
        sol.multiplier,
        sol.objective,
        sol.radius_curve.last().copied().unwrap_or(0.0),
        sol.feasibility_residual
    );
    Ok(())
}

fn experiment(which: Experiment) -> Outcome {
    match which {
        Experiment::Talenti { samples, cfg, out } => {
            if let Some(p) = &out {
                writable(p)?;
            }
            let cfg = cfg.resolve()?;
            if samples == 0 {
                return Err(Failure::usage("--samples must be at least 1"));
            }
            let rep = with_thread_cap(|| run_talenti(&cfg, samples))??;
            emit(&to_canonical_json(&rep)?, out.as_deref())?;
            eprintln!(
                "Talenti: {samples} samples at (n_t, n_r) = ({}, {}), worst margin {:e}, tolerance {:e}",
                cfg.n_t, cfg.n_r, rep.worst_margin, rep.tolerance
            );
            if !rep.holds {
                return Err(Failure::contract("Talenti margin exceeds tolerance"));
            }
            Ok(())
        }
        Experiment::Counterexample { cfg, out, profiles_dir } => {
            if let Some(p) = &out {
                writable(p)?;
            }
            if let Some(d) = &profiles_dir {
                if d.exists() && !d.is_dir() {
                    return Err(Failure::usage(format!("{} is not a directory", d.display())));
                }
            }
            let cfg = cfg.resolve()?;
            let run = with_thread_cap(|| run_counterexample_full(&cfg))??;
            let r = &run.report;
            let json = to_canonical_json(r)?;
            if let Some(d) = &profiles_dir {
                write_profiles(&run, d)?;
            }
            emit(&json, out.as_deref())?;
            eprintln!(
                "c_phi = {:e}, c_psi = {:e}; r_phi(T-) = {}, r_psi(T-) = {}; control distance {:e}; margins {:e} / {:e}; duality gap {:e}",
                r.c_phi, r.c_psi, r.r_phi_terminal, r.r_psi_terminal, r.control_distance, r.phi_margin, r.psi_margin, r.duality_gap
            );
            if !r.checks.all() {
                return Err(Failure::contract(format!("counterexample checks failed: {:?}", r.checks)));
            }
            Ok(())
        }
        Experiment::Sweep { cfg, random, out } => {
            if let Some(p) = &out {
                writable(p)?;
            }
            let cfg = cfg.resolve()?;
            let rep = with_thread_cap(|| run_sweep(&cfg, random))??;
            emit(&to_canonical_json(&rep)?, out.as_deref())?;
            for c in &rep.candidates {
                eprintln!("{}: {} witness(es) against maximality", c.candidate, c.failures.len());
            }
            if !rep.all_falsified() {
                return Err(Failure::contract("a candidate survived the sweep"));
            }
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Rearrange { input, output } => {
            writable(&output)?;
            let text = match load(&input)? {
                Loaded::Radial(f, h) => io::radial_to_text(&f.schwarz_rearrange()?, h.horizon, h.kind),
                Loaded::SpaceTime(f) => io::field_to_text(&f.schwarz_rearrange()?),
            };
            write(&output, text.as_bytes())
        }
        Command::Compare { f, g, tol } => compare(&f, &g, tol),
        Command::Solve { source, scheme, out } => {
            writable(&out)?;
            let f = match load(&source)? {
                Loaded::SpaceTime(f) => f,
                Loaded::Radial(..) => return Err(Failure::usage("source must be a space-time field (n_t >= 1)")),
            };
            let sol = solve_heat(&f, scheme)?;
            write(&out, io::field_to_text(&sol.u).as_bytes())?;
            eprintln!("solved {} steps with {}, max |u(T)| = {:e}", f.tgrid().n_steps(), scheme.as_str(), sol.terminal().max_abs());
            Ok(())
        }
        Command::Adjoint { terminal, out, nt, horizon } => {
            writable(&out)?;
            let (phi, header) = load_terminal(&terminal)?;
            let adj = solve_adjoint(&phi, time_grid(&header, horizon, nt)?)?;
            write(&out, io::field_to_text(&adj.p).as_bytes())
        }
        Command::Optimize { terminal, volume, out, report, nt, horizon } => {
            optimize(&terminal, volume, &out, report.as_deref(), nt, horizon)
        }
        Command::Experiment(e) => experiment(e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
