//! `rba`: command-line experiments for collective alignment of rigid bodies.
//!
//! Exit codes: 0 success, 2 usage error, 3 numerical-domain error,
//! 4 non-convergence, 1 anything else (IO).

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rba::parallel::{pool, thread_count};
use rba::report::{self, BgkPreset};
use rba::sweep::{records_table, run_sweep, SweepSpec};
use rba::table::{num, Table};
use rba::Rayon;
use rba_core::equilibrium::find_thresholds;
use rba_core::particles::{run_with, InitMode, Scheme, SimConfig};
use rba_core::von_mises::MomentQuadrature;
use rba_core::{Mat3, Rotation};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "rba", version, about = "Collective alignment of rigid bodies on SO(3)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Order parameter time series `t,c,flux_norm` of one particle run.
    Simulate(SimulateArgs),
    /// Final order parameters over a grid of densities and initial orders.
    Sweep(SweepArgs),
    /// The thresholds alpha*, rho*, c* and rho_c.
    Thresholds(OutputArgs),
    /// Order parameter of each steady-state branch against rho.
    Branches(BranchesArgs),
    /// Diagonal BGK flux flow `t,d1,d2,d3,V` and its limit.
    Bgk(BgkArgs),
    /// Steady states at one density with Hessian signatures.
    Classify(ClassifyArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, Debug)]
struct Init(InitMode);

fn parse_init(s: &str) -> Result<Init, String> {
    match s {
        "aligned" => Ok(Init(InitMode::Aligned(Rotation::IDENTITY))),
        "uniform" => Ok(Init(InitMode::Uniform)),
        _ => match s.strip_prefix("vmc:") {
            Some(c) => c.parse().map(|c| Init(InitMode::VonMisesTargetC(c))).map_err(|e| format!("{e}")),
            None => Err("expected aligned, uniform or vmc:<c>".into()),
        },
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    Lie,
    Naive,
}

#[derive(Args)]
struct SimArgs {
    /// Number of particles.
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 0.04)]
    dt: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Steps between projections back onto SO(3).
    #[arg(long, default_value_t = 100)]
    renorm_every: usize,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    rho: f64,
    /// aligned, uniform or vmc:<c>.
    #[arg(long, default_value = "aligned", value_parser = parse_init)]
    init: Init,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    #[arg(long, value_enum, default_value_t = SchemeArg::Lie)]
    scheme: SchemeArg,
    #[command(flatten)]
    sim: SimArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated densities; the default grid is dense on [4, 7].
    #[arg(long, value_delimiter = ',')]
    rho: Vec<f64>,
    /// Comma-separated initial orders: 0 uniform, 1 aligned, else von Mises.
    #[arg(long, value_delimiter = ',')]
    c_init: Vec<f64>,
    #[arg(long, default_value_t = 4)]
    replicates: usize,
    #[arg(long, default_value_t = rba::sweep::SWEEP_STEPS)]
    steps: usize,
    #[command(flatten)]
    sim: SimArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct BranchesArgs {
    /// Comma-separated densities; overrides the log-spaced grid.
    #[arg(long, value_delimiter = ',')]
    rho: Vec<f64>,
    #[arg(long, default_value_t = 2.0)]
    rho_min: f64,
    #[arg(long, default_value_t = 40.0)]
    rho_max: f64,
    #[arg(long, default_value_t = 100)]
    points: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, Debug)]
enum BgkInit {
    Preset(BgkPreset),
    Matrix(Mat3),
}

fn parse_bgk_init(s: &str) -> Result<BgkInit, String> {
    if let Ok(p) = s.parse() {
        return Ok(BgkInit::Preset(p));
    }
    let v: Vec<f64> = s.split(',').map(|x| x.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| {
        format!("expected random, rotation, rank1, small or 9 comma-separated reals ({e})")
    })?;
    let m: [f64; 9] = v.try_into().map_err(|_| "expected 9 comma-separated reals".to_string())?;
    Ok(BgkInit::Matrix(Mat3::from_row_major(m)))
}

#[derive(Args)]
struct BgkArgs {
    #[arg(long)]
    rho: f64,
    /// random, rotation, rank1, small, or 9 comma-separated reals (row-major).
    #[arg(long, default_value = "random", value_parser = parse_bgk_init)]
    init: BgkInit,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 500.0)]
    t_max: f64,
    /// Classification JSON in CSV mode; standard error when absent.
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    rho: f64,
    #[command(flatten)]
    output: OutputArgs,
}

fn sink(path: &Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(mut w: impl Write, value: &T) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn emit<T: Serialize>(output: &OutputArgs, default: Format, table: impl FnOnce() -> Table, value: &T) -> anyhow::Result<()> {
    let w = sink(&output.out)?;
    match output.format.unwrap_or(default) {
        Format::Csv => Ok(table().write_to(w)?),
        Format::Json => write_json(w, value),
    }
}

#[derive(Serialize)]
struct SimulateJson<'a> {
    rho: f64,
    n: usize,
    dt: f64,
    steps: usize,
    seed: u64,
    times: &'a [f64],
    c: &'a [f64],
    flux_norm: &'a [f64],
}

fn simulate(a: SimulateArgs) -> anyhow::Result<()> {
    let cfg = SimConfig {
        n_particles: a.sim.n,
        rho: a.rho,
        dt: a.sim.dt,
        n_steps: a.steps,
        seed: a.sim.seed,
        init: a.init.0,
        renorm_every: a.sim.renorm_every,
    };
    let scheme = match a.scheme {
        SchemeArg::Lie => Scheme::Lie,
        SchemeArg::Naive => Scheme::Naive,
    };
    let ts = pool(thread_count()?)?.install(|| run_with(&cfg, scheme, &Rayon))?;
    let table = || {
        let mut t = Table::new(&["t", "c", "flux_norm"]);
        for i in 0..ts.times.len() {
            t.push(vec![num(ts.times[i]), num(ts.c_values[i]), num(ts.flux_norms[i])]);
        }
        t
    };
    let json = SimulateJson {
        rho: cfg.rho,
        n: cfg.n_particles,
        dt: cfg.dt,
        steps: cfg.n_steps,
        seed: cfg.seed,
        times: &ts.times,
        c: &ts.c_values,
        flux_norm: &ts.flux_norms,
    };
    emit(&a.output, Format::Csv, table, &json)
}

fn sweep(a: SweepArgs) -> anyhow::Result<()> {
    let mut spec = SweepSpec::default_grid();
    if !a.rho.is_empty() {
        spec.rho_values = a.rho;
    }
    if !a.c_init.is_empty() {
        spec.c_init_values = a.c_init;
    }
    spec.replicates = a.replicates;
    spec.sim.n_particles = a.sim.n;
    spec.sim.dt = a.sim.dt;
    spec.sim.n_steps = a.steps;
    spec.sim.renorm_every = a.sim.renorm_every;
    if let Err(e) = spec.validate() {
        return Err(rba_core::Error::InvalidInput("sweep grid")).context(e.to_string());
    }
    let records = run_sweep(&spec, a.sim.seed, thread_count()?)?;
    emit(&a.output, Format::Csv, || records_table(&records), &records)
}

fn thresholds(output: OutputArgs) -> anyhow::Result<()> {
    let r = report::thresholds()?;
    let table = || {
        let mut t = Table::new(&["alpha_star", "rho_star", "c_star", "rho_c"]);
        t.push(vec![num(r.alpha_star), num(r.rho_star), num(r.c_star), num(r.rho_c)]);
        t
    };
    emit(&output, Format::Json, table, &r)
}

fn branches(a: BranchesArgs) -> anyhow::Result<()> {
    let rhos = if a.rho.is_empty() { report::log_space(a.rho_min, a.rho_max, a.points) } else { a.rho };
    if let Some(&bad) = rhos.iter().find(|&&r| !(r > 0.0 && r.is_finite())) {
        return Err(rba_core::Error::Domain { what: "rho", value: bad, domain: "(0, ∞)" }.into());
    }
    let rows = report::branch_rows(&find_thresholds()?, &rhos);
    emit(&a.output, Format::Csv, || report::branch_table(&rows), &rows)
}

#[derive(Serialize)]
struct BgkJson<'a> {
    report: &'a report::BgkReport,
    times: &'a [f64],
    d: Vec<[f64; 3]>,
    v: &'a [f64],
}

/// Returns whether the flow converged.
fn bgk(a: BgkArgs) -> anyhow::Result<bool> {
    let j0 = match a.init {
        BgkInit::Preset(p) => p.matrix(a.seed),
        BgkInit::Matrix(m) => m,
    };
    let (rep, tr) = report::bgk(&find_thresholds()?, &MomentQuadrature::new(), a.rho, &j0, a.t_max)?;
    match a.output.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            report::trajectory_table(&tr).write_to(sink(&a.output.out)?)?;
            match &a.report {
                Some(p) => write_json(BufWriter::new(File::create(p)?), &rep)?,
                None => write_json(io::stderr().lock(), &rep)?,
            }
        }
        Format::Json => {
            let d = tr.d_values.iter().map(|d| d.to_array()).collect();
            write_json(sink(&a.output.out)?, &BgkJson { report: &rep, times: &tr.times, d, v: &tr.v_values })?;
        }
    }
    Ok(rep.converged())
}

fn classify(a: ClassifyArgs) -> anyhow::Result<()> {
    let rows = report::classify(&find_thresholds()?, a.rho)?;
    emit(&a.output, Format::Csv, || report::class_table(&rows), &rows)
}

fn exit_code(e: &anyhow::Error) -> u8 {
    use rba_core::Error as E;
    match e.downcast_ref::<E>() {
        Some(E::InvalidInput(_)) => 2,
        Some(E::Domain { .. } | E::OutOfRange { .. } | E::Envelope { .. } | E::EmptyEnsemble) => 3,
        Some(E::NonConverged(_) | E::Fit(_)) => 4,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a).map(|_| true),
        Command::Sweep(a) => sweep(a).map(|_| true),
        Command::Thresholds(a) => thresholds(a).map(|_| true),
        Command::Branches(a) => branches(a).map(|_| true),
        Command::Bgk(a) => bgk(a),
        Command::Classify(a) => classify(a).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("rba: flow did not converge before --t-max");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("rba: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
