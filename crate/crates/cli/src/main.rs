//! `loadcouple` command-line tool.
//!
//! Exit codes: 0 success, 2 invalid input, 3 infeasible (or a violated
//! boundary bracket), 4 iteration limit reached.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use loadcouple::analysis::{self, Dominance, ScaleGrid};
use loadcouple::linfeas::{self, Verdict};
use loadcouple::netmodel::{load_instance, save_instance};
use loadcouple::scenario::{generate, Rotation, ScenarioSpec};
use loadcouple::solver::{self, Method, SolveStatus, SolverConfig};
use loadcouple::{Error, NetworkInstance};

use output::{fmt_f64, fmt_opt, CsvOut};

const EXIT_INVALID: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_MAX_ITER: u8 = 4;

#[derive(Parser)]
#[command(name = "loadcouple", version, about = "Cell load coupling analysis for LTE network planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Fp,
    Newton,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Fp => Method::FixedPoint,
            MethodArg::Newton => Method::Newton,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a network instance from a scenario spec (TOML).
    Generate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Turn a cell after generation, `<cell_id>:<azimuth_deg>`; repeatable.
        #[arg(long, value_name = "CELL:AZIMUTH")]
        rotate: Vec<Rotation>,
    },
    /// Solve for the fixed point and its certified bounds.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "newton")]
        method: MethodArg,
        /// Residual tolerance relative to 1 + max load.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 10_000)]
        max_iter: usize,
        /// Stop once the certified interval is at most this wide.
        #[arg(long)]
        interval_width: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decide whether the instance has a nonnegative fixed point.
    Feasibility {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Solve over a grid of uniform demand scales, `start:stop:count`.
    Sweep {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        scales: ScaleGrid,
        #[arg(long, value_enum, default_value = "newton")]
        method: MethodArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Locate the largest feasible demand scale by bisection.
    Boundary {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        lo: f64,
        #[arg(long)]
        hi: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Compare two configurations of the same network.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-cell quality of the linear lower and upper bounds.
    Bounds {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = match err.downcast_ref::<Error>() {
                Some(Error::Infeasible { .. }) => EXIT_INFEASIBLE,
                _ => EXIT_INVALID,
            };
            ExitCode::from(code)
        }
    }
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Generate { spec, out, rotate } => cmd_generate(&spec, &out, &rotate),
        Command::Solve {
            instance,
            method,
            tol,
            max_iter,
            interval_width,
            out,
        } => {
            if tol.is_nan() || tol <= 0.0 {
                anyhow::bail!("--tol must be positive");
            }
            if interval_width.is_some_and(|w| w.is_nan() || w <= 0.0) {
                anyhow::bail!("--interval-width must be positive");
            }
            let config = SolverConfig {
                method: method.into(),
                tol_residual: tol,
                max_iter,
                max_interval_width: interval_width,
                ..SolverConfig::default()
            };
            cmd_solve(&load(&instance)?, &config, &out)
        }
        Command::Feasibility { instance } => cmd_feasibility(&load(&instance)?),
        Command::Sweep {
            instance,
            scales,
            method,
            out,
        } => cmd_sweep(&load(&instance)?, &scales.0, method.into(), &out),
        Command::Boundary { instance, lo, hi, tol } => cmd_boundary(&load(&instance)?, lo, hi, tol),
        Command::Compare { a, b, out } => cmd_compare(&load(&a)?, &load(&b)?, &out),
        Command::Bounds { instance, out } => cmd_bounds(&load(&instance)?, &out),
    }
}

fn load(path: &Path) -> Result<NetworkInstance> {
    let inst = load_instance(path)?;
    inst.ensure_valid()?;
    Ok(inst)
}

fn cmd_generate(spec_path: &Path, out: &Path, rotations: &[Rotation]) -> Result<u8> {
    let text = std::fs::read_to_string(spec_path)
        .with_context(|| format!("reading scenario spec {}", spec_path.display()))?;
    let spec = ScenarioSpec::from_toml_str(&text)?;
    let mut inst = generate(&spec)?;
    for r in rotations {
        inst = r.apply(&inst)?;
    }
    save_instance(&inst, out)?;
    println!(
        "wrote {} cells, {} pixels to {}",
        inst.n_cells(),
        inst.n_pixels(),
        out.display()
    );
    Ok(0)
}

fn cmd_solve(inst: &NetworkInstance, config: &SolverConfig, out: &Path) -> Result<u8> {
    let rep = solver::solve(inst, config)?;
    let mut csv = CsvOut::create(out)?;
    csv.row(["cell_id", "rho_star", "rho_lower", "rho_upper", "residual", "status", "iterations"])?;
    let status = rep.status.as_str();
    let iterations = rep.iterations.to_string();
    if rep.status == SolveStatus::Infeasible {
        for i in 0..inst.n_cells() {
            csv.row([&(i + 1).to_string(), "n/a", "n/a", "n/a", "n/a", status, &iterations])?;
        }
        csv.finish()?;
        eprintln!(
            "infeasible: h0 system {} (spectral radius {})",
            rep.h0.status.as_str(),
            fmt_f64(rep.h0.spectral_radius)
        );
        return Ok(EXIT_INFEASIBLE);
    }
    let star = rep.fixed_point.as_ref().or(rep.iterate.as_ref());
    let residual = fmt_f64(rep.residual);
    for i in 0..inst.n_cells() {
        csv.row([
            &(i + 1).to_string(),
            &fmt_opt(star.map(|v| v[i])),
            &fmt_opt(rep.interval_lower.as_ref().map(|v| v[i])),
            &fmt_opt(rep.upper.as_ref().map(|v| v[i])),
            &residual,
            status,
            &iterations,
        ])?;
    }
    csv.finish()?;
    println!("{status} after {} iterations, residual {residual}", rep.iterations);
    Ok(match rep.status {
        SolveStatus::MaxIterExceeded => EXIT_MAX_ITER,
        _ => 0,
    })
}

fn cmd_feasibility(inst: &NetworkInstance) -> Result<u8> {
    let rep = linfeas::feasibility_check(inst)?;
    println!("{}", rep.verdict.as_str());
    println!("spectral_radius {}", fmt_f64(rep.outcome.spectral_radius));
    println!("linear_status {}", rep.outcome.status.as_str());
    if let Some(lower) = rep.lower_bound() {
        for (i, v) in lower.iter().enumerate() {
            println!("rho_lower {} {}", i + 1, fmt_f64(*v));
        }
    }
    Ok(match rep.verdict {
        Verdict::Feasible => 0,
        Verdict::Infeasible => EXIT_INFEASIBLE,
    })
}

/// Worker threads for the sweep: `LOADCOUPLE_THREADS`, else all cores.
fn sweep_threads() -> Result<usize> {
    match std::env::var("LOADCOUPLE_THREADS") {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|n| *n > 0)
                .with_context(|| format!("LOADCOUPLE_THREADS must be a positive integer, got `{v}`"))?;
            Ok(n)
        }
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn cmd_sweep(inst: &NetworkInstance, scales: &[f64], method: Method, out: &Path) -> Result<u8> {
    let config = SolverConfig {
        method,
        ..SolverConfig::default()
    };
    let threads = sweep_threads()?;
    let table = if threads == 1 {
        analysis::demand_sweep(inst, scales, &config)?
    } else {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
        pool.install(|| analysis::demand_sweep_parallel(inst, scales, &config))?
    };
    let n = table.n_cells;
    let mut csv = CsvOut::create(out)?;
    let mut header = vec!["scale".to_string(), "verdict".into(), "spectral_radius".into(), "status".into()];
    header.extend((1..=n).map(|i| format!("rho_star_{i}")));
    header.extend((1..=n).map(|i| format!("rho_lower_{i}")));
    csv.row(&header)?;
    for row in &table.rows {
        let mut rec = vec![
            fmt_f64(row.scale),
            row.verdict.as_str().to_string(),
            fmt_f64(row.spectral_radius),
            row.status.as_str().to_string(),
        ];
        for vec in [&row.rho_star, &row.rho_lower] {
            rec.extend((0..n).map(|i| fmt_opt(vec.as_ref().map(|v| v[i]))));
        }
        csv.row(&rec)?;
    }
    csv.finish()?;
    match table.last_feasible() {
        Some(s) => println!("last feasible scale {}", fmt_f64(s)),
        None => println!("no feasible scale in grid"),
    }
    Ok(0)
}

fn cmd_boundary(inst: &NetworkInstance, lo: f64, hi: f64, tol: f64) -> Result<u8> {
    let rep = match analysis::feasibility_boundary(inst, lo, hi, tol) {
        Ok(rep) => rep,
        Err(Error::Precondition(msg)) => {
            eprintln!("error: {msg}");
            return Ok(EXIT_INFEASIBLE);
        }
        Err(e) => return Err(e.into()),
    };
    println!("scale {}", fmt_f64(rep.scale));
    println!("last_feasible {}", fmt_f64(rep.last_feasible));
    println!("first_infeasible {}", fmt_f64(rep.first_infeasible));
    println!("spectral_radius {}", fmt_f64(rep.spectral_radius));
    println!("steps {}", rep.steps);
    Ok(0)
}

fn cmd_compare(a: &NetworkInstance, b: &NetworkInstance, out: &Path) -> Result<u8> {
    let cmp = analysis::compare_configs(a, b)?;
    let mut csv = CsvOut::create(out)?;
    csv.row([
        "cell_id",
        "rho_star_a",
        "rho_star_b",
        "rho_lower_a",
        "rho_lower_b",
        "rho_upper_a",
        "rho_upper_b",
    ])?;
    let at = |v: &Option<loadcouple::LoadVector>, i: usize| fmt_opt(v.as_ref().map(|x| x[i]));
    let (ra, rb) = (&cmp.a.report, &cmp.b.report);
    for i in 0..a.n_cells() {
        csv.row([
            &(i + 1).to_string(),
            &at(&ra.fixed_point, i),
            &at(&rb.fixed_point, i),
            &at(&ra.lower, i),
            &at(&rb.lower, i),
            &at(&ra.upper, i),
            &at(&rb.upper, i),
        ])?;
    }
    csv.finish()?;
    println!("boundary_scale_a {}", fmt_opt(cmp.a.boundary_scale));
    println!("boundary_scale_b {}", fmt_opt(cmp.b.boundary_scale));
    for ((s, la), lb) in cmp.common_scales.iter().zip(&cmp.max_load_a).zip(&cmp.max_load_b) {
        println!("max_load {} {} {}", fmt_f64(*s), fmt_f64(*la), fmt_f64(*lb));
    }
    println!("verdict {}", cmp.verdict.as_str());
    if cmp.verdict == Dominance::Incomparable {
        println!("neither configuration dominates");
    }
    Ok(0)
}

fn cmd_bounds(inst: &NetworkInstance, out: &Path) -> Result<u8> {
    let gaps = analysis::bound_quality(inst)?;
    let mut csv = CsvOut::create(out)?;
    csv.row([
        "cell_id",
        "rho_star",
        "rho_lower",
        "rho_upper",
        "lower_gap_pct",
        "upper_gap_pct",
    ])?;
    for g in &gaps {
        csv.row([
            &(g.cell + 1).to_string(),
            &fmt_f64(g.rho_star),
            &fmt_f64(g.rho_lower),
            &fmt_opt(g.rho_upper),
            &fmt_f64(g.lower_gap_pct),
            &fmt_opt(g.upper_gap_pct),
        ])?;
    }
    csv.finish()?;
    Ok(0)
}
