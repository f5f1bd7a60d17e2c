//! Command-line front end.
//!
//! Exit codes: 0 success, 1 failed run or failed check, 2 configuration or
//! unsupported case, 3 convergence failure in strict mode.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{validate_eps, RunConfig};
use crate::error::{Error, Result};
use crate::liouville::{gram_matrix, mass, LiouvilleProfile};
use crate::model::{Rational, ADMISSIBLE_PAIRS};
use crate::report::{write_columns, write_fields, write_json, write_trajectory, ReportEnvelope};
use crate::solver::{radial_shoot, solve_mixed, MixedContext, MixedProblem};
use crate::topological::solve_with_options;
use crate::{grid, verify};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_STRICT: i32 = 3;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "CSVORTEX_THREADS";

#[derive(Debug, Parser)]
#[command(name = "csvortex", version, about = "Mixed-type vortices of the rank-two self-dual Chern-Simons system")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output prefix; overrides the configuration.
    #[arg(long)]
    pub out: Option<String>,
    /// Fail hard on unsupported cases and convergence failures.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the U(1) problem for the first vortex set.
    SolveTopological(Common),
    /// Solve the mixed problem for each eps.
    SolveMixed {
        #[command(flatten)]
        common: Common,
        /// Comma-separated, strictly decreasing eps values.
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
    },
    /// Shoot the radial system from `u_j = 2 N_j ln r + s_j`.
    ShootRadial {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        s1: f64,
        #[arg(long, allow_hyphen_values = true)]
        s2: f64,
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Write the approximate solution on the x-grid.
    DumpApprox {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        eps: f64,
        /// Real and imaginary part of alpha.
        #[arg(long, value_delimiter = ',', num_args = 2, allow_hyphen_values = true)]
        alpha: Option<Vec<f64>>,
    },
    /// Print masses and Gram entries of the Liouville profiles.
    LiouvilleTable,
    /// Run the property checks and print a pass/fail table.
    Verify {
        /// Skip the two-dimensional ladders.
        #[arg(long)]
        quick: bool,
    },
}

/// Maps an error to its exit code.
pub fn exit_code(e: &Error, strict: bool) -> i32 {
    match e {
        Error::Config(_)
        | Error::Unsupported(_)
        | Error::InvalidParameter(_)
        | Error::UnknownGroup(_)
        | Error::UnknownOrientation(_)
        | Error::Json(_) => EXIT_CONFIG,
        _ if strict => EXIT_STRICT,
        _ => EXIT_FAILED,
    }
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(o) = &common.out {
        cfg.out = o.clone();
    }
    cfg.strict |= common.strict;
    cfg.validate()?;
    Ok(cfg)
}

fn path(prefix: &str, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{prefix}{suffix}"))
}

fn ensure_parent(p: &Path) -> Result<()> {
    if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(())
}

/// Thread pool honoring the environment cap.
fn pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::Config(format!("{THREADS_ENV}={v} is not a positive integer")))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::Config(format!("thread pool: {e}")))
}

#[derive(Serialize)]
struct TopoSummary<'a> {
    command: &'a str,
    config_hash: String,
    version: &'a str,
    n1: usize,
    flux: f64,
    max_u: f64,
    decay_rate: f64,
    residual_history: &'a [f64],
    grid_hash: String,
}

fn solve_topological_cmd(common: &Common) -> Result<i32> {
    let cfg = load(common)?;
    let model = cfg.model.build()?;
    let s = cfg.solver_options();
    let sol = solve_with_options(&model.p_points, &s.topo, s.radial_fast_path)?;
    let summary = TopoSummary {
        command: "solve-topological",
        config_hash: cfg.hash()?,
        version: env!("CARGO_PKG_VERSION"),
        n1: sol.n1(),
        flux: sol.flux,
        max_u: sol.max_u(),
        decay_rate: sol.decay_fit()?,
        residual_history: &sol.residual_history,
        grid_hash: sol.grid.hash(),
    };
    let json = path(&cfg.out, "_topological.json");
    ensure_parent(&json)?;
    write_json(&json, &summary)?;
    let pts = sol.grid.points();
    let x1: Vec<f64> = pts.iter().map(|p| p[0]).collect();
    let x2: Vec<f64> = pts.iter().map(|p| p[1]).collect();
    write_columns(&path(&cfg.out, "_topological.csv"), &["x1", "x2", "U"], &[&x1, &x2, &sol.u])?;
    println!("flux {:.9}  max U {:.3e}  decay {:.4}  -> {}", sol.flux, sol.max_u(), summary.decay_rate, json.display());
    Ok(EXIT_OK)
}

fn solve_mixed_cmd(common: &Common, eps: &Option<Vec<f64>>) -> Result<i32> {
    let mut cfg = load(common)?;
    if let Some(e) = eps {
        validate_eps(e)?;
        cfg.eps = e.clone();
    }
    let model = cfg.model.build()?;
    model.reject_excluded_case()?;
    let opts = cfg.solver_options();
    let hash = cfg.hash()?;
    let outcomes: Vec<(usize, f64, Result<_>)> = pool()?.install(|| {
        cfg.eps.par_iter().enumerate().map(|(k, &e)| (k, e, solve_mixed(&model, e, &opts))).collect()
    });
    let mut code = EXIT_OK;
    for (k, e, outcome) in outcomes {
        let stem = format!("{}_eps{k}", cfg.out);
        let json = path(&stem, ".json");
        ensure_parent(&json)?;
        match outcome {
            Ok(out) => {
                let env = ReportEnvelope {
                    command: "solve-mixed",
                    config_hash: &hash,
                    version: env!("CARGO_PKG_VERSION"),
                    status: "converged",
                    error: None,
                    report: Some(&out.report),
                };
                write_json(&json, &env)?;
                write_fields(&path(&stem, "_fields.csv"), &out.solution)?;
                let r = &out.report;
                println!(
                    "eps {e:.4e}  alpha ({:.4e}, {:.4e})  beta {:.6} (target {})  residual {:.2e}  -> {}",
                    r.alpha[0],
                    r.alpha[1],
                    r.beta,
                    r.beta_target,
                    r.collocation.max(),
                    json.display()
                );
                for w in &r.warnings {
                    eprintln!("warning (eps {e}): {w}");
                }
            }
            Err(err) => {
                let c = exit_code(&err, opts.strict);
                if c == EXIT_CONFIG {
                    return Err(err);
                }
                let env = ReportEnvelope {
                    command: "solve-mixed",
                    config_hash: &hash,
                    version: env!("CARGO_PKG_VERSION"),
                    status: "failed",
                    error: Some(err.to_string()),
                    report: None,
                };
                write_json(&json, &env)?;
                eprintln!("eps {e:.4e}: {err}");
                code = code.max(c);
            }
        }
    }
    Ok(code)
}

#[derive(Serialize)]
struct ShootSummary<'a> {
    command: &'a str,
    config_hash: String,
    s1: f64,
    s2: f64,
    classification: crate::solver::SolutionType,
    blowup_radius: Option<f64>,
    last: crate::solver::TrajectoryPoint,
}

fn shoot_cmd(common: &Common, s1: f64, s2: f64, horizon: Option<f64>) -> Result<i32> {
    let mut cfg = load(common)?;
    if let Some(h) = horizon {
        cfg.shoot.horizon = h;
    }
    let model = cfg.model.build()?;
    let st = radial_shoot(&model, s1, s2, &cfg.shoot)?;
    let csv = path(&cfg.out, "_trajectory.csv");
    ensure_parent(&csv)?;
    write_trajectory(&csv, &st.trajectory)?;
    let summary = ShootSummary {
        command: "shoot-radial",
        config_hash: cfg.hash()?,
        s1,
        s2,
        classification: st.classification,
        blowup_radius: st.blowup_radius,
        last: st.last,
    };
    write_json(&path(&cfg.out, "_shoot.json"), &summary)?;
    match st.blowup_radius {
        Some(r) => println!("{:?} (blow-up at r = {r:.6e})", st.classification),
        None => println!("{:?} at r = {:.3e}", st.classification, st.last.r),
    }
    Ok(EXIT_OK)
}

fn dump_approx_cmd(common: &Common, eps: f64, alpha: &Option<Vec<f64>>) -> Result<i32> {
    let cfg = load(common)?;
    validate_eps(&[eps])?;
    let model = cfg.model.build()?;
    if model.n1() + model.n2() == 0 {
        return Err(Error::Unsupported("no vortices: the approximate solution is the constant pair".into()));
    }
    let alpha = alpha.as_ref().map_or(Complex64::new(0.0, 0.0), |v| Complex64::new(v[0], v[1]));
    let ctx = MixedContext::new(&model, eps, &cfg.solver_options())?;
    let p = MixedProblem::new(&model, ctx.topo.clone(), ctx.grids.clone(), alpha)?;
    let pts = p.grids.x.points();
    let x1: Vec<f64> = pts.iter().map(|q| q[0]).collect();
    let x2: Vec<f64> = pts.iter().map(|q| q[1]).collect();
    let csv = path(&cfg.out, "_approx.csv");
    ensure_parent(&csv)?;
    write_columns(
        &csv,
        &["x1", "x2", "U", "phi", "V1", "V2", "W"],
        &[&x1, &x2, &p.u, &p.phi, &p.v1, &p.v2, &p.w],
    )?;
    println!("{} nodes -> {}", pts.len(), csv.display());
    Ok(EXIT_OK)
}

fn liouville_table_cmd() -> Result<i32> {
    let g = grid::DiskGrid::new(grid::RadialGrid::covering(100.0, 0.01, 1.0)?, 64)?;
    let w = grid::WeightParams::default();
    println!("{:>3} {:>3} {:>6} {:>12} {:>14} {:>12} {:>12}", "a", "b", "lambda", "alpha", "mass/8pil - 1", "a11", "a12");
    for (a, b) in ADMISSIBLE_PAIRS {
        for lam in [Rational::integer(1), Rational::new(3, 2), Rational::integer(2), Rational::integer(3)] {
            for al in [0.0, 0.2] {
                if al > 0.0 && !lam.is_integer() {
                    continue;
                }
                let alpha = Complex64::new(al, 0.0);
                let p = LiouvilleProfile::new(0.0, alpha, lam, a, b)?;
                let rel = mass(&p, &g) / (8.0 * std::f64::consts::PI * lam.to_f64()) - 1.0;
                let (a11, a12) = match gram_matrix(alpha, lam, w, &g) {
                    Ok(m) => (format!("{:.6e}", m[0][0]), format!("{:.3e}", m[0][1])),
                    Err(_) => ("-".into(), "-".into()),
                };
                println!("{a:>3} {b:>3} {:>6} {al:>12.3} {rel:>14.3e} {a11:>12} {a12:>12}", lam.to_string());
            }
        }
    }
    Ok(EXIT_OK)
}

fn verify_cmd(quick: bool) -> Result<i32> {
    let checks = verify::run_all(quick);
    for c in &checks {
        println!("{}", c.line());
        for d in &c.details {
            println!("    {d}");
        }
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} of {} checks passed", checks.len() - failed, checks.len());
    Ok(if failed == 0 { EXIT_OK } else { EXIT_FAILED })
}

/// Parses `argv` and runs the command; returns the process exit code.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let strict = match &cli.command {
        Command::SolveTopological(c) | Command::SolveMixed { common: c, .. } => c.strict,
        Command::ShootRadial { common, .. } | Command::DumpApprox { common, .. } => common.strict,
        _ => false,
    };
    let result = match &cli.command {
        Command::SolveTopological(c) => solve_topological_cmd(c),
        Command::SolveMixed { common, eps } => solve_mixed_cmd(common, eps),
        Command::ShootRadial { common, s1, s2, horizon } => shoot_cmd(common, *s1, *s2, *horizon),
        Command::DumpApprox { common, eps, alpha } => dump_approx_cmd(common, *eps, alpha),
        Command::LiouvilleTable => liouville_table_cmd(),
        Command::Verify { quick } => verify_cmd(*quick),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e, strict)
        }
    }
}
