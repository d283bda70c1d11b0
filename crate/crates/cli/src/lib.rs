//! `pdal list | check | run` over the built-in problem catalog.

use std::fmt::Write as _;
use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pdal::nlp::HessianMode;
use pdal::probset::{self, CATALOG};
use pdal::solver::{Solver, SolverSettings, Status};
use pdal::Error;
use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Relative finite-difference tolerance of `check`.
pub const CHECK_TOL: f64 = 1e-5;
const CHECK_STEP: f64 = 1e-6;
const CHECK_POINTS: u64 = 3;
const JITTER: f64 = 0.1;

#[derive(Debug, Parser)]
#[command(name = "pdal", version, about = "Primal-dual augmented Lagrangian solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the catalog names.
    List,
    /// Compare analytic derivatives against finite differences.
    Check { problem: String },
    /// Solve a catalog problem.
    Run(RunConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HessianArg {
    Exact,
    Gn,
    Id,
}

impl From<HessianArg> for HessianMode {
    fn from(h: HessianArg) -> Self {
        match h {
            HessianArg::Exact => HessianMode::Exact,
            HessianArg::Gn => HessianMode::GaussNewton,
            HessianArg::Id => HessianMode::Identity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Unset numeric flags take the solver defaults.
#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    pub problem: String,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long = "mu0")]
    pub mu_init: Option<f64>,
    #[arg(long)]
    pub mu_factor: Option<f64>,
    #[arg(long)]
    pub max_outer: Option<usize>,
    #[arg(long, value_enum, default_value = "exact")]
    pub hessian: HessianArg,
    /// Output file, `-` for standard output.
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Perturbs the catalog starting point.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn new(problem: &str) -> Self {
        Self {
            problem: problem.to_string(),
            tol: None,
            mu_init: None,
            mu_factor: None,
            max_outer: None,
            hessian: HessianArg::Exact,
            out: None,
            format: Format::Json,
            seed: None,
        }
    }

    pub fn settings(&self) -> SolverSettings<f64> {
        let d = SolverSettings::default();
        SolverSettings {
            tol_abs: self.tol.unwrap_or(d.tol_abs),
            mu_init: self.mu_init.unwrap_or(d.mu_init),
            mu_factor: self.mu_factor.unwrap_or(d.mu_factor),
            mu_min: d.mu_min.min(self.mu_init.unwrap_or(d.mu_init)),
            max_outer: self.max_outer.unwrap_or(d.max_outer),
            hessian_mode: self.hessian.into(),
            ..d
        }
    }
}

#[derive(Serialize)]
struct SettingsDoc {
    tol_abs: f64,
    mu_init: f64,
    mu_factor: f64,
    mu_min: f64,
    inner_tol_init: f64,
    inner_tol_exponent: f64,
    feas_tol_factor: f64,
    max_outer: usize,
    max_inner_total: usize,
    dual_bound: f64,
    hessian: HessianArg,
    seed: Option<u64>,
}

#[derive(Serialize)]
struct Solution {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
}

#[derive(Serialize)]
struct ResidualsDoc {
    prim: f64,
    dual: f64,
    comp: f64,
}

#[derive(Serialize)]
struct Iters {
    outer: usize,
    inner: usize,
}

#[derive(Serialize)]
struct TraceDoc {
    k: usize,
    mu: f64,
    prim: f64,
    dual: f64,
    comp: f64,
    merit: f64,
    alpha: f64,
    inner_iters: usize,
}

#[derive(Serialize)]
struct Document<'a> {
    problem: &'a str,
    status: &'static str,
    settings: SettingsDoc,
    solution: Solution,
    residuals: ResidualsDoc,
    iters: Iters,
    trace: Vec<TraceDoc>,
    time_ms: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: Status,
    /// JSON document or CSV trace, per the requested format.
    pub document: String,
    /// One-line human-readable result.
    pub summary: String,
    pub outer_iters: usize,
}

pub const CSV_HEADER: &str = "k,mu,prim,dual,comp,merit,alpha,inner_iters";

pub fn cmd_list(out: &mut impl Write) -> std::io::Result<()> {
    for name in CATALOG {
        writeln!(out, "{name}")?;
    }
    Ok(())
}

/// Derivative check at the catalog start and a few perturbed points.
/// Returns the report text and whether every entry passed.
pub fn cmd_check(problem: &str) -> Result<(String, bool), Error> {
    let p = probset::build::<f64>(problem)?;
    let mut text = String::new();
    let mut ok = true;
    let points = std::iter::once(p.x0.clone()).chain((0..CHECK_POINTS).map(|s| p.jittered_start(s, JITTER)));
    for (i, x) in points.enumerate() {
        let rep = p.problem.check_derivatives(&x, CHECK_STEP)?;
        for e in &rep.entries {
            let pass = e.max_rel_error <= CHECK_TOL;
            ok &= pass;
            let _ = writeln!(
                text,
                "point {i} {:?}: max rel error {:.3e} {}",
                e.site,
                e.max_rel_error,
                if pass { "ok" } else { "FAIL" }
            );
        }
    }
    Ok((text, ok))
}

pub fn cmd_run(cfg: &RunConfig) -> Result<RunOutcome, Error> {
    let p = probset::build::<f64>(&cfg.problem)?;
    let x0 = match cfg.seed {
        Some(s) => p.jittered_start(s, JITTER),
        None => p.x0.clone(),
    };
    let settings = cfg.settings();
    let r = Solver::new(settings.clone()).solve(&p.problem, &x0, None)?;
    let trace: Vec<TraceDoc> = r
        .trace
        .iter()
        .map(|t| TraceDoc {
            k: t.k,
            mu: t.mu,
            prim: t.prim,
            dual: t.dual,
            comp: t.comp,
            merit: t.merit,
            alpha: t.alpha,
            inner_iters: t.inner_iters,
        })
        .collect();
    let document = match cfg.format {
        Format::Json => {
            let doc = Document {
                problem: p.name,
                status: r.status.as_str(),
                settings: SettingsDoc {
                    tol_abs: settings.tol_abs,
                    mu_init: settings.mu_init,
                    mu_factor: settings.mu_factor,
                    mu_min: settings.mu_min,
                    inner_tol_init: settings.inner_tol_init,
                    inner_tol_exponent: settings.inner_tol_exponent,
                    feas_tol_factor: settings.feas_tol_factor,
                    max_outer: settings.max_outer,
                    max_inner_total: settings.max_inner_total,
                    dual_bound: settings.dual_bound,
                    hessian: cfg.hessian,
                    seed: cfg.seed,
                },
                solution: Solution {
                    x: r.x.to_vec(),
                    y: r.mult.y.to_vec(),
                    z: r.mult.z.to_vec(),
                },
                residuals: ResidualsDoc {
                    prim: r.residuals.prim,
                    dual: r.residuals.dual,
                    comp: r.residuals.comp,
                },
                iters: Iters {
                    outer: r.outer_iters,
                    inner: r.inner_iters,
                },
                trace,
                time_ms: r.time_ms,
            };
            let mut s = serde_json::to_string_pretty(&doc).expect("plain data serializes");
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut s = format!("{CSV_HEADER}\n");
            for t in &trace {
                let _ = writeln!(
                    s,
                    "{},{:e},{:e},{:e},{:e},{:e},{:e},{}",
                    t.k, t.mu, t.prim, t.dual, t.comp, t.merit, t.alpha, t.inner_iters
                );
            }
            s
        }
    };
    let summary = format!(
        "{}: {} after {} outer / {} inner iterations (prim {:.2e}, dual {:.2e}, comp {:.2e}) in {:.2} ms",
        p.name,
        r.status,
        r.outer_iters,
        r.inner_iters,
        r.residuals.prim,
        r.residuals.dual,
        r.residuals.comp,
        r.time_ms
    );
    Ok(RunOutcome {
        status: r.status,
        document,
        summary,
        outer_iters: r.outer_iters,
    })
}

fn report_error(err: &mut impl Write, e: &Error) -> i32 {
    let _ = writeln!(err, "error: {e}");
    match e {
        Error::UnknownProblem { .. } | Error::InvalidSettings(_) => EXIT_USAGE,
        _ => EXIT_FAILED,
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn execute(cli: Cli, out: &mut impl Write, err: &mut impl Write) -> i32 {
    match cli.command {
        Command::List => match cmd_list(out) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                EXIT_FAILED
            }
        },
        Command::Check { problem } => match cmd_check(&problem) {
            Ok((text, ok)) => {
                let _ = out.write_all(text.as_bytes());
                if ok {
                    EXIT_OK
                } else {
                    EXIT_FAILED
                }
            }
            Err(e) => report_error(err, &e),
        },
        Command::Run(cfg) => match cmd_run(&cfg) {
            Ok(o) => {
                let written = match cfg.out.as_deref() {
                    None | Some("-") => out.write_all(o.document.as_bytes()),
                    Some(path) => std::fs::write(path, &o.document),
                };
                if let Err(e) = written {
                    let _ = writeln!(err, "error: cannot write output: {e}");
                    return EXIT_FAILED;
                }
                let _ = writeln!(err, "{}", o.summary);
                if o.status == Status::Converged {
                    EXIT_OK
                } else {
                    EXIT_FAILED
                }
            }
            Err(e) => report_error(err, &e),
        },
    }
}
