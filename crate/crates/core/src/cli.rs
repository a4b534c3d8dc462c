//! Command-line front end: `green`, `solve`, `limit`, `sweep` and `verify`.
//!
//! Exit status: 0 on success, 1 when verification checks fail, 2 on
//! configuration or I/O errors, 3 on numerical failures.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::{sweep_grid, ConfigError, LoadedConfig, RunConfig, DEFAULT_CONFIG};
use crate::error::Error;
use crate::field::FieldEvaluator;
use crate::lab::{continuation_check, epsilon_sweep, farfield_constant_2d, fit_log_slope};
use crate::solver::{adjoint_density, limit_constant, limit_datum, solve_density, solve_limit};
use crate::verify::{run_all, DEFAULT_SEED};
use crate::Point;

pub const EXIT_OK: u8 = 0;
pub const EXIT_CHECKS_FAILED: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "holelab", version, about = "Periodic small-hole Dirichlet problem: solver and verification runs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML configuration; the bundled default is used when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for CSV artifacts.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Seed for the randomized checks of `verify`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Also write the verification summary as JSON.
    #[arg(long, global = true)]
    pub json_summary: bool,
}

#[derive(Debug, Clone, Copy, Subcommand, PartialEq, Eq)]
pub enum Command {
    /// Tabulate S_q, R_q and their gradients.
    Green,
    /// Solve at `solve.eps` and evaluate the field at the probes.
    Solve,
    /// Limiting system, adjoint density and the limiting constant by three routes.
    Limit,
    /// Sweep over eps and fit u against log eps at each probe.
    Sweep,
    /// Run the acceptance suite.
    Verify,
}

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) | Failure::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(format!("numerical failure: {e}"))
        } else {
            Failure::Config(format!("invalid input: {e}"))
        }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Config(format!("cannot write {}: {e}", path.display()))
}

fn num(v: f64) -> Result<String, Failure> {
    if v.is_finite() {
        // no negative zeros in output
        Ok(format!("{:.16e}", v + 0.0))
    } else {
        Err(Failure::Numerical(format!("non-finite value {v} in output")))
    }
}

/// Writes a CSV file atomically (temporary file in the same directory, then rename).
fn write_csv(dir: &Path, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf, Failure> {
    let path = dir.join(name);
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_failure(&path, e))?;
    {
        let mut w = csv::Writer::from_writer(tmp.as_file());
        w.write_record(header).map_err(|e| io_failure(&path, e))?;
        for r in rows {
            w.write_record(r).map_err(|e| io_failure(&path, e))?;
        }
        w.flush().map_err(|e| io_failure(&path, e))?;
    }
    tmp.persist(&path).map_err(|e| io_failure(&path, e))?;
    Ok(path)
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf, Failure> {
    let path = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_failure(&path, e))?;
    tmp.write_all(text.as_bytes()).map_err(|e| io_failure(&path, e))?;
    tmp.persist(&path).map_err(|e| io_failure(&path, e))?;
    Ok(path)
}

fn key_values(pairs: &[(&str, f64)]) -> Result<Vec<Vec<String>>, Failure> {
    pairs.iter().map(|(k, v)| Ok(vec![k.to_string(), num(*v)?])).collect()
}

fn load(cli: &Cli) -> Result<LoadedConfig, Failure> {
    let raw = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::parse(DEFAULT_CONFIG)?,
    };
    Ok(raw.validate()?)
}

fn require_probes(cfg: &LoadedConfig) -> Result<Vec<Point>, Failure> {
    let p = cfg.raw.probes();
    if p.is_empty() {
        return Err(Failure::Config("config error at `probes.points`: at least one probe is required".into()));
    }
    Ok(p)
}

/// Result of a successful run.
#[derive(Debug, Default)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
    pub checks_passed: bool,
}

pub fn run(cli: &Cli) -> Result<Report, Failure> {
    let cfg = load(cli)?;
    std::fs::create_dir_all(&cli.out).map_err(|e| io_failure(&cli.out, e))?;
    let mut report = Report { checks_passed: true, ..Default::default() };
    match cli.command {
        Command::Green => green(&cfg, &cli.out, &mut report)?,
        Command::Solve => solve(&cfg, &cli.out, &mut report)?,
        Command::Limit => limit(&cfg, &cli.out, &mut report)?,
        Command::Sweep => sweep(&cfg, &cli.out, &mut report)?,
        Command::Verify => {
            let seed = cli.seed.or(cfg.raw.verify.as_ref().and_then(|v| v.seed)).unwrap_or(DEFAULT_SEED);
            verify(seed, cli.json_summary, &cli.out, &mut report)?
        }
    }
    Ok(report)
}

fn green(cfg: &LoadedConfig, out: &Path, report: &mut Report) -> Result<(), Failure> {
    let lat = cfg.problem.lattice();
    let section = cfg.raw.green.clone().unwrap_or(crate::config::GreenSection { grid: Some(8), points: None });
    let mut points: Vec<Point> = section.points.unwrap_or_default();
    if let Some(m) = section.grid {
        let q = lat.q();
        for i in 0..m {
            for j in 0..m {
                points.push([(i as f64 + 0.5) * q[0] / m as f64, (j as f64 + 0.5) * q[1] / m as f64]);
            }
        }
    }
    let mut rows = Vec::with_capacity(points.len());
    for x in points {
        let s = lat.green(x)?;
        let r = lat.remainder(x)?;
        rows.push(
            [x[0], x[1], s.value, s.gradient[0], s.gradient[1], r.value, r.gradient[0], r.gradient[1]]
                .into_iter()
                .map(num)
                .collect::<Result<Vec<_>, _>>()?,
        );
    }
    report.lines.push(format!("tabulated S_q and R_q at {} points", rows.len()));
    report.files.push(write_csv(out, "green.csv", &["x1", "x2", "sq", "sq_dx1", "sq_dx2", "rq", "rq_dx1", "rq_dx2"], &rows)?);
    Ok(())
}

fn solve(cfg: &LoadedConfig, out: &Path, report: &mut Report) -> Result<(), Failure> {
    let eps = cfg
        .raw
        .solve
        .as_ref()
        .map(|s| s.eps)
        .ok_or_else(|| Failure::Config("config error at `solve.eps`: missing".into()))?;
    if !(eps > 0.0) {
        return Err(Failure::Config(format!("config error at `solve.eps`: u is defined for eps > 0, got {eps}")));
    }
    let probes = require_probes(cfg)?;
    let data = cfg.problem.with_eps(eps)?;
    let sol = solve_density(&data)?;
    let ev = FieldEvaluator::new(&data, &sol)?;
    let mut rows = Vec::new();
    for s in ev.sample_many(&probes)? {
        let p = s.parts;
        let u = s.u.ok_or_else(|| Failure::Numerical("u undefined".into()))?;
        rows.push(
            [s.point[0], s.point[1], u, s.ufrak, p.double_layer, p.constant, p.newton, p.corrector, p.log]
                .into_iter()
                .map(num)
                .collect::<Result<Vec<_>, _>>()?,
        );
    }
    report.files.push(write_csv(
        out,
        "field.csv",
        &["x1", "x2", "u", "ufrak", "dl_term", "c_term", "newton_term", "corrector_term", "log_term"],
        &rows,
    )?);
    report.files.push(write_density(out, "density.csv", &sol.theta, None, None)?);
    let summary = [("eps", eps), ("c_sharp", sol.constant), ("theta_inf_norm", sol.max_abs()), ("condition", sol.condition)];
    report.files.push(write_csv(out, "solve_summary.csv", &["quantity", "value"], &key_values(&summary)?)?);
    report.lines.push(format!("eps = {eps:e}: c# = {:.12e}, condition {:.3e}", sol.constant, sol.condition));
    Ok(())
}

fn write_density(out: &Path, name: &str, theta: &[f64], tau: Option<&[f64]>, gs: Option<&[f64]>) -> Result<PathBuf, Failure> {
    let n = theta.len();
    let mut header = vec!["j", "t", "theta"];
    if tau.is_some() {
        header.push("tau");
    }
    if gs.is_some() {
        header.push("g_sharp");
    }
    let mut rows = Vec::with_capacity(n);
    for j in 0..n {
        let mut r = vec![j.to_string(), num(2.0 * std::f64::consts::PI * j as f64 / n as f64)?, num(theta[j])?];
        if let Some(t) = tau {
            r.push(num(t[j])?);
        }
        if let Some(g) = gs {
            r.push(num(g[j])?);
        }
        rows.push(r);
    }
    write_csv(out, name, &header, &rows)
}

fn limit(cfg: &LoadedConfig, out: &Path, report: &mut Report) -> Result<(), Failure> {
    let data = &cfg.problem;
    let sol = solve_limit(data)?;
    let tau = adjoint_density(data.shape(), data.n())?;
    let gs = limit_datum(data)?;
    let adj = limit_constant(data)?;
    let far = farfield_constant_2d(data.shape(), &sol)?;
    report.files.push(write_density(out, "limit_density.csv", &sol.theta, Some(&tau.theta), Some(&gs))?);
    let mut summary = vec![
        ("c_limit_system", sol.constant),
        ("c_adjoint", adj),
        ("c_far_field", far.estimate),
        ("condition", sol.condition),
    ];
    if let Some(c) = &cfg.raw.continuation {
        let rep = continuation_check(data, &c.eps_grid)?;
        summary.push(("c_extrapolated", rep.c_extrapolated));
        summary.push(("theta_extrapolation_error", rep.theta_error()));
        summary.push(("continuation_fit_residual", rep.fit_residual));
        if !rep.smooth() {
            report.lines.push(format!("warning: continuation fit residual {:.3e} exceeds 1e-6", rep.fit_residual));
        }
    }
    report.files.push(write_csv(out, "limit_summary.csv", &["quantity", "value"], &key_values(&summary)?)?);
    let probes = cfg.raw.probes();
    if !probes.is_empty() {
        let ev = FieldEvaluator::new(data, &sol)?;
        let rows = probes
            .iter()
            .map(|&x| Ok(vec![num(x[0])?, num(x[1])?, num(ev.eval_ufrak(x)?)?]))
            .collect::<Result<Vec<_>, Failure>>()?;
        report.files.push(write_csv(out, "limit_field.csv", &["x1", "x2", "ufrak"], &rows)?);
    }
    report.lines.push(format!("c~# = {:.12e} (limit system), {:.12e} (adjoint), {:.12e} (far field)", sol.constant, adj, far.estimate));
    Ok(())
}

fn sweep(cfg: &LoadedConfig, out: &Path, report: &mut Report) -> Result<(), Failure> {
    let section = cfg
        .raw
        .sweep
        .as_ref()
        .ok_or_else(|| Failure::Config("config error at `sweep`: missing section".into()))?;
    let grid = sweep_grid(section)?;
    let probes = require_probes(cfg)?;
    let rep = epsilon_sweep(&cfg.problem, &grid, &probes)?;
    let mut rows = Vec::new();
    for e in &rep.entries {
        for (i, s) in e.samples.iter().enumerate() {
            let u = s.u.ok_or_else(|| Failure::Numerical("u undefined".into()))?;
            rows.push(vec![num(e.eps)?, num(e.c_sharp)?, num(e.theta_inf_norm)?, i.to_string(), num(u)?, num(s.ufrak)?]);
        }
    }
    report.files.push(write_csv(out, "sweep.csv", &["eps", "c_sharp", "theta_inf_norm", "probe_id", "u", "ufrak"], &rows)?);
    let mut fits = Vec::new();
    for i in 0..probes.len() {
        let f = fit_log_slope(&rep, i)?;
        report.lines.push(format!("probe {i}: slope {:.10e}, intercept {:.10e}, residual {:.3e}", f.b, f.a, f.residual));
        fits.push(vec![i.to_string(), num(f.a)?, num(f.b)?, num(f.residual)?]);
    }
    report.files.push(write_csv(out, "fit.csv", &["probe_id", "a", "b", "residual"], &fits)?);
    Ok(())
}

fn verify(seed: u64, json: bool, out: &Path, report: &mut Report) -> Result<(), Failure> {
    let summary = run_all(seed)?;
    let mut rows = Vec::new();
    for c in &summary.checks {
        report.lines.push(c.line());
        let rel = match c.relation {
            crate::verify::Relation::AtMost => "at_most",
            crate::verify::Relation::Above => "above",
        };
        let measured = if c.measured.is_finite() { format!("{:.16e}", c.measured) } else { c.measured.to_string() };
        rows.push(vec![c.criterion.to_string(), c.name.clone(), c.passed.to_string(), measured, num(c.tolerance)?, rel.into()]);
    }
    report.files.push(write_csv(out, "verify.csv", &["criterion", "check", "passed", "measured", "tolerance", "relation"], &rows)?);
    if json {
        let text = serde_json::to_string_pretty(&summary).map_err(|e| Failure::Numerical(e.to_string()))?;
        report.files.push(write_text(out, "verify_summary.json", &text)?);
    }
    report.checks_passed = summary.passed;
    report.lines.push(format!(
        "{} of {} checks passed (seed {seed})",
        summary.checks.iter().filter(|c| c.passed).count(),
        summary.checks.len()
    ));
    Ok(())
}

/// Parses arguments, runs, prints a short report and returns the exit status.
pub fn main_from<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(report) => {
            for l in &report.lines {
                println!("{l}");
            }
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            if report.checks_passed {
                EXIT_OK
            } else {
                EXIT_CHECKS_FAILED
            }
        }
        Err(f) => {
            eprintln!("holelab: {f}");
            f.exit_code()
        }
    }
}
