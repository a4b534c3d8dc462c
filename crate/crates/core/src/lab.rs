//! Numerical checks of the small-hole asymptotics: the `log eps` coefficient of
//! `u`, analytic continuation of the rescaled densities to `eps = 0`, and the
//! characterizations of the limiting constant.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{limit_field_upsampled, FieldEvaluator, FieldSample};
use crate::geometry::BoundaryShape;
use crate::numerics::{extrapolate_to_zero, polyfit};
use crate::solver::{solve_density, solve_limit, DensityKind, DensitySolution, ProblemData};
use crate::Point;

/// Default residual scale for [`fit_log_slope`]; fits deviating by more than
/// ten times this are rejected.
pub const FIT_TOLERANCE: f64 = 1e-3;
/// Largest admissible deviation of the data from a continuation fit.
pub const CONTINUATION_TOLERANCE: f64 = 1e-6;

/// Geometric grid from `hi` down to `lo`.
pub fn geometric_grid(hi: f64, lo: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![hi];
    }
    let r = (lo / hi).ln() / (count - 1) as f64;
    (0..count).map(|k| hi * (r * k as f64).exp()).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepEntry {
    pub eps: f64,
    pub c_sharp: f64,
    pub theta_inf_norm: f64,
    pub condition: f64,
    pub samples: Vec<FieldSample>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogFit {
    pub a: f64,
    pub b: f64,
    /// Largest absolute deviation from the line.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub eps_grid: Vec<f64>,
    pub probes: Vec<Point>,
    pub entries: Vec<SweepEntry>,
}

impl SweepReport {
    /// `u(probe; eps)` over the grid.
    pub fn u_values(&self, probe: usize) -> Vec<f64> {
        self.entries.iter().map(|e| e.samples[probe].u.unwrap_or(f64::NAN)).collect()
    }
}

fn at_eps<T>(eps: f64, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::AtEps { eps, source: Box::new(e) })
}

/// Solves and samples `u` at every `eps` of a strictly decreasing positive grid.
pub fn epsilon_sweep(template: &ProblemData, eps_grid: &[f64], probes: &[Point]) -> Result<SweepReport> {
    if eps_grid.is_empty() || eps_grid.iter().any(|e| !(*e > 0.0)) || eps_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("eps grid must be positive and strictly decreasing".into()));
    }
    let entries = eps_grid
        .par_iter()
        .map(|&eps| {
            at_eps(eps, (|| {
                let data = template.with_eps(eps)?;
                let sol = solve_density(&data)?;
                let ev = FieldEvaluator::new(&data, &sol)?;
                let samples = probes.iter().map(|&x| ev.sample(x)).collect::<Result<Vec<_>>>()?;
                Ok(SweepEntry {
                    eps,
                    c_sharp: sol.constant,
                    theta_inf_norm: sol.max_abs(),
                    condition: sol.condition,
                    samples,
                })
            })())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport { eps_grid: eps_grid.to_vec(), probes: probes.to_vec(), entries })
}

/// Least-squares line `y ~ a + b x`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LogFit> {
    let fit = polyfit(xs, ys, 1)?;
    Ok(LogFit { a: fit.coeffs[0], b: fit.coeffs[1], residual: fit.residual })
}

/// Fit of `u(probe; eps) ~ a + b log eps` with the default tolerance.
pub fn fit_log_slope(report: &SweepReport, probe: usize) -> Result<LogFit> {
    fit_log_slope_with_tolerance(report, probe, FIT_TOLERANCE)
}

pub fn fit_log_slope_with_tolerance(report: &SweepReport, probe: usize, tolerance: f64) -> Result<LogFit> {
    if report.entries.len() < 4 {
        return Err(Error::InvalidInput("log fit needs at least 4 grid points".into()));
    }
    if probe >= report.probes.len() {
        return Err(Error::InvalidInput(format!("no probe {probe}")));
    }
    let xs: Vec<f64> = report.eps_grid.iter().map(|e| e.ln()).collect();
    let fit = fit_line(&xs, &report.u_values(probe))?;
    if !(fit.residual <= 10.0 * tolerance) {
        return Err(Error::Numerical(format!(
            "log fit residual {:e} at probe {probe} exceeds {:e}; eps is outside the asymptotic regime",
            fit.residual,
            10.0 * tolerance
        )));
    }
    Ok(fit)
}

/// `ufrak` at `eps = 0` at the probes, from the limiting system.
pub fn limit_ufrak(template: &ProblemData, probes: &[Point]) -> Result<Vec<f64>> {
    let data = template.with_eps(0.0)?;
    let ev = FieldEvaluator::new(&data, &solve_limit(&data)?)?;
    probes.iter().map(|&x| ev.eval_ufrak(x)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuationReport {
    pub eps_grid: Vec<f64>,
    pub degree: usize,
    pub c_extrapolated: f64,
    pub c_limit: f64,
    pub theta_extrapolated: Vec<f64>,
    pub theta_limit: Vec<f64>,
    /// Largest deviation of the data from any of the polynomial fits.
    pub fit_residual: f64,
}

impl ContinuationReport {
    pub fn c_error(&self) -> f64 {
        (self.c_extrapolated - self.c_limit).abs()
    }

    pub fn theta_error(&self) -> f64 {
        self.theta_extrapolated.iter().zip(&self.theta_limit).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn smooth(&self) -> bool {
        self.fit_residual <= CONTINUATION_TOLERANCE
    }
}

/// Extrapolates `(theta#(eps), c#(eps))` from a two-sided grid of nonzero `eps`
/// to `eps = 0` and compares with the limiting system.
pub fn continuation_check(template: &ProblemData, eps_grid: &[f64]) -> Result<ContinuationReport> {
    if eps_grid.iter().any(|e| *e == 0.0 || !e.is_finite()) {
        return Err(Error::InvalidInput("continuation grid must consist of finite nonzero eps".into()));
    }
    if !(eps_grid.iter().any(|e| *e > 0.0) && eps_grid.iter().any(|e| *e < 0.0)) {
        return Err(Error::InvalidInput("continuation grid must contain both signs of eps".into()));
    }
    let degree = 3.min(eps_grid.len() - 1);
    let sols = eps_grid
        .par_iter()
        .map(|&eps| at_eps(eps, template.with_eps(eps).and_then(|d| solve_density(&d))))
        .collect::<Result<Vec<_>>>()?;
    let limit = solve_limit(template)?;
    let cs: Vec<f64> = sols.iter().map(|s| s.constant).collect();
    let cfit = polyfit(eps_grid, &cs, degree)?;
    let mut fit_residual = cfit.residual;
    let mut theta_extrapolated = Vec::with_capacity(template.n());
    for j in 0..template.n() {
        let ys: Vec<f64> = sols.iter().map(|s| s.theta[j]).collect();
        let fit = polyfit(eps_grid, &ys, degree)?;
        fit_residual = fit_residual.max(fit.residual);
        theta_extrapolated.push(fit.eval(0.0));
    }
    Ok(ContinuationReport {
        eps_grid: eps_grid.to_vec(),
        degree,
        c_extrapolated: cfit.eval(0.0),
        c_limit: limit.constant,
        theta_extrapolated,
        theta_limit: limit.theta,
        fit_residual,
    })
}

fn half_gamma(n: usize) -> f64 {
    // Gamma(n/2) from Gamma(1) = 1, Gamma(1/2) = sqrt(pi).
    let (mut g, mut x) = if n.is_multiple_of(2) { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    while x < n as f64 / 2.0 - 0.25 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Surface measure of the unit sphere in `R^n`.
pub fn unit_sphere_measure(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / half_gamma(n)
}

/// Limiting constant for the ball of radius `r` in dimension `n >= 3`:
/// `intf / ((2 - n) s_n r^{n-2})`.
pub fn sphere_limit_constant_3d(n: usize, r: f64, intf: f64) -> Result<f64> {
    check_sphere(n, r)?;
    Ok(intf / ((2.0 - n as f64) * unit_sphere_measure(n) * r.powi(n as i32 - 2)))
}

fn check_sphere(n: usize, r: f64) -> Result<()> {
    if n < 3 {
        return Err(Error::InvalidInput(format!("dimension must be at least 3, got {n}")));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidInput(format!("radius must be positive, got {r}")));
    }
    Ok(())
}

/// `lim |x|^{n-2} H(x)` for the exterior harmonic `H` with `H = 1` on the
/// sphere of radius `r`, from a finite-difference solve in `s = 1 / |x|` of
/// `s H'' + (3 - n) H' = 0`, `H(0) = 0`, `H(1/r) = 1`.
///
/// The ratio `H / s^{n-2}` is taken at `s = k / (16 r)`, `k = 1..4`, Richardson
/// combined over `intervals` and `2 * intervals`, and extrapolated to `s = 0`.
pub fn sphere_capacity_fd(n: usize, r: f64, intervals: usize) -> Result<f64> {
    check_sphere(n, r)?;
    if intervals < 16 || !intervals.is_multiple_of(16) {
        return Err(Error::InvalidInput("intervals must be a positive multiple of 16".into()));
    }
    let coarse = radial_ratios(n, r, intervals);
    let fine = radial_ratios(n, r, 2 * intervals);
    let ss: Vec<f64> = (1..=4).map(|k| k as f64 / (16.0 * r)).collect();
    let ratios: Vec<f64> = coarse.iter().zip(&fine).map(|(c, f)| (4.0 * f - c) / 3.0).collect();
    Ok(extrapolate_to_zero(&ss, &ratios))
}

fn radial_ratios(n: usize, r: f64, m: usize) -> Vec<f64> {
    let ds = 1.0 / (r * m as f64);
    let k = 3.0 - n as f64;
    // Interior unknowns H_1 .. H_{m-1}; Thomas algorithm.
    let len = m - 1;
    let mut lower = vec![0.0; len];
    let mut diag = vec![0.0; len];
    let mut upper = vec![0.0; len];
    let mut rhs = vec![0.0; len];
    for i in 0..len {
        let s = (i + 1) as f64 * ds;
        lower[i] = s / (ds * ds) - k / (2.0 * ds);
        diag[i] = -2.0 * s / (ds * ds);
        upper[i] = s / (ds * ds) + k / (2.0 * ds);
    }
    rhs[len - 1] -= upper[len - 1];
    for i in 1..len {
        let w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    let mut h = vec![0.0; len];
    h[len - 1] = rhs[len - 1] / diag[len - 1];
    for i in (0..len - 1).rev() {
        h[i] = (rhs[i] - upper[i] * h[i + 1]) / diag[i];
    }
    (1..=4)
        .map(|j| {
            let i = j * m / 16;
            h[i - 1] / (i as f64 * ds).powi(n as i32 - 2)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct FarFieldEstimate {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub estimate: f64,
}

/// Far-field limit of the exterior limiting field, extrapolated in `1/|x|`
/// from `|x| = 10, 100, 1000` along `(0.6, 0.8)`.
pub fn farfield_constant_2d(shape: &BoundaryShape, density: &DensitySolution) -> Result<FarFieldEstimate> {
    farfield_along(shape, density, [0.6, 0.8], &[10.0, 100.0, 1000.0])
}

pub fn farfield_along(shape: &BoundaryShape, density: &DensitySolution, dir: Point, radii: &[f64]) -> Result<FarFieldEstimate> {
    if density.kind != DensityKind::Limiting {
        return Err(Error::InvalidInput("far-field constant needs a limiting density".into()));
    }
    let norm = dir[0].hypot(dir[1]);
    let values = radii
        .iter()
        .map(|r| limit_field_upsampled(shape, density, [dir[0] * r / norm, dir[1] * r / norm], 1))
        .collect::<Result<Vec<_>>>()?;
    let diffs: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    if diffs.windows(2).any(|d| d[1] > d[0]) {
        return Err(Error::Numerical(format!("far-field values do not settle: {values:?}")));
    }
    let xs: Vec<f64> = radii.iter().map(|r| 1.0 / r).collect();
    Ok(FarFieldEstimate { radii: radii.to_vec(), estimate: extrapolate_to_zero(&xs, &values), values })
}
