//! Reconstruction of the solution `u` and of its analytic part from a solved density.
//!
//! For `eps != 0`
//!
//! ```text
//! ufrak(x) = -eps int nu(s) . DS_q(x - p - eps phi(s)) theta#(s) sigma~(s) ds + c#
//!            + P_q[f](x) - S_q(x - p) int_Q f
//! u(x)     = ufrak(x) + log(eps) / (2 pi) int_Q f          (eps > 0)
//! ```

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier::trig_resample;
use crate::geometry::{BoundaryShape, ShapeKinematics};
use crate::lattice_green::Lattice;
use crate::numerics::extrapolate_to_zero;
use crate::potentials::{double_layer_at, double_layer_normal_limit, CorrectedPotential, GUARD_SPACINGS};
use crate::solver::{DensityKind, DensitySolution, ProblemData};
use crate::Point;

/// Terms of the representation formula at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FieldParts {
    pub double_layer: f64,
    pub constant: f64,
    pub newton: f64,
    pub corrector: f64,
    /// `log(eps) / (2 pi) int_Q f`; zero when `eps <= 0`.
    pub log: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldSample {
    pub point: Point,
    /// `u(x)`; `None` unless `eps > 0`.
    pub u: Option<f64>,
    pub ufrak: f64,
    pub parts: FieldParts,
}

/// Points admitted for evaluation, with their distance to the nearest hole boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationSet {
    pub points: Vec<Point>,
    pub distances: Vec<f64>,
}

/// Evaluates the fields for one `(data, density)` pair.
///
/// The density may be trigonometrically upsampled before quadrature, which
/// shrinks the guard distance by the same factor.
#[derive(Clone, Debug)]
pub struct FieldEvaluator {
    lattice: Lattice,
    shape: BoundaryShape,
    eps: f64,
    p: Point,
    nodes: Vec<ShapeKinematics>,
    theta: Vec<f64>,
    constant: f64,
    potential: CorrectedPotential,
    guard: f64,
}

impl FieldEvaluator {
    pub fn new(data: &ProblemData, density: &DensitySolution) -> Result<Self> {
        Self::with_upsampling(data, density, 1)
    }

    pub fn with_upsampling(data: &ProblemData, density: &DensitySolution, factor: usize) -> Result<Self> {
        match density.kind {
            DensityKind::Rescaled { eps } if eps == data.eps() => {}
            DensityKind::Limiting if data.eps() == 0.0 => {}
            kind => {
                return Err(Error::InvalidInput(format!(
                    "density of kind {kind:?} does not belong to data with eps = {}",
                    data.eps()
                )))
            }
        }
        if density.theta.len() != density.n || factor == 0 {
            return Err(Error::InvalidInput("malformed density or upsampling factor".into()));
        }
        let m = density.n * factor;
        let theta = trig_resample(&density.theta, m);
        let nodes = data.shape().nodes(m);
        let h = 2.0 * PI / m as f64;
        let spacing = nodes.iter().map(|k| k.sigma_tilde).fold(0.0, f64::max) * h;
        Ok(Self {
            lattice: data.lattice().clone(),
            shape: data.shape().clone(),
            eps: data.eps(),
            p: data.p(),
            nodes,
            theta,
            constant: density.constant,
            potential: CorrectedPotential::new(data.f(), data.p()),
            guard: GUARD_SPACINGS * spacing * data.eps().abs(),
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Smallest admissible distance to a hole boundary.
    pub fn guard(&self) -> f64 {
        self.guard
    }

    /// Distance from `x` to the nearest hole boundary, or an error if `x` lies
    /// inside a hole or within the guard distance.
    pub fn admit(&self, x: Point) -> Result<f64> {
        if !(x[0].is_finite() && x[1].is_finite()) {
            return Err(Error::InvalidInput("evaluation point must be finite".into()));
        }
        let (r, _) = self.lattice.reduce([x[0] - self.p[0], x[1] - self.p[1]]);
        if self.eps == 0.0 {
            let d = r[0].hypot(r[1]);
            if d == 0.0 {
                return Err(Error::OutsideDomain { x: x[0], y: x[1], reason: "point of p + q Z^2".into() });
            }
            return Ok(d);
        }
        let q = self.lattice.q();
        let [xmin, xmax, ymin, ymax] = self.shape.bbox();
        let reach = xmin.abs().max(xmax.abs()).max(ymin.abs()).max(ymax.abs()) * self.eps.abs();
        // Images of the hole ordered by a lower bound on their distance.
        let mut images: Vec<(f64, Point)> = (-1..=1)
            .flat_map(|i| (-1..=1).map(move |j| [r[0] + i as f64 * q[0], r[1] + j as f64 * q[1]]))
            .map(|z| (z[0].hypot(z[1]) - reach, z))
            .collect();
        images.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut best = f64::INFINITY;
        for (near, z) in images {
            if near >= best {
                break;
            }
            let y = [z[0] / self.eps, z[1] / self.eps];
            if self.shape.contains(y) {
                return Err(Error::OutsideDomain { x: x[0], y: x[1], reason: "inside a hole".into() });
            }
            best = best.min(self.shape.distance_to_curve(y) * self.eps.abs());
        }
        if best < self.guard {
            return Err(Error::NearBoundary { x: x[0], y: x[1], dist: best, guard: self.guard });
        }
        Ok(best)
    }

    pub fn evaluation_set(&self, points: &[Point]) -> Result<EvaluationSet> {
        let distances = points.iter().map(|&x| self.admit(x)).collect::<Result<Vec<_>>>()?;
        Ok(EvaluationSet { points: points.to_vec(), distances })
    }

    fn double_layer(&self, x: Point) -> Result<f64> {
        if self.eps == 0.0 {
            return Ok(0.0);
        }
        let h = 2.0 * PI / self.nodes.len() as f64;
        let mut acc = 0.0;
        for (k, th) in self.nodes.iter().zip(&self.theta) {
            let y = [x[0] - self.p[0] - self.eps * k.point[0], x[1] - self.p[1] - self.eps * k.point[1]];
            let g = self.lattice.grad_sq(y)?;
            acc += (k.outward_normal[0] * g[0] + k.outward_normal[1] * g[1]) * th * k.sigma_tilde;
        }
        Ok(-self.eps * acc * h)
    }

    pub fn sample(&self, x: Point) -> Result<FieldSample> {
        self.admit(x)?;
        self.sample_unchecked(x)
    }

    fn sample_unchecked(&self, x: Point) -> Result<FieldSample> {
        let (newton, corrector) = self.potential.parts(x)?;
        let log = if self.eps > 0.0 { self.eps.ln() / (2.0 * PI) * self.potential.integral() } else { 0.0 };
        let parts = FieldParts { double_layer: self.double_layer(x)?, constant: self.constant, newton, corrector, log };
        let ufrak = parts.double_layer + parts.constant + parts.newton + parts.corrector;
        let u = (self.eps > 0.0).then_some(ufrak + parts.log);
        Ok(FieldSample { point: x, u, ufrak, parts })
    }

    /// Point-parallel evaluation; results are in input order.
    pub fn sample_many(&self, points: &[Point]) -> Result<Vec<FieldSample>> {
        points.par_iter().map(|&x| self.sample(x)).collect()
    }

    pub fn eval_u(&self, x: Point) -> Result<f64> {
        if !(self.eps > 0.0) {
            return Err(Error::InvalidInput(format!("u is defined for eps > 0, got {}", self.eps)));
        }
        Ok(self.sample(x)?.u.unwrap_or(f64::NAN))
    }

    pub fn eval_ufrak(&self, x: Point) -> Result<f64> {
        Ok(self.sample(x)?.ufrak)
    }

    /// Value of `u` (or of `ufrak` when `eps <= 0`) on the hole boundary at
    /// parameter `t`, extrapolated from the domain along the normal.
    pub fn boundary_trace(&self, t: f64) -> Result<f64> {
        if self.eps == 0.0 {
            return Err(Error::InvalidInput("no hole boundary at eps = 0".into()));
        }
        let k = self.shape.kinematics(t);
        let base = [self.p[0] + self.eps * k.point[0], self.p[1] + self.eps * k.point[1]];
        // The reference outward normal points into the perforated domain for eps > 0.
        let dir = self.eps.signum();
        let ds: Vec<f64> = (1..=6).map(|j| 1.25 * self.guard * j as f64).collect();
        let vals = ds
            .iter()
            .map(|&d| {
                let x = [base[0] + dir * d * k.outward_normal[0], base[1] + dir * d * k.outward_normal[1]];
                self.sample(x).map(|s| s.u.unwrap_or(s.ufrak))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(extrapolate_to_zero(&ds, &vals))
    }
}

/// `u~#(x) = w[theta~#](x) + c~#`, the exterior limiting field, for `x` outside `I[phi]`.
pub fn eval_limit_field(shape: &BoundaryShape, density: &DensitySolution, x: Point) -> Result<f64> {
    limit_field_upsampled(shape, density, x, 1)
}

pub fn limit_field_upsampled(shape: &BoundaryShape, density: &DensitySolution, x: Point, factor: usize) -> Result<f64> {
    if density.kind != DensityKind::Limiting {
        return Err(Error::InvalidInput("limit field needs a limiting density".into()));
    }
    if shape.contains(x) {
        return Err(Error::OutsideDomain { x: x[0], y: x[1], reason: "inside the reference hole".into() });
    }
    let m = density.n * factor.max(1);
    let theta = trig_resample(&density.theta, m);
    Ok(double_layer_at(shape, &shape.nodes(m), &theta, x)? + density.constant)
}

/// Normal-direction extrapolation of the limit field to the reference curve at `t`.
pub fn limit_field_trace(shape: &BoundaryShape, density: &DensitySolution, t: f64, factor: usize) -> Result<f64> {
    if density.kind != DensityKind::Limiting {
        return Err(Error::InvalidInput("limit field needs a limiting density".into()));
    }
    Ok(double_layer_normal_limit(shape, &density.theta, t, false, factor)? + density.constant)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::PeriodicField;
    use crate::solver::{limit_datum, solve_density, solve_limit, BoundaryData};
    use approx::assert_abs_diff_eq;

    fn perturbed() -> BoundaryShape {
        BoundaryShape::new(vec![0.1, -0.05, 1.0, 0.0, 0.0, 1.0, 0.15, 0.0, 0.07, 0.1, 0.0, -0.05, 0.07, 0.0]).unwrap()
    }

    fn generic(eps: f64, n: usize) -> ProblemData {
        let lat = Lattice::new(1.0, 1.2).unwrap();
        let f = PeriodicField::from_modes(&lat, &[(0, 0, 0.8, 0.0), (1, -1, 0.2, 0.1), (0, 2, -0.3, 0.0)]).unwrap();
        let g = BoundaryData::trig(vec![0.3, 0.5, -0.2, 0.1, 0.05]).unwrap();
        ProblemData::new(&lat, eps, [0.45, 0.55], perturbed(), g, f, n).unwrap()
    }

    fn evaluator(data: &ProblemData) -> FieldEvaluator {
        FieldEvaluator::new(data, &solve_density(data).unwrap()).unwrap()
    }

    #[test]
    fn parts_add_up() {
        let data = generic(0.05, 128);
        let ev = evaluator(&data);
        let s = ev.sample([0.1, 0.2]).unwrap();
        let intf = data.cell_integral();
        assert_abs_diff_eq!(s.parts.log, 0.05f64.ln() / (2.0 * PI) * intf, epsilon = 1e-15);
        assert_abs_diff_eq!(s.u.unwrap(), s.ufrak + 0.05f64.ln() / (2.0 * PI) * intf, epsilon = 1e-12);
    }

    #[test]
    fn rejects_points_in_or_near_holes() {
        let data = generic(0.05, 128);
        let ev = evaluator(&data);
        assert!(matches!(ev.admit([0.45, 0.55]), Err(Error::OutsideDomain { .. })));
        assert!(matches!(ev.admit([1.45, -0.65]), Err(Error::OutsideDomain { .. })));
        let k = perturbed().kinematics(0.7);
        let x = [0.45 + 0.05 * k.point[0] + 1e-4 * k.outward_normal[0], 0.55 + 0.05 * k.point[1] + 1e-4 * k.outward_normal[1]];
        assert!(matches!(ev.admit(x), Err(Error::NearBoundary { .. })));
        assert!(ev.admit([0.9, 0.1]).unwrap() > 0.3);
    }

    #[test]
    fn periodic_in_space() {
        let data = generic(0.05, 128);
        let ev = evaluator(&data);
        let x = [0.2, 0.9];
        let base = ev.eval_u(x).unwrap();
        for i in -1..=1 {
            for j in -1..=1 {
                let y = [x[0] + i as f64, x[1] + 1.2 * j as f64];
                assert_abs_diff_eq!(ev.eval_u(y).unwrap(), base, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn poisson_residual() {
        let data = generic(0.05, 128);
        let ev = evaluator(&data);
        let h = 1e-3;
        for x in [[0.1, 0.2], [0.8, 1.0], [0.95, 0.3]] {
            let u = |dx: f64, dy: f64| ev.eval_u([x[0] + dx, x[1] + dy]).unwrap();
            let lap = (u(h, 0.0) + u(-h, 0.0) + u(0.0, h) + u(0.0, -h) - 4.0 * u(0.0, 0.0)) / (h * h);
            assert!((lap - data.f().eval(x)).abs() < 1e-4, "{lap}");
        }
    }

    #[test]
    fn boundary_trace_matches_data() {
        let data = generic(0.05, 128);
        let ev = FieldEvaluator::with_upsampling(&data, &solve_density(&data).unwrap(), 32).unwrap();
        for t in [0.0, 1.3, 2.9, 4.4] {
            assert_abs_diff_eq!(ev.boundary_trace(t).unwrap(), data.g().eval(t), epsilon = 1e-6);
        }
    }

    #[test]
    fn limit_field_trace_and_far_field() {
        let data = generic(0.0, 128);
        let lim = solve_limit(&data).unwrap();
        let gs = limit_datum(&data).unwrap();
        for j in [0, 17, 64, 101] {
            let t = 2.0 * PI * j as f64 / 128.0;
            assert_abs_diff_eq!(limit_field_trace(data.shape(), &lim, t, 32).unwrap(), gs[j], epsilon = 1e-6);
        }
        let errs: Vec<f64> = [10.0, 100.0, 1000.0]
            .iter()
            .map(|r| (eval_limit_field(data.shape(), &lim, [0.6 * r, 0.8 * r]).unwrap() - lim.constant).abs())
            .collect();
        assert!(errs[1] < errs[0] / 5.0 && errs[2] < errs[1] / 5.0, "{errs:?}");
    }

    #[test]
    fn eps_zero_analytic_part() {
        let data = generic(0.0, 128);
        let sol = solve_density(&data).unwrap();
        let ev = FieldEvaluator::new(&data, &sol).unwrap();
        let x = [0.2, 0.3];
        let direct = sol.constant + data.newtonian().eval(x)
            - data.lattice().eval_sq([x[0] - 0.45, x[1] - 0.55]).unwrap() * data.cell_integral();
        assert_abs_diff_eq!(ev.eval_ufrak(x).unwrap(), direct, epsilon = 1e-13);
        assert!(ev.eval_u(x).is_err());
    }
}
