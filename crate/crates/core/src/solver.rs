//! Nystrom discretization of the rescaled boundary integral system, its
//! `eps = 0` limiting system and the adjoint normalization problem.
//!
//! Unknowns are the density `theta#` at the nodes `t_j = 2 pi j / N` of the
//! reference circle and the constant `c#`. Row `i < N` collocates
//!
//! ```text
//! -theta(t)/2 + w[theta](phi(t)) - eps int nu(s) . DR_q(eps(phi(t) - phi(s))) theta(s) sigma~(s) ds + c
//!     = g(t) - P_q[f](p + eps phi(t)) + S_2(phi(t)) int_Q f + R_q(eps phi(t)) int_Q f
//! ```
//!
//! and the last row imposes `int theta sigma~ = 0`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{hole_containment_check, BoundaryShape, ShapeKinematics};
use crate::lattice_green::{classical_green, Lattice};
use crate::potentials::{cell_integral, double_layer_matrix, newtonian, PeriodicField};
use crate::Point;

/// Systems with a larger condition estimate are rejected.
pub const MAX_CONDITION: f64 = 1e12;
/// Relative residual above which a solve is reported as failed.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Dirichlet datum `g` on the reference circle.
#[derive(Clone)]
pub enum BoundaryData {
    /// `[a0, a1, b1, a2, b2, ...]` for `a0 + sum_k a_k cos kt + b_k sin kt`.
    Trig(Vec<f64>),
    Func(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryData::Trig(c) => f.debug_tuple("Trig").field(c).finish(),
            BoundaryData::Func(_) => f.write_str("Func(..)"),
        }
    }
}

impl BoundaryData {
    pub fn constant(value: f64) -> Self {
        BoundaryData::Trig(vec![value])
    }

    pub fn trig(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.len().is_multiple_of(2) || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "boundary coefficients must be [a0, a1, b1, ...] of odd length, got {} entries",
                coeffs.len()
            )));
        }
        Ok(BoundaryData::Trig(coeffs))
    }

    pub fn from_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        BoundaryData::Func(Arc::new(f))
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            BoundaryData::Trig(c) => {
                let mut v = c[0];
                for (k, pair) in c[1..].chunks(2).enumerate() {
                    let (s, co) = ((k + 1) as f64 * t).sin_cos();
                    v += pair[0] * co + pair[1] * s;
                }
                v
            }
            BoundaryData::Func(f) => f(t),
        }
    }
}

/// The quadruple `(eps, phi, g, f)` together with the hole position and
/// discretization size.
#[derive(Clone, Debug)]
pub struct ProblemData {
    lattice: Lattice,
    eps: f64,
    p: Point,
    shape: BoundaryShape,
    g: BoundaryData,
    f: PeriodicField,
    newton: PeriodicField,
    n: usize,
}

impl ProblemData {
    pub fn new(
        lattice: &Lattice,
        eps: f64,
        p: Point,
        shape: BoundaryShape,
        g: BoundaryData,
        f: PeriodicField,
        n: usize,
    ) -> Result<Self> {
        if n < 8 {
            return Err(Error::InvalidInput(format!("need at least 8 quadrature nodes, got {n}")));
        }
        if !eps.is_finite() {
            return Err(Error::InvalidInput("eps must be finite".into()));
        }
        if !lattice.in_open_cell(p) {
            return Err(Error::InvalidInput(format!("p = ({}, {}) is not inside the open cell", p[0], p[1])));
        }
        if f.lattice().q() != lattice.q() {
            return Err(Error::InvalidInput("f is defined on a different lattice".into()));
        }
        if !shape.contains([0.0, 0.0]) {
            return Err(Error::InvalidShape("the hole I[phi] must contain the origin".into()));
        }
        if !hole_containment_check(lattice, p, eps, &shape) {
            return Err(Error::Containment { eps });
        }
        let newton = newtonian(&f);
        Ok(Self { lattice: lattice.clone(), eps, p, shape, g, f, newton, n })
    }

    /// Same data at another `eps`.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        if !hole_containment_check(&self.lattice, self.p, eps, &self.shape) {
            return Err(Error::Containment { eps });
        }
        Ok(Self { eps, ..self.clone() })
    }

    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(&self.lattice, self.eps, self.p, self.shape.clone(), self.g.clone(), self.f.clone(), n)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn p(&self) -> Point {
        self.p
    }

    pub fn shape(&self) -> &BoundaryShape {
        &self.shape
    }

    pub fn g(&self) -> &BoundaryData {
        &self.g
    }

    pub fn f(&self) -> &PeriodicField {
        &self.f
    }

    /// `P_q[f]`.
    pub fn newtonian(&self) -> &PeriodicField {
        &self.newton
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cell_integral(&self) -> f64 {
        cell_integral(&self.f).value
    }

    pub fn nodes(&self) -> Vec<ShapeKinematics> {
        self.shape.nodes(self.n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DensityKind {
    Rescaled { eps: f64 },
    Limiting,
    Adjoint,
}

/// Density samples at `t_j = 2 pi j / N` and the accompanying constant.
#[derive(Clone, Debug, PartialEq)]
pub struct DensitySolution {
    pub theta: Vec<f64>,
    /// `c#`, `c~#`, or the (vanishing) multiplier of the adjoint problem.
    pub constant: f64,
    pub n: usize,
    pub kind: DensityKind,
    pub condition: f64,
}

impl DensitySolution {
    /// `sum_j theta_j sigma~_j 2 pi / N`.
    pub fn weighted_integral(&self, shape: &BoundaryShape) -> f64 {
        weighted_sum(&shape.nodes(self.n), &self.theta)
    }

    pub fn max_abs(&self) -> f64 {
        self.theta.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Unrescaled pair `(theta, c) = eps^{2-n} (theta#, c#)`; the identity for `n = 2`.
    pub fn unrescaled(&self) -> (Vec<f64>, f64) {
        (self.theta.clone(), self.constant)
    }
}

/// Dense `(N+1) x (N+1)` system.
#[derive(Clone, Debug)]
pub struct AssembledSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub condition: f64,
}

fn weighted_sum(nodes: &[ShapeKinematics], values: &[f64]) -> f64 {
    let h = 2.0 * PI / nodes.len() as f64;
    nodes.iter().zip(values).map(|(k, v)| k.sigma_tilde * v).sum::<f64>() * h
}

/// Ratio of extreme singular values.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = a.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Operator rows `-theta/2 + K theta - eps * (DR_q block) theta` for the nodes.
fn operator_rows(lattice: &Lattice, eps: f64, nodes: &[ShapeKinematics]) -> Result<Vec<Vec<f64>>> {
    let n = nodes.len();
    let h = 2.0 * PI / n as f64;
    let k = double_layer_matrix(nodes);
    k.into_par_iter()
        .enumerate()
        .map(|(i, mut row)| {
            row[i] -= 0.5;
            if eps != 0.0 {
                let ki = &nodes[i];
                for (j, kj) in nodes.iter().enumerate() {
                    let d = [eps * (ki.point[0] - kj.point[0]), eps * (ki.point[1] - kj.point[1])];
                    let dr = lattice.remainder_gradient(d)?;
                    row[j] -= eps * (kj.outward_normal[0] * dr[0] + kj.outward_normal[1] * dr[1]) * kj.sigma_tilde * h;
                }
            }
            Ok(row)
        })
        .collect()
}

fn bordered(rows: Vec<Vec<f64>>, nodes: &[ShapeKinematics]) -> DMatrix<f64> {
    let n = nodes.len();
    let h = 2.0 * PI / n as f64;
    let mut a = DMatrix::zeros(n + 1, n + 1);
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            a[(i, j)] = v;
        }
        a[(i, n)] = 1.0;
    }
    for (j, k) in nodes.iter().enumerate() {
        a[(n, j)] = k.sigma_tilde * h;
    }
    a
}

/// Right-hand side of the rescaled system at the nodes.
fn rescaled_rhs(data: &ProblemData, nodes: &[ShapeKinematics]) -> Result<Vec<f64>> {
    let n = nodes.len();
    let eps = data.eps;
    let intf = data.cell_integral();
    let p = data.p;
    (0..n)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / n as f64;
            let phi = nodes[i].point;
            let mut v = data.g.eval(t);
            v -= data.newton.eval([p[0] + eps * phi[0], p[1] + eps * phi[1]]);
            if intf != 0.0 {
                v += classical_green(phi) * intf;
                v += data.lattice.eval_rq([eps * phi[0], eps * phi[1]])? * intf;
            }
            Ok(v)
        })
        .collect()
}

pub fn assemble(data: &ProblemData) -> Result<AssembledSystem> {
    if !hole_containment_check(&data.lattice, data.p, data.eps, &data.shape) {
        return Err(Error::Containment { eps: data.eps });
    }
    let nodes = data.nodes();
    let matrix = bordered(operator_rows(&data.lattice, data.eps, &nodes)?, &nodes);
    let mut rhs = rescaled_rhs(data, &nodes)?;
    rhs.push(0.0);
    let condition = condition_number(&matrix);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }
    Ok(AssembledSystem { matrix, rhs: DVector::from_vec(rhs), condition })
}

fn solve_system(sys: &AssembledSystem) -> Result<DVector<f64>> {
    let x = sys
        .matrix
        .clone()
        .lu()
        .solve(&sys.rhs)
        .ok_or(Error::IllConditioned { condition: f64::INFINITY })?;
    let r = &sys.matrix * &x - &sys.rhs;
    let scale = sys.matrix.abs().row_sum().max() * x.amax() + sys.rhs.amax();
    let residual = r.amax() / scale.max(f64::MIN_POSITIVE);
    if !(residual <= RESIDUAL_TOL) {
        return Err(Error::Residual { residual, tolerance: RESIDUAL_TOL });
    }
    Ok(x)
}

fn split(x: DVector<f64>, kind: DensityKind, condition: f64) -> DensitySolution {
    let n = x.len() - 1;
    DensitySolution { theta: x.as_slice()[..n].to_vec(), constant: x[n], n, kind, condition }
}

/// `(theta#, c#)` for the data's `eps`, which may be zero or negative.
pub fn solve_density(data: &ProblemData) -> Result<DensitySolution> {
    let sys = assemble(data)?;
    let x = solve_system(&sys)?;
    let kind = if data.eps == 0.0 { DensityKind::Limiting } else { DensityKind::Rescaled { eps: data.eps } };
    Ok(split(x, kind, sys.condition))
}

/// Limiting datum
/// `g#(t) = g(t) - P_q[f](p) + S_2(phi(t)) int_Q f + R_q(0) int_Q f`.
pub fn limit_datum(data: &ProblemData) -> Result<Vec<f64>> {
    let intf = data.cell_integral();
    let base = -data.newton.eval(data.p) + data.lattice.eval_rq([0.0, 0.0])? * intf;
    let n = data.n;
    Ok(data
        .nodes()
        .iter()
        .enumerate()
        .map(|(j, k)| data.g.eval(2.0 * PI * j as f64 / n as f64) + base + classical_green(k.point) * intf)
        .collect())
}

/// Limiting system, assembled with its own right-hand side `g#`. The `eps` of
/// `data` is ignored.
pub fn solve_limit(data: &ProblemData) -> Result<DensitySolution> {
    let nodes = data.nodes();
    let matrix = bordered(operator_rows(&data.lattice, 0.0, &nodes)?, &nodes);
    let mut rhs = limit_datum(data)?;
    rhs.push(0.0);
    let condition = condition_number(&matrix);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }
    let sys = AssembledSystem { matrix, rhs: DVector::from_vec(rhs), condition };
    Ok(split(solve_system(&sys)?, DensityKind::Limiting, condition))
}

/// Solution `tau~` of
/// `-tau(t)/2 + int nu(t) . DS_2(phi(t) - phi(s)) tau(s) sigma~(s) ds = 0`,
/// `int tau sigma~ = 1`. The homogeneous equation has a one-dimensional kernel;
/// the bordered system with a multiplier column of ones picks the normalized member.
pub fn adjoint_density(shape: &BoundaryShape, n: usize) -> Result<DensitySolution> {
    let nodes = shape.nodes(n);
    let h = 2.0 * PI / n as f64;
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let ki = &nodes[i];
            (0..n)
                .map(|j| {
                    let kj = &nodes[j];
                    let kernel = if i == j {
                        ki.curvature / (4.0 * PI)
                    } else {
                        let d = [ki.point[0] - kj.point[0], ki.point[1] - kj.point[1]];
                        (ki.outward_normal[0] * d[0] + ki.outward_normal[1] * d[1])
                            / (2.0 * PI * (d[0] * d[0] + d[1] * d[1]))
                    };
                    kernel * kj.sigma_tilde * h - if i == j { 0.5 } else { 0.0 }
                })
                .collect()
        })
        .collect();
    let matrix = bordered(rows, &nodes);
    let mut rhs = DVector::zeros(n + 1);
    rhs[n] = 1.0;
    let condition = condition_number(&matrix);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }
    let sys = AssembledSystem { matrix, rhs, condition };
    Ok(split(solve_system(&sys)?, DensityKind::Adjoint, condition))
}

/// `c~# = int g# tau~ sigma~` by the trapezoid rule.
pub fn limit_constant(data: &ProblemData) -> Result<f64> {
    let tau = adjoint_density(&data.shape, data.n)?;
    let gs = limit_datum(data)?;
    let prod: Vec<f64> = gs.iter().zip(&tau.theta).map(|(a, b)| a * b).collect();
    Ok(weighted_sum(&data.nodes(), &prod))
}
