//! Periodic Newtonian potential, the corrected potential and classical
//! double-layer potentials on hole boundaries.
//!
//! Fourier convention: `f^(k) = 1/|Q| int_Q f(x) exp(-2 pi i k . q^{-1} x) dx`, so
//! `f(x) = sum_k f^(k) exp(2 pi i k~ . x)` with `k~ = q^{-1} k`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftDirection;

use crate::error::{Error, Result};
use crate::fourier::{fft2, unwrap, wrap};
use crate::geometry::{BoundaryShape, ShapeKinematics};
use crate::lattice_green::Lattice;
use crate::Point;

const DEFAULT_GRID: usize = 64;
const MAX_GRID: usize = 1024;
const TRAILING_SHELL_TOL: f64 = 1e-13;
const HERMITIAN_TOL: f64 = 1e-12;
/// Off-curve evaluation requires this many node spacings of clearance.
pub const GUARD_SPACINGS: f64 = 3.0;

/// One Fourier mode `c exp(2 pi i k~ . x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mode {
    pub k: [i64; 2],
    pub c: Complex64,
}

/// Band-limited q-periodic real function, held both as grid samples and as a
/// sparse Hermitian-symmetric coefficient list.
#[derive(Clone, Debug)]
pub struct PeriodicField {
    lattice: Lattice,
    m: usize,
    samples: Vec<f64>,
    modes: Vec<Mode>,
}

/// `int_Q f`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellIntegral {
    pub value: f64,
}

impl PeriodicField {
    /// Builds `f` from `(k1, k2, re, im)` entries. Missing conjugate partners are
    /// filled in; given partners must already be conjugate.
    pub fn from_modes(lattice: &Lattice, entries: &[(i64, i64, f64, f64)]) -> Result<Self> {
        let mut map: BTreeMap<[i64; 2], Complex64> = BTreeMap::new();
        for &(k1, k2, re, im) in entries {
            if !(re.is_finite() && im.is_finite()) {
                return Err(Error::InvalidInput(format!("non-finite coefficient for mode ({k1}, {k2})")));
            }
            if map.insert([k1, k2], Complex64::new(re, im)).is_some() {
                return Err(Error::InvalidInput(format!("mode ({k1}, {k2}) given twice")));
            }
        }
        let keys: Vec<[i64; 2]> = map.keys().cloned().collect();
        for k in keys {
            let c = map[&k];
            let partner = [-k[0], -k[1]];
            match map.get(&partner) {
                Some(p) => {
                    if (p - c.conj()).norm() > HERMITIAN_TOL * (1.0 + c.norm()) {
                        return Err(Error::InvalidInput(format!(
                            "modes ({}, {}) and ({}, {}) are not complex conjugates",
                            k[0], k[1], partner[0], partner[1]
                        )));
                    }
                }
                None => {
                    map.insert(partner, c.conj());
                }
            }
        }
        let modes: Vec<Mode> = map.into_iter().filter(|(_, c)| c.norm() > 0.0).map(|(k, c)| Mode { k, c }).collect();
        let kmax = modes.iter().map(|m| m.k[0].abs().max(m.k[1].abs())).max().unwrap_or(0) as usize;
        let mut m = DEFAULT_GRID;
        while 2 * kmax >= m {
            m *= 2;
        }
        Ok(Self::from_mode_list(lattice, m, modes))
    }

    pub fn constant(lattice: &Lattice, value: f64) -> Self {
        Self::from_mode_list(lattice, DEFAULT_GRID, vec![Mode { k: [0, 0], c: Complex64::new(value, 0.0) }])
    }

    pub fn zero(lattice: &Lattice) -> Self {
        Self::from_mode_list(lattice, DEFAULT_GRID, Vec::new())
    }

    /// Samples `f` on an `m x m` grid, doubling `m` until the trailing spectral
    /// shell falls below tolerance.
    pub fn from_fn(lattice: &Lattice, f: impl Fn(Point) -> f64) -> Result<Self> {
        let mut m = DEFAULT_GRID;
        loop {
            let q = lattice.q();
            let samples: Vec<f64> = (0..m * m)
                .map(|idx| f([(idx / m) as f64 * q[0] / m as f64, (idx % m) as f64 * q[1] / m as f64]))
                .collect();
            let field = Self::from_samples(lattice, m, samples)?;
            if field.trailing_shell() < TRAILING_SHELL_TOL {
                return Ok(field);
            }
            if m >= MAX_GRID {
                return Err(Error::Numerical(format!(
                    "f is not resolved on a {m}x{m} grid (trailing shell {:e})",
                    field.trailing_shell()
                )));
            }
            m *= 2;
        }
    }

    /// Row-major samples `samples[i * m + j] = f(i q11 / m, j q22 / m)`.
    pub fn from_samples(lattice: &Lattice, m: usize, samples: Vec<f64>) -> Result<Self> {
        if !m.is_power_of_two() || samples.len() != m * m {
            return Err(Error::InvalidInput(format!("grid must be m x m with m a power of two, got m = {m}")));
        }
        let mut spec: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft2(&mut spec, m, FftDirection::Forward);
        let scale = 1.0 / (m * m) as f64;
        let mut modes = Vec::new();
        for i in 0..m {
            for j in 0..m {
                let c = spec[i * m + j] * scale;
                if c.norm() > 1e-16 {
                    modes.push(Mode { k: [unwrap(i, m), unwrap(j, m)], c });
                }
            }
        }
        modes.sort_by_key(|md| md.k);
        Ok(Self { lattice: lattice.clone(), m, samples, modes })
    }

    fn from_mode_list(lattice: &Lattice, m: usize, modes: Vec<Mode>) -> Self {
        let mut spec = vec![Complex64::new(0.0, 0.0); m * m];
        for md in &modes {
            spec[wrap(md.k[0], m) * m + wrap(md.k[1], m)] += md.c;
        }
        fft2(&mut spec, m, FftDirection::Inverse);
        let samples = spec.iter().map(|c| c.re).collect();
        Self { lattice: lattice.clone(), m, samples, modes }
    }

    /// Same field sampled on an `m x m` grid; `m` must be a power of two that
    /// still resolves every mode.
    pub fn with_grid(&self, m: usize) -> Result<Self> {
        let kmax = self.modes.iter().map(|md| md.k[0].abs().max(md.k[1].abs())).max().unwrap_or(0) as usize;
        if !m.is_power_of_two() || 2 * kmax >= m {
            return Err(Error::InvalidInput(format!(
                "grid size {m} must be a power of two above twice the largest wavenumber {kmax}"
            )));
        }
        Ok(Self::from_mode_list(&self.lattice, m, self.modes.clone()))
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn grid_size(&self) -> usize {
        self.m
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn coefficient(&self, k: [i64; 2]) -> Complex64 {
        self.modes
            .binary_search_by_key(&k, |md| md.k)
            .map(|i| self.modes[i].c)
            .unwrap_or_default()
    }

    /// Largest coefficient magnitude on the outermost two grid shells.
    pub fn trailing_shell(&self) -> f64 {
        let edge = (self.m / 2) as i64 - 2;
        self.modes
            .iter()
            .filter(|md| md.k[0].abs().max(md.k[1].abs()) >= edge)
            .map(|md| md.c.norm())
            .fold(0.0, f64::max)
    }

    /// Direct evaluation of the trigonometric series at `x`.
    pub fn eval(&self, x: Point) -> f64 {
        let q = self.lattice.q();
        let a = 2.0 * PI * x[0] / q[0];
        let b = 2.0 * PI * x[1] / q[1];
        self.modes
            .iter()
            .map(|md| {
                let (s, c) = (md.k[0] as f64 * a + md.k[1] as f64 * b).sin_cos();
                md.c.re * c - md.c.im * s
            })
            .sum()
    }

    /// Fourier multiplier `m(k~)` applied to every mode.
    fn map_modes(&self, mult: impl Fn([f64; 2]) -> f64) -> Self {
        let q = self.lattice.q();
        let modes = self
            .modes
            .iter()
            .filter_map(|md| {
                let kt = [md.k[0] as f64 / q[0], md.k[1] as f64 / q[1]];
                let c = md.c * mult(kt);
                (c.norm() > 0.0).then_some(Mode { k: md.k, c })
            })
            .collect();
        Self::from_mode_list(&self.lattice, self.m, modes)
    }

    /// Periodic Newtonian potential `P_q[f] = S_q * f` (cell convolution).
    pub fn newtonian(&self) -> Self {
        newtonian(self)
    }

    /// Spectral Laplacian.
    pub fn laplacian(&self) -> Self {
        self.map_modes(|kt| -4.0 * PI * PI * (kt[0] * kt[0] + kt[1] * kt[1]))
    }

    pub fn cell_integral(&self) -> CellIntegral {
        cell_integral(self)
    }

    /// Cell mean `f^(0)`.
    pub fn mean(&self) -> f64 {
        self.coefficient([0, 0]).re
    }
}

/// Multiplier `-1/(4 pi^2 |k~|^2)` for `k != 0`; the zero mode is dropped so
/// the potential has zero cell mean, matching `S_q`.
pub fn newtonian(f: &PeriodicField) -> PeriodicField {
    f.map_modes(|kt| {
        let kk = kt[0] * kt[0] + kt[1] * kt[1];
        if kk == 0.0 {
            0.0
        } else {
            -1.0 / (4.0 * PI * PI * kk)
        }
    })
}

pub fn cell_integral(f: &PeriodicField) -> CellIntegral {
    CellIntegral { value: f.lattice.cell_measure() * f.mean() }
}

/// `P_q[f](x) - S_q(x - p) int_Q f`, which solves `Delta U = f` off `p + q Z^2`.
#[derive(Clone, Debug)]
pub struct CorrectedPotential {
    newton: PeriodicField,
    integral: f64,
    p: Point,
}

impl CorrectedPotential {
    pub fn new(f: &PeriodicField, p: Point) -> Self {
        Self { newton: newtonian(f), integral: cell_integral(f).value, p }
    }

    pub fn newtonian(&self) -> &PeriodicField {
        &self.newton
    }

    pub fn integral(&self) -> f64 {
        self.integral
    }

    /// `(P_q[f](x), -S_q(x - p) int_Q f)`.
    pub fn parts(&self, x: Point) -> Result<(f64, f64)> {
        let newton = self.newton.eval(x);
        let corrector = if self.integral == 0.0 {
            // S_q is still checked so the singular set is rejected uniformly.
            self.newton.lattice().eval_sq([x[0] - self.p[0], x[1] - self.p[1]])?;
            0.0
        } else {
            -self.newton.lattice().eval_sq([x[0] - self.p[0], x[1] - self.p[1]])? * self.integral
        };
        Ok((newton, corrector))
    }

    pub fn eval(&self, x: Point) -> Result<f64> {
        self.parts(x).map(|(a, b)| a + b)
    }
}

pub fn corrected_potential_eval(f: &PeriodicField, p: Point, x: Point) -> Result<f64> {
    CorrectedPotential::new(f, p).eval(x)
}

/// Trapezoid-rule classical double layer
/// `w[theta](x) = -int nu(s) . DS_2(x - phi(s)) theta(s) sigma~(s) ds`
/// with `theta` sampled at `t_j = 2 pi j / N`.
pub fn classical_double_layer_eval(shape: &BoundaryShape, theta: &[f64], x: Point) -> Result<f64> {
    let nodes = shape.nodes(theta.len());
    double_layer_at(shape, &nodes, theta, x)
}

pub(crate) fn double_layer_at(shape: &BoundaryShape, nodes: &[ShapeKinematics], theta: &[f64], x: Point) -> Result<f64> {
    let n = nodes.len();
    if n == 0 || theta.len() != n {
        return Err(Error::InvalidInput(format!("density has {} samples for {} nodes", theta.len(), n)));
    }
    let h = 2.0 * PI / n as f64;
    let spacing = nodes.iter().map(|k| k.sigma_tilde).fold(0.0, f64::max) * h;
    let guard = GUARD_SPACINGS * spacing;
    let dist = shape.distance_to_curve(x);
    if dist < guard {
        return Err(Error::NearBoundary { x: x[0], y: x[1], dist, guard });
    }
    Ok(nodes
        .iter()
        .zip(theta)
        .map(|(k, &th)| {
            let d = [x[0] - k.point[0], x[1] - k.point[1]];
            let r2 = d[0] * d[0] + d[1] * d[1];
            -(k.outward_normal[0] * d[0] + k.outward_normal[1] * d[1]) / (2.0 * PI * r2) * th * k.sigma_tilde
        })
        .sum::<f64>()
        * h)
}

/// Nystrom matrix of the classical double layer restricted to the curve:
/// `K[i][j] = -nu(s_j) . DS_2(phi(t_i) - phi(s_j)) sigma~(s_j) h`, with the
/// diagonal given by the smooth limit `curvature(t_i) sigma~(t_i) h / (4 pi)`.
pub fn double_layer_matrix(nodes: &[ShapeKinematics]) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let h = 2.0 * PI / n as f64;
    (0..n)
        .map(|i| {
            let ki = &nodes[i];
            (0..n)
                .map(|j| {
                    let kj = &nodes[j];
                    if i == j {
                        ki.curvature * ki.sigma_tilde * h / (4.0 * PI)
                    } else {
                        let d = [ki.point[0] - kj.point[0], ki.point[1] - kj.point[1]];
                        let r2 = d[0] * d[0] + d[1] * d[1];
                        -(kj.outward_normal[0] * d[0] + kj.outward_normal[1] * d[1]) / (2.0 * PI * r2)
                            * kj.sigma_tilde
                            * h
                    }
                })
                .collect()
        })
        .collect()
}

/// One-sided boundary value of `w[theta]` at parameter `t`: the density is
/// upsampled by `factor` and values at six distances along the normal,
/// starting just outside the guard zone, are extrapolated to the curve.
pub fn double_layer_normal_limit(shape: &BoundaryShape, theta: &[f64], t: f64, interior: bool, factor: usize) -> Result<f64> {
    let m = theta.len() * factor.max(1);
    let dense = crate::fourier::trig_resample(theta, m);
    let nodes = shape.nodes(m);
    let spacing = nodes.iter().map(|k| k.sigma_tilde).fold(0.0, f64::max) * 2.0 * PI / m as f64;
    let guard = GUARD_SPACINGS * spacing;
    let k = shape.kinematics(t);
    let sign = if interior { -1.0 } else { 1.0 };
    let ds: Vec<f64> = (1..=6).map(|j| 1.25 * guard * j as f64).collect();
    let vals = ds
        .iter()
        .map(|d| {
            let x = [k.point[0] + sign * d * k.outward_normal[0], k.point[1] + sign * d * k.outward_normal[1]];
            double_layer_at(shape, &nodes, &dense, x)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(crate::numerics::extrapolate_to_zero(&ds, &vals))
}

/// Direct value `w[theta]|_{boundary}` at the nodes.
pub fn classical_double_layer_trace(shape: &BoundaryShape, theta: &[f64]) -> Vec<f64> {
    let k = double_layer_matrix(&shape.nodes(theta.len()));
    k.iter().map(|row| row.iter().zip(theta).map(|(a, b)| a * b).sum()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn perturbed() -> BoundaryShape {
        BoundaryShape::new(vec![0.1, -0.05, 1.0, 0.0, 0.0, 1.0, 0.15, 0.0, 0.07, 0.1, 0.0, -0.05, 0.07, 0.0]).unwrap()
    }

    #[test]
    fn constant_field_has_zero_potential() {
        let lat = Lattice::new(1.3, 0.7).unwrap();
        let f = PeriodicField::constant(&lat, 2.0);
        let p = f.newtonian();
        assert!(p.modes().is_empty());
        assert_eq!(p.eval([0.3, 0.2]), 0.0);
        assert_abs_diff_eq!(f.cell_integral().value, 2.0 * 1.3 * 0.7, epsilon = 1e-14);
        assert_abs_diff_eq!(PeriodicField::constant(&Lattice::unit(), 1.0).cell_integral().value, 1.0);
    }

    #[test]
    fn cosine_eigenfunction() {
        let lat = Lattice::new(1.5, 1.0).unwrap();
        let f = PeriodicField::from_modes(&lat, &[(1, 0, 0.5, 0.0)]).unwrap();
        let p = f.newtonian();
        for x in [[0.2, 0.3], [1.1, 0.9]] {
            let arg = 2.0 * PI * x[0] / 1.5;
            assert_abs_diff_eq!(f.eval(x), arg.cos(), epsilon = 1e-14);
            assert_abs_diff_eq!(p.eval(x), -(1.5f64.powi(2)) / (4.0 * PI * PI) * arg.cos(), epsilon = 1e-14);
        }
        assert_abs_diff_eq!(f.cell_integral().value, 0.0);
    }

    #[test]
    fn spectral_residual_vanishes() {
        let lat = Lattice::new(1.2, 0.8).unwrap();
        let f = PeriodicField::from_modes(&lat, &[(0, 0, 0.7, 0.0), (1, 2, 0.3, -0.1), (-3, 1, 0.05, 0.2)]).unwrap();
        let lap = f.newtonian().laplacian();
        for md in f.modes() {
            let expected = if md.k == [0, 0] { Complex64::default() } else { md.c };
            assert!((lap.coefficient(md.k) - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn samples_and_coefficients_consistent() {
        let lat = Lattice::new(1.2, 0.8).unwrap();
        let f = PeriodicField::from_modes(&lat, &[(0, 0, 0.7, 0.0), (1, 2, 0.3, -0.1), (-3, 1, 0.05, 0.2)]).unwrap();
        let m = f.grid_size();
        for (idx, v) in f.samples().iter().enumerate() {
            let x = [(idx / m) as f64 * 1.2 / m as f64, (idx % m) as f64 * 0.8 / m as f64];
            assert_abs_diff_eq!(*v, f.eval(x), epsilon = 1e-12);
        }
        let back = PeriodicField::from_samples(&lat, m, f.samples().to_vec()).unwrap();
        let fine = f.with_grid(2 * m).unwrap();
        assert_abs_diff_eq!(fine.eval([0.3, 0.7]), f.eval([0.3, 0.7]), epsilon = 1e-14);
        assert!(f.with_grid(4).is_err());
        for md in f.modes() {
            assert!((back.coefficient(md.k) - md.c).norm() < 1e-12);
        }
        // Conjugate partner was filled in.
        assert!((f.coefficient([-1, -2]) - Complex64::new(0.3, 0.1)).norm() < 1e-15);
    }

    #[test]
    fn rejects_non_conjugate_partner() {
        let lat = Lattice::unit();
        assert!(PeriodicField::from_modes(&lat, &[(1, 0, 0.5, 0.0), (-1, 0, 0.4, 0.0)]).is_err());
        assert!(PeriodicField::from_modes(&lat, &[(1, 0, 0.5, 0.1), (-1, 0, 0.5, -0.1)]).is_ok());
    }

    #[test]
    fn from_fn_resolves_band_limited_input() {
        let lat = Lattice::unit();
        let f = PeriodicField::from_fn(&lat, |x| (2.0 * PI * 3.0 * x[0]).cos() * (2.0 * PI * x[1]).sin()).unwrap();
        assert!((f.coefficient([3, 1]) - Complex64::new(0.0, -0.25)).norm() < 1e-14);
    }

    #[test]
    fn newtonian_twice_composes_multipliers() {
        let lat = Lattice::new(1.1, 0.9).unwrap();
        let f = PeriodicField::from_modes(&lat, &[(2, -1, 0.4, 0.3), (0, 1, 1.0, 0.0)]).unwrap();
        let pp = f.newtonian().newtonian();
        for md in f.modes() {
            let kt = [md.k[0] as f64 / 1.1, md.k[1] as f64 / 0.9];
            let kk = kt[0] * kt[0] + kt[1] * kt[1];
            let expected = md.c / (16.0 * PI.powi(4) * kk * kk);
            assert!((pp.coefficient(md.k) - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn corrected_potential_cases() {
        let lat = Lattice::unit();
        let p = [0.5, 0.5];
        let x = [0.2, 0.7];
        let zero_mean = PeriodicField::from_modes(&lat, &[(1, 1, 0.3, 0.0)]).unwrap();
        assert_abs_diff_eq!(
            corrected_potential_eval(&zero_mean, p, x).unwrap(),
            zero_mean.newtonian().eval(x),
            epsilon = 1e-15
        );
        let one = PeriodicField::constant(&lat, 1.0);
        assert_abs_diff_eq!(
            corrected_potential_eval(&one, p, x).unwrap(),
            -lat.eval_sq([x[0] - p[0], x[1] - p[1]]).unwrap(),
            epsilon = 1e-15
        );
        assert!(corrected_potential_eval(&one, p, [1.5, 0.5]).is_err());
    }

    #[test]
    fn corrected_potential_solves_poisson() {
        let lat = Lattice::new(1.0, 1.2).unwrap();
        let f = PeriodicField::from_modes(&lat, &[(0, 0, 2.5, 0.0), (1, 0, 0.3, 0.1), (0, 2, -0.2, 0.0)]).unwrap();
        let u = CorrectedPotential::new(&f, [0.4, 0.6]);
        let h = 1e-3;
        for x in [[0.1, 0.1], [0.8, 1.0], [0.5, 0.2]] {
            let v = |dx: f64, dy: f64| u.eval([x[0] + dx, x[1] + dy]).unwrap();
            let lap = (v(h, 0.0) + v(-h, 0.0) + v(0.0, h) + v(0.0, -h) - 4.0 * v(0.0, 0.0)) / (h * h);
            assert_abs_diff_eq!(lap, f.eval(x), epsilon = 1e-4);
        }
        for z in [[1.0, 0.0], [-2.0, 1.2], [3.0, -2.4]] {
            let x = [0.3, 0.9];
            assert_abs_diff_eq!(u.eval(x).unwrap(), u.eval([x[0] + z[0], x[1] + z[1]]).unwrap(), epsilon = 1e-10);
        }
    }

    #[test]
    fn gauss_identity() {
        for shape in [BoundaryShape::circle(1.0).unwrap(), perturbed()] {
            let ones = vec![1.0; 256];
            assert_abs_diff_eq!(classical_double_layer_eval(&shape, &ones, [0.1, 0.05]).unwrap(), 1.0, epsilon = 1e-10);
            assert_abs_diff_eq!(classical_double_layer_eval(&shape, &ones, [0.3, -0.4]).unwrap(), 1.0, epsilon = 1e-10);
            assert_abs_diff_eq!(classical_double_layer_eval(&shape, &ones, [2.0, 1.0]).unwrap(), 0.0, epsilon = 1e-10);
            assert_abs_diff_eq!(classical_double_layer_eval(&shape, &ones, [-1.7, 0.2]).unwrap(), 0.0, epsilon = 1e-10);
            let zeros = vec![0.0; 256];
            assert_eq!(classical_double_layer_eval(&shape, &zeros, [2.0, 1.0]).unwrap(), 0.0);
            for v in classical_double_layer_trace(&shape, &ones) {
                assert_abs_diff_eq!(v, 0.5, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn near_curve_rejected() {
        let c = BoundaryShape::circle(1.0).unwrap();
        let th = vec![1.0; 64];
        assert!(matches!(classical_double_layer_eval(&c, &th, [1.01, 0.0]), Err(Error::NearBoundary { .. })));
    }

    /// Adaptive Simpson on the curve parameter.
    fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, d: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (l, r) = (0.5 * (a + m), 0.5 * (m + b));
            let (fl, fr) = (f(l), f(r));
            let left = (m - a) / 6.0 * (fa + 4.0 * fl + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * fr + fb);
            if d == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, m, fa, fl, fm, left, tol / 2.0, d - 1) + rec(f, m, b, fm, fr, fb, right, tol / 2.0, d - 1)
            }
        }
        let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
        rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
    }

    #[test]
    fn circle_cosine_density_matches_adaptive_quadrature() {
        let c = BoundaryShape::circle(1.0).unwrap();
        let n = 256;
        let theta: Vec<f64> = (0..n).map(|j| (2.0 * PI * j as f64 / n as f64).cos()).collect();
        let x = [2.0, 0.0];
        let integrand = |t: f64| {
            let (s, co) = t.sin_cos();
            let d = [x[0] - co, x[1] - s];
            -(co * d[0] + s * d[1]) / (2.0 * PI * (d[0] * d[0] + d[1] * d[1])) * co
        };
        let oracle = adaptive(&integrand, 0.0, 2.0 * PI, 1e-14);
        assert_abs_diff_eq!(classical_double_layer_eval(&c, &theta, x).unwrap(), oracle, epsilon = 1e-10);
    }

    #[test]
    fn jump_relation_by_normal_extrapolation() {
        for shape in [BoundaryShape::circle(1.0).unwrap(), perturbed()] {
            let n = 256;
            let theta: Vec<f64> = (0..n)
                .map(|j| {
                    let t = 2.0 * PI * j as f64 / n as f64;
                    0.3 + t.cos() - 0.4 * (2.0 * t).sin()
                })
                .collect();
            let trace = classical_double_layer_trace(&shape, &theta);
            for i in (0..n).step_by(37) {
                let t = 2.0 * PI * i as f64 / n as f64;
                let inner = double_layer_normal_limit(&shape, &theta, t, true, 16).unwrap();
                let outer = double_layer_normal_limit(&shape, &theta, t, false, 16).unwrap();
                assert_abs_diff_eq!(inner, trace[i] + theta[i] / 2.0, epsilon = 1e-6);
                assert_abs_diff_eq!(outer, trace[i] - theta[i] / 2.0, epsilon = 1e-6);
            }
        }
    }
}
