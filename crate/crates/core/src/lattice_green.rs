//! Periodic fundamental solution of the Laplacian on a rectangular lattice.
//!
//! `S_q` is the q-periodic function with `Delta S_q = sum_z delta_{qz} - 1/|Q|`
//! and zero cell mean. It is evaluated by Ewald splitting the heat-kernel
//! representation `1/(4 pi^2 |k|^2) = int_0^inf exp(-4 pi^2 |k|^2 t) dt` at
//! `t = 1/(4 alpha^2)`:
//!
//! ```text
//! S_q(x) = -1/(4 pi) sum_z E1(alpha^2 |x - qz|^2) + 1/(4 alpha^2 |Q|)
//!          - 1/|Q| sum_{k != 0} exp(-pi^2 |k~|^2 / alpha^2) / (4 pi^2 |k~|^2) cos(2 pi k~ . x)
//! ```
//!
//! with `k~ = q^{-1} k`. The additive constant is the exact contribution of
//! the excluded zero mode, so the cell mean vanishes identically.
//!
//! `R_q = S_q - S_2`, `S_2(x) = log|x| / (2 pi)`, extends analytically to the
//! origin; near it the `z = 0` image is expanded with `E1 = -gamma - ln u + Ein(u)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{ein, expint_e1, one_minus_exp_over, EULER_GAMMA};
use crate::Point;

/// Tail bound for the first excluded real or reciprocal shell.
const SHELL_TOL: f64 = 1e-15;
/// Relative exclusion radius around lattice singularities.
const EXCLUSION: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
struct RecipTerm {
    /// 2 pi k~
    wave: [f64; 2],
    /// 2 exp(-pi^2|k~|^2/alpha^2) / (|Q| 4 pi^2 |k~|^2); the factor 2 folds in -k.
    weight: f64,
}

/// Rectangular lattice `q Z^2` with `q = diag(q11, q22)` plus Ewald parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    q: [f64; 2],
    cell_measure: f64,
    ewald_split: f64,
    real_cutoff: i32,
    recip_cutoff: i32,
    real_images: Vec<[f64; 2]>,
    recip: Vec<RecipTerm>,
}

/// Value and gradient of a Green's function at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreenValue {
    pub value: f64,
    pub gradient: [f64; 2],
}

impl Lattice {
    /// Lattice with the default split `sqrt(pi) / max(q11, q22)`.
    pub fn new(q11: f64, q22: f64) -> Result<Self> {
        let split = PI.sqrt() / q11.max(q22);
        Self::with_ewald_split(q11, q22, split)
    }

    pub fn unit() -> Self {
        Self::new(1.0, 1.0).expect("unit lattice")
    }

    pub fn with_ewald_split(q11: f64, q22: f64, ewald_split: f64) -> Result<Self> {
        for (name, v) in [("q11", q11), ("q22", q22), ("ewald_split", ewald_split)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidLattice(format!("{name} must be positive and finite, got {v}")));
            }
        }
        let q = [q11, q22];
        let cell_measure = q11 * q22;
        let qmin = q11.min(q22);
        let qmax = q11.max(q22);
        let a2 = ewald_split * ewald_split;

        // Reduced points satisfy |x_i| <= q_i/2, so images in shell n >= 1 are at
        // distance >= (n - 1/2) qmin. Raise the cutoff until shell n+1 is negligible.
        let mut real_cutoff = 1;
        loop {
            let n = (real_cutoff + 1) as f64;
            let d = (n - 0.5) * qmin;
            let u = a2 * d * d;
            let per_image = expint_e1(u) / (4.0 * PI) + (-u).exp() / (2.0 * PI * d);
            if 8.0 * n * per_image < SHELL_TOL {
                break;
            }
            real_cutoff += 1;
        }

        let mut recip_cutoff = 1;
        loop {
            let m = (recip_cutoff + 1) as f64;
            let k2_min = (m / qmax).powi(2);
            let k_max = std::f64::consts::SQRT_2 * m / qmin;
            let w = (-PI * PI * k2_min / a2).exp() / (cell_measure * 4.0 * PI * PI * k2_min);
            if 8.0 * m * w * (1.0 + 2.0 * PI * k_max) < SHELL_TOL {
                break;
            }
            recip_cutoff += 1;
        }

        let mut real_images = Vec::new();
        for z1 in -real_cutoff..=real_cutoff {
            for z2 in -real_cutoff..=real_cutoff {
                if z1 != 0 || z2 != 0 {
                    real_images.push([z1 as f64 * q11, z2 as f64 * q22]);
                }
            }
        }

        let mut recip = Vec::new();
        for k1 in 0..=recip_cutoff {
            for k2 in -recip_cutoff..=recip_cutoff {
                if k1 == 0 && k2 <= 0 {
                    continue;
                }
                let kt = [k1 as f64 / q11, k2 as f64 / q22];
                let kk = kt[0] * kt[0] + kt[1] * kt[1];
                let weight = 2.0 * (-PI * PI * kk / a2).exp() / (cell_measure * 4.0 * PI * PI * kk);
                recip.push(RecipTerm { wave: [2.0 * PI * kt[0], 2.0 * PI * kt[1]], weight });
            }
        }

        Ok(Self { q, cell_measure, ewald_split, real_cutoff, recip_cutoff, real_images, recip })
    }

    pub fn q(&self) -> [f64; 2] {
        self.q
    }

    pub fn q11(&self) -> f64 {
        self.q[0]
    }

    pub fn q22(&self) -> f64 {
        self.q[1]
    }

    /// `|Q| = q11 q22`.
    pub fn cell_measure(&self) -> f64 {
        self.cell_measure
    }

    pub fn ewald_split(&self) -> f64 {
        self.ewald_split
    }

    pub fn real_cutoff(&self) -> i32 {
        self.real_cutoff
    }

    pub fn recip_cutoff(&self) -> i32 {
        self.recip_cutoff
    }

    /// Shortest distance from a point to the lattice `q Z^2`.
    pub fn distance_to_lattice(&self, x: Point) -> f64 {
        let (r, _) = self.reduce(x);
        r[0].hypot(r[1])
    }

    /// Representative of `x` in `[-q/2, q/2]^2` and the lattice vector removed.
    pub fn reduce(&self, x: Point) -> (Point, Point) {
        let n0 = (x[0] / self.q[0]).round();
        let n1 = (x[1] / self.q[1]).round();
        let shift = [n0 * self.q[0], n1 * self.q[1]];
        ([x[0] - shift[0], x[1] - shift[1]], shift)
    }

    /// Whether `x` lies in the open cell `Q = ]0,q11[ x ]0,q22[`.
    pub fn in_open_cell(&self, x: Point) -> bool {
        x[0] > 0.0 && x[0] < self.q[0] && x[1] > 0.0 && x[1] < self.q[1]
    }

    fn exclusion(&self) -> f64 {
        EXCLUSION * self.q[0].min(self.q[1])
    }

    fn check_regular(&self, x: Point, reduced: Point) -> Result<()> {
        let d = reduced[0].hypot(reduced[1]);
        if !(d > self.exclusion()) {
            return Err(Error::Singularity { x: x[0], y: x[1], dist: d });
        }
        Ok(())
    }

    /// Sum over real-space images `z != 0` and the reciprocal part, common to
    /// both `S_q` and `R_q` at a reduced point.
    fn smooth_part(&self, x: Point) -> GreenValue {
        self.smooth_part_with(x, true)
    }

    fn smooth_part_with(&self, x: Point, with_value: bool) -> GreenValue {
        let a2 = self.ewald_split * self.ewald_split;
        let mut value = 1.0 / (4.0 * a2 * self.cell_measure);
        let mut gradient = [0.0, 0.0];
        for img in &self.real_images {
            let d = [x[0] - img[0], x[1] - img[1]];
            let r2 = d[0] * d[0] + d[1] * d[1];
            let u = a2 * r2;
            if with_value {
                value -= expint_e1(u) / (4.0 * PI);
            }
            let g = (-u).exp() / (2.0 * PI * r2);
            gradient[0] += g * d[0];
            gradient[1] += g * d[1];
        }
        for term in &self.recip {
            let phase = term.wave[0] * x[0] + term.wave[1] * x[1];
            let (s, c) = phase.sin_cos();
            value -= term.weight * c;
            gradient[0] += term.weight * s * term.wave[0];
            gradient[1] += term.weight * s * term.wave[1];
        }
        GreenValue { value, gradient }
    }

    /// `S_q(x)` and its gradient; `x` must stay away from `q Z^2`.
    pub fn green(&self, x: Point) -> Result<GreenValue> {
        let (r, _) = self.reduce(x);
        self.check_regular(x, r)?;
        let mut g = self.smooth_part(r);
        let a2 = self.ewald_split * self.ewald_split;
        let r2 = r[0] * r[0] + r[1] * r[1];
        let u = a2 * r2;
        g.value -= expint_e1(u) / (4.0 * PI);
        let f = (-u).exp() / (2.0 * PI * r2);
        g.gradient[0] += f * r[0];
        g.gradient[1] += f * r[1];
        Ok(g)
    }

    /// `R_q(x) = S_q(x) - S_2(x)` and its gradient, including `x = 0`.
    pub fn remainder(&self, x: Point) -> Result<GreenValue> {
        let (r, shift) = self.reduce(x);
        if shift != [0.0, 0.0] {
            // Away from the origin's cell the subtraction is benign.
            let g = self.green(x)?;
            let s2 = classical_green(x);
            let ds2 = classical_green_grad(x);
            return Ok(GreenValue {
                value: g.value - s2,
                gradient: [g.gradient[0] - ds2[0], g.gradient[1] - ds2[1]],
            });
        }
        let mut g = self.smooth_part(r);
        let a2 = self.ewald_split * self.ewald_split;
        let r2 = r[0] * r[0] + r[1] * r[1];
        let u = a2 * r2;
        // -E1(u)/(4 pi) - log|x|/(2 pi) = (gamma + 2 ln alpha - Ein(u)) / (4 pi)
        g.value += (EULER_GAMMA + 2.0 * self.ewald_split.ln() - ein(u)) / (4.0 * PI);
        let f = -a2 * one_minus_exp_over(u) / (2.0 * PI);
        g.gradient[0] += f * r[0];
        g.gradient[1] += f * r[1];
        if r == [0.0, 0.0] {
            // Even function: the image sums cancel only to rounding.
            g.gradient = [0.0, 0.0];
        }
        Ok(g)
    }

    /// Gradient of `R_q` without the exponential integrals needed for values.
    /// Used by the Nystrom assembly, which only needs `DR_q`.
    pub fn remainder_gradient(&self, x: Point) -> Result<[f64; 2]> {
        let (r, shift) = self.reduce(x);
        let a2 = self.ewald_split * self.ewald_split;
        let r2 = r[0] * r[0] + r[1] * r[1];
        let mut g = self.smooth_part_with(r, false).gradient;
        if shift == [0.0, 0.0] {
            if r2 == 0.0 {
                return Ok([0.0, 0.0]);
            }
            let f = -a2 * one_minus_exp_over(a2 * r2) / (2.0 * PI);
            g[0] += f * r[0];
            g[1] += f * r[1];
        } else {
            self.check_regular(x, r)?;
            let f = (-a2 * r2).exp() / (2.0 * PI * r2);
            let ds2 = classical_green_grad(x);
            g[0] += f * r[0] - ds2[0];
            g[1] += f * r[1] - ds2[1];
        }
        Ok(g)
    }

    pub fn eval_sq(&self, x: Point) -> Result<f64> {
        self.green(x).map(|g| g.value)
    }

    pub fn grad_sq(&self, x: Point) -> Result<[f64; 2]> {
        self.green(x).map(|g| g.gradient)
    }

    pub fn eval_rq(&self, x: Point) -> Result<f64> {
        self.remainder(x).map(|g| g.value)
    }

    pub fn grad_rq(&self, x: Point) -> Result<[f64; 2]> {
        self.remainder(x).map(|g| g.gradient)
    }
}

/// Classical fundamental solution `S_2(x) = log|x| / (2 pi)`.
pub fn classical_green(x: Point) -> f64 {
    x[0].hypot(x[1]).ln() / (2.0 * PI)
}

/// `DS_2(x) = x / (2 pi |x|^2)`.
pub fn classical_green_grad(x: Point) -> [f64; 2] {
    let r2 = x[0] * x[0] + x[1] * x[1];
    [x[0] / (2.0 * PI * r2), x[1] / (2.0 * PI * r2)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Gaussian-regularized Fourier series of S_q. Smoothing by the heat kernel
    /// shifts the value by exactly -t/|Q| (up to exp(-dist^2/(4t))), so two
    /// widths extrapolate linearly to the unregularized sum.
    fn fourier_sq(q: [f64; 2], x: Point) -> f64 {
        let measure = q[0] * q[1];
        let sum = |t: f64| {
            let kmax = (45.0 / (4.0 * PI * PI * t)).sqrt();
            let n1 = (kmax * q[0]).ceil() as i64;
            let n2 = (kmax * q[1]).ceil() as i64;
            let mut acc = 0.0;
            for k1 in -n1..=n1 {
                for k2 in -n2..=n2 {
                    if k1 == 0 && k2 == 0 {
                        continue;
                    }
                    let kt = [k1 as f64 / q[0], k2 as f64 / q[1]];
                    let kk = kt[0] * kt[0] + kt[1] * kt[1];
                    let phase = 2.0 * PI * (kt[0] * x[0] + kt[1] * x[1]);
                    acc += (-4.0 * PI * PI * kk * t).exp() / (4.0 * PI * PI * kk) * phase.cos();
                }
            }
            -acc / measure
        };
        let (t1, t2) = (2e-4, 1e-4);
        let (s1, s2) = (sum(t1), sum(t2));
        s2 + (s2 - s1) * t2 / (t1 - t2)
    }

    #[test]
    fn periodic_and_even() {
        let lat = Lattice::unit();
        let a = lat.eval_sq([0.3, 0.4]).unwrap();
        let b = lat.eval_sq([1.3, 0.4]).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-13);
        let c = lat.eval_sq([0.2, 0.3]).unwrap();
        let d = lat.eval_sq([-0.2, -0.3]).unwrap();
        assert_abs_diff_eq!(c, d, epsilon = 1e-14);
    }

    #[test]
    fn matches_fourier_oracle_at_cell_center() {
        let lat = Lattice::unit();
        let ewald = lat.eval_sq([0.5, 0.5]).unwrap();
        let oracle = fourier_sq([1.0, 1.0], [0.5, 0.5]);
        assert_abs_diff_eq!(ewald, oracle, epsilon = 1e-10);
    }

    #[test]
    fn matches_fourier_oracle_rectangular() {
        let lat = Lattice::new(1.5, 0.8).unwrap();
        for x in [[0.7, 0.4], [0.3, 0.1], [1.2, 0.55]] {
            let ewald = lat.eval_sq(x).unwrap();
            let oracle = fourier_sq([1.5, 0.8], x);
            assert_abs_diff_eq!(ewald, oracle, epsilon = 1e-10);
        }
    }

    #[test]
    fn gradient_odd_and_matches_finite_differences() {
        let lat = Lattice::unit();
        let x = [0.23, -0.31];
        let g = lat.grad_sq(x).unwrap();
        let gm = lat.grad_sq([-x[0], -x[1]]).unwrap();
        assert_abs_diff_eq!(g[0] + gm[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g[1] + gm[1], 0.0, epsilon = 1e-14);
        let h = 1e-5;
        let fd0 = (lat.eval_sq([x[0] + h, x[1]]).unwrap() - lat.eval_sq([x[0] - h, x[1]]).unwrap()) / (2.0 * h);
        let fd1 = (lat.eval_sq([x[0], x[1] + h]).unwrap() - lat.eval_sq([x[0], x[1] - h]).unwrap()) / (2.0 * h);
        assert_abs_diff_eq!(g[0], fd0, epsilon = 1e-8);
        assert_abs_diff_eq!(g[1], fd1, epsilon = 1e-8);
        let center = lat.grad_sq([0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(center[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(center[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn singularity_rejected() {
        let lat = Lattice::unit();
        assert!(matches!(lat.eval_sq([1.0, 0.0]), Err(Error::Singularity { .. })));
        assert!(matches!(lat.eval_sq([0.0, 0.0]), Err(Error::Singularity { .. })));
        assert!(lat.eval_rq([0.0, 0.0]).is_ok());
        assert!(matches!(lat.eval_rq([1.0, 1.0]), Err(Error::Singularity { .. })));
    }

    #[test]
    fn remainder_definition_and_symmetry() {
        let lat = Lattice::unit();
        let x = [0.1, 0.05];
        let r = lat.eval_rq(x).unwrap();
        let s = lat.eval_sq(x).unwrap();
        assert_abs_diff_eq!(r, s - classical_green(x), epsilon = 1e-12);
        assert_abs_diff_eq!(r, lat.eval_rq([-0.1, -0.05]).unwrap(), epsilon = 1e-14);
        let x = [0.2, 0.1];
        let dr = lat.grad_rq(x).unwrap();
        let ds = lat.grad_sq(x).unwrap();
        let d2 = classical_green_grad(x);
        assert_abs_diff_eq!(dr[0], ds[0] - d2[0], epsilon = 1e-12);
        assert_abs_diff_eq!(dr[1], ds[1] - d2[1], epsilon = 1e-12);
        assert_eq!(lat.grad_rq([0.0, 0.0]).unwrap(), [0.0, 0.0]);
        for x in [[0.2, 0.1], [0.0, 0.0], [0.7, -0.3], [-0.45, 0.6]] {
            let fast = lat.remainder_gradient(x).unwrap();
            let full = lat.grad_rq(x).unwrap();
            assert_abs_diff_eq!(fast[0], full[0], epsilon = 1e-14);
            assert_abs_diff_eq!(fast[1], full[1], epsilon = 1e-14);
        }
    }

    #[test]
    fn remainder_gradient_finite_differences() {
        let lat = Lattice::unit();
        let x = [0.1, 0.2];
        let h = 1e-5;
        let g = lat.grad_rq(x).unwrap();
        let fd0 = (lat.eval_rq([x[0] + h, x[1]]).unwrap() - lat.eval_rq([x[0] - h, x[1]]).unwrap()) / (2.0 * h);
        let fd1 = (lat.eval_rq([x[0], x[1] + h]).unwrap() - lat.eval_rq([x[0], x[1] - h]).unwrap()) / (2.0 * h);
        assert_abs_diff_eq!(g[0], fd0, epsilon = 1e-8);
        assert_abs_diff_eq!(g[1], fd1, epsilon = 1e-8);
    }

    /// R_q(0) by the regularized Fourier series:
    /// (S_q * G_t)(0) = int log|y|/(2 pi) G_t + R_q(0) - t/|Q|, and the first
    /// integral equals (ln(4t) - gamma)/(4 pi).
    fn fourier_rq0(q: [f64; 2]) -> f64 {
        let measure = q[0] * q[1];
        let at = |t: f64| {
            let kmax = (45.0 / (4.0 * PI * PI * t)).sqrt();
            let n1 = (kmax * q[0]).ceil() as i64;
            let n2 = (kmax * q[1]).ceil() as i64;
            let mut acc = 0.0;
            for k1 in -n1..=n1 {
                for k2 in -n2..=n2 {
                    if k1 == 0 && k2 == 0 {
                        continue;
                    }
                    let kk = (k1 as f64 / q[0]).powi(2) + (k2 as f64 / q[1]).powi(2);
                    acc += (-4.0 * PI * PI * kk * t).exp() / (4.0 * PI * PI * kk);
                }
            }
            -acc / measure - ((4.0 * t).ln() - EULER_GAMMA) / (4.0 * PI) + t / measure
        };
        let (t1, t2) = (2e-3, 1e-3);
        let (a, b) = (at(t1), at(t2));
        b + (b - a) * t2 / (t1 - t2)
    }

    #[test]
    fn remainder_at_origin_matches_fourier_oracle() {
        let lat = Lattice::unit();
        assert_abs_diff_eq!(lat.eval_rq([0.0, 0.0]).unwrap(), fourier_rq0([1.0, 1.0]), epsilon = 1e-10);
        let lat = Lattice::new(2.0, 0.7).unwrap();
        assert_abs_diff_eq!(lat.eval_rq([0.0, 0.0]).unwrap(), fourier_rq0([2.0, 0.7]), epsilon = 1e-10);
    }

    #[test]
    fn split_parameter_independence() {
        let a = Lattice::unit();
        let b = Lattice::with_ewald_split(1.0, 1.0, 2.0 * a.ewald_split()).unwrap();
        let c = Lattice::with_ewald_split(1.0, 1.0, 0.5 * a.ewald_split()).unwrap();
        for x in [[0.5, 0.5], [0.1, 0.02], [0.37, 0.81], [0.0, 0.0]] {
            let ra = a.remainder(x).unwrap();
            for other in [&b, &c] {
                let rb = other.remainder(x).unwrap();
                assert_abs_diff_eq!(ra.value, rb.value, epsilon = 1e-10);
                assert_abs_diff_eq!(ra.gradient[0], rb.gradient[0], epsilon = 1e-10);
                assert_abs_diff_eq!(ra.gradient[1], rb.gradient[1], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn discrete_laplacian_is_minus_inverse_measure() {
        let lat = Lattice::new(1.2, 0.9).unwrap();
        let h = 1e-3;
        for x in [[0.6, 0.45], [0.3, 0.7], [0.9, 0.2]] {
            let f = |dx: f64, dy: f64| lat.eval_sq([x[0] + dx, x[1] + dy]).unwrap();
            let lap = (f(h, 0.0) + f(-h, 0.0) + f(0.0, h) + f(0.0, -h) - 4.0 * f(0.0, 0.0)) / (h * h);
            assert_abs_diff_eq!(lap, -1.0 / lat.cell_measure(), epsilon = 1e-4);
        }
    }

    #[test]
    fn remainder_is_smooth_near_origin() {
        // R_q = R_q(0) - |x|^2/(4|Q|) + harmonic quadratic + O(|x|^4) on the square lattice.
        let lat = Lattice::unit();
        let r0 = lat.eval_rq([0.0, 0.0]).unwrap();
        for &(x, y) in &[(0.05, 0.0), (0.03, 0.04), (-0.02, 0.01), (0.0, -0.05)] {
            let r = lat.eval_rq([x, y]).unwrap();
            let quad = r0 - (x * x + y * y) / 4.0;
            assert!((r - quad).abs() < 1e-6, "residual {}", (r - quad).abs());
        }
    }
}
