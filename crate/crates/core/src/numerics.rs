//! Small extrapolation and fitting utilities shared by the verification code.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Value at 0 of the interpolating polynomial through `(xs[i], ys[i])` (Neville).
pub fn extrapolate_to_zero(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let mut p = ys.to_vec();
    let n = xs.len();
    for level in 1..n {
        for i in 0..n - level {
            let (a, b) = (xs[i], xs[i + level]);
            p[i] = (-b * p[i] + a * p[i + 1]) / (a - b);
        }
    }
    p[0]
}

/// Least-squares polynomial fit `y ~ sum_k c_k x^k`, `k <= degree`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyFit {
    pub coeffs: Vec<f64>,
    /// Largest absolute deviation of the data from the fit.
    pub residual: f64,
}

impl PolyFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
}

pub fn polyfit(xs: &[f64], ys: &[f64], degree: usize) -> Result<PolyFit> {
    if xs.len() != ys.len() || xs.len() <= degree {
        return Err(Error::InvalidInput(format!(
            "polynomial fit of degree {degree} needs more than {} points",
            xs.len()
        )));
    }
    // Scale abscissae to O(1) before forming the Vandermonde matrix.
    let scale = xs.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let a = DMatrix::from_fn(xs.len(), degree + 1, |i, k| (xs[i] / scale).powi(k as i32));
    let b = DVector::from_column_slice(ys);
    let svd = a.svd(true, true);
    let c = svd
        .solve(&b, 1e-14)
        .map_err(|e| Error::Numerical(format!("polynomial fit failed: {e}")))?;
    let coeffs: Vec<f64> = c.iter().enumerate().map(|(k, v)| v / scale.powi(k as i32)).collect();
    let fit = PolyFit { coeffs, residual: 0.0 };
    let residual = xs.iter().zip(ys).map(|(x, y)| (fit.eval(*x) - y).abs()).fold(0.0, f64::max);
    Ok(PolyFit { residual, ..fit })
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // P_n(x) and P_n'(x) by the three-term recurrence.
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}
