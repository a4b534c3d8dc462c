//! FFT helpers: 2D grid transforms and 1D trigonometric resampling.

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

/// In-place 2D DFT of a row-major `m x m` array (unnormalized).
pub fn fft2(data: &mut [Complex64], m: usize, direction: FftDirection) {
    assert_eq!(data.len(), m * m);
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft(m, direction);
    for row in data.chunks_mut(m) {
        fft.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); m];
    for j in 0..m {
        for i in 0..m {
            col[i] = data[i * m + j];
        }
        fft.process(&mut col);
        for i in 0..m {
            data[i * m + j] = col[i];
        }
    }
}

/// Index of wavenumber `k` in a length-`m` DFT array.
pub fn wrap(k: i64, m: usize) -> usize {
    k.rem_euclid(m as i64) as usize
}

/// Signed wavenumber stored at DFT index `i`.
pub fn unwrap(i: usize, m: usize) -> i64 {
    if i < m.div_ceil(2) {
        i as i64
    } else {
        i as i64 - m as i64
    }
}

/// Trigonometric interpolant of equispaced periodic samples, resampled on `m` points.
///
/// For even input length the Nyquist coefficient is split symmetrically, so the
/// interpolant is real and reproduces the input at the original nodes.
pub fn trig_resample(values: &[f64], m: usize) -> Vec<f64> {
    let n = values.len();
    if n == m {
        return values.to_vec();
    }
    let mut planner = FftPlanner::<f64>::new();
    let mut spec: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut spec);
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    let half = n / 2;
    for (i, c) in spec.iter().enumerate() {
        let k = unwrap(i, n);
        let c = *c / n as f64;
        if n.is_multiple_of(2) && i == half {
            // Split the Nyquist mode between +n/2 and -n/2.
            if half < m.div_ceil(2) {
                out[wrap(half as i64, m)] += 0.5 * c;
                out[wrap(-(half as i64), m)] += 0.5 * c;
            }
            continue;
        }
        if k.unsigned_abs() as usize * 2 < m {
            out[wrap(k, m)] += c;
        }
    }
    planner.plan_fft_inverse(m).process(&mut out);
    out.iter().map(|c| c.re).collect()
}
