//! Exponential-integral helpers for the 2D Ewald kernels.

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Entire part of the exponential integral,
/// `Ein(u) = sum_{m>=1} (-1)^{m+1} u^m / (m m!)`, so that
/// `E1(u) = -gamma - ln u + Ein(u)`.
pub fn ein(u: f64) -> f64 {
    if u > 4.0 {
        return expint_e1(u) + EULER_GAMMA + u.ln();
    }
    let mut term = u;
    let mut sum = u;
    let mut m = 1.0;
    loop {
        term *= -u * m / ((m + 1.0) * (m + 1.0));
        m += 1.0;
        sum += term;
        if term.abs() <= 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// Exponential integral `E1(u) = int_u^inf e^{-s}/s ds` for `u > 0`.
pub fn expint_e1(u: f64) -> f64 {
    debug_assert!(u > 0.0);
    if u <= 1.0 {
        return -EULER_GAMMA - u.ln() + ein(u);
    }
    // Modified Lentz evaluation of the continued fraction.
    let tiny = 1e-300;
    let mut b = u + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-17 {
            break;
        }
    }
    h * (-u).exp()
}

/// `(1 - e^{-u}) / u`, finite at `u = 0`.
pub fn one_minus_exp_over(u: f64) -> f64 {
    if u < 1e-8 {
        1.0 - 0.5 * u
    } else {
        -(-u).exp_m1() / u
    }
}
