use std::f64::consts::PI;

use holelab::lab::{epsilon_sweep, fit_log_slope, geometric_grid};
use holelab::solver::{adjoint_density, limit_constant, solve_density, solve_limit};
use holelab::verify::perturbed_shape;
use holelab::{BoundaryData, BoundaryShape, Error, Lattice, PeriodicField, ProblemData};
use proptest::prelude::*;

const PROBES: [[f64; 2]; 3] = [[0.1, 0.1], [0.9, 0.3], [0.25, 0.75]];

fn problem(lat: &Lattice, shape: BoundaryShape, g: BoundaryData, modes: &[(i64, i64, f64, f64)]) -> ProblemData {
    let f = PeriodicField::from_modes(lat, modes).unwrap();
    ProblemData::new(lat, 0.0, [0.5, 0.5], shape, g, f, 64).unwrap()
}

fn slopes(data: &ProblemData) -> Vec<f64> {
    let rep = epsilon_sweep(data, &geometric_grid(1e-2, 1e-3, 6), &PROBES).unwrap();
    (0..PROBES.len()).map(|i| fit_log_slope(&rep, i).unwrap().b).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn green_function_is_periodic_and_even(x in 0.05f64..0.95, y in 0.05f64..0.95, q11 in 0.7f64..1.5, q22 in 0.7f64..1.5) {
        let lat = Lattice::new(q11, q22).unwrap();
        let p = [x * q11, y * q22];
        let s = lat.eval_sq(p).unwrap();
        let shifted = lat.eval_sq([p[0] - 2.0 * q11, p[1] + q22]).unwrap();
        let mirrored = lat.eval_sq([-p[0], -p[1]]).unwrap();
        prop_assert!((s - shifted).abs() < 1e-11);
        prop_assert!((s - mirrored).abs() < 1e-11);
    }

    #[test]
    fn density_satisfies_zero_moment(eps in -0.03f64..0.03, a0 in -1.0f64..1.0, a1 in -1.0f64..1.0, b2 in -1.0f64..1.0) {
        let lat = Lattice::new(1.1, 0.9).unwrap();
        let g = BoundaryData::trig(vec![a0, a1, 0.0, 0.0, b2]).unwrap();
        let data = problem(&lat, perturbed_shape(), g, &[(0, 0, 1.0, 0.0), (1, 0, 0.2, 0.1)]).with_eps(eps).unwrap();
        let sol = if eps == 0.0 { solve_limit(&data) } else { solve_density(&data) }.unwrap();
        prop_assert!(sol.weighted_integral(data.shape()).abs() < 1e-10);
        prop_assert!(sol.theta.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn adjoint_is_normalized(a in 0.5f64..2.0, b in 0.5f64..2.0, c2 in -0.1f64..0.1) {
        let shape = BoundaryShape::new(vec![0.0, 0.0, a, 0.0, 0.0, b, c2, 0.0, 0.0, c2]).unwrap();
        let tau = adjoint_density(&shape, 64).unwrap();
        prop_assert!((tau.weighted_integral(&shape) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn limit_constant_routes_agree(a0 in -1.0f64..1.0, a1 in -1.0f64..1.0, b1 in -1.0f64..1.0, re in -1.0f64..1.0) {
        let lat = Lattice::new(1.0, 1.2).unwrap();
        let g = BoundaryData::trig(vec![a0, a1, b1]).unwrap();
        let data = problem(&lat, perturbed_shape(), g, &[(0, 0, re, 0.0), (0, 1, 0.3, 0.0)]);
        let direct = solve_limit(&data).unwrap().constant;
        let adjoint = limit_constant(&data).unwrap();
        prop_assert!((direct - adjoint).abs() < 1e-10 * (1.0 + direct.abs()));
    }
}

#[test]
fn circle_adjoint_is_uniform() {
    for r in [0.5, 1.0, 3.0] {
        let tau = adjoint_density(&BoundaryShape::circle(r).unwrap(), 32).unwrap();
        for v in &tau.theta {
            assert!((v - 1.0 / (2.0 * PI * r)).abs() < 1e-12);
        }
    }
}

#[test]
fn slope_scales_with_cell_integral() {
    let lat = Lattice::unit();
    let circle = || BoundaryShape::circle(1.0).unwrap();
    let one = slopes(&problem(&lat, circle(), BoundaryData::constant(0.0), &[(0, 0, 1.0, 0.0)]));
    let more = slopes(&problem(&lat, circle(), BoundaryData::constant(0.0), &[(0, 0, 2.5, 0.0)]));
    for (a, b) in one.iter().zip(&more) {
        assert!((a - 1.0 / (2.0 * PI)).abs() < 1e-4 / (2.0 * PI), "{a}");
        assert!((b / a - 2.5).abs() < 1e-10);
    }
}

#[test]
fn slope_ignores_zero_mean_forcing() {
    let lat = Lattice::unit();
    let circle = || BoundaryShape::circle(1.0).unwrap();
    let plain = slopes(&problem(&lat, circle(), BoundaryData::constant(0.0), &[(0, 0, 1.0, 0.0)]));
    let rich = slopes(&problem(
        &lat,
        circle(),
        BoundaryData::constant(0.0),
        &[(0, 0, 1.0, 0.0), (1, 0, 0.5, 0.0), (0, 1, 0.3, 0.0), (1, 1, 0.2, 0.0)],
    ));
    for (a, b) in plain.iter().zip(&rich) {
        assert!((a - b).abs() < 1e-4, "{a} vs {b}");
    }
}

#[test]
fn rescaled_density_approaches_limit() {
    let lat = Lattice::new(1.2, 0.9).unwrap();
    let g = BoundaryData::trig(vec![0.3, 0.5, -0.2]).unwrap();
    let data = problem(&lat, perturbed_shape(), g, &[(0, 0, 1.0, 0.0), (1, 0, 0.4, 0.2)]);
    let limit = solve_limit(&data).unwrap();
    let mut prev = f64::INFINITY;
    for eps in [0.04, 0.02, 0.01, 0.005, 0.0025] {
        let sol = solve_density(&data.with_eps(eps).unwrap()).unwrap();
        let d = sol.theta.iter().zip(&limit.theta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(d < prev, "eps {eps}: {d} >= {prev}");
        prev = d;
    }
    assert!(prev < 1e-2);
}

#[test]
fn oversized_hole_is_rejected() {
    let lat = Lattice::unit();
    let data = problem(&lat, BoundaryShape::circle(1.0).unwrap(), BoundaryData::constant(0.0), &[(0, 0, 1.0, 0.0)]);
    assert!(data.with_eps(0.45).is_ok());
    assert!(matches!(data.with_eps(0.55), Err(Error::Containment { .. })));
    assert!(matches!(data.with_eps(-0.55), Err(Error::Containment { .. })));
}
