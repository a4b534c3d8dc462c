//! Band-limited hole shapes `phi` on the unit-circle reference boundary.
//!
//! A shape is stored as the trigonometric polynomial
//! `phi(t) = a0 + sum_k (a_k cos kt + b_k sin kt)` (vector-valued) with the
//! flat coefficient layout `[a0x, a0y, a1x, b1x, a1y, b1y, a2x, b2x, ...]`.
//! Since the reference boundary is parametrized by unit speed, `sigma~` is
//! simply `|phi'(t)|`.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::lattice_green::Lattice;
use crate::Point;

/// Samples used by the validity checks.
pub const VALIDATION_SAMPLES: usize = 4096;
/// Neighbours within this many samples are not tested for proximity.
const ADJACENCY_WINDOW: usize = 8;
const MIN_SPEED: f64 = 1e-10;
const CONTAINMENT_MARGIN: f64 = 1e-9;

/// Validated simple, counterclockwise, regular closed curve.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryShape {
    coeffs: Vec<f64>,
    max_degree: usize,
    samples: Vec<Point>,
    /// Conservative bounding box `[xmin, xmax, ymin, ymax]` of the whole curve.
    bbox: [f64; 4],
    area: f64,
}

/// Geometric quantities at one parameter value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShapeKinematics {
    pub point: Point,
    pub tangent: [f64; 2],
    pub outward_normal: [f64; 2],
    pub sigma_tilde: f64,
    pub curvature: f64,
}

impl BoundaryShape {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        make_shape(coeffs)
    }

    pub fn circle(radius: f64) -> Result<Self> {
        make_shape(vec![0.0, 0.0, radius, 0.0, 0.0, radius])
    }

    pub fn ellipse(a: f64, b: f64) -> Result<Self> {
        make_shape(vec![0.0, 0.0, a, 0.0, 0.0, b])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Area of the enclosed region `I[phi]`.
    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn bbox(&self) -> [f64; 4] {
        self.bbox
    }

    fn harmonic(&self, k: usize) -> [f64; 4] {
        let i = 2 + 4 * (k - 1);
        [self.coeffs[i], self.coeffs[i + 1], self.coeffs[i + 2], self.coeffs[i + 3]]
    }

    /// `phi(t)`, `phi'(t)` and `phi''(t)`.
    pub fn derivatives(&self, t: f64) -> [[f64; 2]; 3] {
        let mut p = [self.coeffs[0], self.coeffs[1]];
        let mut d1 = [0.0; 2];
        let mut d2 = [0.0; 2];
        for k in 1..=self.max_degree {
            let [ax, bx, ay, by] = self.harmonic(k);
            let kf = k as f64;
            let (s, c) = (kf * t).sin_cos();
            p[0] += ax * c + bx * s;
            p[1] += ay * c + by * s;
            d1[0] += kf * (-ax * s + bx * c);
            d1[1] += kf * (-ay * s + by * c);
            d2[0] -= kf * kf * (ax * c + bx * s);
            d2[1] -= kf * kf * (ay * c + by * s);
        }
        [p, d1, d2]
    }

    pub fn point(&self, t: f64) -> Point {
        self.derivatives(t)[0]
    }

    pub fn kinematics(&self, t: f64) -> ShapeKinematics {
        shape_kinematics(self, t)
    }

    /// Kinematics at the equispaced nodes `t_j = 2 pi j / n`.
    pub fn nodes(&self, n: usize) -> Vec<ShapeKinematics> {
        (0..n).map(|j| shape_kinematics(self, 2.0 * PI * j as f64 / n as f64)).collect()
    }

    /// Approximate distance from `y` to the curve, from the dense samples.
    pub fn distance_to_curve(&self, y: Point) -> f64 {
        polyline_distance(&self.samples, y)
    }

    /// Whether `y` lies in the open interior `I[phi]` (winding number test).
    pub fn contains(&self, y: Point) -> bool {
        winding_number(&self.samples, y) != 0
    }
}

/// Validates a coefficient vector and builds the shape.
pub fn make_shape(coeffs: Vec<f64>) -> Result<BoundaryShape> {
    if coeffs.len() < 6 || !(coeffs.len() - 2).is_multiple_of(4) {
        return Err(Error::InvalidShape(format!(
            "coefficient list must have length 2 + 4k with k >= 1, got {}",
            coeffs.len()
        )));
    }
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidShape("non-finite coefficient".into()));
    }
    let max_degree = (coeffs.len() - 2) / 4;
    let mut shape = BoundaryShape { coeffs, max_degree, samples: Vec::new(), bbox: [0.0; 4], area: 0.0 };

    let m = VALIDATION_SAMPLES;
    let h = 2.0 * PI / m as f64;
    let mut samples = Vec::with_capacity(m);
    let mut steps = Vec::with_capacity(m);
    let mut max_accel: f64 = 0.0;
    for j in 0..m {
        let [p, d1, d2] = shape.derivatives(h * j as f64);
        let speed = d1[0].hypot(d1[1]);
        if speed <= MIN_SPEED {
            return Err(Error::InvalidShape(format!("tangent vanishes near t = {}", h * j as f64)));
        }
        samples.push(p);
        steps.push(speed * h);
        max_accel = max_accel.max(d2[0].hypot(d2[1]));
    }

    check_simple(&samples, &steps)?;

    let area = 0.5
        * (0..m)
            .map(|j| {
                let a = samples[j];
                let b = samples[(j + 1) % m];
                a[0] * b[1] - a[1] * b[0]
            })
            .sum::<f64>();
    if area <= 0.0 {
        return Err(Error::InvalidShape(format!("curve is clockwise or degenerate (signed area {area})")));
    }

    // Chord-to-arc deviation between samples is at most h^2 max|phi''| / 8.
    let slack = h * h * max_accel / 8.0;
    let mut bbox = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
    for p in &samples {
        bbox[0] = bbox[0].min(p[0]);
        bbox[1] = bbox[1].max(p[0]);
        bbox[2] = bbox[2].min(p[1]);
        bbox[3] = bbox[3].max(p[1]);
    }
    bbox[0] -= slack;
    bbox[1] += slack;
    bbox[2] -= slack;
    bbox[3] += slack;

    shape.samples = samples;
    shape.bbox = bbox;
    shape.area = area;
    Ok(shape)
}

pub fn shape_kinematics(shape: &BoundaryShape, t: f64) -> ShapeKinematics {
    let [point, d1, d2] = shape.derivatives(t);
    let speed = d1[0].hypot(d1[1]);
    let tangent = [d1[0] / speed, d1[1] / speed];
    ShapeKinematics {
        point,
        tangent,
        // Counterclockwise orientation puts the exterior on the right.
        outward_normal: [tangent[1], -tangent[0]],
        sigma_tilde: speed,
        curvature: (d1[0] * d2[1] - d1[1] * d2[0]) / speed.powi(3),
    }
}

/// Whether `p + eps * closure(I[phi])` lies inside the open cell with margin.
pub fn hole_containment_check(lattice: &Lattice, p: Point, eps: f64, shape: &BoundaryShape) -> bool {
    if !lattice.in_open_cell(p) {
        return false;
    }
    if eps == 0.0 {
        return true;
    }
    let [xmin, xmax, ymin, ymax] = shape.bbox;
    let (x0, x1) = if eps > 0.0 { (eps * xmin, eps * xmax) } else { (eps * xmax, eps * xmin) };
    let (y0, y1) = if eps > 0.0 { (eps * ymin, eps * ymax) } else { (eps * ymax, eps * ymin) };
    let q = lattice.q();
    p[0] + x0 > CONTAINMENT_MARGIN
        && p[0] + x1 < q[0] - CONTAINMENT_MARGIN
        && p[1] + y0 > CONTAINMENT_MARGIN
        && p[1] + y1 < q[1] - CONTAINMENT_MARGIN
}

/// Rejects the curve if two samples more than the adjacency window apart (cyclically)
/// are closer than twice the larger local step. Uses a uniform bucket grid.
fn check_simple(samples: &[Point], steps: &[f64]) -> Result<()> {
    let m = samples.len();
    let cell = 2.0 * steps.iter().cloned().fold(0.0, f64::max);
    let key = |p: Point| ((p[0] / cell).floor() as i64, (p[1] / cell).floor() as i64);
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in samples.iter().enumerate() {
        buckets.entry(key(*p)).or_default().push(i);
    }
    for (i, p) in samples.iter().enumerate() {
        let (cx, cy) = key(*p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                let Some(list) = buckets.get(&(cx + dx, cy + dy)) else { continue };
                for &j in list {
                    let sep = i.abs_diff(j);
                    if sep.min(m - sep) <= ADJACENCY_WINDOW {
                        continue;
                    }
                    let d = (p[0] - samples[j][0]).hypot(p[1] - samples[j][1]);
                    if d < 2.0 * steps[i].max(steps[j]) {
                        return Err(Error::InvalidShape(format!(
                            "curve is not simple: samples {i} and {j} are {d:e} apart"
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

fn polyline_distance(pts: &[Point], y: Point) -> f64 {
    let n = pts.len();
    let mut best = f64::INFINITY;
    for j in 0..n {
        let a = pts[j];
        let b = pts[(j + 1) % n];
        let ab = [b[0] - a[0], b[1] - a[1]];
        let ay = [y[0] - a[0], y[1] - a[1]];
        let len2 = ab[0] * ab[0] + ab[1] * ab[1];
        let s = ((ay[0] * ab[0] + ay[1] * ab[1]) / len2).clamp(0.0, 1.0);
        let d = (ay[0] - s * ab[0]).hypot(ay[1] - s * ab[1]);
        best = best.min(d);
    }
    best
}

fn winding_number(pts: &[Point], y: Point) -> i32 {
    let n = pts.len();
    let mut wn = 0;
    for j in 0..n {
        let a = pts[j];
        let b = pts[(j + 1) % n];
        let cross = (b[0] - a[0]) * (y[1] - a[1]) - (y[0] - a[0]) * (b[1] - a[1]);
        if a[1] <= y[1] {
            if b[1] > y[1] && cross > 0.0 {
                wn += 1;
            }
        } else if b[1] <= y[1] && cross < 0.0 {
            wn -= 1;
        }
    }
    wn
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn perturbed() -> BoundaryShape {
        make_shape(vec![0.1, -0.05, 1.0, 0.0, 0.0, 1.0, 0.15, 0.0, 0.07, 0.1, 0.0, -0.05, 0.07, 0.0]).unwrap()
    }

    #[test]
    fn circle_closed_forms() {
        let c = BoundaryShape::circle(1.0).unwrap();
        let k = c.kinematics(0.0);
        assert_abs_diff_eq!(k.point[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(k.outward_normal[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(k.outward_normal[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(k.sigma_tilde, 1.0, epsilon = 1e-15);
        let r = BoundaryShape::circle(0.3).unwrap();
        for j in 0..17 {
            let t = 0.37 * j as f64;
            let kc = c.kinematics(t);
            let kr = r.kinematics(t);
            assert_abs_diff_eq!(kc.curvature, 1.0, epsilon = 1e-13);
            assert_abs_diff_eq!(kr.sigma_tilde, 0.3, epsilon = 1e-13);
            assert_abs_diff_eq!(kr.curvature, 1.0 / 0.3, epsilon = 1e-12);
            assert_abs_diff_eq!(kc.outward_normal[0], t.cos(), epsilon = 1e-13);
            assert_abs_diff_eq!(kc.outward_normal[1], t.sin(), epsilon = 1e-13);
        }
    }

    #[test]
    fn ellipse_sigma() {
        let e = BoundaryShape::ellipse(2.0, 1.0).unwrap();
        for j in 0..13 {
            let t = 0.5 * j as f64;
            let expected = (4.0 * t.sin().powi(2) + t.cos().powi(2)).sqrt();
            assert_abs_diff_eq!(e.kinematics(t).sigma_tilde, expected, epsilon = 1e-14);
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        // (cos t, sin 2t) crosses itself at the origin.
        let eight = make_shape(vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(eight, Err(Error::InvalidShape(ref m)) if m.contains("not simple")));
        let clockwise = make_shape(vec![0.0, 0.0, 1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(clockwise, Err(Error::InvalidShape(ref m)) if m.contains("clockwise")));
        let degenerate = make_shape(vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(degenerate.is_err());
        assert!(make_shape(vec![0.0, 0.0, 1.0]).is_err());
    }

    /// Adaptive Simpson arc length, independent of the trapezoid rule.
    fn adaptive_length(shape: &BoundaryShape) -> f64 {
        fn speed(s: &BoundaryShape, t: f64) -> f64 {
            let d = s.derivatives(t)[1];
            d[0].hypot(d[1])
        }
        fn rec(s: &BoundaryShape, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (speed(s, lm), speed(s, rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(s, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(s, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
            }
        }
        let (a, b) = (0.0, 2.0 * PI);
        let (fa, fm, fb) = (speed(shape, a), speed(shape, PI), speed(shape, b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(shape, a, b, fa, fm, fb, whole, 1e-13, 40)
    }

    #[test]
    fn trapezoid_length_matches_adaptive_oracle() {
        let s = perturbed();
        let n = 256;
        let trap: f64 = s.nodes(n).iter().map(|k| k.sigma_tilde).sum::<f64>() * 2.0 * PI / n as f64;
        assert_abs_diff_eq!(trap, adaptive_length(&s), epsilon = 1e-10);
    }

    #[test]
    fn divergence_identity_matches_shoelace() {
        let s = perturbed();
        let n = 256;
        let flux: f64 = s
            .nodes(n)
            .iter()
            .map(|k| (k.outward_normal[0] * k.point[0] + k.outward_normal[1] * k.point[1]) * k.sigma_tilde)
            .sum::<f64>()
            * 2.0
            * PI
            / n as f64;
        // Shoelace of the dense samples carries an O(h^2) polygon error; use 2^16 points.
        let m = 1 << 16;
        let pts: Vec<Point> = (0..m).map(|j| s.point(2.0 * PI * j as f64 / m as f64)).collect();
        let mut area = 0.0;
        for j in 0..m {
            let (a, b) = (pts[j], pts[(j + 1) % m]);
            area += 0.5 * (a[0] * b[1] - a[1] * b[0]);
        }
        // Richardson on the polygon error: A_exact ~ A_m + (A_m - A_{m/2}) / 3.
        let mut half = 0.0;
        for j in (0..m).step_by(2) {
            let (a, b) = (pts[j], pts[(j + 2) % m]);
            half += 0.5 * (a[0] * b[1] - a[1] * b[0]);
        }
        let area = area + (area - half) / 3.0;
        assert_abs_diff_eq!(flux, 2.0 * area, epsilon = 1e-10);
    }

    #[test]
    fn containment() {
        let lat = Lattice::unit();
        let c = BoundaryShape::circle(1.0).unwrap();
        assert!(hole_containment_check(&lat, [0.5, 0.5], 0.1, &c));
        assert!(!hole_containment_check(&lat, [0.5, 0.5], 0.6, &c));
        assert!(hole_containment_check(&lat, [0.5, 0.5], 0.0, &c));
        assert!(hole_containment_check(&lat, [0.5, 0.5], -0.1, &c));
        assert!(!hole_containment_check(&lat, [1.5, 0.5], 0.0, &c));
        let s = perturbed();
        assert!(hole_containment_check(&lat, [0.5, 0.5], 0.3, &s));
    }

    #[test]
    fn interior_and_distance() {
        let s = perturbed();
        assert!(s.contains([0.1, 0.0]));
        assert!(!s.contains([3.0, 0.0]));
        let c = BoundaryShape::circle(1.0).unwrap();
        assert_abs_diff_eq!(c.distance_to_curve([2.0, 0.0]), 1.0, epsilon = 1e-6);
    }

    proptest! {
        #[test]
        fn shift_reparametrization_invariance(a in 0.0f64..(2.0 * PI), t in 0.0f64..(2.0 * PI)) {
            // phi(t + a) is again a trig polynomial: rotate each harmonic pair.
            let s = perturbed();
            let mut shifted = s.coeffs().to_vec();
            for k in 1..=s.max_degree() {
                let i = 2 + 4 * (k - 1);
                let (sn, cs) = (k as f64 * a).sin_cos();
                for off in [0, 2] {
                    let (ac, bc) = (s.coeffs()[i + off], s.coeffs()[i + off + 1]);
                    shifted[i + off] = ac * cs + bc * sn;
                    shifted[i + off + 1] = bc * cs - ac * sn;
                }
            }
            let r = make_shape(shifted).unwrap();
            let k0 = s.kinematics(t + a);
            let k1 = r.kinematics(t);
            prop_assert!((k0.sigma_tilde - k1.sigma_tilde).abs() < 1e-12);
            prop_assert!((k0.outward_normal[0] - k1.outward_normal[0]).abs() < 1e-12);
            prop_assert!((k0.outward_normal[1] - k1.outward_normal[1]).abs() < 1e-12);
        }

        #[test]
        fn normal_is_unit_and_orthogonal(t in 0.0f64..(2.0 * PI)) {
            let k = perturbed().kinematics(t);
            let n = k.outward_normal;
            prop_assert!(((n[0] * n[0] + n[1] * n[1]).sqrt() - 1.0).abs() < 1e-14);
            prop_assert!((n[0] * k.tangent[0] + n[1] * k.tangent[1]).abs() < 1e-14);
            prop_assert!(k.sigma_tilde > 0.0);
        }
    }
}
