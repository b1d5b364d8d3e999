//! Oracles for testing the solver from independent routes: adaptive
//! Gauss quadrature with error control, Green-theorem monomial area
//! integrals over explicit boundary loops, brute-force subdivision
//! integration, and power-series Bessel evaluation.
//!
//! Nothing here shares code with the mapped-Legendre moment fitting, the
//! fixed-node face rules, or the recurrence-based special functions that
//! these oracles are used to verify.

use cutwave_core::curves::ParametricCurve;
use cutwave_core::gauss::gauss_legendre;
use cutwave_core::mesh::FaceGeometry;

/// SplitMix64 uniform sample in [0, 1).
pub fn splitmix(state: &mut u64) -> f64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64
}

/// Uniform sample in [lo, hi).
pub fn uniform(state: &mut u64, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * splitmix(state)
}

fn fixed_gauss(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, nodes: &[f64], weights: &[f64]) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    nodes
        .iter()
        .zip(weights)
        .map(|(x, w)| w * half * f(mid + half * x))
        .sum()
}

/// Adaptive Gauss integration: panels split until the 7- and 15-point
/// estimates agree to the requested absolute tolerance.
pub fn adaptive_integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (x7, w7) = gauss_legendre(7);
    let (x15, w15) = gauss_legendre(15);
    fn recurse(
        f: &mut dyn FnMut(f64) -> f64,
        a: f64,
        b: f64,
        tol: f64,
        depth: u32,
        x7: &[f64],
        w7: &[f64],
        x15: &[f64],
        w15: &[f64],
    ) -> f64 {
        let coarse = fixed_gauss(f, a, b, x7, w7);
        let fine = fixed_gauss(f, a, b, x15, w15);
        if (fine - coarse).abs() <= tol || depth >= 40 {
            return fine;
        }
        let mid = 0.5 * (a + b);
        recurse(f, a, mid, 0.5 * tol, depth + 1, x7, w7, x15, w15)
            + recurse(f, mid, b, 0.5 * tol, depth + 1, x7, w7, x15, w15)
    }
    recurse(&mut f, a, b, tol, 0, &x7, &w7, &x15, &w15)
}

/// 2D adaptive integration of a smooth integrand over a rectangle
/// (iterated 1D adaptive rules).
pub fn adaptive_integrate_2d(
    f: impl Fn(f64, f64) -> f64,
    lo: [f64; 2],
    hi: [f64; 2],
    tol: f64,
) -> f64 {
    adaptive_integrate(
        |y| adaptive_integrate(|x| f(x, y), lo[0], hi[0], 0.1 * tol),
        lo[1],
        hi[1],
        tol,
    )
}

/// `integral over the loop interior of x^i y^j dA` by Green's theorem with
/// the flux `F = (x^(i+1) y^j / (i+1), 0)` and adaptive line quadrature on
/// each boundary piece. The loop must run counterclockwise around the
/// region; curved pieces may traverse against the curve parameter.
pub fn monomial_area_integral(
    faces: &[FaceGeometry],
    curves: &[ParametricCurve],
    i: u32,
    j: u32,
    tol: f64,
) -> f64 {
    let mut total = 0.0;
    for face in faces {
        match face {
            FaceGeometry::Straight { a, b } => {
                // integral of F_x dy along the segment.
                let f = |t: f64| {
                    let x = a[0] + t * (b[0] - a[0]);
                    let y = a[1] + t * (b[1] - a[1]);
                    let dy = b[1] - a[1];
                    x.powi(i as i32 + 1) * y.powi(j as i32) / (i as f64 + 1.0) * dy
                };
                total += adaptive_integrate(f, 0.0, 1.0, tol);
            }
            FaceGeometry::Curved { curve, s0, s1 } => {
                let c = &curves[*curve];
                let f = |s: f64| {
                    let sw = wrap_unit(s);
                    let p = c.position(sw);
                    let d = c.derivative(sw);
                    p[0].powi(i as i32 + 1) * p[1].powi(j as i32) / (i as f64 + 1.0) * d[1]
                };
                total += adaptive_integrate(f, *s0, *s1, tol);
            }
        }
    }
    total
}

fn wrap_unit(s: f64) -> f64 {
    let mut t = s % 1.0;
    if t < 0.0 {
        t += 1.0;
    }
    t
}

/// Exact monomial integral over a simple polygon (counterclockwise
/// vertices) by the classic edge-by-edge closed form: for each edge the
/// flux integral of `x^(i+1) y^j / (i+1)` reduces to a 1D polynomial in the
/// edge parameter, integrated exactly with Gauss of sufficient order.
pub fn polygon_monomial_integral(vertices: &[[f64; 2]], i: u32, j: u32) -> f64 {
    let deg = (i + j + 2) as usize;
    let (gx, gw) = gauss_legendre(deg.div_ceil(2) + 1);
    let mut total = 0.0;
    let n = vertices.len();
    for k in 0..n {
        let a = vertices[k];
        let b = vertices[(k + 1) % n];
        let dy = b[1] - a[1];
        if dy == 0.0 {
            continue;
        }
        let mut acc = 0.0;
        for (x, w) in gx.iter().zip(&gw) {
            let t = 0.5 * (x + 1.0);
            let px = a[0] + t * (b[0] - a[0]);
            let py = a[1] + t * (b[1] - a[1]);
            acc += 0.5 * w * px.powi(i as i32 + 1) * py.powi(j as i32);
        }
        total += acc * dy / (i as f64 + 1.0);
    }
    total
}

/// Brute-force area integral over `{p : contains(p)}` inside a box, by
/// recursive subdivision with full-tensor integration on interior boxes and
/// midpoint-fraction estimates on unresolved boundary boxes. Slow and only
/// moderately accurate; used to cross-check the Green-theorem oracle.
pub fn brute_force_area_integral(
    f: impl Fn(f64, f64) -> f64 + Copy,
    contains: &dyn Fn([f64; 2]) -> bool,
    lo: [f64; 2],
    hi: [f64; 2],
    max_depth: u32,
) -> f64 {
    fn classify(contains: &dyn Fn([f64; 2]) -> bool, lo: [f64; 2], hi: [f64; 2]) -> (bool, bool) {
        let mut all = true;
        let mut any = false;
        for jj in 0..4 {
            for ii in 0..4 {
                let p = [
                    lo[0] + (hi[0] - lo[0]) * (ii as f64 + 0.5) / 4.0,
                    lo[1] + (hi[1] - lo[1]) * (jj as f64 + 0.5) / 4.0,
                ];
                if contains(p) {
                    any = true;
                } else {
                    all = false;
                }
            }
        }
        (all, any)
    }
    fn box_integral(f: impl Fn(f64, f64) -> f64, lo: [f64; 2], hi: [f64; 2]) -> f64 {
        let (gx, gw) = gauss_legendre(6);
        let hx = 0.5 * (hi[0] - lo[0]);
        let hy = 0.5 * (hi[1] - lo[1]);
        let cx = 0.5 * (hi[0] + lo[0]);
        let cy = 0.5 * (hi[1] + lo[1]);
        let mut acc = 0.0;
        for (y, wy) in gx.iter().zip(&gw) {
            for (x, wx) in gx.iter().zip(&gw) {
                acc += wx * wy * hx * hy * f(cx + hx * x, cy + hy * y);
            }
        }
        acc
    }
    fn recurse(
        f: impl Fn(f64, f64) -> f64 + Copy,
        contains: &dyn Fn([f64; 2]) -> bool,
        lo: [f64; 2],
        hi: [f64; 2],
        depth: u32,
        max_depth: u32,
    ) -> f64 {
        let (all, any) = classify(contains, lo, hi);
        if !any {
            return 0.0;
        }
        if all && depth >= 2 {
            return box_integral(f, lo, hi);
        }
        if depth >= max_depth {
            // Fraction estimate on an unresolved sliver.
            let mut inside = 0usize;
            let m = 8;
            for jj in 0..m {
                for ii in 0..m {
                    let p = [
                        lo[0] + (hi[0] - lo[0]) * (ii as f64 + 0.5) / m as f64,
                        lo[1] + (hi[1] - lo[1]) * (jj as f64 + 0.5) / m as f64,
                    ];
                    if contains(p) {
                        inside += 1;
                    }
                }
            }
            let frac = inside as f64 / (m * m) as f64;
            let mid = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
            return frac * (hi[0] - lo[0]) * (hi[1] - lo[1]) * f(mid[0], mid[1]);
        }
        let mid = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
        recurse(f, contains, lo, mid, depth + 1, max_depth)
            + recurse(f, contains, [mid[0], lo[1]], [hi[0], mid[1]], depth + 1, max_depth)
            + recurse(f, contains, [lo[0], mid[1]], [mid[0], hi[1]], depth + 1, max_depth)
            + recurse(f, contains, mid, hi, depth + 1, max_depth)
    }
    recurse(f, contains, lo, hi, 0, max_depth)
}

/// Bessel `J_n(x)` by the ascending power series with log-scaled leading
/// term; accurate for moderate `x` and any order that does not underflow.
pub fn bessel_j_power_series(n: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let half = 0.5 * x;
    // ln( (x/2)^n / n! )
    let mut log_lead = n as f64 * half.ln();
    for k in 1..=n {
        log_lead -= (k as f64).ln();
    }
    if log_lead < -745.0 {
        return 0.0;
    }
    let lead = log_lead.exp();
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let z = half * half;
    for k in 1..200 {
        term *= -z / (k as f64 * (n as f64 + k as f64));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-280) {
            break;
        }
    }
    lead * sum
}

/// Derivative of the power-series Bessel via the identity
/// `J_n' = (J_(n-1) - J_(n+1)) / 2`, `J_0' = -J_1`.
pub fn bessel_j_prime_series(n: u32, x: f64) -> f64 {
    if n == 0 {
        -bessel_j_power_series(1, x)
    } else {
        0.5 * (bessel_j_power_series(n - 1, x) - bessel_j_power_series(n + 1, x))
    }
}

/// Finite-difference derivative with Richardson extrapolation.
pub fn richardson_derivative(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let d1 = (f(x + h) - f(x - h)) / (2.0 * h);
    let d2 = (f(x + 0.5 * h) - f(x - 0.5 * h)) / h;
    (4.0 * d2 - d1) / 3.0
}

/// Observed convergence order from consecutive errors under halving.
pub fn observed_order(err_coarse: f64, err_fine: f64) -> f64 {
    (err_coarse / err_fine).ln() / core::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adaptive_matches_analytic() {
        let v = adaptive_integrate(|x| x.sin(), 0.0, std::f64::consts::PI, 1e-13);
        assert!((v - 2.0).abs() < 1e-12);
        let v = adaptive_integrate(|x| (-x * x).exp(), -8.0, 8.0, 1e-13);
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn polygon_integrals_on_unit_square() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert!((polygon_monomial_integral(&sq, 0, 0) - 1.0).abs() < 1e-14);
        assert!((polygon_monomial_integral(&sq, 1, 0) - 0.5).abs() < 1e-14);
        assert!((polygon_monomial_integral(&sq, 2, 3) - (1.0 / 3.0) * (1.0 / 4.0)).abs() < 1e-14);
    }

    #[test]
    fn green_oracle_matches_polygon_oracle_on_polygons() {
        use cutwave_core::mesh::FaceGeometry as FG;
        // A counterclockwise pentagon.
        let v = [
            [0.1, 0.0],
            [1.0, 0.2],
            [0.8, 0.9],
            [0.35, 1.1],
            [-0.2, 0.5],
        ];
        let faces: Vec<FG> = (0..v.len())
            .map(|k| FG::Straight {
                a: v[k],
                b: v[(k + 1) % v.len()],
            })
            .collect();
        for (i, j) in [(0u32, 0u32), (1, 0), (0, 1), (2, 1), (3, 3)] {
            let g = monomial_area_integral(&faces, &[], i, j, 1e-13);
            let p = polygon_monomial_integral(&v, i, j);
            assert!((g - p).abs() < 1e-12, "({i},{j}): {g} vs {p}");
        }
    }

    #[test]
    fn series_bessel_spot_values() {
        // First zero of J0.
        assert!(bessel_j_power_series(0, 2.404825557695773).abs() < 1e-13);
        // J1(1) reference value.
        assert!((bessel_j_power_series(1, 1.0) - 0.44005058574493355).abs() < 1e-15);
    }
}
