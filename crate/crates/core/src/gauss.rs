//! 1D Gauss–Legendre and Gauss–Lobatto rules on [-1, 1], computed by Newton
//! iteration on the Legendre recurrences.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // test builds link std, whose inherent methods shadow this shim
use crate::math::Libm;

/// Legendre polynomial `P_n(x)` and its derivative.
pub fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut pm1 = 1.0;
    let mut p = x;
    for k in 1..n {
        let kf = k as f64;
        let pp = ((2.0 * kf + 1.0) * x * p - kf * pm1) / (kf + 1.0);
        pm1 = p;
        p = pp;
    }
    // P'_n via the standard identity valid away from the endpoints; at the
    // endpoints use P'_n(+-1) = (+-1)^(n-1) n(n+1)/2.
    let d = if (x * x - 1.0).abs() < 1e-14 {
        let s = if x > 0.0 || n % 2 == 1 { 1.0 } else { -1.0 };
        s * (n as f64) * (n as f64 + 1.0) / 2.0
    } else {
        (n as f64) * (pm1 - x * p) / (1.0 - x * x)
    };
    (p, d)
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule; exact for
/// polynomials of degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Chebyshev-based initial guess.
        let mut x = (core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_deriv(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre_with_deriv(n, x);
        let w = 2.0 / ((1.0 - x * x) * d * d);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
        let (_, d) = legendre_with_deriv(n, 0.0);
        weights[n / 2] = 2.0 / (d * d);
    }
    (nodes, weights)
}

/// Nodes of the `n`-point Gauss–Lobatto rule (`n >= 2`), i.e. the endpoints
/// plus the roots of `P'_{n-1}`.
pub fn gauss_lobatto_nodes(n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let mut nodes = vec![0.0; n];
    nodes[0] = -1.0;
    nodes[n - 1] = 1.0;
    let deg = n - 1;
    for i in 1..n - 1 {
        // Initial guess: Chebyshev–Lobatto points.
        let mut x = -(core::f64::consts::PI * i as f64 / deg as f64).cos();
        for _ in 0..100 {
            // Newton on P'_deg using P''.
            let (p, d) = legendre_with_deriv(deg, x);
            // Legendre ODE: (1-x^2) P'' = 2x P' - n(n+1) P.
            let dd = (2.0 * x * d - (deg * (deg + 1)) as f64 * p) / (1.0 - x * x);
            let dx = d / dd;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = x;
    }
    nodes
}

#[cfg(test)]
mod tests {
    extern crate std;
    use super::*;

    #[test]
    fn gauss_integrates_polynomials_exactly() {
        for n in 1..=12 {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            // Exactness through degree 2n-1.
            for d in 0..2 * n {
                let num: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(d as i32)).sum();
                let exact = if d % 2 == 0 { 2.0 / (d as f64 + 1.0) } else { 0.0 };
                assert!(
                    (num - exact).abs() < 1e-13,
                    "n={n} d={d}: {num} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn lobatto_nodes_symmetric_and_sorted() {
        for n in 2..=10 {
            let x = gauss_lobatto_nodes(n);
            assert_eq!(x.len(), n);
            for i in 0..n {
                assert!((x[i] + x[n - 1 - i]).abs() < 1e-13);
                if i > 0 {
                    assert!(x[i] > x[i - 1]);
                }
            }
        }
    }

    #[test]
    fn lobatto_interior_are_dlegendre_roots() {
        let n = 7;
        let x = gauss_lobatto_nodes(n);
        for xi in &x[1..n - 1] {
            let (_, d) = legendre_with_deriv(n - 1, *xi);
            assert!(d.abs() < 1e-10);
        }
    }
}
