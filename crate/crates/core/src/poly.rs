//! Polynomial bases: graded total-degree index sets, 2D tensor Legendre
//! evaluation with exact antiderivatives, bivariate monomials with derivative
//! maps, and barycentric Lagrange utilities for the 1D tensor basis.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::Mat;

/// Dimension of the total-degree-`n` polynomial space in 2D.
pub fn space_dim(n: usize) -> usize {
    (n + 1) * (n + 2) / 2
}

/// Graded ordering of exponent pairs `(i, j)` with `i + j <= deg`:
/// degree by degree, `i` descending within a degree.
pub fn graded_exponents(deg: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(space_dim(deg));
    for d in 0..=deg {
        for j in 0..=d {
            out.push((d - j, j));
        }
    }
    out
}

/// Values of the 1D Legendre polynomials `P_0..=P_deg` at `x`.
pub fn legendre_values(deg: usize, x: f64, out: &mut [f64]) {
    debug_assert!(out.len() >= deg + 1);
    out[0] = 1.0;
    if deg == 0 {
        return;
    }
    out[1] = x;
    for k in 1..deg {
        let kf = k as f64;
        out[k + 1] = ((2.0 * kf + 1.0) * x * out[k] - kf * out[k - 1]) / (kf + 1.0);
    }
}

/// Values of the 1D Legendre derivatives `P'_0..=P'_deg` at `x`, given the
/// values `P_0..=P_deg` in `vals`.
pub fn legendre_derivs(deg: usize, x: f64, vals: &[f64], out: &mut [f64]) {
    debug_assert!(out.len() >= deg + 1);
    out[0] = 0.0;
    if deg == 0 {
        return;
    }
    out[1] = 1.0;
    // P'_{k+1} = P'_{k-1} + (2k+1) P_k.
    for k in 1..deg {
        out[k + 1] = out[k - 1] + (2.0 * k as f64 + 1.0) * vals[k];
    }
    let _ = x;
}

/// Exact antiderivatives `int_{-1}^{x} P_k(t) dt` for `k = 0..=deg`.
///
/// Closed form: `(P_{k+1}(x) - P_{k-1}(x)) / (2k+1)` for `k >= 1`, and
/// `x + 1` for `k = 0`; both vanish at `x = -1`.
pub fn legendre_antiderivs(deg: usize, x: f64, out: &mut [f64]) {
    debug_assert!(out.len() >= deg + 1);
    let mut vals = vec![0.0; deg + 2];
    legendre_values(deg + 1, x, &mut vals);
    out[0] = x + 1.0;
    for k in 1..=deg {
        out[k] = (vals[k + 1] - vals[k - 1]) / (2.0 * k as f64 + 1.0);
    }
}

/// Total-degree 2D Legendre basis `psi_(m,n)(x, y) = P_m(x) P_n(y)` over the
/// graded index set.
pub struct Legendre2d {
    pub deg: usize,
    pub exponents: Vec<(usize, usize)>,
}

impl Legendre2d {
    pub fn new(deg: usize) -> Self {
        Legendre2d {
            deg,
            exponents: graded_exponents(deg),
        }
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    /// Values of every basis function at `(x, y)`.
    pub fn eval(&self, x: f64, y: f64, out: &mut [f64]) {
        debug_assert!(out.len() >= self.len());
        let mut px = vec![0.0; self.deg + 1];
        let mut py = vec![0.0; self.deg + 1];
        legendre_values(self.deg, x, &mut px);
        legendre_values(self.deg, y, &mut py);
        for (k, &(m, n)) in self.exponents.iter().enumerate() {
            out[k] = px[m] * py[n];
        }
    }

    /// Vandermonde matrix of the basis at a point set.
    pub fn vandermonde(&self, points: &[[f64; 2]]) -> Mat {
        let mut v = Mat::zeros(points.len(), self.len());
        let mut row = vec![0.0; self.len()];
        for (i, p) in points.iter().enumerate() {
            self.eval(p[0], p[1], &mut row);
            v.row_mut(i).copy_from_slice(&row);
        }
        v
    }

    /// The antiderivative vector field `F(psi) = [Fx, Fy]` with
    /// `div F(psi) = psi`, used for divergence-theorem target integrals:
    /// `Fx = 1/2 * (int_{-1}^{x} P_m) P_n(y)`, `Fy = 1/2 * P_m(x) (int_{-1}^{y} P_n)`.
    pub fn antiderivative_field(&self, x: f64, y: f64, fx: &mut [f64], fy: &mut [f64]) {
        debug_assert!(fx.len() >= self.len() && fy.len() >= self.len());
        let mut px = vec![0.0; self.deg + 1];
        let mut py = vec![0.0; self.deg + 1];
        let mut ix = vec![0.0; self.deg + 1];
        let mut iy = vec![0.0; self.deg + 1];
        legendre_values(self.deg, x, &mut px);
        legendre_values(self.deg, y, &mut py);
        legendre_antiderivs(self.deg, x, &mut ix);
        legendre_antiderivs(self.deg, y, &mut iy);
        for (k, &(m, n)) in self.exponents.iter().enumerate() {
            fx[k] = 0.5 * ix[m] * py[n];
            fy[k] = 0.5 * px[m] * iy[n];
        }
    }
}

/// Bivariate monomial basis over the graded index set, with evaluation and
/// exact differentiation in coefficient space.
pub struct Monomials2d {
    pub deg: usize,
    pub exponents: Vec<(usize, usize)>,
}

impl Monomials2d {
    pub fn new(deg: usize) -> Self {
        Monomials2d {
            deg,
            exponents: graded_exponents(deg),
        }
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn eval(&self, x: f64, y: f64, out: &mut [f64]) {
        debug_assert!(out.len() >= self.len());
        let mut xp = vec![1.0; self.deg + 1];
        let mut yp = vec![1.0; self.deg + 1];
        for k in 1..=self.deg {
            xp[k] = xp[k - 1] * x;
            yp[k] = yp[k - 1] * y;
        }
        for (k, &(i, j)) in self.exponents.iter().enumerate() {
            out[k] = xp[i] * yp[j];
        }
    }

    fn index_of(&self, i: usize, j: usize) -> usize {
        let d = i + j;
        d * (d + 1) / 2 + j
    }

    /// Coefficient-space map of `d/dx`: returns `D` with
    /// `(d/dx) m_col = sum_row D[row, col] * m_row`.
    pub fn dx_map(&self) -> Mat {
        let n = self.len();
        let mut d = Mat::zeros(n, n);
        for (col, &(i, j)) in self.exponents.iter().enumerate() {
            if i >= 1 {
                let row = self.index_of(i - 1, j);
                d[(row, col)] = i as f64;
            }
        }
        d
    }

    /// Coefficient-space map of `d/dy`.
    pub fn dy_map(&self) -> Mat {
        let n = self.len();
        let mut d = Mat::zeros(n, n);
        for (col, &(i, j)) in self.exponents.iter().enumerate() {
            if j >= 1 {
                let row = self.index_of(i, j - 1);
                d[(row, col)] = j as f64;
            }
        }
        d
    }
}

/// Barycentric weights for a 1D node set.
pub fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut w = vec![1.0; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                w[i] *= nodes[i] - nodes[j];
            }
        }
        w[i] = 1.0 / w[i];
    }
    w
}

/// Values of all 1D Lagrange basis polynomials for `nodes` at `x`.
pub fn lagrange_values(nodes: &[f64], weights: &[f64], x: f64, out: &mut [f64]) {
    let n = nodes.len();
    debug_assert!(out.len() >= n);
    for i in 0..n {
        if (x - nodes[i]).abs() < 1e-14 {
            for o in out.iter_mut().take(n) {
                *o = 0.0;
            }
            out[i] = 1.0;
            return;
        }
    }
    let mut denom = 0.0;
    for i in 0..n {
        out[i] = weights[i] / (x - nodes[i]);
        denom += out[i];
    }
    for o in out.iter_mut().take(n) {
        *o /= denom;
    }
}

/// 1D differentiation matrix at the nodes themselves (barycentric form).
pub fn lagrange_diff_matrix(nodes: &[f64], weights: &[f64]) -> Mat {
    let n = nodes.len();
    let mut d = Mat::zeros(n, n);
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = weights[j] / weights[i] / (nodes[i] - nodes[j]);
                d[(i, j)] = v;
                diag -= v;
            }
        }
        d[(i, i)] = diag;
    }
    d
}

#[cfg(test)]
mod tests {
    extern crate std;
    use super::*;
    use crate::gauss::gauss_legendre;

    #[test]
    fn graded_ordering_counts() {
        assert_eq!(space_dim(4), 15);
        let e = graded_exponents(2);
        assert_eq!(e, alloc::vec![(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]);
    }

    #[test]
    fn antiderivative_matches_quadrature() {
        // int_{-1}^{x} P_k dt via Gauss quadrature vs the closed form.
        let (gx, gw) = gauss_legendre(12);
        for k in 0..=6 {
            for &x in &[-0.9, -0.3, 0.2, 0.7, 1.0] {
                let mut anti = [0.0; 8];
                legendre_antiderivs(6, x, &mut anti);
                // Map [-1,x] to [-1,1].
                let half = (x + 1.0) / 2.0;
                let mut num = 0.0;
                for (xi, wi) in gx.iter().zip(&gw) {
                    let t = -1.0 + half * (xi + 1.0);
                    let mut vals = [0.0; 8];
                    legendre_values(6, t, &mut vals);
                    num += wi * half * vals[k];
                }
                assert!((num - anti[k]).abs() < 1e-13, "k={k} x={x}");
            }
        }
    }

    #[test]
    fn legendre_derivative_recurrence() {
        let mut vals = [0.0; 7];
        let mut ders = [0.0; 7];
        for &x in &[-0.8, 0.1, 0.6] {
            legendre_values(6, x, &mut vals);
            legendre_derivs(6, x, &vals, &mut ders);
            let h = 1e-6;
            let mut vp = [0.0; 7];
            let mut vm = [0.0; 7];
            legendre_values(6, x + h, &mut vp);
            legendre_values(6, x - h, &mut vm);
            for k in 0..=6 {
                let fd = (vp[k] - vm[k]) / (2.0 * h);
                assert!((ders[k] - fd).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn monomial_derivative_maps() {
        let m = Monomials2d::new(3);
        let dx = m.dx_map();
        // d/dx (x^2 y) = 2 x y: coefficient vector for x^2 y maps to 2 * (x y).
        let col = m
            .exponents
            .iter()
            .position(|&(i, j)| i == 2 && j == 1)
            .unwrap();
        let row = m
            .exponents
            .iter()
            .position(|&(i, j)| i == 1 && j == 1)
            .unwrap();
        assert_eq!(dx[(row, col)], 2.0);
    }

    #[test]
    fn lagrange_basis_partition_of_unity() {
        let nodes = [-1.0, -0.4, 0.3, 1.0];
        let w = barycentric_weights(&nodes);
        let mut vals = [0.0; 4];
        for &x in &[-0.77, 0.0, 0.9] {
            lagrange_values(&nodes, &w, x, &mut vals);
            let s: f64 = vals.iter().sum();
            assert!((s - 1.0).abs() < 1e-13);
        }
        // Kronecker property at the nodes.
        lagrange_values(&nodes, &w, -0.4, &mut vals);
        assert!((vals[1] - 1.0).abs() < 1e-14);
        assert!(vals[0].abs() < 1e-14);
    }

    #[test]
    fn diff_matrix_differentiates_cubics() {
        let nodes = crate::gauss::gauss_lobatto_nodes(5);
        let w = barycentric_weights(&nodes);
        let d = lagrange_diff_matrix(&nodes, &w);
        let f: Vec<f64> = nodes.iter().map(|x| x * x * x - 2.0 * x).collect();
        let df = d.matvec(&f);
        for (x, v) in nodes.iter().zip(&df) {
            assert!((v - (3.0 * x * x - 2.0)).abs() < 1e-12);
        }
    }
}
