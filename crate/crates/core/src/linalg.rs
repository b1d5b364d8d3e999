//! Dense linear algebra kernels: row-major matrices, LU and Cholesky solves,
//! Householder QR with column pivoting, and a real nonsymmetric eigenvalue
//! solver (balancing + Hessenberg reduction + Francis double-shift QR).

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut};

use num_complex::Complex64;

#[allow(unused_imports)] // test builds link std, whose inherent methods shadow this shim
use crate::math::Libm;

/// Dense row-major matrix of `f64`.
#[derive(Clone, PartialEq)]
pub struct Mat {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.nrows, self.ncols)?;
        for i in 0..self.nrows.min(8) {
            write!(f, "  ")?;
            for j in 0..self.ncols.min(8) {
                write!(f, "{:>12.5e} ", self[(i, j)])?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Mat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Mat {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(nrows, ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let nrows = rows.len();
        let ncols = if nrows > 0 { rows[0].len() } else { 0 };
        let mut m = Mat::zeros(nrows, ncols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), ncols);
            m.row_mut(i).copy_from_slice(r);
        }
        m
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.ncols, self.nrows);
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `self * x` for a vector `x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    /// `y = self * x`, no allocation.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let row = self.row(i);
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x.iter()) {
                acc += a * b;
            }
            *yi = acc;
        }
    }

    /// `y += alpha * self * x`.
    pub fn matvec_acc(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let row = self.row(i);
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x.iter()) {
                acc += a * b;
            }
            *yi += alpha * acc;
        }
    }

    /// `self^T * x`.
    pub fn tr_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        self.tr_matvec_acc(1.0, x, &mut y);
        y
    }

    /// `y += alpha * self^T * x`.
    pub fn tr_matvec_acc(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.nrows);
        assert_eq!(y.len(), self.ncols);
        for (i, xi) in x.iter().enumerate() {
            let s = alpha * xi;
            let row = self.row(i);
            for (yj, aij) in y.iter_mut().zip(row.iter()) {
                *yj += s * aij;
            }
        }
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.ncols, other.nrows);
        let mut c = Mat::zeros(self.nrows, other.ncols);
        for i in 0..self.nrows {
            for k in 0..self.ncols {
                let aik = self[(i, k)];
                if aik == 0.0 {
                    continue;
                }
                let brow = other.row(k);
                let crow = c.row_mut(i);
                for (cj, bj) in crow.iter_mut().zip(brow.iter()) {
                    *cj += aik * bj;
                }
            }
        }
        c
    }

    pub fn scale(&mut self, alpha: f64) {
        for v in &mut self.data {
            *v *= alpha;
        }
    }

    pub fn add_assign(&mut self, other: &Mat) {
        assert_eq!(self.nrows, other.nrows);
        assert_eq!(self.ncols, other.ncols);
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += b;
        }
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!(self.nrows, other.nrows);
        assert_eq!(self.ncols, other.ncols);
        let mut m = self.clone();
        for (a, b) in m.data.iter_mut().zip(other.data.iter()) {
            *a -= b;
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.nrows && j < self.ncols);
        &self.data[i * self.ncols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.nrows && j < self.ncols);
        &mut self.data[i * self.ncols + j]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinalgError {
    Singular,
    NotPositiveDefinite,
    NoConvergence,
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::Singular => write!(f, "matrix is singular to working precision"),
            LinalgError::NotPositiveDefinite => write!(f, "matrix is not positive definite"),
            LinalgError::NoConvergence => write!(f, "eigenvalue iteration failed to converge"),
        }
    }
}

impl core::error::Error for LinalgError {}

/// LU factorization with partial pivoting.
pub struct Lu {
    lu: Mat,
    piv: Vec<usize>,
}

impl Lu {
    pub fn factor(mut a: Mat) -> Result<Lu, LinalgError> {
        assert_eq!(a.nrows, a.ncols);
        let n = a.nrows;
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut maxv = a[(k, k)].abs();
            for i in k + 1..n {
                let v = a[(i, k)].abs();
                if v > maxv {
                    maxv = v;
                    p = i;
                }
            }
            if maxv == 0.0 {
                return Err(LinalgError::Singular);
            }
            if p != k {
                piv.swap(p, k);
                for j in 0..n {
                    let t = a[(k, j)];
                    a[(k, j)] = a[(p, j)];
                    a[(p, j)] = t;
                }
            }
            let pivot = a[(k, k)];
            for i in k + 1..n {
                let lik = a[(i, k)] / pivot;
                a[(i, k)] = lik;
                if lik != 0.0 {
                    let (top, bottom) = a.data.split_at_mut(i * n);
                    let krow = &top[k * n + k + 1..k * n + n];
                    let irow = &mut bottom[k + 1..n];
                    for (iv, kv) in irow.iter_mut().zip(krow.iter()) {
                        *iv -= lik * kv;
                    }
                }
            }
        }
        Ok(Lu { lu: a, piv })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.nrows;
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            let mut acc = x[i];
            let row = self.lu.row(i);
            for j in 0..i {
                acc -= row[j] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= row[j] * x[j];
            }
            x[i] = acc / row[i];
        }
        x
    }

    pub fn solve_mat(&self, b: &Mat) -> Mat {
        let mut out = Mat::zeros(b.nrows, b.ncols);
        let mut col = vec![0.0; b.nrows];
        for j in 0..b.ncols {
            for i in 0..b.nrows {
                col[i] = b[(i, j)];
            }
            let x = self.solve(&col);
            for i in 0..b.nrows {
                out[(i, j)] = x[i];
            }
        }
        out
    }

    pub fn inverse(&self) -> Mat {
        let n = self.lu.nrows;
        self.solve_mat(&Mat::identity(n))
    }
}

/// Cholesky factorization of a symmetric positive definite matrix.
pub struct Cholesky {
    l: Mat,
}

impl Cholesky {
    pub fn factor(a: &Mat) -> Result<Cholesky, LinalgError> {
        assert_eq!(a.nrows, a.ncols);
        let n = a.nrows;
        let mut l = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                if i == j {
                    if s <= 0.0 {
                        return Err(LinalgError::NotPositiveDefinite);
                    }
                    l[(i, i)] = s.sqrt();
                } else {
                    l[(i, j)] = s / l[(j, j)];
                }
            }
        }
        Ok(Cholesky { l })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.nrows;
        let mut x = b.to_vec();
        for i in 0..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.l[(i, j)] * x[j];
            }
            x[i] = acc / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= self.l[(j, i)] * x[j];
            }
            x[i] = acc / self.l[(i, i)];
        }
        x
    }
}

/// Householder QR with column pivoting of an `m x n` matrix.
///
/// Pivot order is the business end for approximate Fekete point selection:
/// `pivots[0..k]` are the column indices chosen greedily by largest residual
/// norm, and `rdiag` exposes the rank structure.
pub struct PivotedQr {
    pub pivots: Vec<usize>,
    pub rdiag: Vec<f64>,
    qr: Mat,
    beta: Vec<f64>,
}

impl PivotedQr {
    pub fn factor(mut a: Mat) -> PivotedQr {
        let m = a.nrows;
        let n = a.ncols;
        let kmax = m.min(n);
        let mut pivots: Vec<usize> = (0..n).collect();
        let mut rdiag = vec![0.0; kmax];
        let mut beta = vec![0.0; kmax];
        // Column norms, updated after each reflection and periodically rebuilt.
        let mut norms: Vec<f64> = (0..n)
            .map(|j| (0..m).map(|i| a[(i, j)] * a[(i, j)]).sum::<f64>())
            .collect();
        let mut norms0 = norms.clone();

        for k in 0..kmax {
            let mut p = k;
            let mut best = norms[k];
            for j in k + 1..n {
                if norms[j] > best {
                    best = norms[j];
                    p = j;
                }
            }
            if p != k {
                pivots.swap(p, k);
                norms.swap(p, k);
                norms0.swap(p, k);
                for i in 0..m {
                    let t = a[(i, k)];
                    a[(i, k)] = a[(i, p)];
                    a[(i, p)] = t;
                }
            }
            // Householder vector for column k below the diagonal.
            let mut alpha = 0.0;
            for i in k..m {
                alpha += a[(i, k)] * a[(i, k)];
            }
            let alpha = alpha.sqrt();
            if alpha == 0.0 {
                rdiag[k] = 0.0;
                beta[k] = 0.0;
                continue;
            }
            let a_kk = a[(k, k)];
            let sign = if a_kk >= 0.0 { 1.0 } else { -1.0 };
            let v0 = a_kk + sign * alpha;
            a[(k, k)] = v0;
            // v = column k from row k (with v0 at top); H = I - beta v v^T.
            let mut vtv = 0.0;
            for i in k..m {
                vtv += a[(i, k)] * a[(i, k)];
            }
            let b = 2.0 / vtv;
            beta[k] = b;
            rdiag[k] = -sign * alpha;
            for j in k + 1..n {
                let mut s = 0.0;
                for i in k..m {
                    s += a[(i, k)] * a[(i, j)];
                }
                let s = b * s;
                for i in k..m {
                    let vik = a[(i, k)];
                    a[(i, j)] -= s * vik;
                }
                // Downdate the running column norm.
                let t = a[(k, j)];
                norms[j] -= t * t;
                if norms[j] < 1e-12 * norms0[j] || norms[j] < 0.0 {
                    let mut fresh = 0.0;
                    for i in k + 1..m {
                        fresh += a[(i, j)] * a[(i, j)];
                    }
                    norms[j] = fresh;
                    norms0[j] = fresh;
                }
            }
        }
        PivotedQr {
            pivots,
            rdiag,
            qr: a,
            beta,
        }
    }

    /// Numerical rank against a relative diagonal threshold.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let max = self.rdiag.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if max == 0.0 {
            return 0;
        }
        self.rdiag.iter().take_while(|d| d.abs() > rel_tol * max).count()
    }

    /// Application of `Q^T` to a vector of length `m`.
    pub fn qt_mul(&self, x: &[f64]) -> Vec<f64> {
        let m = self.qr.nrows;
        assert_eq!(x.len(), m);
        let mut y = x.to_vec();
        for k in 0..self.rdiag.len() {
            if self.beta[k] == 0.0 {
                continue;
            }
            let mut s = 0.0;
            for i in k..m {
                s += self.qr[(i, k)] * y[i];
            }
            let s = self.beta[k] * s;
            for i in k..m {
                y[i] -= s * self.qr[(i, k)];
            }
        }
        y
    }
}

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.
///
/// Intended for small operator diagnostics (conditioning estimates), not for
/// large spectra.
pub fn sym_eigenvalues(a: &Mat) -> Vec<f64> {
    assert_eq!(a.nrows, a.ncols);
    let n = a.nrows;
    let mut m = a.clone();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off.sqrt() <= 1e-14 * (1.0 + m.max_abs()) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }
    (0..n).map(|i| m[(i, i)]).collect()
}

/// 2-norm condition number of a (possibly rectangular) matrix via the
/// eigenvalues of `A^T A`.
pub fn cond2(a: &Mat) -> f64 {
    let ata = a.transpose().matmul(a);
    let evs = sym_eigenvalues(&ata);
    let max = evs.iter().fold(0.0_f64, |m, v| m.max(*v));
    let min = evs.iter().fold(f64::INFINITY, |m, v| m.min(v.max(0.0)));
    if min <= 0.0 {
        f64::INFINITY
    } else {
        (max / min).sqrt()
    }
}

/// Eigenvalues of a real square matrix.
///
/// Balancing, Householder reduction to upper Hessenberg form, then the
/// Francis double-shift QR iteration (eigenvalues only).
pub fn eigenvalues(a: &Mat) -> Result<Vec<Complex64>, LinalgError> {
    assert_eq!(a.nrows, a.ncols);
    let mut h = a.clone();
    balance(&mut h);
    hessenberg(&mut h);
    francis_qr(&mut h)
}

fn balance(a: &mut Mat) {
    let n = a.nrows;
    const RADIX: f64 = 2.0;
    let sqrdx = RADIX * RADIX;
    loop {
        let mut done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                let mut c2 = c;
                while c2 < g {
                    f *= RADIX;
                    c2 *= sqrdx;
                }
                g = r * RADIX;
                while c2 > g {
                    f /= RADIX;
                    c2 /= sqrdx;
                }
                if (c2 + r) / f < 0.95 * s {
                    done = false;
                    let ginv = 1.0 / f;
                    for j in 0..n {
                        a[(i, j)] *= ginv;
                    }
                    for j in 0..n {
                        a[(j, i)] *= f;
                    }
                }
            }
        }
        if done {
            break;
        }
    }
}

fn hessenberg(a: &mut Mat) {
    let n = a.nrows;
    if n < 3 {
        return;
    }
    let mut v = vec![0.0; n];
    let mut w = vec![0.0; n];
    for k in 0..n - 2 {
        // Householder vector annihilating a[k+2.., k].
        let mut alpha = 0.0;
        for i in k + 1..n {
            alpha += a[(i, k)] * a[(i, k)];
        }
        let alpha = alpha.sqrt();
        if alpha == 0.0 {
            continue;
        }
        let a0 = a[(k + 1, k)];
        let sign = if a0 >= 0.0 { 1.0 } else { -1.0 };
        let v0 = a0 + sign * alpha;
        v[k + 1] = v0;
        for i in k + 2..n {
            v[i] = a[(i, k)];
        }
        let mut vtv = 0.0;
        for i in k + 1..n {
            vtv += v[i] * v[i];
        }
        if vtv == 0.0 {
            continue;
        }
        let beta = 2.0 / vtv;

        // Left: A[k+1.., k..] -= beta v (v^T A). Row-major friendly: first
        // accumulate w = A^T v over rows, then rank-1 update row by row.
        for x in w[k..n].iter_mut() {
            *x = 0.0;
        }
        for i in k + 1..n {
            let vi = v[i];
            if vi == 0.0 {
                continue;
            }
            let row = &a.data[i * n + k..i * n + n];
            for (wj, aij) in w[k..n].iter_mut().zip(row.iter()) {
                *wj += vi * aij;
            }
        }
        for x in w[k..n].iter_mut() {
            *x *= beta;
        }
        for i in k + 1..n {
            let vi = v[i];
            if vi == 0.0 {
                continue;
            }
            let row = &mut a.data[i * n + k..i * n + n];
            for (aij, wj) in row.iter_mut().zip(w[k..n].iter()) {
                *aij -= vi * wj;
            }
        }

        // Right: A[0.., k+1..] -= (A v) beta v^T, contiguous per row.
        for i in 0..n {
            let row = &mut a.data[i * n + k + 1..i * n + n];
            let mut s = 0.0;
            for (aij, vj) in row.iter().zip(v[k + 1..n].iter()) {
                s += aij * vj;
            }
            let s = s * beta;
            for (aij, vj) in row.iter_mut().zip(v[k + 1..n].iter()) {
                *aij -= s * vj;
            }
        }
        // Store the exact annihilated form.
        a[(k + 1, k)] = -sign * alpha;
        for i in k + 2..n {
            a[(i, k)] = 0.0;
        }
    }
}

#[inline]
fn sign_of(x: f64, y: f64) -> f64 {
    if y >= 0.0 {
        x.abs()
    } else {
        -x.abs()
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix; eigenvalues only.
fn francis_qr(a: &mut Mat) -> Result<Vec<Complex64>, LinalgError> {
    let n = a.nrows;
    let eps = f64::EPSILON;
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];
    if n == 0 {
        return Ok(Vec::new());
    }

    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[(i, j)].abs();
        }
    }
    if anorm == 0.0 {
        return Ok(vec![Complex64::new(0.0, 0.0); n]);
    }

    let mut nn = n as isize - 1;
    let mut t = 0.0;
    while nn >= 0 {
        let mut its = 0;
        loop {
            // Find small subdiagonal element. When the local diagonal scale
            // is itself negligible against the matrix norm (zero-eigenvalue
            // clusters), fall back to the norm-based threshold; the induced
            // perturbation stays within the iteration's backward error.
            let mut l = 0isize;
            let mut ll = nn;
            while ll >= 1 {
                let s = a[(ll as usize - 1, ll as usize - 1)].abs()
                    + a[(ll as usize, ll as usize)].abs();
                let s = if s <= eps * anorm { anorm } else { s };
                if a[(ll as usize, ll as usize - 1)].abs() <= eps * s {
                    a[(ll as usize, ll as usize - 1)] = 0.0;
                    l = ll;
                    break;
                }
                ll -= 1;
            }
            let x = a[(nn as usize, nn as usize)];
            if l == nn {
                wr[nn as usize] = x + t;
                wi[nn as usize] = 0.0;
                nn -= 1;
                break;
            }
            let y = a[(nn as usize - 1, nn as usize - 1)];
            let w = a[(nn as usize, nn as usize - 1)] * a[(nn as usize - 1, nn as usize)];
            if l == nn - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                let x = x + t;
                if q >= 0.0 {
                    let z = p + sign_of(z, p);
                    wr[nn as usize - 1] = x + z;
                    wr[nn as usize] = if z != 0.0 { x - w / z } else { x + z };
                    wi[nn as usize - 1] = 0.0;
                    wi[nn as usize] = 0.0;
                } else {
                    wr[nn as usize - 1] = x + p;
                    wr[nn as usize] = x + p;
                    wi[nn as usize] = z;
                    wi[nn as usize - 1] = -z;
                }
                nn -= 2;
                break;
            }
            // QR sweep.
            if its == 120 {
                return Err(LinalgError::NoConvergence);
            }
            let (mut x, mut y, mut w) = (x, y, w);
            if its > 0 && its % 15 == 0 {
                // Exceptional shift with a cycled factor; a fixed factor can
                // cycle forever on degenerate complex-conjugate clusters.
                let fac = [0.75, 1.5, 0.3337, 1.0925][(its / 15) % 4];
                t += x;
                for i in 0..=nn as usize {
                    a[(i, i)] -= x;
                }
                let s = a[(nn as usize, nn as usize - 1)].abs()
                    + a[(nn as usize - 1, nn as usize - 2)].abs();
                x = fac * s;
                y = x;
                w = -0.4375 * fac * s * s;
            }
            its += 1;
            // Look for two consecutive small subdiagonal elements.
            let mut m = nn - 2;
            let (mut p, mut q, mut r);
            loop {
                let mu = m as usize;
                let z = a[(mu, mu)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[(mu + 1, mu)] + a[(mu, mu + 1)];
                q = a[(mu + 1, mu + 1)] - z - rr - ss;
                r = a[(mu + 2, mu + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[(mu, mu - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs()
                    * (a[(mu - 1, mu - 1)].abs() + z.abs() + a[(mu + 1, mu + 1)].abs());
                if u <= eps * v {
                    break;
                }
                m -= 1;
            }
            for i in m as usize + 2..=nn as usize {
                a[(i, i - 2)] = 0.0;
                if i != m as usize + 2 {
                    a[(i, i - 3)] = 0.0;
                }
            }
            // Double QR step on rows l..=nn and columns m..=nn.
            for k in m as usize..nn as usize {
                if k != m as usize {
                    p = a[(k, k - 1)];
                    q = a[(k + 1, k - 1)];
                    r = if k != nn as usize - 1 {
                        a[(k + 2, k - 1)]
                    } else {
                        0.0
                    };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign_of((p * p + q * q + r * r).sqrt(), p);
                if s == 0.0 {
                    continue;
                }
                if k == m as usize {
                    if l != m {
                        a[(k, k - 1)] = -a[(k, k - 1)];
                    }
                } else {
                    a[(k, k - 1)] = -s * x;
                }
                p += s;
                x = p / s;
                y = q / s;
                let z = r / s;
                q /= p;
                r /= p;
                // Row modification.
                for j in k..=nn as usize {
                    let mut pp = a[(k, j)] + q * a[(k + 1, j)];
                    if k != nn as usize - 1 {
                        pp += r * a[(k + 2, j)];
                        a[(k + 2, j)] -= pp * z;
                    }
                    a[(k + 1, j)] -= pp * y;
                    a[(k, j)] -= pp * x;
                }
                // Column modification.
                let mmin = nn.min(k as isize + 3) as usize;
                for i in l as usize..=mmin {
                    let mut pp = x * a[(i, k)] + y * a[(i, k + 1)];
                    if k != nn as usize - 1 {
                        pp += z * a[(i, k + 2)];
                        a[(i, k + 2)] -= pp * r;
                    }
                    a[(i, k + 1)] -= pp * q;
                    a[(i, k)] -= pp;
                }
            }
        }
    }
    Ok(wr
        .into_iter()
        .zip(wi)
        .map(|(re, im)| Complex64::new(re, im))
        .collect())
}

/// LU solve in complex arithmetic, used for inverse-iteration residual checks
/// of computed eigenpairs.
pub fn complex_lu_solve(mut a: Vec<Complex64>, n: usize, b: &mut [Complex64]) -> Result<(), LinalgError> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    let mut piv: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut p = k;
        let mut maxv = a[k * n + k].norm_sqr();
        for i in k + 1..n {
            let v = a[i * n + k].norm_sqr();
            if v > maxv {
                maxv = v;
                p = i;
            }
        }
        if maxv == 0.0 {
            return Err(LinalgError::Singular);
        }
        if p != k {
            piv.swap(p, k);
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
        }
        let pivot = a[k * n + k];
        for i in k + 1..n {
            let lik = a[i * n + k] / pivot;
            a[i * n + k] = lik;
            for j in k + 1..n {
                let akj = a[k * n + j];
                a[i * n + j] -= lik * akj;
            }
        }
    }
    let mut x: Vec<Complex64> = piv.iter().map(|&p| b[p]).collect();
    for i in 1..n {
        for j in 0..i {
            let lij = a[i * n + j];
            let xj = x[j];
            x[i] -= lij * xj;
        }
    }
    for i in (0..n).rev() {
        for j in i + 1..n {
            let uij = a[i * n + j];
            let xj = x[j];
            x[i] -= uij * xj;
        }
        x[i] /= a[i * n + i];
    }
    b.copy_from_slice(&x);
    Ok(())
}
