//! Global semi-discrete operators as explicit matrices, by probing a linear
//! right-hand side with canonical basis vectors, plus eigenvalue summaries.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::linalg::{complex_lu_solve, eigenvalues as dense_eigenvalues, LinalgError, Mat};
#[allow(unused_imports)] // test builds link std, whose inherent methods shadow this shim
use crate::math::Libm;

#[derive(Debug, Clone, PartialEq)]
pub enum SpectraError {
    /// Probing found an affine offset: the map is not linear (forcing or
    /// time-dependent boundary data was not zeroed).
    NonLinearRhs { offset_norm: f64 },
    Eig(LinalgError),
}

impl fmt::Display for SpectraError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectraError::NonLinearRhs { offset_norm } => {
                write!(f, "rhs(0) has norm {offset_norm}; operator is affine, not linear")
            }
            SpectraError::Eig(e) => write!(f, "eigenvalue solve failed: {e}"),
        }
    }
}

impl core::error::Error for SpectraError {}

/// Dense matrix of a linear map `u -> f(u)` of dimension `dof`, assembled
/// column by column.
pub fn assemble(
    mut f: impl FnMut(&[f64], &mut [f64]),
    dof: usize,
) -> Result<Mat, SpectraError> {
    let mut probe = vec![0.0; dof];
    let mut out = vec![0.0; dof];
    f(&probe, &mut out);
    let offset: f64 = out.iter().map(|v| v * v).sum::<f64>().sqrt();
    if offset > 1e-12 {
        return Err(SpectraError::NonLinearRhs { offset_norm: offset });
    }
    let mut a = Mat::zeros(dof, dof);
    for j in 0..dof {
        probe[j] = 1.0;
        f(&probe, &mut out);
        probe[j] = 0.0;
        for i in 0..dof {
            a[(i, j)] = out[i];
        }
    }
    Ok(a)
}

/// Full spectrum of a dense real matrix.
pub fn spectrum(a: &Mat) -> Result<Vec<Complex64>, SpectraError> {
    dense_eigenvalues(a).map_err(SpectraError::Eig)
}

pub fn max_abs(evs: &[Complex64]) -> f64 {
    evs.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_re(evs: &[Complex64]) -> f64 {
    evs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

pub fn max_abs_re(evs: &[Complex64]) -> f64 {
    evs.iter().map(|z| z.re.abs()).fold(0.0, f64::max)
}

/// Relative residuals `||A v - lambda v|| / ||A||_F` for a sample of the
/// computed eigenvalues, with eigenvectors recovered by shifted inverse
/// iteration in complex arithmetic.
pub fn eig_residuals(a: &Mat, evs: &[Complex64], samples: usize, seed: u64) -> Vec<f64> {
    let n = a.nrows();
    let norm_a = a.norm();
    let mut state = seed;
    let mut out = Vec::new();
    let count = samples.min(evs.len());
    for s in 0..count {
        // Spread the samples over the spectrum.
        let idx = (s * evs.len()) / count;
        let lambda = evs[idx];
        // Perturbed shift keeps the solve well-posed.
        let shift = lambda + Complex64::new(1e-8 * (1.0 + norm_a), 1e-8);
        let mut am: Vec<Complex64> = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut v = Complex64::new(a[(i, j)], 0.0);
                if i == j {
                    v -= shift;
                }
                am.push(v);
            }
        }
        let mut v: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(crate::math::splitmix_unit(&mut state) - 0.5, 0.0))
            .collect();
        let mut ok = true;
        for _ in 0..2 {
            if complex_lu_solve(am.clone(), n, &mut v).is_err() {
                ok = false;
                break;
            }
            let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for z in v.iter_mut() {
                *z /= norm;
            }
        }
        if !ok {
            out.push(f64::INFINITY);
            continue;
        }
        // Residual of the ORIGINAL eigenvalue.
        let mut res = 0.0;
        for i in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..n {
                acc += a[(i, j)] * v[j];
            }
            acc -= lambda * v[i];
            res += acc.norm_sqr();
        }
        out.push(res.sqrt() / norm_a.max(1e-300));
    }
    out
}
