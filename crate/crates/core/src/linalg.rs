//! Dense complex matrix helpers shared by the solver modules.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Largest condition estimate accepted before a matrix is treated as singular.
pub const COND_LIMIT: f64 = 1e12;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Largest absolute entry.
pub fn max_norm(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Induced 1-norm (maximum absolute column sum).
pub fn norm1(m: &CMat) -> f64 {
    m.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse with a 1-norm condition estimate; fails above [`COND_LIMIT`].
pub fn inverse_checked(m: &CMat, what: &'static str) -> Result<CMat> {
    let (inv, cond) = inverse_with_cond(m, what)?;
    if cond > COND_LIMIT {
        return Err(Error::Singular { what, cond });
    }
    Ok(inv)
}

pub fn inverse_with_cond(m: &CMat, what: &'static str) -> Result<(CMat, f64)> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    let inv = m.clone().lu().try_inverse().ok_or(Error::Singular {
        what,
        cond: f64::INFINITY,
    })?;
    let cond = norm1(m) * norm1(&inv);
    if !cond.is_finite() {
        return Err(Error::Singular {
            what,
            cond: f64::INFINITY,
        });
    }
    Ok((inv, cond))
}

/// Eigenvalues and right eigenvectors of a general complex matrix.
///
/// The matrix is reduced to complex Schur form `A = Z T Z^H`, the eigenvectors
/// of the triangular factor are found by back-substitution, and mapped back
/// through `Z`. Columns are returned with unit 2-norm.
pub fn eig(a: &CMat) -> Result<(Vec<C64>, CMat)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((Vec::new(), CMat::zeros(0, 0)));
    }
    let schur = Schur::try_new(a.clone(), f64::EPSILON, 200 * n.max(10))
        .ok_or(Error::EigenNoConvergence { n })?;
    let (z, t) = schur.unpack();

    let scale = max_norm(&t).max(f64::MIN_POSITIVE);
    let smin = scale * f64::EPSILON;
    let values: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();

    let mut y_all = CMat::zeros(n, n);
    for k in 0..n {
        let mu = values[k];
        y_all[(k, k)] = C64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let mut s = C64::new(0.0, 0.0);
            for l in (j + 1)..=k {
                s += t[(j, l)] * y_all[(l, k)];
            }
            let mut d = t[(j, j)] - mu;
            if d.norm() < smin {
                d = C64::new(smin, 0.0);
            }
            y_all[(j, k)] = -s / d;
        }
    }
    let mut vectors = z * y_all;
    for mut col in vectors.column_iter_mut() {
        let nrm = col.norm();
        if nrm > 0.0 && nrm.is_finite() {
            col.unscale_mut(nrm);
        } else {
            return Err(Error::EigenNoConvergence { n });
        }
    }
    if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::EigenNoConvergence { n });
    }
    Ok((values, vectors))
}

pub fn diag(values: &[C64]) -> CMat {
    CMat::from_diagonal(&CVec::from_column_slice(values))
}
