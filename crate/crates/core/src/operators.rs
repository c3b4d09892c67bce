//! Fourier-space operators `P(z)`, `Q(z)` of the coupled first-order system
//!
//! ```text
//! de/dz = j k0 P h,    dh/dz = j k0 Q e
//! ```
//!
//! The operators are dimensionless, so the eigenvalues of `PQ` are squared
//! effective indices. With `K = diag(m * wavelength / period)`, `E` the
//! Toeplitz matrix of the permittivity and `E_li` the inverse of the Toeplitz
//! matrix of `1/eps` (inverse rule):
//!
//! * TE: `P = I`, `Q = E - K^2`
//! * TM: `P = K E^-1 K - I`, `Q = -E_li`

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{PermittivitySlice, Polarization, StructureSpec};
use crate::linalg::{c, inverse_checked, CMat, C64};

/// Fourier coefficients `c_m`, `m in [-2M, 2M]`, of `eps(x)` and `1/eps(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierEps {
    pub order: usize,
    coeffs: Vec<C64>,
    coeffs_inv: Vec<C64>,
}

impl FourierEps {
    /// Coefficient of `eps` at harmonic `m`, `|m| <= 2 * order`.
    pub fn eps(&self, m: i64) -> C64 {
        self.coeffs[(m + 2 * self.order as i64) as usize]
    }

    pub fn inv_eps(&self, m: i64) -> C64 {
        self.coeffs_inv[(m + 2 * self.order as i64) as usize]
    }

    /// `E[p][q] = c_{p-q}` for harmonics `-M..=M`.
    pub fn toeplitz(&self) -> CMat {
        let n = 2 * self.order + 1;
        CMat::from_fn(n, n, |p, q| self.eps(p as i64 - q as i64))
    }

    pub fn toeplitz_inv(&self) -> CMat {
        let n = 2 * self.order + 1;
        CMat::from_fn(n, n, |p, q| self.inv_eps(p as i64 - q as i64))
    }
}

/// Closed-form coefficients of a piecewise-constant profile,
/// `c_m = (1/L) * integral eps(x) exp(-j 2 pi m x / L) dx`.
pub fn fourier_eps(slice: &PermittivitySlice, order: usize) -> FourierEps {
    let span = 2 * order as i64;
    let period = slice.period;
    let coefficient = |m: i64, value: &dyn Fn(C64) -> C64| -> C64 {
        slice
            .intervals
            .iter()
            .map(|iv| {
                let v = value(iv.eps);
                if m == 0 {
                    v * (iv.x_end - iv.x_start) / period
                } else {
                    let kappa = 2.0 * PI * m as f64;
                    let e_end = C64::from_polar(1.0, -kappa * iv.x_end / period);
                    let e_start = C64::from_polar(1.0, -kappa * iv.x_start / period);
                    v * (e_end - e_start) / c(0.0, -kappa)
                }
            })
            .sum()
    };
    let coeffs = (-span..=span).map(|m| coefficient(m, &|e| e)).collect();
    let coeffs_inv = (-span..=span).map(|m| coefficient(m, &|e| e.inv())).collect();
    FourierEps {
        order,
        coeffs,
        coeffs_inv,
    }
}

#[derive(Debug, Clone)]
pub struct OperatorPair {
    pub p: CMat,
    pub q: CMat,
    pub z: f64,
    pub polarization: Polarization,
    pub k0: f64,
}

impl OperatorPair {
    pub fn dim(&self) -> usize {
        self.p.nrows()
    }

    pub fn product(&self) -> CMat {
        &self.p * &self.q
    }
}

/// Sign applied to the `K E^-1 K - I` fold of the TM `P` operator.
///
/// Only [`TmFold::Standard`] is physical; the flipped variant exists so the
/// validation suite can prove that it detects a sign error.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TmFold {
    Standard,
    Flipped,
}

pub fn assemble_operators(slice: &PermittivitySlice, spec: &StructureSpec) -> Result<OperatorPair> {
    assemble_operators_with(slice, spec, TmFold::Standard)
}

#[doc(hidden)]
pub fn assemble_operators_with(
    slice: &PermittivitySlice,
    spec: &StructureSpec,
    fold: TmFold,
) -> Result<OperatorPair> {
    let order = spec.truncation_order;
    let n = 2 * order + 1;
    if (slice.period - spec.period_x_um).abs() > 1e-12 * spec.period_x_um {
        return Err(Error::InvalidArgument(format!(
            "slice period {} does not match structure period {}",
            slice.period, spec.period_x_um
        )));
    }
    let k0 = spec.k0();
    let kx: Vec<f64> = (0..n)
        .map(|p| (p as f64 - order as f64) * spec.wavelength_um / spec.period_x_um)
        .collect();
    let fe = fourier_eps(slice, order);
    let e = fe.toeplitz();

    let (p, q) = match spec.polarization {
        Polarization::TE => {
            let mut q = e;
            for (i, k) in kx.iter().enumerate() {
                q[(i, i)] -= c(k * k, 0.0);
            }
            (CMat::identity(n, n), q)
        }
        Polarization::TM => {
            let e_inv = inverse_checked(&e, "permittivity Toeplitz matrix")?;
            let e_li = inverse_checked(&fe.toeplitz_inv(), "inverse-permittivity Toeplitz matrix")?;
            let mut p = CMat::from_fn(n, n, |i, j| e_inv[(i, j)] * (kx[i] * kx[j]));
            for i in 0..n {
                p[(i, i)] -= c(1.0, 0.0);
            }
            if fold == TmFold::Flipped {
                p.neg_mut();
            }
            (p, -e_li)
        }
    };
    Ok(OperatorPair {
        p,
        q,
        z: slice.z,
        polarization: spec.polarization,
        k0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Interval;
    use crate::linalg::{eig, max_norm};

    fn spec(pol: Polarization, order: usize) -> StructureSpec {
        StructureSpec {
            wavelength_um: 1.55,
            polarization: pol,
            period_x_um: 1.0,
            z_min: 0.0,
            z_max: 1.0,
            truncation_order: order,
            background_eps: c(1.0, 0.0),
            regions: vec![],
        }
    }

    fn step(eps: f64, a: f64, b: f64, period: f64) -> PermittivitySlice {
        let mut ivs = vec![];
        if a > 0.0 {
            ivs.push(Interval { x_start: 0.0, x_end: a, eps: c(1.0, 0.0) });
        }
        ivs.push(Interval { x_start: a, x_end: b, eps: c(eps, 0.0) });
        if b < period {
            ivs.push(Interval { x_start: b, x_end: period, eps: c(1.0, 0.0) });
        }
        PermittivitySlice { z: 0.0, period, intervals: ivs }
    }

    #[test]
    fn uniform_unit_permittivity() {
        let fe = fourier_eps(&PermittivitySlice::uniform(0.0, 1.0, c(1.0, 0.0)), 4);
        assert_eq!(fe.eps(0), c(1.0, 0.0));
        for m in 1..=8 {
            assert!(fe.eps(m).norm() < 1e-15 && fe.eps(-m).norm() < 1e-15);
        }
    }

    #[test]
    fn half_period_step_closed_form() {
        let fe = fourier_eps(&step(4.0, 0.0, 0.5, 1.0), 3);
        assert!((fe.eps(0) - c(2.5, 0.0)).norm() < 1e-15);
        for m in 1..=6i64 {
            let mag = 3.0 * (PI * m as f64 / 2.0).sin() / (PI * m as f64);
            assert!((fe.eps(m).norm() - mag.abs()).abs() < 1e-14, "m = {m}");
        }
    }

    #[test]
    fn mirrored_step_reverses_harmonics() {
        let a = fourier_eps(&step(4.0, 0.1, 0.35, 1.0), 3);
        let b = fourier_eps(&step(4.0, 0.65, 0.9, 1.0), 3);
        for m in -6..=6 {
            assert!((a.eps(m) - b.eps(-m)).norm() < 1e-14);
            assert!((a.eps(m) - a.eps(-m).conj()).norm() < 1e-14);
        }
    }

    #[test]
    fn vacuum_spectrum_both_polarizations() {
        for pol in [Polarization::TE, Polarization::TM] {
            let s = spec(pol, 3);
            let ops = assemble_operators(&PermittivitySlice::uniform(0.0, 1.0, c(1.0, 0.0)), &s).unwrap();
            let pq = ops.product();
            for i in 0..7 {
                let k = (i as f64 - 3.0) * 1.55;
                for j in 0..7 {
                    let expect = if i == j { c(1.0 - k * k, 0.0) } else { c(0.0, 0.0) };
                    assert!((pq[(i, j)] - expect).norm() < 1e-12, "{pol:?} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn tm_order_zero_vacuum_is_unit() {
        let ops = assemble_operators(
            &PermittivitySlice::uniform(0.0, 1.0, c(1.0, 0.0)),
            &spec(Polarization::TM, 0),
        )
        .unwrap();
        assert_eq!(ops.p[(0, 0)], c(-1.0, 0.0));
        assert!((ops.q[(0, 0)] - c(-1.0, 0.0)).norm() < 1e-15);
        assert!((ops.product()[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn uniform_dielectric_te_spectrum() {
        let s = spec(Polarization::TE, 2);
        let ops = assemble_operators(&PermittivitySlice::uniform(0.0, 1.0, c(2.25, 0.0)), &s).unwrap();
        let (vals, _) = eig(&ops.product()).unwrap();
        let mut got: Vec<f64> = vals.iter().map(|v| v.re).collect();
        let mut want: Vec<f64> = (-2..=2).map(|m| 2.25 - (m as f64 * 1.55).powi(2)).collect();
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12);
        }
        assert!(vals.iter().all(|v| v.im.abs() < 1e-12));
    }

    #[test]
    fn lossless_step_has_real_spectrum() {
        for pol in [Polarization::TE, Polarization::TM] {
            let ops = assemble_operators(&step(12.25, 0.3, 0.65, 1.0), &spec(pol, 5)).unwrap();
            let pq = ops.product();
            let (vals, _) = eig(&pq).unwrap();
            let tol = 1e-10 * max_norm(&pq);
            assert!(vals.iter().all(|v| v.im.abs() <= tol), "{pol:?}: {vals:?}");
        }
    }

    #[test]
    fn toeplitz_nesting_under_order_doubling() {
        let sl = step(12.25, 0.3, 0.65, 1.0);
        let small = fourier_eps(&sl, 3).toeplitz();
        let big = fourier_eps(&sl, 6).toeplitz();
        let off = 3;
        for i in 0..7 {
            for j in 0..7 {
                assert_eq!(small[(i, j)], big[(i + off, j + off)]);
            }
        }
    }
}
