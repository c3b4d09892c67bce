//! Eigenmode basis `(W, V, Lambda)` of a reference cross-section and the
//! conversion between field vectors and forward/backward mode coefficients.
//!
//! `P_r Q_r = W Lambda^2 W^-1` and `V = Q_r W Lambda^-1`. Each effective index
//! `lambda` is taken on the branch `Im(lambda) >= 0` (and `Re(lambda) > 0` when
//! real), so every propagation factor `exp(j k0 lambda dz)` with `dz >= 0` has
//! magnitude at most one.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};

use crate::error::{Error, Result};
use crate::linalg::{c, eig, inverse_with_cond, max_norm, CMat, CVec, C64, COND_LIMIT};
use crate::geometry::Polarization;
use crate::operators::OperatorPair;

/// Modes with `|lambda|` below this are rejected as cutoff modes.
pub const LAMBDA_CUTOFF: f64 = 1e-8;

/// Relative size below which a negative imaginary part is treated as roundoff.
const BRANCH_TOL: f64 = 1e-12;

/// Content-derived identifier of a modal basis. Equal ids imply equal matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisId(u64);

impl BasisId {
    pub const fn from_raw(raw: u64) -> Self {
        BasisId(raw)
    }

    pub fn raw(self) -> u64 {
        self.0
    }
}

impl fmt::Display for BasisId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "basis:{:016x}", self.0)
    }
}

fn hash_matrices(tag: u8, mats: &[&CMat], extra: &[f64]) -> BasisId {
    let mut h = DefaultHasher::new();
    tag.hash(&mut h);
    for m in mats {
        m.nrows().hash(&mut h);
        for z in m.iter() {
            z.re.to_bits().hash(&mut h);
            z.im.to_bits().hash(&mut h);
        }
    }
    for x in extra {
        x.to_bits().hash(&mut h);
    }
    BasisId(h.finish())
}

#[derive(Debug, Clone)]
pub struct ModalBasis {
    w: CMat,
    v: CMat,
    w_inv: CMat,
    v_inv: CMat,
    lambda: Vec<C64>,
    z_ref: f64,
    k0: f64,
    id: BasisId,
}

impl ModalBasis {
    /// Basis from explicit matrices, e.g. an external port or a test fixture.
    pub fn from_parts(w: CMat, v: CMat, lambda: Vec<C64>, z_ref: f64, k0: f64) -> Result<Self> {
        let n = w.nrows();
        for m in [&w, &v] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, found: m.ncols() });
            }
        }
        if lambda.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: lambda.len() });
        }
        let id = hash_matrices(
            1,
            &[&w, &v],
            &lambda.iter().flat_map(|l| [l.re, l.im]).collect::<Vec<_>>(),
        );
        Self::assemble(w, v, lambda, z_ref, k0, id)
    }

    fn assemble(w: CMat, v: CMat, lambda: Vec<C64>, z_ref: f64, k0: f64, id: BasisId) -> Result<Self> {
        let (w_inv, cond_w) = inverse_with_cond(&w, "electric eigenbasis W")?;
        if cond_w > COND_LIMIT {
            return Err(Error::DefectiveBasis { cond: cond_w });
        }
        let (v_inv, cond_v) = inverse_with_cond(&v, "magnetic basis V")?;
        if cond_v > COND_LIMIT {
            return Err(Error::Singular { what: "magnetic basis V", cond: cond_v });
        }
        Ok(ModalBasis { w, v, w_inv, v_inv, lambda, z_ref, k0, id })
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }
    pub fn w(&self) -> &CMat {
        &self.w
    }
    pub fn v(&self) -> &CMat {
        &self.v
    }
    pub fn w_inv(&self) -> &CMat {
        &self.w_inv
    }
    pub fn v_inv(&self) -> &CMat {
        &self.v_inv
    }
    pub fn lambda(&self) -> &[C64] {
        &self.lambda
    }
    pub fn z_ref(&self) -> f64 {
        self.z_ref
    }
    pub fn k0(&self) -> f64 {
        self.k0
    }
    pub fn id(&self) -> BasisId {
        self.id
    }

    /// `exp(j k0 lambda_m dz)` without argument checking; `dz >= 0` is assumed.
    pub(crate) fn phases(&self, dz: f64) -> Vec<C64> {
        self.lambda
            .iter()
            .map(|l| (c(0.0, self.k0 * dz) * l).exp())
            .collect()
    }
}

fn branch_sqrt(mu: C64, scale: f64) -> C64 {
    let mut s = mu.sqrt();
    if s.im < -BRANCH_TOL * scale {
        s = -s;
    } else if s.im < 0.0 {
        s.im = 0.0;
    }
    s
}

fn mode_order(a: &C64, b: &C64) -> Ordering {
    b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im))
}

pub fn eigen_basis(ops: &OperatorPair) -> Result<ModalBasis> {
    let n = ops.dim();
    let pq = ops.product();
    let (mu, vecs) = eig(&pq)?;
    let scale = max_norm(&pq).sqrt().max(1.0);
    let lam: Vec<C64> = mu.iter().map(|&m| branch_sqrt(m, scale)).collect();

    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| mode_order(&lam[i], &lam[j]));

    let lambda: Vec<C64> = idx.iter().map(|&i| lam[i]).collect();
    if let Some((index, l)) = lambda.iter().enumerate().find(|(_, l)| l.norm() < LAMBDA_CUTOFF) {
        return Err(Error::CutoffMode { index, magnitude: l.norm() });
    }

    let mut w = CMat::zeros(n, n);
    for (dst, &src) in idx.iter().enumerate() {
        let mut col = vecs.column(src).into_owned();
        let peak = col.iter().fold(0.0, |acc: f64, z| acc.max(z.norm()));
        let pivot = col
            .iter()
            .position(|z| z.norm() >= peak * (1.0 - 1e-9))
            .unwrap_or(0);
        let phase = col[pivot].conj() / col[pivot].norm();
        col *= phase;
        w.set_column(dst, &col);
    }

    let mut v = &ops.q * &w;
    for (j, l) in lambda.iter().enumerate() {
        let inv = l.inv();
        for i in 0..n {
            v[(i, j)] *= inv;
        }
    }

    let id = hash_matrices(
        0,
        &[&ops.p, &ops.q],
        &[ops.k0, if ops.polarization == Polarization::TE { 0.0 } else { 1.0 }],
    );
    ModalBasis::assemble(w, v, lambda, ops.z, ops.k0, id)
}

/// Forward (`a`) and backward (`b`) coefficients in a given basis.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub a: CVec,
    pub b: CVec,
    pub basis: BasisId,
}

pub fn mode_coefficients(e: &CVec, h: &CVec, basis: &ModalBasis) -> Result<WaveState> {
    let n = basis.dim();
    for len in [e.len(), h.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, found: len });
        }
    }
    let we = basis.w_inv() * e;
    let vh = basis.v_inv() * h;
    Ok(WaveState {
        a: &we + &vh,
        b: &we - &vh,
        basis: basis.id(),
    })
}

pub fn reconstruct_fields(state: &WaveState, basis: &ModalBasis) -> Result<(CVec, CVec)> {
    let n = basis.dim();
    for len in [state.a.len(), state.b.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, found: len });
        }
    }
    if state.basis != basis.id() {
        return Err(Error::BasisMismatch { left: state.basis, right: basis.id() });
    }
    let e = basis.w() * (&state.a + &state.b) * c(0.5, 0.0);
    let h = basis.v() * (&state.a - &state.b) * c(0.5, 0.0);
    Ok((e, h))
}

/// Diagonal of `exp(j k0 Lambda dz)`.
pub fn propagation_factor(basis: &ModalBasis, dz: f64) -> Result<Vec<C64>> {
    if dz.is_nan() || dz < 0.0 {
        return Err(Error::NegativeLength(dz));
    }
    Ok(basis.phases(dz))
}

/// Time-averaged power flux along `+z` carried by the fields `(e, h)`, up to
/// a positive constant. The sign factor makes forward modes carry positive
/// power in both polarizations.
pub fn power_flux(e: &CVec, h: &CVec, polarization: Polarization) -> f64 {
    let s = match polarization {
        Polarization::TE => 1.0,
        Polarization::TM => -1.0,
    };
    s * e.dotc(h).re
}
