//! Basis reprojection at section interfaces and Redheffer star composition.
//!
//! At an interface the tangential fields are continuous:
//!
//! ```text
//! W_prev (a' + b') = W (a + b)
//! V_prev (a' - b') = V (a - b)
//! ```
//!
//! so with `X = (W^-1 W_prev + V^-1 V_prev)/2`, `Y = (W^-1 W_prev - V^-1 V_prev)/2`
//! the coefficients map as `a = X a' + Y b'`, `b = Y a' + X b'`.

use crate::error::{Error, Result};
use crate::linalg::{c, inverse_checked, CMat};
use crate::modal::{BasisId, ModalBasis};
use crate::smatrix::ScatteringMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionPair {
    pub x: CMat,
    pub y: CMat,
}

impl ProjectionPair {
    pub fn identity(n: usize) -> Self {
        ProjectionPair { x: CMat::identity(n, n), y: CMat::zeros(n, n) }
    }
}

/// Coefficient map from `from_basis` (the neighbour) into `to_basis` (the
/// section whose scattering matrix is being reprojected).
pub fn projection_pair(from_basis: &ModalBasis, to_basis: &ModalBasis) -> Result<ProjectionPair> {
    if from_basis.dim() != to_basis.dim() {
        return Err(Error::DimensionMismatch { expected: to_basis.dim(), found: from_basis.dim() });
    }
    let ww = to_basis.w_inv() * from_basis.w();
    let vv = to_basis.v_inv() * from_basis.v();
    Ok(ProjectionPair { x: (&ww + &vv) * c(0.5, 0.0), y: (&ww - &vv) * c(0.5, 0.0) })
}

/// Re-express the left port of `s` in another basis.
pub fn project_left(
    s: &ScatteringMatrix,
    pp: &ProjectionPair,
    new_left_basis: BasisId,
) -> Result<ScatteringMatrix> {
    let n = s.dim();
    if pp.x.nrows() != n || pp.y.nrows() != n {
        return Err(Error::DimensionMismatch { expected: n, found: pp.x.nrows() });
    }
    let d = &pp.x - &s.r_l * &pp.y;
    let d_inv = inverse_checked(&d, "interface projection (X - R_L Y)")?;
    let r_l = -(&d_inv * (&pp.y - &s.r_l * &pp.x));
    let t_rl = &d_inv * &s.t_rl;
    let t_lr_y = &s.t_lr * &pp.y;
    let t_lr = &s.t_lr * &pp.x + &t_lr_y * &r_l;
    let r_r = &t_lr_y * &t_rl + &s.r_r;
    Ok(ScatteringMatrix {
        t_lr,
        r_r,
        r_l,
        t_rl,
        left_basis: new_left_basis,
        right_basis: s.right_basis,
    })
}

/// Re-express the right port of `s` in another basis; `pp` maps the new
/// basis into the current right basis of `s`.
pub fn project_right(
    s: &ScatteringMatrix,
    pp: &ProjectionPair,
    new_right_basis: BasisId,
) -> Result<ScatteringMatrix> {
    Ok(project_left(&s.mirrored(), pp, new_right_basis)?.mirrored())
}

/// Move the left port of `s` (currently in `current`) into `target`.
pub fn reproject_left(
    s: &ScatteringMatrix,
    current: &ModalBasis,
    target: &ModalBasis,
) -> Result<ScatteringMatrix> {
    if s.left_basis != current.id() {
        return Err(Error::BasisMismatch { left: current.id(), right: s.left_basis });
    }
    if current.id() == target.id() {
        return Ok(s.clone());
    }
    project_left(s, &projection_pair(target, current)?, target.id())
}

/// Move the right port of `s` (currently in `current`) into `target`.
pub fn reproject_right(
    s: &ScatteringMatrix,
    current: &ModalBasis,
    target: &ModalBasis,
) -> Result<ScatteringMatrix> {
    if s.right_basis != current.id() {
        return Err(Error::BasisMismatch { left: s.right_basis, right: current.id() });
    }
    if current.id() == target.id() {
        return Ok(s.clone());
    }
    project_right(s, &projection_pair(target, current)?, target.id())
}

/// Redheffer star product: `left` followed by `right` along `+z`.
pub fn star(left: &ScatteringMatrix, right: &ScatteringMatrix) -> Result<ScatteringMatrix> {
    if left.right_basis != right.left_basis {
        return Err(Error::BasisMismatch { left: left.right_basis, right: right.left_basis });
    }
    let n = left.dim();
    if right.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: right.dim() });
    }
    let eye = CMat::identity(n, n);
    let g = inverse_checked(&(&eye - &left.r_r * &right.r_l), "resonance term (I - R_R R_L)")?;
    let h = inverse_checked(&(&eye - &right.r_l * &left.r_r), "resonance term (I - R_L R_R)")?;
    let g_t = &g * &left.t_lr;
    let h_t = &h * &right.t_rl;
    Ok(ScatteringMatrix {
        t_lr: &right.t_lr * &g_t,
        r_l: &left.r_l + &left.t_rl * &right.r_l * &g_t,
        r_r: &right.r_r + &right.t_lr * &left.r_r * &h_t,
        t_rl: &left.t_rl * &h_t,
        left_basis: left.left_basis,
        right_basis: right.right_basis,
    })
}
