use crate::error::{Error, Result};
use crate::linalg::{max_norm, CMat, CVec};
use crate::modal::BasisId;

/// Block scattering matrix relating `[a_R; b_L] = S [a_L; b_R]`.
///
/// The left and right ports may be expressed in different modal bases; the
/// ids record which.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringMatrix {
    pub t_lr: CMat,
    pub r_r: CMat,
    pub r_l: CMat,
    pub t_rl: CMat,
    pub left_basis: BasisId,
    pub right_basis: BasisId,
}

pub const BLOCK_NAMES: [&str; 4] = ["TLR", "RR", "RL", "TRL"];

impl ScatteringMatrix {
    pub fn identity(n: usize, basis: BasisId) -> Self {
        ScatteringMatrix {
            t_lr: CMat::identity(n, n),
            r_r: CMat::zeros(n, n),
            r_l: CMat::zeros(n, n),
            t_rl: CMat::identity(n, n),
            left_basis: basis,
            right_basis: basis,
        }
    }

    pub fn dim(&self) -> usize {
        self.t_lr.nrows()
    }

    /// Blocks in `TLR, RR, RL, TRL` order.
    pub fn blocks(&self) -> [&CMat; 4] {
        [&self.t_lr, &self.r_r, &self.r_l, &self.t_rl]
    }

    pub fn validate_shape(&self) -> Result<()> {
        let n = self.dim();
        for b in self.blocks() {
            if b.nrows() != n || b.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, found: b.ncols() });
            }
        }
        Ok(())
    }

    /// The same structure seen from the other side.
    pub fn mirrored(&self) -> Self {
        ScatteringMatrix {
            t_lr: self.t_rl.clone(),
            r_r: self.r_l.clone(),
            r_l: self.r_r.clone(),
            t_rl: self.t_lr.clone(),
            left_basis: self.right_basis,
            right_basis: self.left_basis,
        }
    }

    /// Outgoing `(a_R, b_L)` for incoming `(a_L, b_R)`.
    pub fn apply(&self, a_l: &CVec, b_r: &CVec) -> (CVec, CVec) {
        (
            &self.t_lr * a_l + &self.r_r * b_r,
            &self.r_l * a_l + &self.t_rl * b_r,
        )
    }

    /// `||S - other||_max` over all four blocks. Both must share port bases.
    pub fn max_norm_diff(&self, other: &ScatteringMatrix) -> Result<f64> {
        if self.left_basis != other.left_basis {
            return Err(Error::BasisMismatch { left: self.left_basis, right: other.left_basis });
        }
        if self.right_basis != other.right_basis {
            return Err(Error::BasisMismatch { left: self.right_basis, right: other.right_basis });
        }
        Ok(self.max_norm_diff_unchecked(other))
    }

    /// Entrywise max-norm difference ignoring the basis ids.
    pub fn max_norm_diff_unchecked(&self, other: &ScatteringMatrix) -> f64 {
        self.blocks()
            .iter()
            .zip(other.blocks())
            .map(|(a, b)| max_norm(&(*a - b)))
            .fold(0.0, f64::max)
    }

    pub fn max_norm(&self) -> f64 {
        self.blocks().iter().map(|b| max_norm(b)).fold(0.0, f64::max)
    }
}
