//! Scattering matrix of a single `z`-section.
//!
//! A section `[z_L, z_R]` is described in the modal basis of one reference
//! cross-section. The zeroth-order matrix is pure modal propagation (the
//! conventional piecewise-constant treatment). The first-order matrix adds the
//! integrals of the perturbation matrices
//!
//! ```text
//! dA(z) = W^-1 (P(z) - P_r) V + V^-1 (Q(z) - Q_r) W
//! dB(z) = W^-1 (P(z) - P_r) V - V^-1 (Q(z) - Q_r) W
//! ```
//!
//! sandwiched between propagation factors `F(d) = exp(j k0 Lambda d)`:
//!
//! ```text
//! T_LR = F(L) + (j k0/2) Int F(z_R - z) dA(z) F(z - z_L) dz
//! R_R  =      - (j k0/2) Int F(z_R - z) dB(z) F(z_R - z) dz
//! R_L  =      - (j k0/2) Int F(z - z_L) dB(z) F(z - z_L) dz
//! T_RL = F(L) + (j k0/2) Int F(z - z_L) dA(z) F(z_R - z) dz
//! ```
//!
//! Every propagation argument is non-negative, so all factors stay bounded by
//! one. A direct expansion in `W^-1 P V` and `V^-1 Q W` would instead need
//! those (unbounded) matrices to be small, which is why only the variation
//! `P(z) - P_r` enters here.
//!
//! The perturbation matrices are sampled at `z_L`, the midpoint and `z_R` and
//! interpolated quadratically; the product of that quadratic with the exact
//! exponential propagation factors is then integrated in closed form. For
//! vanishing phase this is Simpson's rule, but unlike plain Simpson it stays
//! accurate when a section spans several radians of modal phase.
//!
//! The integral terms themselves are the difference between the first- and
//! zeroth-order matrices, and their largest entry is the error estimate.

use crate::error::{Error, Result};
use crate::geometry::{slice_at, StructureSpec};
use crate::linalg::{c, max_norm, CMat, C64};
use crate::modal::ModalBasis;
use crate::operators::{assemble_operators, OperatorPair};
use crate::smatrix::ScatteringMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Order {
    Zeroth,
    First,
}

impl Order {
    pub fn from_index(i: u8) -> Option<Order> {
        match i {
            0 => Some(Order::Zeroth),
            1 => Some(Order::First),
            _ => None,
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Order::Zeroth => 0,
            Order::First => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DeltaPair {
    pub da: CMat,
    pub db: CMat,
}

pub fn delta_ab(slice_ops: &OperatorPair, ref_ops: &OperatorPair, basis: &ModalBasis) -> Result<DeltaPair> {
    let n = basis.dim();
    for m in [&slice_ops.p, &slice_ops.q, &ref_ops.p, &ref_ops.q] {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: m.nrows() });
        }
    }
    let dp = basis.w_inv() * (&slice_ops.p - &ref_ops.p) * basis.v();
    let dq = basis.v_inv() * (&slice_ops.q - &ref_ops.q) * basis.w();
    Ok(DeltaPair { da: &dp + &dq, db: &dp - &dq })
}

pub fn zeroth_order_smatrix(basis: &ModalBasis, z_l: f64, z_r: f64) -> Result<ScatteringMatrix> {
    let len = z_r - z_l;
    if len.is_nan() || len < 0.0 {
        return Err(Error::NegativeLength(len));
    }
    let n = basis.dim();
    let f = crate::linalg::diag(&basis.phases(len));
    Ok(ScatteringMatrix {
        t_lr: f.clone(),
        r_r: CMat::zeros(n, n),
        r_l: CMat::zeros(n, n),
        t_rl: f,
        left_basis: basis.id(),
        right_basis: basis.id(),
    })
}

/// The four integral terms `dT_LR, dR_R, dR_L, dT_RL` of a section.
#[derive(Debug, Clone)]
pub struct FirstOrderTerms {
    pub d_t_lr: CMat,
    pub d_r_r: CMat,
    pub d_r_l: CMat,
    pub d_t_rl: CMat,
}

impl FirstOrderTerms {
    pub fn blocks(&self) -> [&CMat; 4] {
        [&self.d_t_lr, &self.d_r_r, &self.d_r_l, &self.d_t_rl]
    }
}

/// Largest entry over the four integral terms.
pub fn estimate_error(terms: &FirstOrderTerms) -> f64 {
    terms.blocks().iter().map(|m| max_norm(m)).fold(0.0, f64::max)
}

/// Sample positions `z_L`, midpoint, `z_R`.
pub(crate) fn sample_points(z_l: f64, z_r: f64) -> [f64; 3] {
    [z_l, 0.5 * (z_l + z_r), z_r]
}

/// `[I_0, I_1, I_2]` with `I_k = int_0^1 u^k exp(g u) du`.
pub(crate) fn exp_moments(g: C64) -> [C64; 3] {
    if g.norm() < 1.0 {
        let mut out = [C64::new(0.0, 0.0); 3];
        let mut term = c(1.0, 0.0);
        for j in 0..40 {
            for (k, o) in out.iter_mut().enumerate() {
                *o += term / (k + j + 1) as f64;
            }
            term *= g / (j + 1) as f64;
        }
        out
    } else {
        let e = g.exp();
        let i0 = (e - 1.0) / g;
        let i1 = (e - i0) / g;
        let i2 = (e - i1 * 2.0) / g;
        [i0, i1, i2]
    }
}

/// Weights `int_0^1 exp(a (1-u) + b u) l_i(u) du` for the quadratic Lagrange
/// basis `l_i` on nodes `0, 1/2, 1`. The exponential is anchored at the end
/// with the larger real part so the remaining factor never grows.
pub(crate) fn fitted_weights(a: C64, b: C64) -> [C64; 3] {
    let lagrange = |m: [C64; 3]| [m[2] * 2.0 - m[1] * 3.0 + m[0], (m[1] - m[2]) * 4.0, m[2] * 2.0 - m[1]];
    if a.re >= b.re {
        let w = lagrange(exp_moments(b - a));
        let s = a.exp();
        [w[0] * s, w[1] * s, w[2] * s]
    } else {
        let w = lagrange(exp_moments(a - b));
        let s = b.exp();
        [w[2] * s, w[1] * s, w[0] * s]
    }
}

/// Quadrature of the four integral terms from perturbation matrices sampled
/// at the [`sample_points`].
pub(crate) fn integrate_terms(
    basis: &ModalBasis,
    z_l: f64,
    z_r: f64,
    deltas: &[DeltaPair; 3],
) -> FirstOrderTerms {
    let n = basis.dim();
    let len = z_r - z_l;
    let mut terms = FirstOrderTerms {
        d_t_lr: CMat::zeros(n, n),
        d_r_r: CMat::zeros(n, n),
        d_r_l: CMat::zeros(n, n),
        d_t_rl: CMat::zeros(n, n),
    };
    let coef = c(0.0, 0.5 * basis.k0() * len);
    let x: Vec<C64> = basis.lambda().iter().map(|l| c(0.0, basis.k0() * len) * l).collect();
    let zero = c(0.0, 0.0);
    let sum = |w: [C64; 3], pick: &dyn Fn(&DeltaPair) -> C64| -> C64 {
        w.iter().zip(deltas).map(|(w, d)| w * pick(d)).sum::<C64>() * coef
    };
    for m in 0..n {
        for k in 0..n {
            let da = |d: &DeltaPair| d.da[(m, k)];
            let db = |d: &DeltaPair| d.db[(m, k)];
            terms.d_t_lr[(m, k)] = sum(fitted_weights(x[m], x[k]), &da);
            terms.d_t_rl[(m, k)] = sum(fitted_weights(x[k], x[m]), &da);
            terms.d_r_r[(m, k)] = -sum(fitted_weights(x[m] + x[k], zero), &db);
            terms.d_r_l[(m, k)] = -sum(fitted_weights(zero, x[m] + x[k]), &db);
        }
    }
    terms
}

pub fn first_order_terms(
    spec: &StructureSpec,
    z_l: f64,
    z_r: f64,
    basis: &ModalBasis,
    ref_ops: &OperatorPair,
) -> Result<FirstOrderTerms> {
    if z_r.is_nan() || z_l.is_nan() || z_r < z_l {
        return Err(Error::NegativeLength(z_r - z_l));
    }
    let slack = 1e-12 * (z_r - z_l).abs().max(1.0);
    let r = basis.z_ref();
    if r < z_l - slack || r > z_r + slack {
        return Err(Error::InvalidArgument(format!(
            "reference position {r} lies outside the section [{z_l}, {z_r}]"
        )));
    }
    let nodes = sample_points(z_l, z_r);
    let sample = |z: f64| -> Result<DeltaPair> {
        if z == ref_ops.z {
            delta_ab(ref_ops, ref_ops, basis)
        } else {
            let ops = assemble_operators(&slice_at(spec, z)?, spec)?;
            delta_ab(&ops, ref_ops, basis)
        }
    };
    let deltas = [sample(nodes[0])?, sample(nodes[1])?, sample(nodes[2])?];
    Ok(integrate_terms(basis, z_l, z_r, &deltas))
}

#[derive(Debug, Clone)]
pub struct SectionResult {
    pub smat: ScatteringMatrix,
    pub est_error: f64,
    /// Eigendecompositions performed to produce this section (0 or 1).
    pub eig_count: usize,
    pub z_l: f64,
    pub z_r: f64,
    pub order: Order,
}

/// Add the integral terms to the zeroth-order matrix of the same section.
pub fn add_terms(s0: &ScatteringMatrix, terms: &FirstOrderTerms) -> ScatteringMatrix {
    ScatteringMatrix {
        t_lr: &s0.t_lr + &terms.d_t_lr,
        r_r: &s0.r_r + &terms.d_r_r,
        r_l: &s0.r_l + &terms.d_r_l,
        t_rl: &s0.t_rl + &terms.d_t_rl,
        left_basis: s0.left_basis,
        right_basis: s0.right_basis,
    }
}

/// First-order scattering matrix of `[z_l, z_r]` in the supplied basis.
///
/// `eig_count` is left at zero since the basis is provided by the caller.
pub fn first_order_smatrix(
    spec: &StructureSpec,
    z_l: f64,
    z_r: f64,
    basis: &ModalBasis,
    ref_ops: &OperatorPair,
) -> Result<SectionResult> {
    let terms = first_order_terms(spec, z_l, z_r, basis, ref_ops)?;
    let s0 = zeroth_order_smatrix(basis, z_l, z_r)?;
    Ok(SectionResult {
        smat: add_terms(&s0, &terms),
        est_error: estimate_error(&terms),
        eig_count: 0,
        z_l,
        z_r,
        order: Order::First,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::star;
    use crate::geometry::{MaterialRegion, Polarization, Profile};
    use crate::modal::eigen_basis;

    fn waveguide(pol: Polarization, width: Profile) -> StructureSpec {
        StructureSpec {
            wavelength_um: 1.55,
            polarization: pol,
            period_x_um: 1.0,
            z_min: 0.0,
            z_max: 1.0,
            truncation_order: 3,
            background_eps: c(1.0, 0.0),
            regions: vec![MaterialRegion {
                eps: c(12.25, 0.0),
                center_x: Profile::Constant { value: 0.5 },
                width,
            }],
        }
    }

    fn reference(spec: &StructureSpec, z: f64) -> (ModalBasis, OperatorPair) {
        let ops = assemble_operators(&slice_at(spec, z).unwrap(), spec).unwrap();
        (eigen_basis(&ops).unwrap(), ops)
    }

    #[test]
    fn unchanged_operators_give_zero_deltas() {
        let spec = waveguide(Polarization::TM, Profile::Constant { value: 0.3 });
        let (b, ops) = reference(&spec, 0.5);
        let d = delta_ab(&ops, &ops, &b).unwrap();
        assert_eq!(max_norm(&d.da), 0.0);
        assert_eq!(max_norm(&d.db), 0.0);
    }

    #[test]
    fn q_only_variation_is_antisymmetric() {
        let spec = waveguide(Polarization::TE, Profile::Linear { start: 0.26, end: 0.37 });
        let (b, ref_ops) = reference(&spec, 0.5);
        let other = assemble_operators(&slice_at(&spec, 0.9).unwrap(), &spec).unwrap();
        let d = delta_ab(&other, &ref_ops, &b).unwrap();
        let expect = b.v_inv() * (&other.q - &ref_ops.q) * b.w();
        assert!(max_norm(&(&d.da - &expect)) < 1e-12 * max_norm(&expect));
        assert!(max_norm(&(&d.da + &d.db)) < 1e-12 * max_norm(&expect));
    }

    #[test]
    fn zero_length_section_is_identity() {
        let spec = waveguide(Polarization::TE, Profile::Linear { start: 0.26, end: 0.37 });
        let (b, ops) = reference(&spec, 0.4);
        let s = zeroth_order_smatrix(&b, 0.4, 0.4).unwrap();
        assert_eq!(s, ScatteringMatrix::identity(7, b.id()));
        let s1 = first_order_smatrix(&spec, 0.4, 0.4, &b, &ops).unwrap();
        assert_eq!(s1.est_error, 0.0);
        assert!(matches!(zeroth_order_smatrix(&b, 0.5, 0.4), Err(Error::NegativeLength(_))));
    }

    #[test]
    fn half_sections_compose_to_full() {
        let spec = waveguide(Polarization::TE, Profile::Constant { value: 0.3 });
        let (b, _) = reference(&spec, 0.5);
        let half = zeroth_order_smatrix(&b, 0.0, 0.5).unwrap();
        let full = zeroth_order_smatrix(&b, 0.0, 1.0).unwrap();
        let composed = star(&half, &half).unwrap();
        assert!(composed.max_norm_diff(&full).unwrap() < 1e-12);
    }

    #[test]
    fn constant_section_first_equals_zeroth() {
        let spec = waveguide(Polarization::TM, Profile::Constant { value: 0.3 });
        let (b, ops) = reference(&spec, 0.5);
        let s1 = first_order_smatrix(&spec, 0.0, 1.0, &b, &ops).unwrap();
        let s0 = zeroth_order_smatrix(&b, 0.0, 1.0).unwrap();
        assert_eq!(s1.est_error, 0.0);
        assert_eq!(s1.smat, s0);
    }

    #[test]
    fn short_section_reflection_vanishes_with_length() {
        let spec = waveguide(Polarization::TE, Profile::Linear { start: 0.26, end: 0.37 });
        let mut prev = f64::INFINITY;
        for len in [0.1, 0.01, 0.001] {
            let z_l = 0.5 - len / 2.0;
            let (b, ops) = reference(&spec, 0.5);
            let s = first_order_smatrix(&spec, z_l, z_l + len, &b, &ops).unwrap();
            let refl = max_norm(&s.smat.r_l).max(max_norm(&s.smat.r_r));
            assert!(refl < prev);
            assert!(refl < 10.0 * len, "len {len}: {refl}");
            prev = refl;
            let eye = ScatteringMatrix::identity(7, b.id());
            assert!(s.smat.max_norm_diff(&eye).unwrap() < 50.0 * len);
        }
    }

    #[test]
    fn estimate_scales_linearly_with_perturbation() {
        let spec = waveguide(Polarization::TM, Profile::Linear { start: 0.26, end: 0.37 });
        let (b, ref_ops) = reference(&spec, 0.5);
        let deltas: Vec<DeltaPair> = sample_points(0.0, 1.0)
            .iter()
            .map(|z| {
                let ops = assemble_operators(&slice_at(&spec, *z).unwrap(), &spec).unwrap();
                delta_ab(&ops, &ref_ops, &b).unwrap()
            })
            .collect();
        let base = estimate_error(&integrate_terms(&b, 0.0, 1.0, &[deltas[0].clone(), deltas[1].clone(), deltas[2].clone()]));
        let scale = 2.5;
        let scaled: Vec<DeltaPair> = deltas
            .iter()
            .map(|d| DeltaPair { da: &d.da * c(scale, 0.0), db: &d.db * c(scale, 0.0) })
            .collect();
        let scaled_est = estimate_error(&integrate_terms(&b, 0.0, 1.0, &[scaled[0].clone(), scaled[1].clone(), scaled[2].clone()]));
        assert!((scaled_est - scale * base).abs() < 1e-12 * scaled_est);
    }

    #[test]
    fn mirrored_profile_swaps_blocks() {
        let fwd = waveguide(Polarization::TE, Profile::Linear { start: 0.26, end: 0.37 });
        let rev = waveguide(Polarization::TE, Profile::Linear { start: 0.37, end: 0.26 });
        let (bf, of) = reference(&fwd, 0.5);
        let (br, or) = reference(&rev, 0.5);
        assert_eq!(bf.id(), br.id());
        let sf = first_order_smatrix(&fwd, 0.0, 1.0, &bf, &of).unwrap().smat;
        let sr = first_order_smatrix(&rev, 0.0, 1.0, &br, &or).unwrap().smat;
        assert!(sf.max_norm_diff(&sr.mirrored()).unwrap() < 1e-12);
    }

    #[test]
    fn estimate_equals_first_minus_zeroth() {
        let spec = waveguide(Polarization::TM, Profile::Exponential { start: 0.2, end: 0.4, rate: 2.0 });
        let (b, ops) = reference(&spec, 0.3);
        let s1 = first_order_smatrix(&spec, 0.1, 0.5, &b, &ops).unwrap();
        let s0 = zeroth_order_smatrix(&b, 0.1, 0.5).unwrap();
        let diff = s1.smat.max_norm_diff(&s0).unwrap();
        assert!((diff - s1.est_error).abs() <= 1e-12 * s1.est_error.max(1.0));
    }

    #[test]
    fn reference_outside_section_is_rejected() {
        let spec = waveguide(Polarization::TE, Profile::Linear { start: 0.26, end: 0.37 });
        let (b, ops) = reference(&spec, 0.9);
        assert!(matches!(
            first_order_smatrix(&spec, 0.0, 0.5, &b, &ops),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn zero_phase_weights_are_simpson() {
        let w = fitted_weights(c(0.0, 0.0), c(0.0, 0.0));
        for (got, want) in w.iter().zip([1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0]) {
            assert!((got - c(want, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn moment_branches_agree_at_switch() {
        for g in [c(0.999, 0.0), c(0.0, 0.9999), c(-0.7, 0.7), c(0.3, -0.2)] {
            let series = exp_moments(g);
            let e = g.exp();
            let i0 = (e - 1.0) / g;
            let i1 = (e - i0) / g;
            let i2 = (e - i1 * 2.0) / g;
            for (k, closed) in [i0, i1, i2].iter().enumerate() {
                assert!((series[k] - closed).norm() < 1e-13, "{g} {k}");
            }
        }
        let m = exp_moments(c(0.0, 3.0));
        let e = c(0.0, 3.0).exp();
        assert!((m[0] - (e - 1.0) / c(0.0, 3.0)).norm() < 1e-15);
    }

    fn brute_weight(a: C64, b: C64, i: usize) -> C64 {
        let l = |u: f64| match i {
            0 => 2.0 * (u - 0.5) * (u - 1.0),
            1 => -4.0 * u * (u - 1.0),
            _ => 2.0 * u * (u - 0.5),
        };
        let n = 20000;
        let h = 1.0 / n as f64;
        (0..=n)
            .map(|j| {
                let u = j as f64 * h;
                let w = if j == 0 || j == n { 1.0 } else if j % 2 == 1 { 4.0 } else { 2.0 };
                (a * (1.0 - u) + b * u).exp() * l(u) * (w * h / 3.0)
            })
            .sum()
    }

    #[test]
    fn fitted_weights_match_brute_force() {
        for (a, b) in [
            (c(0.0, 7.0), c(0.0, -3.0)),
            (c(-4.0, 2.0), c(0.0, 0.3)),
            (c(0.0, 0.0), c(-2.5, 14.0)),
            (c(0.0, 1e-3), c(0.0, 2e-3)),
        ] {
            let w = fitted_weights(a, b);
            for (i, got) in w.iter().enumerate() {
                let want = brute_weight(a, b, i);
                assert!((got - want).norm() < 1e-10, "{a} {b} {i}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn constant_perturbation_integrates_exactly() {
        let k0 = 2.0 * std::f64::consts::PI / 1.55;
        let lambda = vec![c(3.2, 0.0), c(1.1, 0.0), c(0.0, 2.4)];
        let b = ModalBasis::from_parts(CMat::identity(3, 3), CMat::identity(3, 3), lambda.clone(), 0.25, k0).unwrap();
        let da = CMat::from_fn(3, 3, |i, j| c(0.1 * (i + 1) as f64, -0.05 * j as f64));
        let d = DeltaPair { da: da.clone(), db: da.clone() };
        let len = 0.5;
        let terms = integrate_terms(&b, 0.0, len, &[d.clone(), d.clone(), d]);
        let jk0 = c(0.0, k0);
        for m in 0..3 {
            for k in 0..3 {
                // int_0^L exp(j k0 (l_m (L - s) + l_k s)) ds
                let (lm, lk) = (lambda[m], lambda[k]);
                let t = if (lm - lk).norm() < 1e-14 {
                    (jk0 * lm * len).exp() * len
                } else {
                    ((jk0 * lk * len).exp() - (jk0 * lm * len).exp()) / (jk0 * (lk - lm))
                };
                let r = ((jk0 * (lm + lk) * len).exp() - 1.0) / (jk0 * (lm + lk));
                let half = jk0 * 0.5;
                assert!((terms.d_t_lr[(m, k)] - half * da[(m, k)] * t).norm() < 1e-13);
                assert!((terms.d_r_l[(m, k)] + half * da[(m, k)] * r).norm() < 1e-13);
                assert!((terms.d_r_r[(m, k)] + half * da[(m, k)] * r).norm() < 1e-13);
            }
        }
    }
}
