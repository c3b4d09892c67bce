//! Built-in analytic self-checks: vacuum spectra, a uniform slab against the
//! closed-form two-interface (Airy) coefficients, and algebraic round trips.

use std::f64::consts::PI;

use crate::cascade::{project_left, projection_pair, reproject_left, reproject_right, star};
use crate::error::Result;
use crate::geometry::{slice_at, MaterialRegion, PermittivitySlice, Polarization, Profile, StructureSpec};
use crate::linalg::{c, max_norm, CVec, C64};
use crate::modal::{eigen_basis, mode_coefficients, reconstruct_fields, ModalBasis, WaveState};
use crate::operators::{assemble_operators_with, OperatorPair, TmFold};
use crate::section::{first_order_smatrix, zeroth_order_smatrix};
use crate::smatrix::ScatteringMatrix;

/// Deliberate defects used to show that the checks can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    None,
    /// Negate the TM `P` operator.
    TmSignFlip,
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Check = fn(Fault) -> Result<(bool, String)>;

const CHECKS: [(&str, Check); 8] = [
    ("vacuum-te", |f| vacuum(Polarization::TE, f)),
    ("vacuum-tm", |f| vacuum(Polarization::TM, f)),
    ("slab-airy-te", |f| slab(Polarization::TE, f)),
    ("slab-airy-tm", |f| slab(Polarization::TM, f)),
    ("mode-round-trip", round_trip),
    ("zero-variation", zero_variation),
    ("projection-identity", projection_identity),
    ("star-identity", star_identity),
];

pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|(n, _)| *n).collect()
}

pub fn run_checks(fault: Fault) -> Vec<CheckResult> {
    CHECKS
        .iter()
        .map(|(name, check)| match check(fault) {
            Ok((passed, detail)) => CheckResult { name, passed, detail },
            Err(e) => CheckResult { name, passed: false, detail: format!("error: {e}") },
        })
        .collect()
}

fn fold(fault: Fault) -> TmFold {
    match fault {
        Fault::None => TmFold::Standard,
        Fault::TmSignFlip => TmFold::Flipped,
    }
}

fn uniform_spec(pol: Polarization, eps: f64, order: usize, length: f64) -> StructureSpec {
    StructureSpec {
        wavelength_um: 1.55,
        polarization: pol,
        period_x_um: 1.0,
        z_min: 0.0,
        z_max: length,
        truncation_order: order,
        background_eps: c(eps, 0.0),
        regions: vec![],
    }
}

fn uniform_ops(spec: &StructureSpec, eps: f64, fault: Fault) -> Result<OperatorPair> {
    let slice = PermittivitySlice::uniform(0.0, spec.period_x_um, c(eps, 0.0));
    assemble_operators_with(&slice, spec, fold(fault))
}

fn vacuum(pol: Polarization, fault: Fault) -> Result<(bool, String)> {
    let spec = uniform_spec(pol, 1.0, 2, 1.55);
    let basis = eigen_basis(&uniform_ops(&spec, 1.0, fault)?)?;
    let mut want: Vec<C64> = (-2i32..=2)
        .map(|m| {
            let k = m as f64 * spec.wavelength_um / spec.period_x_um;
            let mu = c(1.0 - k * k, 0.0);
            mu.sqrt()
        })
        .map(|l| if l.im < 0.0 { -l } else { l })
        .collect();
    want.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
    let err = basis
        .lambda()
        .iter()
        .zip(&want)
        .map(|(g, w)| (g - w).norm())
        .fold(0.0, f64::max);
    // one wavelength of vacuum returns the propagating mode to unit phase
    let s = zeroth_order_smatrix(&basis, 0.0, spec.wavelength_um)?;
    let phase_err = (s.t_lr[(0, 0)] - c(1.0, 0.0)).norm();
    let worst = err.max(phase_err);
    Ok((worst <= 1e-12, format!("effective-index error {err:.1e}, phase error {phase_err:.1e}")))
}

/// `(t, r)` of a slab of index `n`, thickness `d` in vacuum at normal incidence.
fn airy(n: f64, d: f64, wavelength: f64) -> (C64, C64) {
    let r12 = (1.0 - n) / (1.0 + n);
    let r23 = -r12;
    let t = 2.0 / (1.0 + n) * 2.0 * n / (n + 1.0);
    let ph = C64::from_polar(1.0, 2.0 * PI / wavelength * n * d);
    let den = c(1.0, 0.0) + ph * ph * (r12 * r23);
    (ph * t / den, (c(r12, 0.0) + ph * ph * r23) / den)
}

fn slab(pol: Polarization, fault: Fault) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for d in [0.5 * 1.55, 0.37 * 1.55] {
        let spec = uniform_spec(pol, 4.0, 0, d);
        let inside = eigen_basis(&uniform_ops(&spec, 4.0, fault)?)?;
        let outside = eigen_basis(&uniform_ops(&spec, 1.0, fault)?)?;
        let s = zeroth_order_smatrix(&inside, 0.0, d)?;
        let s = reproject_left(&s, &inside, &outside)?;
        let s = reproject_right(&s, &inside, &outside)?;
        let (t, r) = airy(2.0, d, spec.wavelength_um);
        for (got, want) in [(s.t_lr[(0, 0)], t), (s.t_rl[(0, 0)], t), (s.r_l[(0, 0)], r), (s.r_r[(0, 0)], r)] {
            worst = worst.max((got - want).norm());
        }
    }
    Ok((worst <= 1e-10, format!("max deviation from closed form {worst:.1e}")))
}

fn taper(pol: Polarization) -> StructureSpec {
    StructureSpec {
        regions: vec![MaterialRegion {
            eps: c(12.25, 0.0),
            center_x: Profile::Constant { value: 0.5 },
            width: Profile::Linear { start: 0.26, end: 0.37 },
        }],
        ..uniform_spec(pol, 1.0, 3, 1.0)
    }
}

fn basis_at(spec: &StructureSpec, z: f64, fault: Fault) -> Result<(ModalBasis, OperatorPair)> {
    let ops = assemble_operators_with(&slice_at(spec, z)?, spec, fold(fault))?;
    Ok((eigen_basis(&ops)?, ops))
}

fn round_trip(fault: Fault) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for pol in [Polarization::TE, Polarization::TM] {
        let (b, _) = basis_at(&taper(pol), 0.5, fault)?;
        let n = b.dim();
        let st = WaveState {
            a: CVec::from_fn(n, |i, _| c(1.0 + i as f64, -0.5)),
            b: CVec::from_fn(n, |i, _| c(0.25, 0.1 * i as f64)),
            basis: b.id(),
        };
        let (e, h) = reconstruct_fields(&st, &b)?;
        let back = mode_coefficients(&e, &h, &b)?;
        worst = worst.max((back.a - &st.a).norm().max((back.b - &st.b).norm()) / st.a.norm());
    }
    Ok((worst <= 1e-12, format!("relative round-trip error {worst:.1e}")))
}

fn zero_variation(fault: Fault) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for pol in [Polarization::TE, Polarization::TM] {
        let mut spec = taper(pol);
        spec.regions[0].width = Profile::Constant { value: 0.3 };
        let (b, ops) = basis_at(&spec, 0.5, fault)?;
        let s1 = first_order_smatrix(&spec, 0.0, 1.0, &b, &ops)?.smat;
        let s0 = zeroth_order_smatrix(&b, 0.0, 1.0)?;
        worst = worst.max(s1.max_norm_diff(&s0)? / s0.max_norm());
    }
    Ok((worst <= 1e-12, format!("first/zeroth relative difference {worst:.1e}")))
}

fn projection_identity(fault: Fault) -> Result<(bool, String)> {
    let (b, _) = basis_at(&taper(Polarization::TM), 0.3, fault)?;
    let pp = projection_pair(&b, &b)?;
    let n = b.dim();
    let s = sample_smatrix(n, &b);
    let p = project_left(&s, &pp, b.id())?;
    let err = p.max_norm_diff(&s)?.max(max_norm(&pp.y));
    Ok((err <= 1e-12, format!("deviation {err:.1e}")))
}

fn sample_smatrix(n: usize, b: &ModalBasis) -> ScatteringMatrix {
    let m = |k: f64| crate::linalg::CMat::from_fn(n, n, |i, j| c(0.05 * k * (i + 1) as f64, -0.03 * (j + 1) as f64 / k));
    ScatteringMatrix { t_lr: m(1.0), r_r: m(2.0), r_l: m(3.0), t_rl: m(4.0), left_basis: b.id(), right_basis: b.id() }
}

fn star_identity(fault: Fault) -> Result<(bool, String)> {
    let (b, _) = basis_at(&taper(Polarization::TE), 0.7, fault)?;
    let s = sample_smatrix(b.dim(), &b);
    let e = ScatteringMatrix::identity(b.dim(), b.id());
    let err = star(&e, &s)?.max_norm_diff(&s)?.max(star(&s, &e)?.max_norm_diff(&s)?);
    Ok((err <= 1e-12, format!("deviation {err:.1e}")))
}
