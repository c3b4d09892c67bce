//! Eigenvalues from the Schur-based solver against roots of the
//! characteristic polynomial (Faddeev-LeVerrier coefficients, Durand-Kerner
//! iteration), plus residual checks of the modal basis on physical operators.

use proptest::prelude::*;

use varrcwa::geometry::{slice_at, MaterialRegion, Polarization, Profile, StructureSpec};
use varrcwa::linalg::{c, eig, max_norm, CMat, C64};
use varrcwa::modal::eigen_basis;
use varrcwa::operators::assemble_operators;

/// Monic characteristic polynomial coefficients, highest degree first.
fn char_poly(a: &CMat) -> Vec<C64> {
    let n = a.nrows();
    let mut coeffs = vec![c(1.0, 0.0)];
    let mut m = CMat::zeros(n, n);
    let eye = CMat::identity(n, n);
    for k in 1..=n {
        m = a * &m + &eye * coeffs[k - 1];
        let am = a * &m;
        coeffs.push(-am.trace() / k as f64);
    }
    coeffs
}

fn durand_kerner(coeffs: &[C64]) -> Vec<C64> {
    let n = coeffs.len() - 1;
    let eval = |z: C64| coeffs.iter().fold(c(0.0, 0.0), |acc, k| acc * z + k);
    let scale = coeffs.iter().skip(1).map(|k| k.norm()).fold(1.0, f64::max);
    let seed = c(0.4, 0.9) * scale;
    let mut roots: Vec<C64> = (0..n).map(|i| seed.powu(i as u32)).collect();
    for _ in 0..2000 {
        let prev = roots.clone();
        for i in 0..n {
            let denom = (0..n).filter(|&j| j != i).fold(c(1.0, 0.0), |acc, j| acc * (roots[i] - roots[j]));
            let r = roots[i];
            roots[i] = r - eval(r) / denom;
        }
        let moved = roots.iter().zip(&prev).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        if moved < 1e-15 * scale {
            break;
        }
    }
    roots
}

fn match_sets(got: &[C64], want: &[C64]) -> f64 {
    let mut left = want.to_vec();
    let mut worst: f64 = 0.0;
    for g in got {
        let (i, d) = left
            .iter()
            .enumerate()
            .map(|(i, w)| (i, (g - w).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        worst = worst.max(d);
        left.swap_remove(i);
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn eigenvalues_match_characteristic_roots(
        n in 1usize..6,
        entries in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 36),
    ) {
        let a = CMat::from_fn(n, n, |i, j| {
            let (re, im) = entries[i * 6 + j];
            c(re, im) + if i == j { c(i as f64, 0.0) } else { c(0.0, 0.0) }
        });
        let (vals, vecs) = eig(&a).unwrap();
        let roots = durand_kerner(&char_poly(&a));
        prop_assert!(match_sets(&vals, &roots) < 1e-8, "{vals:?} vs {roots:?}");
        let res = &a * &vecs - &vecs * CMat::from_diagonal(&nalgebra::DVector::from_vec(vals.clone()));
        prop_assert!(max_norm(&res) < 1e-10);
    }
}

fn waveguide(pol: Polarization, order: usize) -> StructureSpec {
    StructureSpec {
        wavelength_um: 1.55,
        polarization: pol,
        period_x_um: 1.0,
        z_min: 0.0,
        z_max: 1.0,
        truncation_order: order,
        background_eps: c(1.0, 0.0),
        regions: vec![MaterialRegion {
            eps: c(12.25, 0.0),
            center_x: Profile::Constant { value: 0.5 },
            width: Profile::Linear { start: 0.26, end: 0.37 },
        }],
    }
}

#[test]
fn modal_basis_satisfies_defining_relations() {
    for pol in [Polarization::TE, Polarization::TM] {
        for order in [0, 3, 10] {
            let spec = waveguide(pol, order);
            let ops = assemble_operators(&slice_at(&spec, 0.4).unwrap(), &spec).unwrap();
            let b = eigen_basis(&ops).unwrap();
            let lam2 = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
                b.dim(),
                b.lambda().iter().map(|l| l * l),
            ));
            let lam = CMat::from_diagonal(&nalgebra::DVector::from_vec(b.lambda().to_vec()));
            let pq = ops.product();
            let scale = max_norm(&pq).max(1.0);
            assert!(max_norm(&(&pq * b.w() - b.w() * &lam2)) < 1e-10 * scale, "{pol:?} {order}");
            assert!(max_norm(&(b.v() * &lam - &ops.q * b.w())) < 1e-10 * scale);
            // P V = W Lambda follows from the two relations above
            assert!(max_norm(&(&ops.p * b.v() - b.w() * &lam)) < 1e-9 * scale);
            for l in b.lambda() {
                assert!(l.im >= 0.0);
                assert!(l.im > 0.0 || l.re > 0.0);
            }
            for w in b.lambda().windows(2) {
                assert!(w[0].re >= w[1].re);
            }
            if order <= 3 {
                let mu: Vec<C64> = b.lambda().iter().map(|l| l * l).collect();
                let roots = durand_kerner(&char_poly(&pq));
                assert!(match_sets(&mu, &roots) < 1e-8 * scale, "{pol:?} {order}");
            }
        }
    }
}
