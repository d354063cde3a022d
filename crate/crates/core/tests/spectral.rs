mod common;

use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use vvv_mhd::spectral::{
    advect, bilinear_b, cross, curl, dealias, divergence, gradient, inner, laplacian, leray_project, norm,
    voigt_apply, voigt_invert, Grid, NormOrder, PhysicalVectorField, SpectralError, SpectralScalarField,
    SpectralVectorField,
};

use common::{arbitrary, rel_diff, solenoidal};

const TAU: f64 = 2.0 * PI;

#[test]
fn grid_rejects_odd_small_or_bad_fraction() {
    assert!(Grid::new(6).is_err());
    assert!(Grid::new(9).is_err());
    assert!(Grid::with_dealias(16, 0.0).is_err());
    assert!(Grid::with_dealias(16, 1.5).is_err());
    let g = Grid::new(16).unwrap();
    assert_eq!(g.len(), 1.0);
    assert_eq!(g.mode(15), -1);
    assert_eq!(g.mode(8), 8);
    assert!((g.wavenumber(3) - 3.0 * TAU).abs() < 1e-15);
}

#[test]
fn constant_field_transforms_to_zero() {
    let g = Grid::new(8).unwrap();
    let f = SpectralVectorField::from_fn(&g, |_, _, _| [1.5, 1.5, 1.5]);
    assert!(f.is_zero());
    let s = SpectralScalarField::from_fn(&g, |_, _, _| 1.5);
    assert!((s.coeff(0, 0, 0) - Complex64::new(1.5, 0.0)).norm() < 1e-15);
}

#[test]
fn single_sine_has_two_modes() {
    let g = Grid::new(8).unwrap();
    let f = SpectralVectorField::from_fn(&g, |x, _, _| [(TAU * x).sin(), 0.0, 0.0]);
    let plus = f.coeff(0, 1, 0, 0);
    let minus = f.coeff(0, 7, 0, 0);
    assert!((plus - Complex64::new(0.0, -0.5)).norm() < 1e-15);
    assert!((minus - Complex64::new(0.0, 0.5)).norm() < 1e-15);
    let others: f64 = (0..g.points())
        .filter(|&i| i != 64 && i != 7 * 64)
        .map(|i| f.component(0)[i].norm())
        .fold(0.0, f64::max);
    assert!(others < 1e-15);
    assert!(f.component(1).iter().chain(f.component(2)).all(|z| z.norm() < 1e-15));
}

#[test]
fn non_finite_samples_are_rejected_with_index() {
    let g = Grid::new(8).unwrap();
    let mut p = PhysicalVectorField::zeros(&g);
    p.component_mut(1)[(2 * 8 + 3) * 8 + 4] = f64::NAN;
    match SpectralVectorField::from_physical(&p) {
        Err(SpectralError::NonFinite { component, index }) => {
            assert_eq!(component, 1);
            assert_eq!(index, (2, 3, 4));
        }
        other => panic!("expected NonFinite, got {other:?}"),
    }
}

#[test]
fn random_field_round_trip() {
    let g = Grid::new(16).unwrap();
    let v = arbitrary(&g, 4);
    let back = SpectralVectorField::from_physical(&v.to_physical()).unwrap();
    assert!(rel_diff(&back, &v) <= 1e-12);
    assert!(v.to_physical().max_abs() > 0.0);
    assert!(v.imaginary_residue() <= 1e-12);
}

#[test]
fn curl_matches_analytic_derivative() {
    let g = Grid::new(16).unwrap();
    let v = SpectralVectorField::from_fn(&g, |_, _, z| [(TAU * z).sin(), 0.0, 0.0]);
    let expected = SpectralVectorField::from_fn(&g, |_, _, z| [0.0, TAU * (TAU * z).cos(), 0.0]);
    assert!(rel_diff(&curl(&v), &expected) < 1e-13);
    let r = solenoidal(&g, 9, 0);
    let d = divergence(&curl(&r));
    assert!(d.max_abs() <= 1e-12 * r.max_abs());
}

#[test]
fn divergence_examples() {
    let g = Grid::new(16).unwrap();
    let v = SpectralVectorField::from_fn(&g, |x, _, _| [(TAU * x).sin(), 0.0, 0.0]);
    let expected = SpectralScalarField::from_fn(&g, |x, _, _| TAU * (TAU * x).cos());
    let got = divergence(&v);
    let err = got
        .coeffs()
        .iter()
        .zip(expected.coeffs())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(err < 1e-13);

    let abc = SpectralVectorField::from_fn(&g, |x, y, z| {
        let (x, y, z) = (TAU * x, TAU * y, TAU * z);
        [z.sin() + y.cos(), x.sin() + z.cos(), y.sin() + x.cos()]
    });
    assert!(divergence(&abc).max_abs() < 1e-14);
}

#[test]
fn laplacian_examples_and_parseval() {
    let g = Grid::new(16).unwrap();
    let v = SpectralVectorField::from_fn(&g, |x, _, _| [(TAU * x).sin(), 0.0, 0.0]);
    assert!(rel_diff(&laplacian(&v), &v.scaled(-TAU * TAU)) < 1e-13);

    let r = arbitrary(&g, 21);
    // direct ℓ² sum of |k|² v̂ over the lattice
    let n = g.n();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let k2 = g.wavenumber(i).powi(2) + g.wavenumber(j).powi(2) + g.wavenumber(l).powi(2);
                for c in 0..3 {
                    acc += (r.coeff(c, i, j, l) * k2).norm_sqr();
                }
            }
        }
    }
    let direct = acc.sqrt();
    assert!((norm(&r, NormOrder::H2) - direct).abs() <= 1e-12 * direct);
    assert!((norm(&laplacian(&r), NormOrder::L2) - direct).abs() <= 1e-12 * direct);
}

#[test]
fn projection_examples() {
    let g = Grid::new(16).unwrap();
    let s = solenoidal(&g, 3, 0);
    assert!(rel_diff(&leray_project(&s), &s) <= 1e-12);

    let phi = SpectralScalarField::from_fn(&g, |x, _, _| (TAU * x).cos());
    assert!(leray_project(&gradient(&phi)).max_abs() < 1e-14);

    let r = arbitrary(&g, 5);
    let p = leray_project(&r);
    assert!(rel_diff(&leray_project(&p), &p) <= 1e-14);
    assert!(p.relative_divergence() <= 1e-14);
}

#[test]
fn voigt_examples() {
    let g = Grid::new(16).unwrap();
    let r = arbitrary(&g, 6);
    assert_eq!(voigt_invert(&r, 0.0).unwrap(), r);
    assert!(matches!(voigt_invert(&r, -0.1), Err(SpectralError::NegativeAlpha(_))));

    let v = SpectralVectorField::from_fn(&g, |x, _, _| [0.0, (TAU * x).sin(), 0.0]);
    let expected = v.scaled(1.0 / (1.0 + TAU * TAU));
    assert!(rel_diff(&voigt_invert(&v, 1.0).unwrap(), &expected) < 1e-14);

    let back = voigt_invert(&voigt_apply(&r, 0.3).unwrap(), 0.3).unwrap();
    assert!(rel_diff(&back, &r) <= 1e-12);
}

#[test]
fn dealias_examples() {
    let g = Grid::new(16).unwrap();
    let low = SpectralVectorField::from_fn(&g, |x, y, _| [(TAU * 2.0 * y).sin(), (TAU * 3.0 * x).cos(), 0.0]);
    assert!(rel_diff(&dealias(&low), &low) < 1e-14);
    let high = SpectralVectorField::from_fn(&g, |x, _, _| [0.0, (TAU * 6.0 * x).sin(), 0.0]);
    assert!(dealias(&high).max_abs() < 1e-15);
    let r = arbitrary(&g, 7);
    assert_eq!(dealias(&dealias(&r)), dealias(&r));
}

#[test]
fn advection_examples() {
    let g = Grid::new(16).unwrap();
    let u = SpectralVectorField::from_fn(&g, |_, y, _| [(TAU * y).sin(), 0.0, 0.0]);
    let v = SpectralVectorField::from_fn(&g, |x, _, _| [0.0, (TAU * x).cos(), 0.0]);
    let expected =
        SpectralVectorField::from_fn(&g, |x, y, _| [0.0, -TAU * (TAU * y).sin() * (TAU * x).sin(), 0.0]);
    assert!(rel_diff(&advect(&u, &v).unwrap(), &expected) < 1e-13);

    let constant = SpectralVectorField::zeros(&g);
    assert!(advect(&u, &constant).unwrap().is_zero());

    let a = arbitrary(&g, 8);
    assert!(cross(&a, &a).unwrap().max_abs() < 1e-13 * a.max_abs().powi(2));

    let other = Grid::new(8).unwrap();
    assert!(matches!(
        advect(&u, &SpectralVectorField::zeros(&other)),
        Err(SpectralError::GridMismatch { .. })
    ));
}

/// `Σ_{p+q=k} û(p)·(i q) v̂(q)` over retained modes, truncated to retained `k`.
fn convolution_advect(u: &SpectralVectorField, v: &SpectralVectorField) -> SpectralVectorField {
    let g = u.grid();
    let n = g.n();
    let retained: Vec<usize> = (0..n).filter(|&i| g.is_retained(i)).collect();
    let idx_of = |m: i64| -> Option<usize> {
        let i = m.rem_euclid(n as i64) as usize;
        (g.mode(i) == m && g.is_retained(i)).then_some(i)
    };
    let mut comps = [0, 1, 2].map(|_| vec![Complex64::default(); g.points()]);
    for &pi in &retained {
        for &pj in &retained {
            for &pl in &retained {
                let up = [0, 1, 2].map(|c| u.coeff(c, pi, pj, pl));
                for &qi in &retained {
                    for &qj in &retained {
                        for &ql in &retained {
                            let k = [
                                g.mode(pi) + g.mode(qi),
                                g.mode(pj) + g.mode(qj),
                                g.mode(pl) + g.mode(ql),
                            ];
                            let (Some(ki), Some(kj), Some(kl)) = (idx_of(k[0]), idx_of(k[1]), idx_of(k[2])) else {
                                continue;
                            };
                            let q = [g.wavenumber(qi), g.wavenumber(qj), g.wavenumber(ql)];
                            let u_dot_iq = Complex64::i() * (up[0] * q[0] + up[1] * q[1] + up[2] * q[2]);
                            let target = (ki * n + kj) * n + kl;
                            for (c, comp) in comps.iter_mut().enumerate() {
                                comp[target] += u_dot_iq * v.coeff(c, qi, qj, ql);
                            }
                        }
                    }
                }
            }
        }
    }
    SpectralVectorField::from_coefficients(g, comps).unwrap()
}

#[test]
fn advection_matches_convolution_sum() {
    let g = Grid::new(8).unwrap();
    let u = arbitrary(&g, 31);
    let v = arbitrary(&g, 32);
    let oracle = convolution_advect(&u, &v);
    let got = advect(&u, &v).unwrap();
    assert!(rel_diff(&got, &oracle) <= 1e-10, "{}", rel_diff(&got, &oracle));
}

#[test]
fn norm_examples() {
    let g = Grid::new(16).unwrap();
    let v = SpectralVectorField::from_fn(&g, |x, _, _| [0.0, (TAU * x).sin(), 0.0]);
    assert!((norm(&v, NormOrder::L2) - 0.5f64.sqrt()).abs() < 1e-14);
    assert!((norm(&v, NormOrder::H1) - TAU / 2f64.sqrt()).abs() < 1e-13);
    assert!((norm(&v, NormOrder::H1) - 4.44288).abs() < 1e-5);
    let tg = SpectralVectorField::from_fn(&g, |x, y, z| {
        let (x, y, z) = (TAU * x, TAU * y, TAU * z);
        [2.0 * x.sin() * y.cos() * z.cos(), -2.0 * x.cos() * y.sin() * z.cos(), 0.0]
    });
    assert!((norm(&tg, NormOrder::L2) - 1.0).abs() < 1e-14);
}

#[test]
fn parseval_matches_physical_mean_square() {
    let g = Grid::new(16).unwrap();
    let v = arbitrary(&g, 12);
    let physical = v.to_physical().mean_square();
    let spectral = norm(&v, NormOrder::L2).powi(2);
    assert!((physical - spectral).abs() <= 1e-12 * spectral);
}

#[test]
fn trilinear_identities_on_seeded_triples() {
    let g = Grid::new(16).unwrap();
    for seed in 0..10 {
        let (u, v, w) = (solenoidal(&g, seed, 0), solenoidal(&g, seed, 1), solenoidal(&g, seed, 2));
        let buv = bilinear_b(&u, &v).unwrap();
        let buw = bilinear_b(&u, &w).unwrap();
        let scale = norm(&u, NormOrder::L2) * norm(&v, NormOrder::H1) * norm(&v, NormOrder::L2);
        assert!(inner(&buv, &v).abs() <= 1e-10 * scale);
        let lhs = inner(&buv, &w);
        let rhs = -inner(&buw, &v);
        assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()).max(scale));
    }
}

#[test]
fn unprojected_advection_is_skew_for_any_dealiased_field() {
    // Without the projection the identity holds for arbitrary v; with it, v
    // must be solenoidal because P is only self-adjoint against H.
    let g = Grid::new(16).unwrap();
    let u = solenoidal(&g, 40, 0);
    let v = arbitrary(&g, 41);
    let adv = dealias(&advect(&u, &v).unwrap());
    let scale = norm(&u, NormOrder::L2) * norm(&v, NormOrder::H1) * norm(&v, NormOrder::L2);
    assert!(inner(&adv, &v).abs() <= 1e-10 * scale);
    let projected = bilinear_b(&u, &v).unwrap();
    assert!(inner(&projected, &v).abs() > 1e-6 * scale);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn projection_is_idempotent_and_solenoidal(seed in any::<u64>()) {
        let g = Grid::new(8).unwrap();
        let p = leray_project(&arbitrary(&g, seed));
        prop_assert!(p.relative_divergence() <= 1e-14);
        prop_assert!(rel_diff(&leray_project(&p), &p) <= 1e-14);
    }

    #[test]
    fn operators_preserve_hermitian_symmetry(seed in any::<u64>()) {
        let g = Grid::new(8).unwrap();
        let v = arbitrary(&g, seed);
        let s = solenoidal(&g, seed, 0);
        for out in [curl(&v), laplacian(&v), leray_project(&v), voigt_invert(&v, 0.2).unwrap(), dealias(&v),
                    advect(&s, &v).unwrap(), cross(&s, &v).unwrap()] {
            prop_assert_eq!(out.hermitian_defect(), 0.0);
        }
    }

    #[test]
    fn voigt_and_projection_commute(seed in any::<u64>(), alpha in 0.0f64..1.0) {
        let g = Grid::new(8).unwrap();
        let v = arbitrary(&g, seed);
        let a = voigt_invert(&leray_project(&v), alpha).unwrap();
        let b = leray_project(&voigt_invert(&v, alpha).unwrap());
        prop_assert!(rel_diff(&a, &b) <= 1e-14);
    }

    #[test]
    fn norms_are_isotropic_under_axis_relabeling(seed in any::<u64>()) {
        let g = Grid::new(8).unwrap();
        let v = arbitrary(&g, seed);
        let phys = v.to_physical();
        let n = g.n();
        // cyclic relabeling (x, y, z) -> (y, z, x) of both coordinates and components
        let mut rotated = PhysicalVectorField::zeros(&g);
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let val = phys.at(i, j, l);
                    let dst = (j * n + l) * n + i;
                    rotated.component_mut(0)[dst] = val[1];
                    rotated.component_mut(1)[dst] = val[2];
                    rotated.component_mut(2)[dst] = val[0];
                }
            }
        }
        let r = SpectralVectorField::from_physical(&rotated).unwrap();
        for order in [NormOrder::L2, NormOrder::H1, NormOrder::H2] {
            let (a, b) = (norm(&v, order), norm(&r, order));
            prop_assert!((a - b).abs() <= 1e-12 * a);
        }
    }
}
