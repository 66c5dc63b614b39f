//! Invariants checked on generated inputs.

use nalgebra::Matrix3;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qtensor::diagnostics::{morrey_scan, nearest_node, physicality};
use qtensor::elastic::{density, density_iso3, reference, validate, zform_at, ElasticCoefficients, GradientD};
use qtensor::field::{Grid2D, QField};
use qtensor::io::{read_field, write_field};
use qtensor::potential::{grad_from_multipliers, DualStrategy, MaierSaupe};
use qtensor::tensor::sample_physical;
use qtensor::QTensor;

fn physical(seed: u64, min_margin: f64) -> QTensor {
    sample_physical(&mut ChaCha8Rng::seed_from_u64(seed), min_margin)
}

fn gradient() -> impl Strategy<Value = GradientD> {
    prop::array::uniform5(prop::array::uniform2(-2.0..2.0f64)).prop_map(GradientD::new)
}

fn rotation_about_z(t: f64) -> Matrix3<f64> {
    let (c, s) = (t.cos(), t.sin());
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// `R_ia R_jb R_kc D_abc` for a rotation about `e3`.
fn rotate_gradient(g: &GradientD, r: &Matrix3<f64>) -> GradientD {
    let d = g.full();
    let mut out = [[[0.0; 3]; 3]; 3];
    for (i, oi) in out.iter_mut().enumerate() {
        for (j, oij) in oi.iter_mut().enumerate() {
            for (k, o) in oij.iter_mut().enumerate() {
                for a in 0..3 {
                    for b in 0..3 {
                        for c in 0..3 {
                            *o += r[(i, a)] * r[(j, b)] * r[(k, c)] * d[a][b][c];
                        }
                    }
                }
            }
        }
    }
    let z = |k: usize| [out[0][0][k], out[0][1][k], out[0][2][k], out[1][1][k], out[1][2][k]];
    let (x, y) = (z(0), z(1));
    GradientD::new(std::array::from_fn(|m| [x[m], y[m]]))
}

fn coefficients() -> impl Strategy<Value = ElasticCoefficients> {
    prop_oneof![
        (0.5..2.0f64, -0.2..0.5f64, -0.5..0.8f64).prop_map(|(a, b, c)| ElasticCoefficients::iso3(a, b, c)),
        (0.5..2.0f64, -1.0..1.0f64, -0.7..1.4f64).prop_map(|(a, b, c)| ElasticCoefficients::thm3(a, b, c)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn densities_are_invariant_under_rotations_about_e3(seed in any::<u64>(), t in 0.0..6.3f64, g in gradient(), c in coefficients()) {
        let q = physical(seed, 0.0);
        let r = rotation_about_z(t);
        let (qr, gr) = (q.rotate(&r), rotate_gradient(&g, &r));
        let scale = 1.0 + g.norm_sq();
        prop_assert!((density_iso3(&ElasticCoefficients::iso3(1.0, 0.4, 0.2), &g) - density_iso3(&ElasticCoefficients::iso3(1.0, 0.4, 0.2), &gr)).abs() < 1e-11 * scale);
        prop_assert!((density(&c, &q, &g) - density(&c, &qr, &gr)).abs() < 1e-11 * scale);
    }

    #[test]
    fn contraction_lies_in_the_eigenvalue_range(seed in any::<u64>(), g in gradient()) {
        let q = physical(seed, 0.0);
        let d2 = g.norm_sq();
        let c = reference::cubic(&q, &g);
        prop_assert!(c >= -d2 / 3.0 - 1e-12 * d2.max(1.0));
        prop_assert!(c <= 2.0 * d2 / 3.0 + 1e-12 * d2.max(1.0));
    }

    #[test]
    fn zform_reproduces_the_density(seed in any::<u64>(), g in gradient(), c in coefficients()) {
        let q = physical(seed, 0.0);
        let want = reference::density(&c, &q, &g);
        prop_assert!((zform_at(&c, &q).eval(&g) - want).abs() < 1e-12 * (1.0 + want.abs()));
    }

    #[test]
    fn thm3_verdict_follows_the_sign_of_l5(l1 in -1.0..2.0f64, l5 in -4.0..4.0f64) {
        let want = if l5 >= 0.0 { l1 - l5 / 3.0 > 0.0 } else { l1 + 2.0 * l5 / 3.0 > 0.0 };
        prop_assert_eq!(validate(&ElasticCoefficients::thm3(l1, 0.0, l5)).is_valid(), want);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn potential_is_midpoint_convex(a in any::<u64>(), b in any::<u64>()) {
        let ms = MaierSaupe::with_order(20).unwrap();
        let (qa, qb) = (physical(a, 0.02), physical(b, 0.02));
        let mid = QTensor::from_z(std::array::from_fn(|m| 0.5 * (qa.z()[m] + qb.z()[m]))).unwrap();
        let slack = 0.5 * (ms.value(&qa).unwrap() + ms.value(&qb).unwrap()) - ms.value(&mid).unwrap();
        prop_assert!(slack >= -1e-10, "{}", slack);
    }

    #[test]
    fn potential_is_frame_invariant(seed in any::<u64>(), r in any::<u64>()) {
        let ms = MaierSaupe::with_order(20).unwrap();
        let q = physical(seed, 0.02);
        let rot = qtensor::tensor::random_rotation(&mut ChaCha8Rng::seed_from_u64(r));
        prop_assert!((ms.value(&q).unwrap() - ms.value(&q.rotate(&rot)).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn dual_solutions_agree_across_strategies(seed in any::<u64>()) {
        let q = physical(seed, 0.05);
        let eig = MaierSaupe::with_order(20).unwrap().solve(&q).unwrap();
        let full = MaierSaupe::with_order(20).unwrap().with_strategy(DualStrategy::Full).solve(&q).unwrap();
        prop_assert!((eig.value - full.value).abs() < 1e-10);
        let g = grad_from_multipliers(&eig.multipliers);
        for m in 0..5 {
            prop_assert!((eig.grad[m] - g[m]).abs() < 1e-12);
            prop_assert!((eig.grad[m] - full.grad[m]).abs() < 1e-8);
        }
    }

    #[test]
    fn physicality_ignores_global_rotations(seed in any::<u64>(), r in any::<u64>()) {
        let g = Grid2D::rectangle(9, 7, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z: Vec<[f64; 5]> = (0..g.len()).map(|_| sample_physical(&mut rng, 0.0).z()).collect();
        let rot = qtensor::tensor::random_rotation(&mut ChaCha8Rng::seed_from_u64(r));
        let field = QField::from_values(g.clone(), z.clone()).unwrap();
        let turned = QField::from_values(g, z.iter().map(|v| QTensor::from_z(*v).unwrap().rotate(&rot).z()).collect()).unwrap();
        let (a, b) = (physicality(&field, 1e-12), physicality(&turned, 1e-12));
        prop_assert!((a.min_margin - b.min_margin).abs() < 1e-12);
        prop_assert_eq!(a.argmin, b.argmin);
    }

    #[test]
    fn field_files_round_trip(seed in any::<u64>(), nx in 3usize..9, ny in 3usize..9) {
        let g = Grid2D::rectangle(nx, ny, 0.125).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let field = QField::from_values(g, (0..nx * ny).map(|_| sample_physical(&mut rng, 0.0).z()).collect()).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, &field).unwrap();
        let back = read_field(buf.as_slice()).unwrap();
        prop_assert_eq!(back.values(), field.values());
        prop_assert_eq!(back.grid(), field.grid());
    }

    #[test]
    fn morrey_energy_grows_with_radius(a in prop::array::uniform5(-0.2..0.2f64), k in 0.5..3.0f64) {
        let g = Grid2D::rectangle(49, 49, 1.0 / 48.0).unwrap();
        let field = QField::from_fn(g, |p| a.map(|v| v * (k * p[0]).sin() * (k * p[1]).cos())).unwrap();
        let c = nearest_node(&field, [0.5, 0.5]);
        let radii: Vec<f64> = (0..6).map(|i| 0.17 + 0.05 * i as f64).collect();
        if let Ok(rep) = morrey_scan(&field, c, &radii, None) {
            prop_assert!(rep.w.windows(2).all(|w| w[1] >= w[0]));
        }
    }
}
