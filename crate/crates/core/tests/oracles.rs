//! Spec examples checked against independent constructions.

mod common;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qtensor::elastic::ElasticCoefficients;
use qtensor::field::{assemble_energy, make_defect_bc, EnergyModel, Grid2D, QField};
use qtensor::minimizer::harmonic_initial;
use qtensor::potential::{compute_b0_with_resolution, f_bulk, BulkModel, DualStrategy, MaierSaupe};
use qtensor::tensor::sample_physical;
use qtensor::QTensor;

fn ms() -> MaierSaupe {
    MaierSaupe::with_order(20).unwrap()
}

#[test]
fn dual_value_matches_the_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for strategy in [DualStrategy::Eigenframe, DualStrategy::Full] {
        let p = ms().with_strategy(strategy);
        for _ in 0..50 {
            let q = sample_physical(&mut rng, 0.02);
            let ev = p.solve(&q).unwrap();
            let b = ev.multipliers.matrix();
            let dual = (b * q.matrix()).trace() + b.trace() / 3.0 - ev.log_z;
            assert!((ev.value - dual).abs() < 1e-10, "{} vs {dual}", ev.value);
        }
    }
}

/// Perturbs the optimal density on the rule by a factor orthogonal to the
/// constraint functions, so normalization and second moments are kept.
#[test]
fn optimal_density_has_least_entropy_among_admissible_perturbations() {
    let p = ms().with_strategy(DualStrategy::Full);
    let rule = p.rule().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..20 {
        let q = sample_physical(&mut rng, 0.05);
        let ev = p.solve(&q).unwrap();
        let b = ev.multipliers.matrix();
        let rho: Vec<f64> = rule.nodes().iter().map(|x| (Vector3::from(*x).dot(&(b * Vector3::from(*x))) - ev.log_z).exp()).collect();
        let w = rule.weights();
        let inner = |f: &[f64], g: &[f64]| -> f64 { (0..w.len()).map(|i| w[i] * rho[i] * f[i] * g[i]).sum() };

        // constraint functions 1 and p_i p_j, orthonormalized in L²(ρ̂)
        let mut basis: Vec<Vec<f64>> = vec![vec![1.0; w.len()]];
        for (i, j) in [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)] {
            basis.push(rule.nodes().iter().map(|x| x[i] * x[j]).collect());
        }
        let mut ortho: Vec<Vec<f64>> = Vec::new();
        for mut v in basis {
            for u in &ortho {
                let c = inner(&v, u);
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= c * b);
            }
            let n = inner(&v, &v).sqrt();
            if n > 1e-10 {
                ortho.push(v.iter().map(|a| a / n).collect());
            }
        }
        let coeffs: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let mut phi: Vec<f64> = rule
            .nodes()
            .iter()
            .map(|x| coeffs[0] * x[0].powi(4) + coeffs[1] * x[1] * x[2].powi(3) + coeffs[2] * x[0] + coeffs[3] * x[1] * x[2] * x[0])
            .collect();
        for u in &ortho {
            let c = inner(&phi, u);
            phi.iter_mut().zip(u).for_each(|(a, b)| *a -= c * b);
        }
        let sup = phi.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for eps in [0.5, 0.1, 0.01] {
            let t = eps / sup;
            let pert: Vec<f64> = rho.iter().zip(&phi).map(|(r, f)| r * (1.0 + t * f)).collect();
            let mass: f64 = (0..w.len()).map(|i| w[i] * pert[i]).sum();
            assert!((mass - 1.0).abs() < 1e-12);
            let mut m = Matrix3::zeros();
            for (i, x) in rule.nodes().iter().enumerate() {
                let v = Vector3::from(*x);
                m += w[i] * pert[i] * (v * v.transpose());
            }
            let moment = m - Matrix3::identity() / 3.0;
            assert!((moment - q.matrix()).norm() < 1e-10);
            let entropy: f64 = (0..w.len()).map(|i| w[i] * pert[i] * pert[i].ln()).sum();
            assert!(entropy >= ev.value - 1e-8, "{entropy} < {}", ev.value);
        }
    }
}

#[test]
fn uniaxial_gradient_is_axisymmetric() {
    for s in [-0.3, 0.2, 0.6] {
        let ev = ms().solve(&QTensor::uniaxial(s, [0.0, 0.0, 1.0]).unwrap()).unwrap();
        let g = ev.grad;
        assert!(g[1].abs() < 1e-9 && g[2].abs() < 1e-9 && g[4].abs() < 1e-9, "{g:?}");
        assert!((g[0] - g[3]).abs() < 1e-9, "{g:?}");
    }
}

#[test]
fn uniaxial_bulk_density_matches_the_axisymmetric_oracle() {
    let bulk = BulkModel::new(ms(), 0.0).unwrap();
    let q = QTensor::uniaxial(0.3, [0.0, 0.0, 1.0]).unwrap();
    let (_, f) = common::uniaxial_oracle(0.3);
    let want = f + (4.0 * std::f64::consts::PI).ln();
    assert!((f_bulk(&q, &bulk.params, &bulk.potential) - want).abs() < 1e-7);
}

#[test]
fn b0_is_resolution_independent() {
    let p = ms();
    let coarse = compute_b0_with_resolution(2.0, &p, 16).unwrap();
    let fine = compute_b0_with_resolution(2.0, &p, 32).unwrap();
    assert!((coarse.b0 - fine.b0).abs() < 1e-6, "{} vs {}", coarse.b0, fine.b0);
}

#[test]
fn defect_energy_is_resolution_stable() {
    let model = EnergyModel::new(ElasticCoefficients::iso3(1.0, 0.0, 0.0), Some(BulkModel::with_kappa(0.0).unwrap())).unwrap();
    let energy = |n: usize| {
        let g = Grid2D::disk(n, 1.0).unwrap();
        let bc = make_defect_bc(&g, 0.3, 2).unwrap();
        let f = harmonic_initial(&QField::new(g, &bc).unwrap()).unwrap();
        assemble_energy(&f, &model).unwrap().total
    };
    let (a, b, c) = (energy(32), energy(64), energy(128));
    let (coarse, fine) = ((a - b).abs() / b.abs(), (b - c).abs() / c.abs());
    assert!(fine < coarse && fine < 0.02, "{a} {b} {c}");
}
