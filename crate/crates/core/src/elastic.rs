//! Landau–de Gennes elastic energy densities for fields independent of x3.
//!
//! The gradient of a tensor field is stored as `d[m][l] = ∂z_m/∂x_l` and
//! expanded to `D_ijl = ∂Q_ij/∂x_l` with `D_ij3 = 0`. Every density is a
//! quadratic form in `d` whose coefficients are affine in `z`:
//! `f = a_mn^{lk}(z) d_ml d_nk + b_m^l(z) d_ml`.

use nalgebra::{SMatrix, SymmetricEigen};
use rand::Rng;

use crate::tensor::{basis_matrix, sample_physical, QTensor, GRAM};

/// Which terms of the density are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ElasticMode {
    /// `L1, L2, L3`.
    #[default]
    Iso3,
    /// All five constants.
    Chiral5,
    /// `L1, L4, L5`.
    Thm3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticCoefficients {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub l4: f64,
    pub l5: f64,
    pub mode: ElasticMode,
}

impl ElasticCoefficients {
    pub fn iso3(l1: f64, l2: f64, l3: f64) -> Self {
        ElasticCoefficients { l1, l2, l3, l4: 0.0, l5: 0.0, mode: ElasticMode::Iso3 }
    }

    pub fn thm3(l1: f64, l4: f64, l5: f64) -> Self {
        ElasticCoefficients { l1, l2: 0.0, l3: 0.0, l4, l5, mode: ElasticMode::Thm3 }
    }

    pub fn chiral5(l: [f64; 5]) -> Self {
        ElasticCoefficients { l1: l[0], l2: l[1], l3: l[2], l4: l[3], l5: l[4], mode: ElasticMode::Chiral5 }
    }

    /// Constants with the terms inactive in this mode set to zero.
    pub fn effective(&self) -> [f64; 5] {
        let ElasticCoefficients { l1, l2, l3, l4, l5, mode } = *self;
        match mode {
            ElasticMode::Iso3 => [l1, l2, l3, 0.0, 0.0],
            ElasticMode::Chiral5 => [l1, l2, l3, l4, l5],
            ElasticMode::Thm3 => [l1, 0.0, 0.0, l4, l5],
        }
    }
}

impl Default for ElasticCoefficients {
    fn default() -> Self {
        ElasticCoefficients::iso3(1.0, 0.0, 0.0)
    }
}

/// In-plane gradient `d[m][l] = ∂z_m/∂x_l`, `l ∈ {1, 2}`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GradientD {
    pub d: [[f64; 2]; 5],
}

impl GradientD {
    pub const ZERO: GradientD = GradientD { d: [[0.0; 2]; 5] };

    pub fn new(d: [[f64; 2]; 5]) -> Self {
        GradientD { d }
    }

    /// `D_ijl` with `D_ij3 = 0`.
    pub fn full(&self) -> [[[f64; 3]; 3]; 3] {
        let mut out = [[[0.0; 3]; 3]; 3];
        for m in 0..5 {
            let e = basis_matrix(m);
            for i in 0..3 {
                for j in 0..3 {
                    for l in 0..2 {
                        out[i][j][l] += e[(i, j)] * self.d[m][l];
                    }
                }
            }
        }
        out
    }

    /// `‖D‖² = Σ D_ijl²`.
    pub fn norm_sq(&self) -> f64 {
        (0..2)
            .map(|l| {
                let mut s = 0.0;
                for m in 0..5 {
                    for n in 0..5 {
                        s += GRAM[m][n] * self.d[m][l] * self.d[n][l];
                    }
                }
                s
            })
            .sum()
    }

    pub fn as_vec(&self) -> [f64; 10] {
        let mut v = [0.0; 10];
        for m in 0..5 {
            v[2 * m] = self.d[m][0];
            v[2 * m + 1] = self.d[m][1];
        }
        v
    }
}

/// Outcome of [`validate`] with the names of the violated inequalities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Validity {
    pub failing: Vec<&'static str>,
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        self.failing.is_empty()
    }
}

const ISO_NAMES: [&str; 3] = ["L1+5L2/3+L3/6>0", "L1-L3/2>0", "L1+L3>0"];

fn iso_triple(l1: f64, l2: f64, l3: f64) -> [f64; 3] {
    [l1 + 5.0 * l2 / 3.0 + l3 / 6.0, l1 - l3 / 2.0, l1 + l3]
}

/// Checks the ellipticity inequalities of the active mode.
///
/// `Chiral5` applies the isotropic triple with `L1` lowered by the worst case
/// of the cubic term: `L1 − L5/3` for `L5 ≥ 0`, `L1 + 2L5/3` otherwise.
pub fn validate(c: &ElasticCoefficients) -> Validity {
    let mut failing = Vec::new();
    let [l1, l2, l3, l4, l5] = c.effective();
    if [l1, l2, l3, l4, l5].iter().any(|v| !v.is_finite()) {
        failing.push("finite coefficients");
        return Validity { failing };
    }
    let thm3 = |failing: &mut Vec<&'static str>| -> f64 {
        if l5 >= 0.0 {
            let v = l1 - l5 / 3.0;
            if !(v > 0.0) {
                failing.push("L1-L5/3>0");
            }
            v
        } else {
            let v = l1 + 2.0 * l5 / 3.0;
            if !(v > 0.0) {
                failing.push("L1+2L5/3>0");
            }
            v
        }
    };
    match c.mode {
        ElasticMode::Iso3 => {
            for (v, name) in iso_triple(l1, l2, l3).iter().zip(ISO_NAMES) {
                if !(*v > 0.0) {
                    failing.push(name);
                }
            }
        }
        ElasticMode::Thm3 => {
            thm3(&mut failing);
        }
        ElasticMode::Chiral5 => {
            let l1_eff = if l5 >= 0.0 { l1 - l5 / 3.0 } else { l1 + 2.0 * l5 / 3.0 };
            for (v, name) in iso_triple(l1_eff, l2, l3).iter().zip(ISO_NAMES) {
                if !(*v > 0.0) {
                    failing.push(name);
                }
            }
        }
    }
    Validity { failing }
}

/// `ε_ijk`.
fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Explicit index loops over `D_ijk`, kept as the reference the tabulated
/// forms are tested against.
pub mod reference {
    use super::*;

    pub fn iso3(l: [f64; 3], g: &GradientD) -> f64 {
        let d = g.full();
        let (mut t1, mut t2, mut t3) = (0.0, 0.0, 0.0);
        for i in 0..3 {
            let mut div = 0.0;
            for j in 0..3 {
                div += d[i][j][j];
                for k in 0..3 {
                    t1 += d[i][j][k] * d[i][j][k];
                    t3 += d[i][j][k] * d[i][k][j];
                }
            }
            t2 += div * div;
        }
        l[0] * t1 + l[1] * t2 + l[2] * t3
    }

    /// `ε_lkj Q_li D_kij`.
    pub fn chiral(q: &QTensor, g: &GradientD) -> f64 {
        let d = g.full();
        let qm = q.matrix();
        let mut s = 0.0;
        for l in 0..3 {
            for k in 0..3 {
                for j in 0..3 {
                    let e = levi_civita(l, k, j);
                    if e == 0.0 {
                        continue;
                    }
                    for i in 0..3 {
                        s += e * qm[(l, i)] * d[k][i][j];
                    }
                }
            }
        }
        s
    }

    /// `Q_lk D_ijl D_ijk`.
    pub fn cubic(q: &QTensor, g: &GradientD) -> f64 {
        let d = g.full();
        let qm = q.matrix();
        let mut s = 0.0;
        for l in 0..3 {
            for k in 0..3 {
                for i in 0..3 {
                    for j in 0..3 {
                        s += qm[(l, k)] * d[i][j][l] * d[i][j][k];
                    }
                }
            }
        }
        s
    }

    pub fn density(c: &ElasticCoefficients, q: &QTensor, g: &GradientD) -> f64 {
        let [l1, l2, l3, l4, l5] = c.effective();
        iso3([l1, l2, l3], g) + l4 * chiral(q, g) + l5 * cubic(q, g)
    }
}

/// `L1 D_ijl D_ijl + L2 D_ijj D_ikk + L3 D_ijk D_ikj`.
pub fn density_iso3(c: &ElasticCoefficients, g: &GradientD) -> f64 {
    let l = c.effective();
    let f = ElasticForm::new(&ElasticCoefficients::chiral5([l[0], l[1], l[2], 0.0, 0.0]));
    f.density(&QTensor::ZERO, g)
}

/// `L1|D|² + L4 ε_lkj Q_li D_kij + L5 Q_lk D_ijl D_ijk`.
pub fn density_thm3(c: &ElasticCoefficients, q: &QTensor, g: &GradientD) -> f64 {
    let l = c.effective();
    let f = ElasticForm::new(&ElasticCoefficients::chiral5([l[0], 0.0, 0.0, l[3], l[4]]));
    f.density(q, g)
}

/// Density of the active mode.
pub fn density(c: &ElasticCoefficients, q: &QTensor, g: &GradientD) -> f64 {
    ElasticForm::new(c).density(q, g)
}

/// Quadratic and linear coefficients of the density at a fixed `z`:
/// `f = Σ a[m][n][l][k] d_ml d_nk + Σ b[m][l] d_ml`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZFormCoefficients {
    pub a: [[[[f64; 2]; 2]; 5]; 5],
    pub b: [[f64; 2]; 5],
}

impl ZFormCoefficients {
    pub fn eval(&self, g: &GradientD) -> f64 {
        let mut s = 0.0;
        for m in 0..5 {
            for l in 0..2 {
                s += self.b[m][l] * g.d[m][l];
                for n in 0..5 {
                    for k in 0..2 {
                        s += self.a[m][n][l][k] * g.d[m][l] * g.d[n][k];
                    }
                }
            }
        }
        s
    }

    /// Symmetrized quadratic part as a 10×10 matrix in the ordering of
    /// [`GradientD::as_vec`].
    pub fn matrix(&self) -> SMatrix<f64, 10, 10> {
        let mut a = SMatrix::<f64, 10, 10>::zeros();
        for m in 0..5 {
            for n in 0..5 {
                for l in 0..2 {
                    for k in 0..2 {
                        let v = 0.5 * (self.a[m][n][l][k] + self.a[n][m][k][l]);
                        a[(2 * m + l, 2 * n + k)] = v;
                    }
                }
            }
        }
        a
    }

    /// Smallest eigenvalue of the quadratic part restricted to the unit
    /// sphere `Σ ζ² = 1` of raw `d` entries.
    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.matrix()).eigenvalues.min()
    }
}

/// Coefficients of the density at `q`.
pub fn zform_at(c: &ElasticCoefficients, q: &QTensor) -> ZFormCoefficients {
    let form = ElasticForm::new(c);
    let z = q.z();
    let qp = planar_q(&z);
    let mut a = [[[[0.0; 2]; 2]; 5]; 5];
    let mut b = [[0.0; 2]; 5];
    for m in 0..5 {
        for n in 0..5 {
            for l in 0..2 {
                for k in 0..2 {
                    a[m][n][l][k] = form.a0[2 * m + l][2 * n + k] + form.l5 * qp[l][k] * GRAM[m][n];
                }
            }
        }
        for l in 0..2 {
            b[m][l] = form.l4 * (0..5).map(|p| z[p] * form.chiral[p][m][l]).sum::<f64>();
        }
    }
    ZFormCoefficients { a, b }
}

/// Samples `Q ∈ M̄` (including the vertices of the eigenvalue triangle) and
/// returns the smallest eigenvalue of the quadratic form seen.
pub fn estimate_lambda<R: Rng + ?Sized>(c: &ElasticCoefficients, samples: usize, rng: &mut R) -> f64 {
    let mut lam = f64::INFINITY;
    let mut probe = |q: &QTensor| lam = lam.min(zform_at(c, q).min_eigenvalue());
    for axis in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] {
        probe(&QTensor::uniaxial(1.0, axis).unwrap_or_default());
        probe(&QTensor::uniaxial(-0.5, axis).unwrap_or_default());
    }
    for _ in 0..samples {
        probe(&sample_physical(rng, 0.0));
    }
    lam
}

/// In-plane block `Q_lk`, `l, k ∈ {1, 2}`.
fn planar_q(z: &[f64; 5]) -> [[f64; 2]; 2] {
    [[z[0], z[1]], [z[1], z[3]]]
}

/// `∂Q_lk/∂z_p` for the in-plane block.
const PLANAR_BASIS: [[[f64; 2]; 2]; 5] =
    [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 1.0], [1.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 1.0]], [[0.0, 0.0], [0.0, 0.0]]];

/// Density tables precomputed for one set of coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ElasticForm {
    /// Constant quadratic part from `L1, L2, L3`, symmetric.
    a0: [[f64; 10]; 10],
    /// `chiral[p][m][l]`: `ε_lkj Q_li D_kij = Σ z_p chiral[p][m][l] d_ml`.
    chiral: [[[f64; 2]; 5]; 5],
    l4: f64,
    l5: f64,
}

impl ElasticForm {
    pub fn new(c: &ElasticCoefficients) -> Self {
        let [l1, l2, l3, l4, l5] = c.effective();
        let e: Vec<_> = (0..5).map(basis_matrix).collect();
        let mut a0 = [[0.0; 10]; 10];
        for m in 0..5 {
            for n in 0..5 {
                for l in 0..2 {
                    for k in 0..2 {
                        let mut v = if l == k { l1 * GRAM[m][n] } else { 0.0 };
                        for s in 0..3 {
                            v += l2 * e[m][(s, l)] * e[n][(s, k)];
                            v += l3 * e[m][(s, k)] * e[n][(s, l)];
                        }
                        a0[2 * m + l][2 * n + k] = v;
                    }
                }
            }
        }
        // symmetrize so that the gradient is 2·a0·d
        for r in 0..10 {
            for s in 0..r {
                let v = 0.5 * (a0[r][s] + a0[s][r]);
                a0[r][s] = v;
                a0[s][r] = v;
            }
        }
        let mut chiral = [[[0.0; 2]; 5]; 5];
        for p in 0..5 {
            for m in 0..5 {
                for j in 0..2 {
                    let mut v = 0.0;
                    for l in 0..3 {
                        for k in 0..3 {
                            let eps = levi_civita(l, k, j);
                            if eps == 0.0 {
                                continue;
                            }
                            for i in 0..3 {
                                v += eps * e[p][(l, i)] * e[m][(k, i)];
                            }
                        }
                    }
                    chiral[p][m][j] = v;
                }
            }
        }
        ElasticForm { a0, chiral, l4, l5 }
    }

    pub fn density(&self, q: &QTensor, g: &GradientD) -> f64 {
        let v = g.as_vec();
        let z = q.z();
        let mut s = 0.0;
        for r in 0..10 {
            let mut row = 0.0;
            for c in 0..10 {
                row += self.a0[r][c] * v[c];
            }
            s += row * v[r];
        }
        if self.l5 != 0.0 {
            let mm = self.planar_gram(g);
            let qp = planar_q(&z);
            s += self.l5 * (qp[0][0] * mm[0][0] + 2.0 * qp[0][1] * mm[0][1] + qp[1][1] * mm[1][1]);
        }
        if self.l4 != 0.0 {
            s += self.l4 * self.chiral_term(&z, g);
        }
        s
    }

    /// Density with its partial derivatives in `z` and in `d`.
    pub fn density_and_grad(&self, q: &QTensor, g: &GradientD) -> (f64, [f64; 5], [[f64; 2]; 5]) {
        let v = g.as_vec();
        let z = q.z();
        let mut dd = [[0.0; 2]; 5];
        let mut f = 0.0;
        for r in 0..10 {
            let mut row = 0.0;
            for c in 0..10 {
                row += self.a0[r][c] * v[c];
            }
            f += row * v[r];
            dd[r / 2][r % 2] = 2.0 * row;
        }
        let mut dz = [0.0; 5];
        if self.l5 != 0.0 {
            let mm = self.planar_gram(g);
            let qp = planar_q(&z);
            f += self.l5 * (qp[0][0] * mm[0][0] + 2.0 * qp[0][1] * mm[0][1] + qp[1][1] * mm[1][1]);
            for (p, b) in PLANAR_BASIS.iter().enumerate() {
                dz[p] += self.l5 * (0..2).flat_map(|l| (0..2).map(move |k| (l, k))).map(|(l, k)| b[l][k] * mm[l][k]).sum::<f64>();
            }
            for m in 0..5 {
                for l in 0..2 {
                    let mut acc = 0.0;
                    for k in 0..2 {
                        let gd: f64 = (0..5).map(|n| GRAM[m][n] * g.d[n][k]).sum();
                        acc += qp[l][k] * gd;
                    }
                    dd[m][l] += 2.0 * self.l5 * acc;
                }
            }
        }
        if self.l4 != 0.0 {
            f += self.l4 * self.chiral_term(&z, g);
            for p in 0..5 {
                for m in 0..5 {
                    for l in 0..2 {
                        let c = self.l4 * self.chiral[p][m][l];
                        dz[p] += c * g.d[m][l];
                        dd[m][l] += c * z[p];
                    }
                }
            }
        }
        (f, dz, dd)
    }

    /// `M_lk = Σ_ij D_ijl D_ijk` for in-plane `l, k`.
    fn planar_gram(&self, g: &GradientD) -> [[f64; 2]; 2] {
        let mut mm = [[0.0; 2]; 2];
        for l in 0..2 {
            for k in 0..2 {
                let mut s = 0.0;
                for m in 0..5 {
                    for n in 0..5 {
                        s += GRAM[m][n] * g.d[m][l] * g.d[n][k];
                    }
                }
                mm[l][k] = s;
            }
        }
        mm
    }

    fn chiral_term(&self, z: &[f64; 5], g: &GradientD) -> f64 {
        let mut s = 0.0;
        for p in 0..5 {
            if z[p] == 0.0 {
                continue;
            }
            for m in 0..5 {
                for l in 0..2 {
                    s += z[p] * self.chiral[p][m][l] * g.d[m][l];
                }
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_grad<R: Rng>(rng: &mut R) -> GradientD {
        let mut d = [[0.0; 2]; 5];
        for row in d.iter_mut() {
            for v in row.iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
        }
        GradientD::new(d)
    }

    #[test]
    fn zero_gradient_has_zero_density() {
        let c = ElasticCoefficients::chiral5([1.0, 0.5, 0.3, 0.7, 0.2]);
        let q = QTensor::uniaxial(0.4, [0.0, 0.6, 0.8]).unwrap();
        assert_eq!(density(&c, &q, &GradientD::ZERO), 0.0);
        assert_eq!(density_iso3(&c, &GradientD::ZERO), 0.0);
    }

    #[test]
    fn single_entry_gradient() {
        let c = ElasticCoefficients::iso3(1.0, 0.0, 0.0);
        let mut d = [[0.0; 2]; 5];
        d[0][0] = 1.0;
        let g = GradientD::new(d);
        // ∂x Q11 = 1 forces ∂x Q33 = −1
        let full = g.full();
        let brute: f64 = full.iter().flatten().flatten().map(|v| v * v).sum();
        assert_abs_diff_eq!(brute, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(density_iso3(&c, &g), brute, epsilon = 1e-14);
    }

    #[test]
    fn reconstructed_gradient_is_symmetric_traceless_and_planar() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = random_grad(&mut rng);
        let d = g.full();
        for k in 0..3 {
            let tr: f64 = (0..3).map(|l| d[l][l][k]).sum();
            assert_abs_diff_eq!(tr, 0.0, epsilon = 1e-15);
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(d[i][j][k], d[j][i][k]);
                    assert_eq!(d[i][j][2], 0.0);
                }
            }
        }
    }

    #[test]
    fn tabulated_forms_match_reference_loops() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let l = [rng.gen_range(0.5..2.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let c = ElasticCoefficients::chiral5(l);
            let q = sample_physical(&mut rng, 0.0);
            let g = random_grad(&mut rng);
            let want = reference::density(&c, &q, &g);
            assert_abs_diff_eq!(density(&c, &q, &g), want, epsilon = 1e-12);
            assert_abs_diff_eq!(zform_at(&c, &q).eval(&g), want, epsilon = 1e-12);
            assert_abs_diff_eq!(ElasticForm::new(&c).density_and_grad(&q, &g).0, want, epsilon = 1e-12);
            let iso = ElasticCoefficients::iso3(l[0], 0.0, 0.0);
            assert_abs_diff_eq!(density_iso3(&iso, &g), l[0] * g.norm_sq(), epsilon = 1e-12);
        }
    }

    #[test]
    fn thm3_reduces_to_dirichlet() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_grad(&mut rng);
        let q = sample_physical(&mut rng, 0.0);
        let t = ElasticCoefficients::thm3(1.0, 0.0, 0.0);
        let i = ElasticCoefficients::iso3(1.0, 0.0, 0.0);
        assert_abs_diff_eq!(density_thm3(&t, &q, &g), density_iso3(&i, &g), epsilon = 1e-13);
    }

    #[test]
    fn cubic_term_attains_upper_bound_on_boundary() {
        let q = QTensor::from_z([2.0 / 3.0, 0.0, 0.0, -1.0 / 3.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut g = random_grad(&mut rng);
        for row in g.d.iter_mut() {
            row[1] = 0.0;
        }
        let c = ElasticCoefficients::thm3(0.0, 0.0, 1.0);
        assert_abs_diff_eq!(density_thm3(&c, &q, &g), 2.0 / 3.0 * g.norm_sq(), epsilon = 1e-12);
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = ElasticCoefficients::chiral5([1.0, 0.3, -0.2, 0.6, 0.4]);
        let form = ElasticForm::new(&c);
        let q = sample_physical(&mut rng, 0.05);
        let g = random_grad(&mut rng);
        let (_, dz, dd) = form.density_and_grad(&q, &g);
        let h = 1e-6;
        for p in 0..5 {
            let mut zp = q.z();
            let mut zm = q.z();
            zp[p] += h;
            zm[p] -= h;
            let fd = (form.density(&QTensor::from_z(zp).unwrap(), &g) - form.density(&QTensor::from_z(zm).unwrap(), &g)) / (2.0 * h);
            assert_abs_diff_eq!(dz[p], fd, epsilon = 1e-8);
            for l in 0..2 {
                let mut gp = g;
                let mut gm = g;
                gp.d[p][l] += h;
                gm.d[p][l] -= h;
                let fd = (form.density(&q, &gp) - form.density(&q, &gm)) / (2.0 * h);
                assert_abs_diff_eq!(dd[p][l], fd, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn validator_examples() {
        assert!(validate(&ElasticCoefficients::iso3(1.0, 0.0, 0.0)).is_valid());
        assert!(validate(&ElasticCoefficients::thm3(1.0, 0.0, 2.0)).is_valid());
        let bad = validate(&ElasticCoefficients::thm3(1.0, 0.0, -2.0));
        assert_eq!(bad.failing, vec!["L1+2L5/3>0"]);
        assert_eq!(validate(&ElasticCoefficients::thm3(1.0, 0.0, 3.0)).failing, vec!["L1-L5/3>0"]);
        assert!(validate(&ElasticCoefficients::thm3(1.0, 0.0, 2.9)).is_valid());
        assert!(validate(&ElasticCoefficients::thm3(1.0, 0.0, -1.0)).is_valid());
    }

    #[test]
    fn iso_inequalities_flip_independently() {
        assert_eq!(validate(&ElasticCoefficients::iso3(1.0, -0.7, 0.0)).failing, vec!["L1+5L2/3+L3/6>0"]);
        assert_eq!(validate(&ElasticCoefficients::iso3(1.0, 0.0, 2.5)).failing, vec!["L1-L3/2>0"]);
        assert_eq!(validate(&ElasticCoefficients::iso3(1.0, 1.0, -1.5)).failing, vec!["L1+L3>0"]);
    }

    #[test]
    fn chiral_linear_part_vanishes_at_zero_and_is_linear() {
        let c = ElasticCoefficients::thm3(1.0, 0.8, 0.0);
        assert_eq!(zform_at(&c, &QTensor::ZERO).b, [[0.0; 2]; 5]);
        let q1 = QTensor::from_z([0.1, 0.2, -0.1, 0.05, 0.1]).unwrap();
        let b1 = zform_at(&c, &q1).b;
        let b2 = zform_at(&c, &(q1 * 2.0)).b;
        for m in 0..5 {
            for l in 0..2 {
                assert_abs_diff_eq!(b2[m][l], 2.0 * b1[m][l], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn coercivity_is_positive_for_valid_thm3() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for (l1, l5) in [(1.0, 2.0), (1.0, -1.0), (1.0, 2.9)] {
            let c = ElasticCoefficients::thm3(l1, 0.0, l5);
            assert!(estimate_lambda(&c, 200, &mut rng) > 0.0);
        }
        let c = ElasticCoefficients::thm3(1.0, 0.0, 3.5);
        assert!(estimate_lambda(&c, 200, &mut rng) < 0.0);
    }
}
