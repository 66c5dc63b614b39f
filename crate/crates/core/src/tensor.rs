//! Symmetric traceless 3×3 tensors in the five-component `z` coordinates,
//! closed-form spectral analysis, and the distance to the physical boundary.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use nalgebra::{Matrix2, Matrix3, Vector3};
use rand::Rng;

use crate::error::{invalid, Result};

/// Lower eigenvalue bound of the physical set.
pub const LAMBDA_MIN: f64 = -1.0 / 3.0;
/// Upper eigenvalue bound of the physical set.
pub const LAMBDA_MAX: f64 = 2.0 / 3.0;
/// Default tolerance for deciding that a margin is zero.
pub const DEFAULT_BOUNDARY_TOL: f64 = 1e-12;

/// `|Q|_F^2 = zᵀ G z` for the coordinates `z = (Q11, Q12, Q13, Q22, Q23)`.
pub const GRAM: [[f64; 5]; 5] =
    [[2.0, 0.0, 0.0, 1.0, 0.0], [0.0, 2.0, 0.0, 0.0, 0.0], [0.0, 0.0, 2.0, 0.0, 0.0], [1.0, 0.0, 0.0, 2.0, 0.0], [0.0, 0.0, 0.0, 0.0, 2.0]];

/// `∂Q/∂z_m` for each coordinate.
pub fn basis_matrix(m: usize) -> Matrix3<f64> {
    let mut e = Matrix3::zeros();
    match m {
        0 => {
            e[(0, 0)] = 1.0;
            e[(2, 2)] = -1.0;
        }
        1 => {
            e[(0, 1)] = 1.0;
            e[(1, 0)] = 1.0;
        }
        2 => {
            e[(0, 2)] = 1.0;
            e[(2, 0)] = 1.0;
        }
        3 => {
            e[(1, 1)] = 1.0;
            e[(2, 2)] = -1.0;
        }
        4 => {
            e[(1, 2)] = 1.0;
            e[(2, 1)] = 1.0;
        }
        _ => panic!("z index {m} out of range"),
    }
    e
}

/// A symmetric traceless 3×3 tensor.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QTensor {
    z: [f64; 5],
}

impl QTensor {
    pub const ZERO: QTensor = QTensor { z: [0.0; 5] };

    pub fn from_z(z: [f64; 5]) -> Result<Self> {
        if z.iter().any(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite z components {z:?}")));
        }
        Ok(QTensor { z })
    }

    /// Builds from trusted, finite coordinates.
    pub(crate) fn from_z_unchecked(z: [f64; 5]) -> Self {
        QTensor { z }
    }

    /// Reads the upper triangle of a symmetric traceless matrix.
    ///
    /// The input is symmetrized and its trace removed, so the result is the
    /// orthogonal projection onto the traceless symmetric matrices.
    pub fn from_matrix(m: &Matrix3<f64>) -> Result<Self> {
        let s = (m + m.transpose()) * 0.5;
        let t = s.trace() / 3.0;
        QTensor::from_z([s[(0, 0)] - t, s[(0, 1)], s[(0, 2)], s[(1, 1)] - t, s[(1, 2)]])
    }

    /// `s (n ⊗ n − I/3)` for a unit director `n`.
    pub fn uniaxial(s: f64, n: [f64; 3]) -> Result<Self> {
        let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        if !s.is_finite() || (norm - 1.0).abs() > 1e-10 {
            return Err(invalid(format!("uniaxial needs finite s and |n| = 1, got |n| = {norm}")));
        }
        Ok(QTensor::from_z_unchecked([s * (n[0] * n[0] - 1.0 / 3.0), s * n[0] * n[1], s * n[0] * n[2], s * (n[1] * n[1] - 1.0 / 3.0), s * n[1] * n[2]]))
    }

    /// `frame · diag(λ) · frameᵀ`.
    pub fn from_spectrum(lambda: [f64; 3], frame: &Matrix3<f64>) -> Self {
        let m = frame * Matrix3::from_diagonal(&Vector3::from(lambda)) * frame.transpose();
        // from_matrix only fails on non-finite input
        QTensor::from_matrix(&m).unwrap_or(QTensor::ZERO)
    }

    #[inline]
    pub fn z(&self) -> [f64; 5] {
        self.z
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        let [a, b, c, d, e] = self.z;
        Matrix3::new(a, b, c, b, d, e, c, e, -a - d)
    }

    /// Frobenius norm squared, `Q_ij Q_ij`.
    pub fn norm_sq(&self) -> f64 {
        let [a, b, c, d, e] = self.z;
        a * a + d * d + (a + d) * (a + d) + 2.0 * (b * b + c * c + e * e)
    }

    /// `R Q Rᵀ`.
    pub fn rotate(&self, r: &Matrix3<f64>) -> Self {
        QTensor::from_matrix(&(r * self.matrix() * r.transpose())).unwrap_or(QTensor::ZERO)
    }

    pub fn eigensystem(&self) -> EigenSystem {
        eigensystem(self)
    }

    /// Signed distance of the spectrum to the interval ends −1/3 and 2/3.
    pub fn margin(&self) -> f64 {
        margin_of(&self.eigenvalues())
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 3] {
        self.eigensystem().lambda
    }

    pub fn classify(&self, tol: f64) -> Result<PhysRegion> {
        classify(self, tol)
    }

    pub fn is_finite(&self) -> bool {
        self.z.iter().all(|v| v.is_finite())
    }
}

impl Add for QTensor {
    type Output = QTensor;
    fn add(self, o: QTensor) -> QTensor {
        QTensor { z: std::array::from_fn(|i| self.z[i] + o.z[i]) }
    }
}

impl Sub for QTensor {
    type Output = QTensor;
    fn sub(self, o: QTensor) -> QTensor {
        QTensor { z: std::array::from_fn(|i| self.z[i] - o.z[i]) }
    }
}

impl Mul<f64> for QTensor {
    type Output = QTensor;
    fn mul(self, t: f64) -> QTensor {
        QTensor { z: self.z.map(|v| v * t) }
    }
}

/// Sorted eigenvalues with an orthonormal, right-handed eigenframe (columns).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSystem {
    pub lambda: [f64; 3],
    pub frame: Matrix3<f64>,
}

impl EigenSystem {
    pub fn margin(&self) -> f64 {
        margin_of(&self.lambda)
    }

    pub fn reconstruct(&self) -> Matrix3<f64> {
        self.frame * Matrix3::from_diagonal(&Vector3::from(self.lambda)) * self.frame.transpose()
    }
}

pub fn margin_of(lambda: &[f64; 3]) -> f64 {
    let lo = lambda.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = lambda.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo - LAMBDA_MIN).min(LAMBDA_MAX - hi)
}

/// Position of a tensor relative to the physical set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhysRegion {
    Interior { margin: f64 },
    Boundary,
    Exterior,
}

impl PhysRegion {
    pub fn is_exterior(&self) -> bool {
        matches!(self, PhysRegion::Exterior)
    }
}

pub fn classify(q: &QTensor, tol: f64) -> Result<PhysRegion> {
    if tol.is_nan() || tol < 0.0 {
        return Err(invalid(format!("boundary tolerance must be >= 0, got {tol}")));
    }
    let margin = q.margin();
    Ok(if margin.abs() <= tol {
        PhysRegion::Boundary
    } else if margin > 0.0 {
        PhysRegion::Interior { margin }
    } else {
        PhysRegion::Exterior
    })
}

/// Closed-form spectral decomposition.
///
/// Eigenvalues come from the trigonometric solution of the depressed cubic
/// on the norm-scaled matrix. The eigenvector of the best separated root is
/// taken from row cross products; the remaining plane is diagonalized as a
/// 2×2 problem, which keeps near-degenerate pairs accurate. A degenerate pair
/// is spanned starting from the first of e3, e1, e2 that is not nearly
/// parallel to the isolated eigenvector.
pub fn eigensystem(q: &QTensor) -> EigenSystem {
    let m = q.matrix();
    let norm = m.norm();
    if norm < 1e-300 {
        return EigenSystem { lambda: [0.0; 3], frame: Matrix3::identity() };
    }
    let a = m / norm;

    // traceless, |a|_F = 1: p = sqrt(tr(a²)/6), r = det(a) / (2 p³)
    let p = (1.0f64 / 6.0).sqrt();
    let r = (a.determinant() / (2.0 * p * p * p)).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let top = 2.0 * p * phi.cos();
    let bottom = 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
    let middle = -top - bottom;

    let top_isolated = top - middle >= middle - bottom;
    let iso = if top_isolated { top } else { bottom };
    let v = null_vector(&(a - Matrix3::identity() * iso));

    let pref = [Vector3::z(), Vector3::x(), Vector3::y()];
    let e = pref.iter().find(|e| e.dot(&v).powi(2) <= 0.5).copied().unwrap_or_else(Vector3::x);
    let u1 = (e - v * e.dot(&v)).normalize();
    let u2 = v.cross(&u1);

    let s = Matrix2::new(u1.dot(&(a * u1)), u1.dot(&(a * u2)), u2.dot(&(a * u1)), u2.dot(&(a * u2)));
    let s12 = 0.5 * (s[(0, 1)] + s[(1, 0)]);
    let t = 0.5 * (2.0 * s12).atan2(s[(0, 0)] - s[(1, 1)]);
    let (c, sn) = (t.cos(), t.sin());
    let w_hi = u1 * c + u2 * sn;
    let w_lo = u2 * c - u1 * sn;
    let mean = 0.5 * (s[(0, 0)] + s[(1, 1)]);
    let rad = (0.25 * (s[(0, 0)] - s[(1, 1)]).powi(2) + s12 * s12).sqrt();
    let (mu_lo, mu_hi) = (mean - rad, mean + rad);
    let lam_iso = v.dot(&(a * v));

    let (mut lambda, mut cols) = if top_isolated { ([mu_lo, mu_hi, lam_iso], [w_lo, w_hi, v]) } else { ([lam_iso, mu_lo, mu_hi], [v, w_lo, w_hi]) };
    // separation is at least half the spread, so only rounding can reorder
    for i in 0..2 {
        for j in 0..2 - i {
            if lambda[j] > lambda[j + 1] {
                lambda.swap(j, j + 1);
                cols.swap(j, j + 1);
            }
        }
    }
    let mut frame = Matrix3::from_columns(&cols);
    if frame.determinant() < 0.0 {
        frame.set_column(1, &(-cols[1]));
    }
    EigenSystem { lambda: lambda.map(|l| l * norm), frame }
}

/// Unit vector spanning the (numerical) null space of a rank-2 matrix,
/// sign-normalized so its largest component is positive.
fn null_vector(b: &Matrix3<f64>) -> Vector3<f64> {
    let r0 = b.row(0).transpose();
    let r1 = b.row(1).transpose();
    let r2 = b.row(2).transpose();
    let cands = [r0.cross(&r1), r0.cross(&r2), r1.cross(&r2)];
    let best = cands.iter().copied().max_by(|x, y| x.norm_squared().total_cmp(&y.norm_squared())).unwrap_or_else(Vector3::z);
    let n = best.norm();
    if n == 0.0 {
        return Vector3::z();
    }
    let mut v = best / n;
    let imax = (0..3).max_by(|&i, &j| v[i].abs().total_cmp(&v[j].abs())).unwrap_or(0);
    if v[imax] < 0.0 {
        v = -v;
    }
    v
}

/// Uniformly distributed rotation (Haar measure) via a random unit quaternion.
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> Matrix3<f64> {
    let (u1, u2, u3): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
    let a = (1.0 - u1).sqrt();
    let b = u1.sqrt();
    let (w, x, y, z) = (a * (2.0 * PI * u2).sin(), a * (2.0 * PI * u2).cos(), b * (2.0 * PI * u3).sin(), b * (2.0 * PI * u3).cos());
    Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - z * w),
        2.0 * (x * z + y * w),
        2.0 * (x * y + z * w),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - x * w),
        2.0 * (x * z - y * w),
        2.0 * (y * z + x * w),
        1.0 - 2.0 * (x * x + y * y),
    )
}

/// Random tensor with margin at least `min_margin`: eigenvalues uniform on
/// the shrunken eigenvalue triangle, frame Haar-distributed.
pub fn sample_physical<R: Rng + ?Sized>(rng: &mut R, min_margin: f64) -> QTensor {
    let lo = LAMBDA_MIN + min_margin;
    // vertices of {λi >= lo, Σλ = 0} in (λ1, λ2)
    let span = -3.0 * lo;
    let (mut u, mut v): (f64, f64) = (rng.gen(), rng.gen());
    if u + v > 1.0 {
        u = 1.0 - u;
        v = 1.0 - v;
    }
    let l1 = lo + u * span;
    let l2 = lo + v * span;
    let l3 = -l1 - l2;
    QTensor::from_spectrum([l1, l2, l3], &random_rotation(rng))
}
