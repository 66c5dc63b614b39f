//! Harmonic and constant-coefficient replacement on sub-disks.
//!
//! Inside a disk every `z` channel is replaced by the discrete solution of a
//! scalar elliptic equation whose boundary values are the current field on
//! the surrounding ring. Each operator is stored as a set of lattice offsets
//! `e` with non-negative weights, `Lu(x) = Σ w_e (u(x+he) + u(x−he) − 2u(x))`,
//! so every interior value is a convex combination of its neighbours and the
//! discrete maximum principle holds for any weights produced here.

use nalgebra::{Matrix2, SymmetricEigen};

use crate::elastic::{validate, ElasticCoefficients, ElasticMode};
use crate::error::{invalid, Error, Result};
use crate::field::{assemble_energy, EnergyModel, NodeKind, QField};
use crate::potential::MaierSaupe;
use crate::tensor::QTensor;

/// Sup-norm tolerance on the normalized stencil residual.
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_SWEEPS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Operator {
    Laplace,
    /// `c11 ∂11 + 2 c12 ∂12 + c22 ∂22` with `c` symmetric positive definite.
    ConstCoeff([[f64; 2]; 2]),
}

impl Operator {
    pub fn name(&self) -> &'static str {
        match self {
            Operator::Laplace => "laplace",
            Operator::ConstCoeff(_) => "const_coeff",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplacementSpec {
    pub center: [f64; 2],
    pub radius: f64,
    pub operator: Operator,
}

/// Lattice offsets `(di, dj)` with weights; each offset stands for both `±e`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    pub offsets: Vec<([i64; 2], f64)>,
}

impl Stencil {
    /// Five-point Laplacian.
    pub fn laplace() -> Self {
        Stencil { offsets: vec![([1, 0], 1.0), ([0, 1], 1.0)] }
    }

    /// Positive nine-point scheme for diagonally dominant `c`, otherwise the
    /// obtuse-superbase (Selling) decomposition of `c`.
    pub fn for_coefficients(c: [[f64; 2]; 2]) -> Result<Self> {
        let (c11, c12, c22) = (c[0][0], 0.5 * (c[0][1] + c[1][0]), c[1][1]);
        if !(c11 > 0.0 && c11 * c22 - c12 * c12 > 0.0) || ![c11, c12, c22].iter().all(|v| v.is_finite()) {
            return Err(invalid(format!("coefficient matrix is not positive definite: {c:?}")));
        }
        let a = c12.abs();
        let mut offsets = if c11 >= a && c22 >= a {
            let diag = if c12 >= 0.0 { [1, 1] } else { [1, -1] };
            vec![([1, 0], c11 - a), ([0, 1], c22 - a), (diag, a)]
        } else {
            selling(c11, c12, c22)
        };
        offsets.retain(|(_, w)| *w > 0.0);
        Ok(Stencil { offsets })
    }

    fn reach(&self) -> i64 {
        self.offsets.iter().map(|(e, _)| e[0].abs().max(e[1].abs())).max().unwrap_or(1)
    }

    fn center_weight(&self) -> f64 {
        2.0 * self.offsets.iter().map(|(_, w)| w).sum::<f64>()
    }

    /// `Σ w_e e eᵀ`, the coefficient matrix the stencil is consistent with.
    pub fn coefficients(&self) -> [[f64; 2]; 2] {
        let mut c = [[0.0; 2]; 2];
        for (e, w) in &self.offsets {
            let v = [e[0] as f64, e[1] as f64];
            for a in 0..2 {
                for b in 0..2 {
                    c[a][b] += w * v[a] * v[b];
                }
            }
        }
        c
    }
}

/// Decomposes `c = Σ w_k e_k e_kᵀ` with integer `e_k` and `w_k ≥ 0` via an
/// obtuse superbase.
fn selling(c11: f64, c12: f64, c22: f64) -> Vec<([i64; 2], f64)> {
    let ip = |u: [i64; 2], v: [i64; 2]| {
        let (u0, u1, v0, v1) = (u[0] as f64, u[1] as f64, v[0] as f64, v[1] as f64);
        c11 * u0 * v0 + c12 * (u0 * v1 + u1 * v0) + c22 * u1 * v1
    };
    let mut b = [[1i64, 0], [0, 1], [-1, -1]];
    for _ in 0..10_000 {
        let mut changed = false;
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            if ip(b[i], b[j]) > 0.0 {
                let k = 3 - i - j;
                let (bi, bj) = (b[i], b[j]);
                b[i] = [-bi[0], -bi[1]];
                b[k] = [bi[0] - bj[0], bi[1] - bj[1]];
                changed = true;
                break;
            }
        }
        if !changed {
            break;
        }
    }
    [(0, 1, 2), (0, 2, 1), (1, 2, 0)]
        .iter()
        .map(|&(i, j, k)| {
            let e = [-b[k][1], b[k][0]];
            (e, -ip(b[i], b[j]))
        })
        .collect()
}

/// Change of variables normalizing the frozen-coefficient operator at an
/// anchor tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LOperatorData {
    /// `(L1 I + L5 Ŵ(anchor))^{−1/2}`.
    pub a: [[f64; 2]; 2],
    pub anchor: QTensor,
    pub l1: f64,
    pub l5: f64,
}

/// Upper-left 2×2 block of a tensor.
pub fn planar_block(v: &QTensor) -> Matrix2<f64> {
    let z = v.z();
    Matrix2::new(z[0], z[1], z[1], z[3])
}

impl LOperatorData {
    fn base(&self, v: &QTensor) -> Matrix2<f64> {
        Matrix2::identity() * self.l1 + planar_block(v) * self.l5
    }

    fn a_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.a[0][0], self.a[0][1], self.a[1][0], self.a[1][1])
    }

    /// `c(V) = A (L1 I + L5 Ŵ(V)) Aᵀ`; the identity at the anchor.
    pub fn c_at(&self, v: &QTensor) -> [[f64; 2]; 2] {
        let a = self.a_matrix();
        let c = a * self.base(v) * a.transpose();
        [[c[(0, 0)], c[(0, 1)]], [c[(1, 0)], c[(1, 1)]]]
    }

    /// Coefficients of the operator in the original coordinates,
    /// `L1 I + L5 Ŵ(anchor)`.
    pub fn x_coefficients(&self) -> [[f64; 2]; 2] {
        let b = self.base(&self.anchor);
        [[b[(0, 0)], b[(0, 1)]], [b[(1, 0)], b[(1, 1)]]]
    }

    pub fn operator(&self) -> Operator {
        Operator::ConstCoeff(self.x_coefficients())
    }
}

/// Builds the normalizing change of variables for `L1|∇Q|² + L5 Q_lk D_ijl D_ijk`
/// frozen at `anchor`.
pub fn build_l_operator(coeffs: &ElasticCoefficients, anchor: &QTensor) -> Result<LOperatorData> {
    if coeffs.mode != ElasticMode::Thm3 {
        return Err(invalid("L-operator needs Thm3 coefficients"));
    }
    let v = validate(coeffs);
    if !v.is_valid() {
        return Err(invalid(format!("elastic constants violate {}", v.failing.join(", "))));
    }
    let base = Matrix2::identity() * coeffs.l1 + planar_block(anchor) * coeffs.l5;
    let eig = SymmetricEigen::new(base);
    if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return Err(invalid(format!("frozen coefficient matrix is not positive definite at {:?}", anchor.z())));
    }
    let inv_sqrt = eig.eigenvectors * Matrix2::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt())) * eig.eigenvectors.transpose();
    Ok(LOperatorData { a: [[inv_sqrt[(0, 0)], inv_sqrt[(0, 1)]], [inv_sqrt[(1, 0)], inv_sqrt[(1, 1)]]], anchor: *anchor, l1: coeffs.l1, l5: coeffs.l5 })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReplacementReport {
    pub energy_before: f64,
    pub energy_after: f64,
    /// Operator energy of the disk before and after, summed over channels.
    pub dirichlet_before: f64,
    pub dirichlet_after: f64,
    pub mean_value_lhs: f64,
    pub mean_value_rhs: f64,
    /// Largest `−margin` over replaced nodes; `≤ 0` when all are physical.
    pub max_margin_violation: f64,
    pub solver_residual: f64,
    pub sweeps: usize,
    pub disk_nodes: usize,
    pub ring_nodes: usize,
}

/// Nodes of a replacement disk and of the ring its stencil reaches.
#[derive(Debug, Clone, PartialEq)]
pub struct DiskNodes {
    pub disk: Vec<usize>,
    pub ring: Vec<usize>,
    pub stencil: Stencil,
}

/// Resolves the disk and its ring; both must lie in the grid's interior.
pub fn disk_nodes(field: &QField, spec: &ReplacementSpec) -> Result<DiskNodes> {
    if !(spec.radius > 0.0) {
        return Err(invalid("replacement radius must be positive"));
    }
    let stencil = match spec.operator {
        Operator::Laplace => Stencil::laplace(),
        Operator::ConstCoeff(c) => Stencil::for_coefficients(c)?,
    };
    let g = field.grid();
    let disk: Vec<usize> = (0..g.len())
        .filter(|&k| {
            let p = g.position(k);
            (p[0] - spec.center[0]).hypot(p[1] - spec.center[1]) < spec.radius
        })
        .collect();
    if disk.is_empty() {
        return Err(invalid("replacement disk contains no nodes"));
    }
    let mut in_disk = vec![false; g.len()];
    for &k in &disk {
        if g.kind(k) != NodeKind::Interior {
            return Err(Error::Unsupported("replacement disk touches the domain boundary".into()));
        }
        in_disk[k] = true;
    }
    let mut in_ring = vec![false; g.len()];
    for &k in &disk {
        for (e, _) in &stencil.offsets {
            for s in [1, -1] {
                let nb = g.offset(k, s * e[0], s * e[1]).ok_or_else(|| Error::Unsupported("stencil leaves the grid".into()))?;
                if !in_disk[nb] {
                    if !g.in_domain(nb) {
                        return Err(Error::Unsupported("replacement ring leaves the domain".into()));
                    }
                    in_ring[nb] = true;
                }
            }
        }
    }
    let ring = (0..g.len()).filter(|&k| in_ring[k]).collect();
    Ok(DiskNodes { disk, ring, stencil })
}

/// `Σ_e w_e Σ |u(x+he) − u(x)|²` over lattice edges touching the disk,
/// summed over channels.
pub fn operator_energy(field: &QField, nodes: &DiskNodes) -> f64 {
    let g = field.grid();
    let mut in_disk = vec![false; g.len()];
    for &k in &nodes.disk {
        in_disk[k] = true;
    }
    let mut s = 0.0;
    for &k in &nodes.disk {
        for (e, w) in &nodes.stencil.offsets {
            for sign in [1, -1] {
                let Some(nb) = g.offset(k, sign * e[0], sign * e[1]) else { continue };
                // count disk-disk edges once
                if in_disk[nb] && sign == -1 {
                    continue;
                }
                let (a, b) = (field.z(k), field.z(nb));
                s += w * (0..5).map(|m| (a[m] - b[m]).powi(2)).sum::<f64>();
            }
        }
    }
    s
}

/// Replaces the disk values by the discrete solution with ring data.
pub fn replace(field: &QField, spec: &ReplacementSpec, model: Option<&EnergyModel>) -> Result<(QField, ReplacementReport)> {
    replace_with(field, spec, model, DEFAULT_TOL, DEFAULT_MAX_SWEEPS)
}

pub fn replace_with(field: &QField, spec: &ReplacementSpec, model: Option<&EnergyModel>, tol: f64, max_sweeps: usize) -> Result<(QField, ReplacementReport)> {
    if let Some(k) = field.first_exterior() {
        return Err(Error::InvalidState { node: k });
    }
    let nodes = disk_nodes(field, spec)?;
    let g = field.grid();
    let cw = nodes.stencil.center_weight();
    let mut nbrs: Vec<Vec<(usize, f64)>> = Vec::with_capacity(nodes.disk.len());
    for &k in &nodes.disk {
        let mut v = Vec::new();
        for (e, w) in &nodes.stencil.offsets {
            for s in [1, -1] {
                let nb = g.offset(k, s * e[0], s * e[1]).expect("checked in disk_nodes");
                v.push((nb, w / cw));
            }
        }
        nbrs.push(v);
    }
    let reach = nodes.stencil.reach() as f64;
    let diameter = (2.0 * spec.radius / (g.h() * reach)).max(1.0);
    let omega = 2.0 / (1.0 + (std::f64::consts::PI / (diameter + 1.0)).sin());

    let mut z: Vec<[f64; 5]> = field.values().to_vec();
    let residual = |z: &[[f64; 5]]| -> f64 {
        let mut r: f64 = 0.0;
        for (i, &k) in nodes.disk.iter().enumerate() {
            for m in 0..5 {
                let avg: f64 = nbrs[i].iter().map(|(nb, w)| w * z[*nb][m]).sum();
                r = r.max((avg - z[k][m]).abs());
            }
        }
        r
    };
    let mut res = residual(&z);
    let mut sweeps = 0;
    while res >= tol {
        if sweeps >= max_sweeps {
            return Err(Error::ConvergenceFailure { iterations: sweeps, residual: res });
        }
        for (i, &k) in nodes.disk.iter().enumerate() {
            let mut avg = [0.0; 5];
            for (nb, w) in &nbrs[i] {
                for m in 0..5 {
                    avg[m] += w * z[*nb][m];
                }
            }
            for m in 0..5 {
                z[k][m] += omega * (avg[m] - z[k][m]);
            }
        }
        sweeps += 1;
        if sweeps % 10 == 0 {
            res = residual(&z);
        }
    }
    if sweeps % 10 != 0 {
        res = residual(&z);
    }
    let out = QField::from_values(g.clone(), z)?;

    let max_margin_violation = nodes.disk.iter().map(|&k| -out.q(k).margin()).fold(f64::NEG_INFINITY, f64::max);
    let (energy_before, energy_after) = match model {
        Some(m) if max_margin_violation <= 0.0 => (assemble_energy(field, m)?.total, assemble_energy(&out, m)?.total),
        Some(m) => (assemble_energy(field, m)?.total, f64::NAN),
        None => (f64::NAN, f64::NAN),
    };
    let mean_value = match model.and_then(|m| m.bulk.as_ref()) {
        Some(b) if max_margin_violation <= 0.0 => Some(mean_value_check(&out, spec, &b.potential)?),
        _ => None,
    };
    let report = ReplacementReport {
        energy_before,
        energy_after,
        dirichlet_before: operator_energy(field, &nodes),
        dirichlet_after: operator_energy(&out, &nodes),
        mean_value_lhs: mean_value.map_or(f64::NAN, |m| m.lhs),
        mean_value_rhs: mean_value.map_or(f64::NAN, |m| m.rhs),
        max_margin_violation,
        solver_residual: res,
        sweeps,
        disk_nodes: nodes.disk.len(),
        ring_nodes: nodes.ring.len(),
    };
    Ok((out, report))
}

/// `n` nearly uniform unit vectors (Fibonacci lattice).
pub fn probe_directions(n: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let y = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - y * y).sqrt();
            let t = golden * i as f64;
            [r * t.cos(), y, r * t.sin()]
        })
        .collect()
}

/// Largest amount by which `ζᵀHζ` over the disk leaves the range of `ζᵀQζ`
/// over the ring, for `n` probe directions. Non-positive when the discrete
/// maximum principle holds.
pub fn max_principle_excess(replaced: &QField, spec: &ReplacementSpec, directions: usize) -> Result<f64> {
    let nodes = disk_nodes(replaced, spec)?;
    let mut worst = f64::NEG_INFINITY;
    for zeta in probe_directions(directions) {
        let v = nalgebra::Vector3::from(zeta);
        let g = |k: usize| v.dot(&(replaced.q(k).matrix() * v));
        let (lo, hi) = nodes.ring.iter().map(|&k| g(k)).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        for &k in &nodes.disk {
            let x = g(k);
            worst = worst.max(x - hi).max(lo - x);
        }
    }
    Ok(worst)
}

/// Both sides of the disk/circle comparison for a convex density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanValue {
    /// `Σ_{disk} f(H) h²`.
    pub lhs: f64,
    /// `(s/2) ∮ f(H) ds`.
    pub rhs: f64,
    /// Set when some sample could not be evaluated (ring too close to the
    /// edge of the physical set); those samples are skipped.
    pub flagged: bool,
}

impl MeanValue {
    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }
}

/// Bilinear interpolation of the field at a point.
pub fn interpolate(field: &QField, p: [f64; 2]) -> Option<[f64; 5]> {
    let g = field.grid();
    let o = g.origin();
    let (fx, fy) = ((p[0] - o[0]) / g.h(), (p[1] - o[1]) / g.h());
    let (i, j) = (fx.floor(), fy.floor());
    if i < 0.0 || j < 0.0 || i as usize + 1 >= g.nx() || j as usize + 1 >= g.ny() {
        return None;
    }
    let (tx, ty) = (fx - i, fy - j);
    let k = g.index(i as usize, j as usize);
    let corners = [(k, (1.0 - tx) * (1.0 - ty)), (k + 1, tx * (1.0 - ty)), (k + g.nx(), (1.0 - tx) * ty), (k + g.nx() + 1, tx * ty)];
    let mut out = [0.0; 5];
    for (c, w) in corners {
        if !g.in_domain(c) {
            return None;
        }
        for m in 0..5 {
            out[m] += w * field.z(c)[m];
        }
    }
    Some(out)
}

/// Disk sum of `f(H)` against `s/2` times the circle integral of `f(H)`,
/// the circle sampled by arc length with bilinear interpolation.
pub fn mean_value_with<F: Fn(&QTensor) -> Option<f64>>(replaced: &QField, spec: &ReplacementSpec, f: F) -> Result<MeanValue> {
    let nodes = disk_nodes(replaced, spec)?;
    let h = replaced.grid().h();
    let mut flagged = false;
    let mut lhs = 0.0;
    for &k in &nodes.disk {
        match f(&replaced.q(k)) {
            Some(v) => lhs += v * h * h,
            None => flagged = true,
        }
    }
    let s = spec.radius;
    let samples = ((2.0 * std::f64::consts::PI * s / h).ceil() as usize * 4).max(64);
    let ds = 2.0 * std::f64::consts::PI * s / samples as f64;
    let mut circle = 0.0;
    for i in 0..samples {
        let t = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / samples as f64;
        let p = [spec.center[0] + s * t.cos(), spec.center[1] + s * t.sin()];
        let v = interpolate(replaced, p).and_then(|z| QTensor::from_z(z).ok()).and_then(|q| f(&q));
        match v {
            Some(v) => circle += v * ds,
            None => flagged = true,
        }
    }
    Ok(MeanValue { lhs, rhs: 0.5 * s * circle, flagged })
}

/// [`mean_value_with`] for the singular potential.
pub fn mean_value_check(replaced: &QField, spec: &ReplacementSpec, potential: &MaierSaupe) -> Result<MeanValue> {
    mean_value_with(replaced, spec, |q| potential.value(q).ok())
}
