//! Tensor fields on masked uniform grids, Dirichlet data and energy assembly.
//!
//! The elastic energy is a sum over node corners: each in-domain node `p`
//! and each quadrant `(sx, sy)` whose two edge neighbours `p + sx·e1`,
//! `p + sy·e2` are in the domain contributes `h²/4 · f_e(Q_p, D)` with `D`
//! the one-sided differences along those edges. On a full rectangle this is
//! the cell average of the four corner densities, and its Dirichlet part is
//! the five-point form without the checkerboard null space of central
//! differences. The bulk energy is the node-wise midpoint sum over interior
//! nodes.

use std::f64::consts::PI;

use crate::elastic::{validate, ElasticCoefficients, ElasticForm, GradientD};
use crate::error::{invalid, Error, Result};
use crate::par;
use crate::potential::{BulkModel, SOLVE_MARGIN_FLOOR};
use crate::tensor::{PhysRegion, QTensor, DEFAULT_BOUNDARY_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    /// Free unknown.
    Interior,
    /// Carries fixed Dirichlet data.
    Boundary,
    Outside,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Rectangle,
    /// Interior nodes are those strictly inside the circle.
    Disk {
        center: [f64; 2],
        radius: f64,
    },
}

/// Uniform grid with a node mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    nx: usize,
    ny: usize,
    h: f64,
    origin: [f64; 2],
    shape: Shape,
    kinds: Vec<NodeKind>,
    interior: Vec<usize>,
    boundary: Vec<usize>,
}

impl Grid2D {
    /// `nx × ny` nodes with the outer ring as boundary, lower-left node at the
    /// origin.
    pub fn rectangle(nx: usize, ny: usize, h: f64) -> Result<Self> {
        if nx < 3 || ny < 3 || !(h > 0.0) || !h.is_finite() {
            return Err(invalid(format!("rectangle needs nx, ny >= 3 and h > 0, got {nx}, {ny}, {h}")));
        }
        let kinds = (0..nx * ny)
            .map(|k| {
                let (i, j) = (k % nx, k / nx);
                if i == 0 || j == 0 || i == nx - 1 || j == ny - 1 {
                    NodeKind::Boundary
                } else {
                    NodeKind::Interior
                }
            })
            .collect();
        Grid2D::from_kinds(nx, ny, h, [0.0, 0.0], Shape::Rectangle, kinds)
    }

    /// `n × n` grid centred at the origin with spacing `2R/(n − 3)`, so the
    /// circle of radius `R` sits one cell inside the outermost nodes.
    /// Interior nodes lie strictly inside the circle; boundary nodes are the
    /// remaining nodes with an interior 4-neighbour.
    pub fn disk(n: usize, radius: f64) -> Result<Self> {
        if n < 7 || !(radius > 0.0) || !radius.is_finite() {
            return Err(invalid(format!("disk needs n >= 7 and radius > 0, got {n}, {radius}")));
        }
        let h = 2.0 * radius / (n - 3) as f64;
        let half = (n - 1) as f64 / 2.0;
        let origin = [-half * h, -half * h];
        Grid2D::disk_mask(n, n, h, origin, [0.0, 0.0], radius)
    }

    /// Disk mask on an arbitrary grid.
    pub fn disk_mask(nx: usize, ny: usize, h: f64, origin: [f64; 2], center: [f64; 2], radius: f64) -> Result<Self> {
        let inside = |k: usize| {
            let (x, y) = (origin[0] + (k % nx) as f64 * h, origin[1] + (k / nx) as f64 * h);
            (x - center[0]).hypot(y - center[1]) < radius
        };
        let mut kinds: Vec<NodeKind> = (0..nx * ny).map(|k| if inside(k) { NodeKind::Interior } else { NodeKind::Outside }).collect();
        for k in 0..nx * ny {
            if kinds[k] != NodeKind::Interior {
                continue;
            }
            let (i, j) = (k % nx, k / nx);
            if i == 0 || j == 0 || i == nx - 1 || j == ny - 1 {
                return Err(invalid("disk does not fit inside the grid"));
            }
        }
        let snapshot = kinds.clone();
        for k in 0..nx * ny {
            if snapshot[k] == NodeKind::Interior {
                continue;
            }
            let (i, j) = (k % nx, k / nx);
            let near = [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)].iter().any(|&(di, dj)| {
                let (a, b) = (i as i64 + di, j as i64 + dj);
                a >= 0 && b >= 0 && (a as usize) < nx && (b as usize) < ny && snapshot[b as usize * nx + a as usize] == NodeKind::Interior
            });
            if near {
                kinds[k] = NodeKind::Boundary;
            }
        }
        Grid2D::from_kinds(nx, ny, h, origin, Shape::Disk { center, radius }, kinds)
    }

    /// Checks that every interior node has four in-domain neighbours.
    pub fn from_kinds(nx: usize, ny: usize, h: f64, origin: [f64; 2], shape: Shape, kinds: Vec<NodeKind>) -> Result<Self> {
        if kinds.len() != nx * ny {
            return Err(invalid("mask length does not match grid size"));
        }
        let mut interior = Vec::new();
        let mut boundary = Vec::new();
        for (k, kind) in kinds.iter().enumerate() {
            match kind {
                NodeKind::Interior => {
                    let (i, j) = (k % nx, k / nx);
                    if i == 0 || j == 0 || i == nx - 1 || j == ny - 1 {
                        return Err(invalid(format!("interior node {k} on the grid edge")));
                    }
                    for nb in [k - 1, k + 1, k - nx, k + nx] {
                        if kinds[nb] == NodeKind::Outside {
                            return Err(invalid(format!("interior node {k} has an outside neighbour")));
                        }
                    }
                    interior.push(k);
                }
                NodeKind::Boundary => boundary.push(k),
                NodeKind::Outside => {}
            }
        }
        if interior.is_empty() {
            return Err(invalid("grid has no interior nodes"));
        }
        Ok(Grid2D { nx, ny, h, origin, shape, kinds, interior, boundary })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn kind(&self, k: usize) -> NodeKind {
        self.kinds[k]
    }

    pub fn kinds(&self) -> &[NodeKind] {
        &self.kinds
    }

    pub fn in_domain(&self, k: usize) -> bool {
        self.kinds[k] != NodeKind::Outside
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    pub fn position(&self, k: usize) -> [f64; 2] {
        let (i, j) = self.ij(k);
        [self.origin[0] + i as f64 * self.h, self.origin[1] + j as f64 * self.h]
    }

    /// Neighbour in direction `(di, dj)` if it exists on the grid.
    pub fn offset(&self, k: usize, di: i64, dj: i64) -> Option<usize> {
        let (i, j) = self.ij(k);
        let (a, b) = (i as i64 + di, j as i64 + dj);
        if a < 0 || b < 0 || a as usize >= self.nx || b as usize >= self.ny {
            None
        } else {
            Some(b as usize * self.nx + a as usize)
        }
    }

    /// In-domain neighbour in direction `(di, dj)`.
    pub fn domain_offset(&self, k: usize, di: i64, dj: i64) -> Option<usize> {
        self.offset(k, di, dj).filter(|&n| self.in_domain(n))
    }

    /// Corners contributing to the elastic energy: `(node, sx, sy, nx, ny)`.
    pub fn corners(&self) -> Vec<Corner> {
        let mut out = Vec::new();
        for k in 0..self.len() {
            if !self.in_domain(k) {
                continue;
            }
            for sy in [-1i64, 1] {
                for sx in [-1i64, 1] {
                    if let (Some(a), Some(b)) = (self.domain_offset(k, sx, 0), self.domain_offset(k, 0, sy)) {
                        out.push(Corner { node: k, sx: sx as f64, sy: sy as f64, ex: a, ey: b });
                    }
                }
            }
        }
        out
    }
}

/// One corner term of the elastic energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corner {
    pub node: usize,
    pub sx: f64,
    pub sy: f64,
    /// Neighbour along `x`.
    pub ex: usize,
    /// Neighbour along `y`.
    pub ey: usize,
}

/// Per-node `z` values; boundary nodes hold the Dirichlet data.
#[derive(Debug, Clone, PartialEq)]
pub struct QField {
    grid: Grid2D,
    z: Vec<[f64; 5]>,
}

impl QField {
    /// Zero interior, the given data on boundary nodes (aligned with
    /// [`Grid2D::boundary`]).
    pub fn new(grid: Grid2D, bc: &[[f64; 5]]) -> Result<Self> {
        if bc.len() != grid.boundary().len() {
            return Err(invalid(format!("{} boundary values for {} boundary nodes", bc.len(), grid.boundary().len())));
        }
        let mut z = vec![[0.0; 5]; grid.len()];
        for (&k, v) in grid.boundary().iter().zip(bc) {
            z[k] = *v;
        }
        Ok(QField { grid, z })
    }

    /// Takes every node value as given.
    pub fn from_values(grid: Grid2D, z: Vec<[f64; 5]>) -> Result<Self> {
        if z.len() != grid.len() {
            return Err(invalid("value count does not match grid size"));
        }
        if z.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("non-finite field value"));
        }
        Ok(QField { grid, z })
    }

    /// Every in-domain node set from a function of position.
    pub fn from_fn<F: Fn([f64; 2]) -> [f64; 5]>(grid: Grid2D, f: F) -> Result<Self> {
        let z = (0..grid.len()).map(|k| if grid.in_domain(k) { f(grid.position(k)) } else { [0.0; 5] }).collect();
        QField::from_values(grid, z)
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[[f64; 5]] {
        &self.z
    }

    pub fn z(&self, k: usize) -> [f64; 5] {
        self.z[k]
    }

    pub fn q(&self, k: usize) -> QTensor {
        QTensor::from_z(self.z[k]).unwrap_or_default()
    }

    /// Overwrites an interior value.
    pub fn set_interior(&mut self, k: usize, z: [f64; 5]) -> Result<()> {
        if self.grid.kind(k) != NodeKind::Interior {
            return Err(invalid(format!("node {k} is not interior")));
        }
        self.z[k] = z;
        Ok(())
    }

    pub(crate) fn values_mut(&mut self) -> &mut [[f64; 5]] {
        &mut self.z
    }

    /// Interior values in the order of [`Grid2D::interior`].
    pub fn interior_values(&self) -> Vec<[f64; 5]> {
        self.grid.interior().iter().map(|&k| self.z[k]).collect()
    }

    pub fn set_interior_values(&mut self, v: &[[f64; 5]]) {
        for (&k, z) in self.grid.interior().iter().zip(v) {
            self.z[k] = *z;
        }
    }

    /// Smallest margin over in-domain nodes.
    pub fn min_margin(&self) -> f64 {
        (0..self.grid.len()).filter(|&k| self.grid.in_domain(k)).map(|k| self.q(k).margin()).fold(f64::INFINITY, f64::min)
    }

    /// Smallest margin over interior nodes.
    pub fn min_interior_margin(&self) -> f64 {
        self.grid.interior().iter().map(|&k| self.q(k).margin()).fold(f64::INFINITY, f64::min)
    }

    /// First in-domain node outside the physical set.
    pub fn first_exterior(&self) -> Option<usize> {
        (0..self.grid.len()).filter(|&k| self.grid.in_domain(k)).find(|&k| self.q(k).margin() < -DEFAULT_BOUNDARY_TOL)
    }
}

/// Uniaxial boundary data `s(n⊗n − I/3)` with the planar director
/// `n = (cos(kθ/2), sin(kθ/2), 0)` at polar angle `θ` about the disk centre.
/// A rectangle accepts only `k = 0`, giving constant data along `e1`.
pub fn make_defect_bc(grid: &Grid2D, s: f64, winding: i32) -> Result<Vec<[f64; 5]>> {
    if !(s > -0.5 && s < 1.0) {
        return Err(invalid(format!("order parameter must lie in (-1/2, 1), got {s}")));
    }
    let center = match grid.shape() {
        Shape::Disk { center, .. } => center,
        Shape::Rectangle if winding == 0 => [0.0, 0.0],
        Shape::Rectangle => return Err(Error::Unsupported("non-zero winding on a rectangle".into())),
    };
    grid.boundary()
        .iter()
        .map(|&k| {
            let p = grid.position(k);
            let theta = (p[1] - center[1]).atan2(p[0] - center[0]);
            let a = 0.5 * winding as f64 * theta;
            Ok(QTensor::uniaxial(s, [a.cos(), a.sin(), 0.0])?.z())
        })
        .collect()
}

/// Director angle of the defect data at polar angle `θ`.
pub fn defect_angle(theta: f64, winding: i32) -> f64 {
    (0.5 * winding as f64 * theta).rem_euclid(PI)
}

/// Second-order central differences at an interior node.
pub fn central_gradient(field: &QField, node: usize) -> Result<GradientD> {
    let g = field.grid();
    if node >= g.len() || g.kind(node) != NodeKind::Interior {
        return Err(invalid(format!("central gradient needs an interior node, got {node}")));
    }
    let nx = g.nx();
    let inv = 0.5 / g.h();
    let (e, w, n, s) = (field.z(node + 1), field.z(node - 1), field.z(node + nx), field.z(node - nx));
    let mut d = [[0.0; 2]; 5];
    for m in 0..5 {
        d[m] = [(e[m] - w[m]) * inv, (n[m] - s[m]) * inv];
    }
    Ok(GradientD::new(d))
}

/// Elastic coefficients together with an optional bulk term.
#[derive(Debug, Clone)]
pub struct EnergyModel {
    pub coeffs: ElasticCoefficients,
    form: ElasticForm,
    pub bulk: Option<BulkModel>,
}

impl EnergyModel {
    /// Rejects coefficients that fail their ellipticity inequalities.
    pub fn new(coeffs: ElasticCoefficients, bulk: Option<BulkModel>) -> Result<Self> {
        let v = validate(&coeffs);
        if !v.is_valid() {
            return Err(invalid(format!("elastic constants violate {}", v.failing.join(", "))));
        }
        Ok(EnergyModel { coeffs, form: ElasticForm::new(&coeffs), bulk })
    }

    /// `L1|∇Q|²` alone.
    pub fn dirichlet(l1: f64) -> Result<Self> {
        EnergyModel::new(ElasticCoefficients::iso3(l1, 0.0, 0.0), None)
    }

    pub fn form(&self) -> &ElasticForm {
        &self.form
    }
}

/// Energies in h²-weighted sums.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyBreakdown {
    pub elastic: f64,
    pub bulk: f64,
    pub total: f64,
}

/// One-sided gradient of a corner.
pub(crate) fn corner_gradient(z: &[[f64; 5]], c: &Corner, h: f64) -> GradientD {
    let (p, a, b) = (z[c.node], z[c.ex], z[c.ey]);
    let mut d = [[0.0; 2]; 5];
    for m in 0..5 {
        d[m] = [c.sx * (a[m] - p[m]) / h, c.sy * (b[m] - p[m]) / h];
    }
    GradientD::new(d)
}

fn check_nodes(field: &QField) -> Result<bool> {
    let g = field.grid();
    let mut on_boundary = false;
    for k in 0..g.len() {
        if !g.in_domain(k) {
            continue;
        }
        match field.q(k).classify(DEFAULT_BOUNDARY_TOL)? {
            PhysRegion::Exterior => return Err(Error::InvalidState { node: k }),
            PhysRegion::Boundary => on_boundary = true,
            PhysRegion::Interior { .. } => {}
        }
    }
    Ok(on_boundary)
}

/// Total energy. A node on the boundary of the physical set makes the total
/// `+∞` when a bulk term is present; an exterior node is an error.
pub fn assemble_energy(field: &QField, model: &EnergyModel) -> Result<EnergyBreakdown> {
    let on_boundary = check_nodes(field)?;
    let g = field.grid();
    let h = g.h();
    let corners = g.corners();
    let z = field.values();
    let parts = par::map_slice(&corners, |c| {
        let q = QTensor::from_z(z[c.node]).unwrap_or_default();
        model.form.density(&q, &corner_gradient(z, c, h))
    });
    let elastic = 0.25 * h * h * parts.iter().sum::<f64>();
    let bulk = match &model.bulk {
        None => 0.0,
        Some(b) if on_boundary => {
            let _ = b;
            f64::INFINITY
        }
        Some(b) => {
            let vals = par::map_slice(g.interior(), |&k| b.density(&field.q(k)));
            h * h * vals.iter().sum::<f64>()
        }
    };
    Ok(EnergyBreakdown { elastic, bulk, total: elastic + bulk })
}

/// Energy and its gradient with respect to interior values (zero elsewhere).
///
/// `warm` holds the dual multipliers of each node from a previous call and
/// is updated in place.
pub fn energy_and_gradient(field: &QField, model: &EnergyModel, warm: Option<&mut Vec<QTensor>>) -> Result<(EnergyBreakdown, Vec<[f64; 5]>)> {
    let g = field.grid();
    if let Some(k) = field.first_exterior() {
        return Err(Error::InvalidState { node: k });
    }
    let h = g.h();
    let corners = g.corners();
    let z = field.values();
    let parts = par::map_slice(&corners, |c| {
        let q = QTensor::from_z(z[c.node]).unwrap_or_default();
        model.form.density_and_grad(&q, &corner_gradient(z, c, h))
    });
    let w = 0.25 * h * h;
    let mut grad = vec![[0.0; 5]; g.len()];
    let mut elastic = 0.0;
    for (c, (f, dz, dd)) in corners.iter().zip(&parts) {
        elastic += f;
        for m in 0..5 {
            let gx = c.sx * dd[m][0] / h;
            let gy = c.sy * dd[m][1] / h;
            grad[c.node][m] += w * (dz[m] - gx - gy);
            grad[c.ex][m] += w * gx;
            grad[c.ey][m] += w * gy;
        }
    }
    elastic *= w;

    let mut bulk = 0.0;
    if let Some(b) = &model.bulk {
        let interior = g.interior();
        let guesses: Option<&Vec<QTensor>> = warm.as_deref();
        let evals = par::map_range(interior.len(), |i| {
            let k = interior[i];
            let q = QTensor::from_z(z[k]).unwrap_or_default();
            if !(q.margin() > SOLVE_MARGIN_FLOOR) {
                return Err(Error::BarrierBreach { node: k, margin: q.margin() });
            }
            let guess = guesses.and_then(|v| v.get(i));
            let ev = b.potential.solve_from(&q, guess)?;
            Ok(ev)
        });
        let mut new_warm = Vec::with_capacity(interior.len());
        for (i, ev) in evals.into_iter().enumerate() {
            let ev = ev?;
            let k = interior[i];
            let zk = z[k];
            let kappa = b.params.kappa;
            bulk += ev.value - kappa * QTensor::from_z(zk).unwrap_or_default().norm_sq() + b.params.b0;
            for m in 0..5 {
                let gz: f64 = (0..5).map(|n| crate::tensor::GRAM[m][n] * zk[n]).sum();
                grad[k][m] += h * h * (ev.grad[m] - 2.0 * kappa * gz);
            }
            new_warm.push(ev.multipliers);
        }
        bulk *= h * h;
        if let Some(wv) = warm {
            *wv = new_warm;
        }
    }
    for k in 0..g.len() {
        if g.kind(k) != NodeKind::Interior {
            grad[k] = [0.0; 5];
        }
    }
    Ok((EnergyBreakdown { elastic, bulk, total: elastic + bulk }, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn disk_mask_invariants() {
        let g = Grid2D::disk(33, 1.0).unwrap();
        for &k in g.interior() {
            for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                assert!(g.domain_offset(k, di, dj).is_some());
            }
        }
        for &k in g.boundary() {
            let p = g.position(k);
            assert!(p[0].hypot(p[1]) >= 1.0);
            assert!(p[0].hypot(p[1]) < 1.0 + 1.5 * g.h());
        }
        assert_abs_diff_eq!(g.h(), 2.0 / 30.0, epsilon = 1e-15);
    }

    #[test]
    fn rectangle_rejects_winding() {
        let g = Grid2D::rectangle(8, 8, 0.1).unwrap();
        assert!(matches!(make_defect_bc(&g, 0.3, 1), Err(Error::Unsupported(_))));
        let bc = make_defect_bc(&g, 0.3, 0).unwrap();
        assert!(bc.iter().all(|v| v == &bc[0]));
    }

    #[test]
    fn defect_data_is_continuous_and_physical() {
        let mut jumps = Vec::new();
        for n in [33, 65] {
            let g = Grid2D::disk(n, 1.0).unwrap();
            let bc = make_defect_bc(&g, 0.5, 2).unwrap();
            let f = QField::new(g.clone(), &bc).unwrap();
            let mut worst: f64 = 0.0;
            for &k in g.boundary() {
                assert!(f.q(k).margin() > 0.0);
                for (di, dj) in [(1, 0), (0, 1)] {
                    if let Some(nb) = g.domain_offset(k, di, dj) {
                        if g.kind(nb) == NodeKind::Boundary {
                            let d: f64 = (0..5).map(|m| (f.z(k)[m] - f.z(nb)[m]).abs()).fold(0.0, f64::max);
                            worst = worst.max(d);
                        }
                    }
                }
            }
            jumps.push(worst);
        }
        assert!(jumps[1] < 0.7 * jumps[0]);
    }

    #[test]
    fn central_gradient_is_exact_on_linear_fields() {
        let g = Grid2D::rectangle(9, 7, 0.2).unwrap();
        let f = QField::from_fn(g.clone(), |p| [0.1 * p[0], -0.2 * p[1], 0.0, 0.05 * p[0] + 0.03 * p[1], 0.0]).unwrap();
        let k = g.index(4, 3);
        let d = central_gradient(&f, k).unwrap();
        assert_abs_diff_eq!(d.d[0][0], 0.1, epsilon = 1e-14);
        assert_abs_diff_eq!(d.d[1][1], -0.2, epsilon = 1e-14);
        assert_abs_diff_eq!(d.d[3][0], 0.05, epsilon = 1e-14);
        assert_abs_diff_eq!(d.d[3][1], 0.03, epsilon = 1e-14);
        assert!(central_gradient(&f, 0).is_err());
    }

    #[test]
    fn central_gradient_is_second_order() {
        let mut errs = Vec::new();
        for n in [17, 33, 65] {
            let h = 1.0 / (n - 1) as f64;
            let g = Grid2D::rectangle(n, n, h).unwrap();
            let f = QField::from_fn(g.clone(), |p| [p[0] * p[0] + p[0] * p[1], 0.0, 0.0, 0.0, 0.0]).unwrap();
            let k = g.index((n - 1) / 2 + 1, (n - 1) / 2);
            let p = g.position(k);
            let d = central_gradient(&f, k).unwrap();
            let f3 = QField::from_fn(g.clone(), |p| [p[0].powi(3), 0.0, 0.0, 0.0, 0.0]).unwrap();
            let d3 = central_gradient(&f3, k).unwrap();
            assert_abs_diff_eq!(d.d[0][0], 2.0 * p[0] + p[1], epsilon = 1e-12);
            errs.push((d3.d[0][0] - 3.0 * p[0] * p[0]).abs());
        }
        let order = (errs[0] / errs[2]).log2() / 2.0;
        assert!(order >= 1.9, "observed order {order}");
    }

    #[test]
    fn constant_field_energies() {
        let g = Grid2D::rectangle(9, 9, 0.125).unwrap();
        let bc = vec![[0.0; 5]; g.boundary().len()];
        let f = QField::new(g.clone(), &bc).unwrap();
        let model = EnergyModel::new(ElasticCoefficients::default(), Some(BulkModel::with_kappa(0.0).unwrap())).unwrap();
        let e = assemble_energy(&f, &model).unwrap();
        assert_abs_diff_eq!(e.total, 0.0, epsilon = 1e-10);

        let q = QTensor::uniaxial(0.3, [0.0, 0.0, 1.0]).unwrap();
        let f = QField::from_fn(g.clone(), |_| q.z()).unwrap();
        let e = assemble_energy(&f, &model).unwrap();
        let bulk = model.bulk.as_ref().unwrap();
        let area = g.interior().len() as f64 * g.h() * g.h();
        assert_eq!(e.elastic, 0.0);
        assert_abs_diff_eq!(e.bulk, area * bulk.density(&q), epsilon = 1e-12);
        assert_eq!(e.total, e.elastic + e.bulk);
    }

    #[test]
    fn dirichlet_part_is_five_point_form() {
        let g = Grid2D::rectangle(6, 5, 0.3).unwrap();
        let f = QField::from_fn(g.clone(), |p| [0.1 * (p[0] * 3.0).sin(), 0.1 * p[1] * p[0], 0.02, -0.1 * p[1], 0.1 * (p[0] + p[1]).cos()]).unwrap();
        let e = assemble_energy(&f, &EnergyModel::dirichlet(1.0).unwrap()).unwrap();
        let mut want = 0.0;
        for k in 0..g.len() {
            for nb in [g.offset(k, 1, 0), g.offset(k, 0, 1)].into_iter().flatten() {
                let (a, b) = (f.z(k), f.z(nb));
                let dz: Vec<f64> = (0..5).map(|m| a[m] - b[m]).collect();
                let mut s = 0.0;
                for m in 0..5 {
                    for n in 0..5 {
                        s += crate::tensor::GRAM[m][n] * dz[m] * dz[n];
                    }
                }
                // edges on the outer ring are shared by two corners only
                let (i, j) = g.ij(k);
                let (i2, j2) = g.ij(nb);
                let on_edge = (j == 0 && j2 == 0) || (j == g.ny() - 1 && j2 == g.ny() - 1) || (i == 0 && i2 == 0) || (i == g.nx() - 1 && i2 == g.nx() - 1);
                want += if on_edge { 0.5 * s } else { s };
            }
        }
        assert_abs_diff_eq!(e.elastic, want, epsilon = 1e-12);
    }

    #[test]
    fn exterior_node_is_reported() {
        let g = Grid2D::rectangle(5, 5, 0.1).unwrap();
        let mut f = QField::new(g.clone(), &vec![[0.0; 5]; g.boundary().len()]).unwrap();
        let k = g.index(2, 2);
        f.set_interior(k, [0.9, 0.0, 0.0, -0.45, 0.0]).unwrap();
        let model = EnergyModel::dirichlet(1.0).unwrap();
        assert!(matches!(assemble_energy(&f, &model), Err(Error::InvalidState { node }) if node == k));
    }

    #[test]
    fn boundary_of_physical_set_gives_infinite_total() {
        let g = Grid2D::rectangle(5, 5, 0.1).unwrap();
        let mut f = QField::new(g.clone(), &vec![[0.0; 5]; g.boundary().len()]).unwrap();
        f.set_interior(g.index(2, 2), [2.0 / 3.0, 0.0, 0.0, -1.0 / 3.0, 0.0]).unwrap();
        let model = EnergyModel::new(ElasticCoefficients::default(), Some(BulkModel::with_kappa(0.0).unwrap())).unwrap();
        assert_eq!(assemble_energy(&f, &model).unwrap().total, f64::INFINITY);
    }

    #[test]
    fn invalid_coefficients_are_rejected() {
        assert!(EnergyModel::new(ElasticCoefficients::thm3(1.0, 0.0, 3.0), None).is_err());
    }
}
