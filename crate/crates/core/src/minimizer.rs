//! Preconditioned descent on the discrete energy.
//!
//! The iteration is generic over an [`Objective`]; the tensor-field energy
//! and a one-dimensional barrier toy problem both implement it. Trial points
//! that leave the admissible set are rejected before any energy is computed,
//! so the `+∞` barrier never enters the arithmetic.

use crate::error::{invalid, Error, Result};
use crate::field::{energy_and_gradient, EnergyModel, NodeKind, QField};
use crate::potential::{ConvexPotential, SOLVE_MARGIN_FLOOR};
use crate::tensor::{margin_of, QTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    GradientDescent,
    /// Polak–Ribière+ with restarts.
    #[default]
    NonlinearCg,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    pub max_iters: usize,
    /// Bound on the sup-norm of the gradient divided by the cell measure.
    pub grad_tol: f64,
    pub initial_step: f64,
    pub shrink: f64,
    pub armijo: f64,
    pub max_halvings: usize,
    pub method: Method,
    /// Apply the inverse of a shifted Dirichlet operator to the gradient.
    pub precondition: bool,
    /// Restart conjugate directions after this many iterations.
    pub restart: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            max_iters: 5000,
            grad_tol: 1e-6,
            initial_step: 1.0,
            shrink: 0.5,
            armijo: 1e-4,
            max_halvings: 60,
            method: Method::NonlinearCg,
            precondition: true,
            restart: 50,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(invalid(format!("shrink must lie in (0, 1), got {}", self.shrink)));
        }
        if !(self.armijo > 0.0 && self.armijo <= 0.5) {
            return Err(invalid(format!("armijo constant must lie in (0, 0.5], got {}", self.armijo)));
        }
        if !(self.initial_step > 0.0) || !(self.grad_tol >= 0.0) {
            return Err(invalid("initial step must be > 0 and grad_tol >= 0"));
        }
        if self.max_halvings == 0 || self.restart == 0 {
            return Err(invalid("max_halvings and restart must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub total: f64,
    pub elastic: f64,
    pub bulk: f64,
    pub grad_norm: f64,
    pub min_margin: f64,
    pub step: f64,
}

/// Why the iteration ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StopReason {
    /// Gradient below tolerance.
    Converged,
    #[default]
    MaxIters,
    /// The decrease predicted along the search direction is below the
    /// rounding level of the energy, so no step can be verified by Armijo.
    PrecisionFloor,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveTrace {
    /// Record 0 is the initial state; each later record is an accepted step.
    pub records: Vec<TraceRecord>,
    pub stop: StopReason,
}

impl SolveTrace {
    pub fn converged(&self) -> bool {
        self.stop == StopReason::Converged
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn is_monotone(&self) -> bool {
        self.records.windows(2).all(|w| w[1].total <= w[0].total)
    }
}

/// State returned with a line-search failure.
#[derive(Debug, Clone)]
pub struct Stall {
    pub field: Option<QField>,
    pub point: Vec<f64>,
    pub trace: SolveTrace,
}

/// Energy evaluation at a point.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub total: f64,
    pub elastic: f64,
    pub bulk: f64,
    pub min_margin: f64,
    pub grad: Vec<f64>,
}

/// A smooth objective on an open admissible set.
pub trait Objective {
    /// Whether the energy can be evaluated at `x`.
    fn admissible(&self, x: &[f64]) -> bool;
    fn evaluate(&mut self, x: &[f64]) -> Result<Evaluation>;
    /// The last evaluated point was accepted.
    fn commit(&mut self) {}
    fn precondition(&self, g: &[f64], out: &mut [f64]) {
        out.copy_from_slice(g);
    }
    /// Divisor turning gradient entries into pointwise residuals.
    fn grad_scale(&self) -> f64 {
        1.0
    }
}

/// Relative size of a predicted decrease below which the energy cannot
/// resolve it.
const ROUNDING_FLOOR: f64 = 1e-14;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sup(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Descends from `x0` until the scaled gradient sup-norm drops below
/// `grad_tol` or `max_iters` steps are taken.
pub fn descend<O: Objective>(obj: &mut O, x0: Vec<f64>, config: &SolveConfig) -> Result<(Vec<f64>, SolveTrace)> {
    config.validate()?;
    if !obj.admissible(&x0) {
        return Err(invalid("initial point is not admissible"));
    }
    let scale = obj.grad_scale();
    let mut x = x0;
    let mut ev = obj.evaluate(&x)?;
    obj.commit();
    let record = |iter: usize, ev: &Evaluation, step: f64| TraceRecord {
        iter,
        total: ev.total,
        elastic: ev.elastic,
        bulk: ev.bulk,
        grad_norm: sup(&ev.grad) / scale,
        min_margin: ev.min_margin,
        step,
    };
    let mut trace = SolveTrace { records: vec![record(0, &ev, 0.0)], stop: StopReason::MaxIters };
    let n = x.len();
    let mut y = vec![0.0; n];
    let mut y_prev = vec![0.0; n];
    let mut g_prev = vec![0.0; n];
    let mut dir = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut since_restart = 0;

    for iter in 1..=config.max_iters + 1 {
        if sup(&ev.grad) / scale < config.grad_tol {
            trace.stop = StopReason::Converged;
            break;
        }
        if iter > config.max_iters {
            break;
        }
        if config.precondition {
            obj.precondition(&ev.grad, &mut y);
        } else {
            y.copy_from_slice(&ev.grad);
        }
        let beta = match config.method {
            Method::NonlinearCg if since_restart > 0 && since_restart < config.restart => {
                let num = dot(&ev.grad, &y) - dot(&ev.grad, &y_prev);
                let den = dot(&g_prev, &y_prev);
                if den > 0.0 {
                    (num / den).max(0.0)
                } else {
                    0.0
                }
            }
            _ => 0.0,
        };
        for i in 0..n {
            dir[i] = -y[i] + beta * dir[i];
        }
        let mut slope = dot(&ev.grad, &dir);
        if !(slope < 0.0) {
            for i in 0..n {
                dir[i] = -y[i];
            }
            slope = dot(&ev.grad, &dir);
            since_restart = 0;
        }
        if !(slope < 0.0) {
            trace.stop = StopReason::PrecisionFloor;
            break;
        }

        let mut t = config.initial_step;
        let mut accepted = None;
        for _ in 0..config.max_halvings {
            for i in 0..n {
                trial[i] = x[i] + t * dir[i];
            }
            if obj.admissible(&trial) {
                let cand = obj.evaluate(&trial)?;
                let armijo = cand.total <= ev.total + config.armijo * t * slope;
                // below rounding, accept any non-increasing step
                let flat = (t * slope).abs() < 1e-14 * ev.total.abs().max(1e-300) && cand.total <= ev.total;
                if cand.total.is_finite() && (armijo || flat) {
                    accepted = Some(cand);
                    break;
                }
            }
            t *= config.shrink;
        }
        let Some(cand) = accepted else {
            if (config.initial_step * slope).abs() <= ROUNDING_FLOOR * ev.total.abs() {
                trace.stop = StopReason::PrecisionFloor;
                break;
            }
            return Err(Error::Stalled(Box::new(Stall { field: None, point: x, trace })));
        };
        obj.commit();
        std::mem::swap(&mut x, &mut trial);
        g_prev.copy_from_slice(&ev.grad);
        y_prev.copy_from_slice(&y);
        ev = cand;
        since_restart = if since_restart + 1 >= config.restart { 0 } else { since_restart + 1 };
        trace.records.push(record(iter, &ev, t));
    }
    Ok((x, trace))
}

/// Symmetric positive definite banded matrix factored as `L Lᵀ`.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    /// Row `i` holds `L[i][i − bw ..= i]`.
    l: Vec<f64>,
}

impl BandCholesky {
    /// `entries(i, j)` for `j ∈ [i − bw, i]`.
    pub fn factor<F: Fn(usize, usize) -> f64>(n: usize, bw: usize, entries: F) -> Result<Self> {
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let mut s = entries(i, j);
                let k0 = j0.max(j.saturating_sub(bw));
                for k in k0..j {
                    s -= l[i * w + (k + bw - i)] * l[j * w + (k + bw - j)];
                }
                if j == i {
                    if !(s > 0.0) {
                        return Err(invalid("band matrix is not positive definite"));
                    }
                    l[i * w + bw] = s.sqrt();
                } else {
                    l[i * w + (j + bw - i)] = s / l[j * w + bw];
                }
            }
        }
        Ok(BandCholesky { n, bw, l })
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        for i in 0..n {
            let mut s = b[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.l[i * w + (k + bw - i)] * b[k];
            }
            b[i] = s / self.l[i * w + bw];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n.min(i + bw + 1) {
                s -= self.l[k * w + (i + bw - k)] * b[k];
            }
            b[i] = s / self.l[i * w + bw];
        }
    }
}

/// `shift·I + 4 − (interior neighbours)` on the interior nodes, in interior
/// order, factored.
fn dirichlet_factor(field: &QField, diag_weight: f64, shift: f64) -> Result<BandCholesky> {
    let g = field.grid();
    let interior = g.interior();
    let mut pos = vec![usize::MAX; g.len()];
    for (i, &k) in interior.iter().enumerate() {
        pos[k] = i;
    }
    let mut bw = 0;
    for (i, &k) in interior.iter().enumerate() {
        for nb in [k - 1, k - g.nx()] {
            if pos[nb] != usize::MAX {
                bw = bw.max(i - pos[nb]);
            }
        }
    }
    BandCholesky::factor(interior.len(), bw, |i, j| {
        if i == j {
            4.0 * diag_weight + shift
        } else {
            let (a, b) = (interior[i], interior[j]);
            if a == b + 1 || a == b + g.nx() {
                -diag_weight
            } else {
                0.0
            }
        }
    })
}

/// `∂E/∂z` at every node; zero off the interior.
pub fn energy_gradient(field: &QField, model: &EnergyModel) -> Result<Vec<[f64; 5]>> {
    let g = field.grid();
    for &k in g.interior() {
        let m = field.q(k).margin();
        if model.bulk.is_some() && !(m > SOLVE_MARGIN_FLOOR) {
            return Err(Error::BarrierBreach { node: k, margin: m });
        }
    }
    Ok(energy_and_gradient(field, model, None)?.1)
}

/// `G⁻¹` for the Gram matrix of the `z` coordinates.
const GRAM_INV: [[f64; 5]; 5] = [
    [2.0 / 3.0, 0.0, 0.0, -1.0 / 3.0, 0.0],
    [0.0, 0.5, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.5, 0.0, 0.0],
    [-1.0 / 3.0, 0.0, 0.0, 2.0 / 3.0, 0.0],
    [0.0, 0.0, 0.0, 0.0, 0.5],
];

/// The tensor-field energy over interior values.
pub struct FieldObjective<'a> {
    field: QField,
    model: &'a EnergyModel,
    warm: Vec<QTensor>,
    pending: Vec<QTensor>,
    factor: BandCholesky,
}

impl<'a> FieldObjective<'a> {
    pub fn new(field: QField, model: &'a EnergyModel) -> Result<Self> {
        let h = field.grid().h();
        let shift = if model.bulk.is_some() { 7.5 * h * h } else { 0.0 };
        let factor = dirichlet_factor(&field, 2.0 * model.coeffs.l1, shift)?;
        Ok(FieldObjective { field, model, warm: Vec::new(), pending: Vec::new(), factor })
    }

    fn load(&mut self, x: &[f64]) {
        let interior = self.field.grid().interior().to_vec();
        let vals = self.field.values_mut();
        for (i, &k) in interior.iter().enumerate() {
            vals[k].copy_from_slice(&x[5 * i..5 * i + 5]);
        }
    }

    pub fn into_field(self) -> QField {
        self.field
    }
}

impl Objective for FieldObjective<'_> {
    fn admissible(&self, x: &[f64]) -> bool {
        let floor = if self.model.bulk.is_some() { SOLVE_MARGIN_FLOOR } else { 0.0 };
        x.chunks_exact(5).all(|c| {
            let q = QTensor::from_z([c[0], c[1], c[2], c[3], c[4]]);
            q.is_ok_and(|q| margin_of(&q.eigenvalues()) > floor)
        })
    }

    fn evaluate(&mut self, x: &[f64]) -> Result<Evaluation> {
        self.load(x);
        let mut warm = self.warm.clone();
        let (e, grad) = energy_and_gradient(&self.field, self.model, Some(&mut warm))?;
        self.pending = warm;
        let g: Vec<f64> = self.field.grid().interior().iter().flat_map(|&k| grad[k]).collect();
        Ok(Evaluation { total: e.total, elastic: e.elastic, bulk: e.bulk, min_margin: self.field.min_margin(), grad: g })
    }

    fn commit(&mut self) {
        self.warm = std::mem::take(&mut self.pending);
    }

    fn precondition(&self, g: &[f64], out: &mut [f64]) {
        let n = g.len() / 5;
        let mut chan = vec![0.0; n];
        let mut solved = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for (m, s) in solved.iter_mut().enumerate() {
            for i in 0..n {
                chan[i] = g[5 * i + m];
            }
            self.factor.solve_in_place(&mut chan);
            s.copy_from_slice(&chan);
        }
        for i in 0..n {
            for m in 0..5 {
                out[5 * i + m] = (0..5).map(|p| GRAM_INV[m][p] * solved[p][i]).sum();
            }
        }
    }

    fn grad_scale(&self) -> f64 {
        let h = self.field.grid().h();
        h * h
    }
}

/// Channel-wise discrete harmonic extension of the boundary values,
/// contracted by 0.9 toward zero while any interior node has margin below
/// `1e−3`.
pub fn harmonic_initial(field: &QField) -> Result<QField> {
    let g = field.grid();
    let interior = g.interior();
    let factor = dirichlet_factor(field, 1.0, 0.0)?;
    let mut out = field.clone();
    for m in 0..5 {
        let mut rhs: Vec<f64> = interior
            .iter()
            .map(|&k| [k - 1, k + 1, k - g.nx(), k + g.nx()].iter().filter(|&&nb| g.kind(nb) == NodeKind::Boundary).map(|&nb| field.z(nb)[m]).sum())
            .collect();
        factor.solve_in_place(&mut rhs);
        for (&k, v) in interior.iter().zip(&rhs) {
            out.values_mut()[k][m] = *v;
        }
    }
    for _ in 0..200 {
        if out.min_interior_margin() >= 1e-3 {
            return Ok(out);
        }
        for &k in interior {
            let z = out.z(k);
            out.values_mut()[k] = z.map(|v| 0.9 * v);
        }
    }
    Err(invalid("boundary data too close to the edge of the physical set"))
}

/// Minimizes the energy over interior values starting from `field`.
pub fn minimize(field: QField, model: &EnergyModel, config: &SolveConfig) -> Result<(QField, SolveTrace)> {
    let x0: Vec<f64> = field.interior_values().into_iter().flatten().collect();
    let mut obj = FieldObjective::new(field, model)?;
    match descend(&mut obj, x0, config) {
        Ok((x, trace)) => {
            obj.load(&x);
            Ok((obj.into_field(), trace))
        }
        Err(Error::Stalled(mut stall)) => {
            obj.load(&stall.point);
            stall.field = Some(obj.into_field());
            Err(Error::Stalled(stall))
        }
        Err(e) => Err(e),
    }
}

/// `∫ γ|u'|² + f̃(u) − κu²` on `[0, length]` with Dirichlet values, for a
/// convex potential on an interval.
pub struct BarrierChain<'a, P: ConvexPotential> {
    pub potential: &'a P,
    pub gamma: f64,
    pub left: f64,
    pub right: f64,
    pub length: f64,
    pub nodes: usize,
    factor: BandCholesky,
}

impl<'a, P: ConvexPotential> BarrierChain<'a, P> {
    /// `nodes` counts interior unknowns.
    pub fn new(potential: &'a P, gamma: f64, left: f64, right: f64, length: f64, nodes: usize) -> Result<Self> {
        if potential.dim() != 1 || nodes == 0 || !(gamma > 0.0) || !(length > 0.0) {
            return Err(invalid("barrier chain needs a 1-D potential, gamma > 0, length > 0 and nodes > 0"));
        }
        let h = length / (nodes + 1) as f64;
        let factor = BandCholesky::factor(nodes, 1, |i, j| if i == j { 4.0 * gamma / h + 2.0 * h } else { -2.0 * gamma / h })?;
        Ok(BarrierChain { potential, gamma, left, right, length, nodes, factor })
    }

    pub fn h(&self) -> f64 {
        self.length / (self.nodes + 1) as f64
    }

    /// Linear interpolation of the end values.
    pub fn initial(&self) -> Vec<f64> {
        (1..=self.nodes).map(|i| self.left + (self.right - self.left) * i as f64 / (self.nodes + 1) as f64).collect()
    }
}

impl<P: ConvexPotential> Objective for BarrierChain<'_, P> {
    fn admissible(&self, x: &[f64]) -> bool {
        x.iter().all(|&u| self.potential.margin(&[u]) > 0.0)
    }

    fn evaluate(&mut self, x: &[f64]) -> Result<Evaluation> {
        let h = self.h();
        let n = x.len();
        let at = |i: isize| -> f64 {
            if i < 0 {
                self.left
            } else if i as usize >= n {
                self.right
            } else {
                x[i as usize]
            }
        };
        let mut elastic = 0.0;
        let mut grad = vec![0.0; n];
        for e in 0..=n as isize {
            let du = (at(e) - at(e - 1)) / h;
            elastic += self.gamma * du * du * h;
            let gd = 2.0 * self.gamma * du;
            if e >= 1 {
                grad[e as usize - 1] -= gd;
            }
            if (e as usize) < n {
                grad[e as usize] += gd;
            }
        }
        let mut bulk = 0.0;
        let mut g1 = [0.0];
        let kappa = self.potential.kappa();
        let mut min_margin = f64::INFINITY;
        for (i, &u) in x.iter().enumerate() {
            bulk += h * self.potential.offset_value(&[u]);
            self.potential.gradient(&[u], &mut g1)?;
            grad[i] += h * (g1[0] - 2.0 * kappa * u);
            min_margin = min_margin.min(self.potential.margin(&[u]));
        }
        Ok(Evaluation { total: elastic + bulk, elastic, bulk, min_margin, grad })
    }

    fn precondition(&self, g: &[f64], out: &mut [f64]) {
        out.copy_from_slice(g);
        self.factor.solve_in_place(out);
    }

    fn grad_scale(&self) -> f64 {
        self.h()
    }
}
