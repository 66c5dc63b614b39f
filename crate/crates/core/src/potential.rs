//! The Maier–Saupe singular potential and the bulk energy density built on it.
//!
//! `f_ms(Q)` is the least entropy `∫ρ ln ρ` over orientation densities on S²
//! with normalized second moment `Q`. It is evaluated through the dual
//! problem: the minimizer is the Boltzmann density `exp(p·Bp)/Z` and the
//! traceless multiplier `B` solves the smooth, strictly convex problem
//! `min_B ln Z(B) − tr(B(Q + I/3))`, whose gradient is the moment mismatch.
//! `B` is also `∂f_ms/∂Q`.

use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};

use nalgebra::{Cholesky, Matrix2, Matrix3, SMatrix, SVector, Vector2, Vector3};

use crate::error::{invalid, Error, Result};
use crate::quadrature::{SphereRule, DEFAULT_ORDER};
use crate::tensor::{QTensor, GRAM};

/// Below this margin no solve is attempted; the bulk density is `+∞`.
pub const SOLVE_MARGIN_FLOOR: f64 = 1e-6;
/// Default Frobenius tolerance on the moment mismatch.
pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITERS: usize = 200;
/// Largest rule order used by the margin-adaptive evaluator.
pub const MAX_ADAPTIVE_ORDER: usize = 2048;

/// Rule order resolving the dual density at `margin`: `max(base, 12/√margin)`
/// rounded up to one of four steps per doubling, capped at
/// [`MAX_ADAPTIVE_ORDER`].
pub fn order_for_margin(margin: f64, base: usize) -> usize {
    let want = if margin > 0.0 { (12.0 / margin.sqrt()).ceil() } else { f64::INFINITY };
    if !(want > base as f64) {
        return base;
    }
    if want >= MAX_ADAPTIVE_ORDER as f64 {
        return MAX_ADAPTIVE_ORDER.max(base);
    }
    let want = want as usize;
    let step = (1usize << (usize::BITS - 1 - want.leading_zeros())).max(16) / 4;
    (want.div_ceil(step) * step).min(MAX_ADAPTIVE_ORDER)
}

/// Folded rules by order, built on first use and shared between clones.
#[derive(Debug, Clone, Default)]
struct RuleCache(Arc<RwLock<BTreeMap<usize, Arc<SphereRule>>>>);

impl RuleCache {
    fn get(&self, order: usize) -> Result<Arc<SphereRule>> {
        if let Some(r) = self.0.read().map_err(|_| invalid("rule cache poisoned"))?.get(&order) {
            return Ok(r.clone());
        }
        let rule = Arc::new(SphereRule::octant(order)?);
        let mut w = self.0.write().map_err(|_| invalid("rule cache poisoned"))?;
        Ok(w.entry(order).or_insert(rule).clone())
    }
}

/// Result of a dual solve at one tensor.
#[derive(Debug, Clone)]
pub struct SingularEval {
    /// `f_ms(Q)` in nats.
    pub value: f64,
    /// `∂f_ms/∂z`.
    pub grad: [f64; 5],
    /// Traceless dual exponent `B`.
    pub multipliers: QTensor,
    pub log_z: f64,
    pub newton_iters: usize,
    /// Frobenius norm of the moment mismatch at exit.
    pub residual: f64,
    /// Orientation of the quadrature rule used by the solve (columns map rule
    /// axes to physical axes); identity for the full five-variable solve.
    pub frame: Matrix3<f64>,
    /// Hessian of `f_ms` with respect to the eigenvalues, in rule axes, on the
    /// traceless diagonal subspace (eigenframe solves only).
    pub spectral_hessian: Option<Matrix3<f64>>,
}

/// Which unknowns Newton iterates on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DualStrategy {
    /// Rotate into the eigenframe of `Q` where `B` is diagonal: two unknowns.
    #[default]
    Eigenframe,
    /// All five components of `B` in the laboratory frame.
    Full,
}

/// Dual-problem evaluator bound to one quadrature rule.
#[derive(Debug, Clone)]
pub struct MaierSaupe {
    rule: SphereRule,
    octant: Arc<SphereRule>,
    tol: f64,
    max_iters: usize,
    strategy: DualStrategy,
    adaptive: Option<RuleCache>,
}

impl MaierSaupe {
    pub fn new(rule: SphereRule) -> Self {
        let octant = Arc::new(rule.folded_octant());
        MaierSaupe { rule, octant, tol: DEFAULT_TOL, max_iters: DEFAULT_MAX_ITERS, strategy: DualStrategy::Eigenframe, adaptive: None }
    }

    /// Eigenframe solves raise the rule order as the margin shrinks, see
    /// [`order_for_margin`]; `rule` stays the base rule.
    pub fn adaptive(mut self) -> Self {
        self.adaptive = Some(RuleCache::default());
        self
    }

    pub fn is_adaptive(&self) -> bool {
        self.adaptive.is_some()
    }

    /// Rule order an eigenframe solve at `margin` runs on.
    pub fn order_at(&self, margin: f64) -> usize {
        match self.adaptive {
            Some(_) => order_for_margin(margin, self.rule.order()),
            None => self.rule.order(),
        }
    }

    pub fn with_order(order: usize) -> Result<Self> {
        Ok(MaierSaupe::new(SphereRule::new(order)?))
    }

    pub fn with_tolerance(mut self, tol: f64, max_iters: usize) -> Result<Self> {
        if !(tol > 0.0) || max_iters == 0 {
            return Err(invalid(format!("need tol > 0 and max_iters > 0, got {tol}, {max_iters}")));
        }
        self.tol = tol;
        self.max_iters = max_iters;
        Ok(self)
    }

    pub fn with_strategy(mut self, strategy: DualStrategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn rule(&self) -> &SphereRule {
        &self.rule
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn strategy(&self) -> DualStrategy {
        self.strategy
    }

    pub fn solve(&self, q: &QTensor) -> Result<SingularEval> {
        self.solve_from(q, None)
    }

    /// Solve warm-started from the multipliers of a nearby evaluation.
    pub fn solve_from(&self, q: &QTensor, guess: Option<&QTensor>) -> Result<SingularEval> {
        let margin = q.margin();
        if !(margin > SOLVE_MARGIN_FLOOR) {
            return Err(Error::OutOfDomain { margin });
        }
        match self.strategy {
            DualStrategy::Eigenframe => self.solve_eigenframe(q, guess),
            DualStrategy::Full => self.solve_full(q, guess),
        }
    }

    pub fn value(&self, q: &QTensor) -> Result<f64> {
        Ok(self.solve(q)?.value)
    }

    fn solve_eigenframe(&self, q: &QTensor, guess: Option<&QTensor>) -> Result<SingularEval> {
        let es = q.eigensystem();
        let frame = es.frame;
        let octant = match &self.adaptive {
            Some(cache) => {
                let order = self.order_at(q.margin());
                if order == self.rule.order() {
                    self.octant.clone()
                } else {
                    cache.get(order)?
                }
            }
            None => self.octant.clone(),
        };
        let target = Vector3::from(es.lambda.map(|l| l + 1.0 / 3.0));
        // orthonormal basis of the traceless diagonal plane
        let u = SMatrix::<f64, 3, 2>::new(
            std::f64::consts::FRAC_1_SQRT_2,
            1.0 / 6f64.sqrt(),
            -std::f64::consts::FRAC_1_SQRT_2,
            1.0 / 6f64.sqrt(),
            0.0,
            -2.0 / 6f64.sqrt(),
        );
        let mut y = match guess {
            Some(b) => {
                let bm = b.matrix();
                let d = Vector3::from_fn(|k, _| frame.column(k).dot(&(bm * frame.column(k))));
                u.transpose() * d
            }
            None => Vector2::zeros(),
        };

        let mut st = diag_moments(&octant, &(u * y), &target);
        let mut iters = 0;
        while st.grad.norm() >= self.tol {
            if iters >= self.max_iters {
                return Err(Error::ConvergenceFailure { iterations: iters, residual: st.grad.norm() });
            }
            iters += 1;
            let gy = u.transpose() * st.grad;
            let hy: Matrix2<f64> = u.transpose() * st.cov * u;
            let step = match Cholesky::new(hy) {
                Some(c) => c.solve(&(-gy)),
                None => -gy,
            };
            let r0 = st.grad.norm();
            let mut t = 1.0;
            loop {
                let trial = diag_moments(&octant, &(u * (y + step * t)), &target);
                let r = trial.grad.norm();
                if r.is_finite() && r <= (1.0 - 1e-4 * t) * r0 {
                    y += step * t;
                    st = trial;
                    break;
                }
                t *= 0.5;
                if t < 1e-12 {
                    return Err(Error::ConvergenceFailure { iterations: iters, residual: r0 });
                }
            }
        }

        let b = u * y;
        let value = b.dot(&target) - st.log_z;
        let bmat = frame * Matrix3::from_diagonal(&b) * frame.transpose();
        let multipliers = QTensor::from_matrix(&bmat)?;
        let hy: Matrix2<f64> = u.transpose() * st.cov * u;
        let spectral_hessian = hy.try_inverse().map(|hinv| u * hinv * u.transpose());
        Ok(SingularEval {
            value,
            grad: grad_from_multipliers(&multipliers),
            multipliers,
            log_z: st.log_z,
            newton_iters: iters,
            residual: st.grad.norm(),
            frame,
            spectral_hessian,
        })
    }

    fn solve_full(&self, q: &QTensor, guess: Option<&QTensor>) -> Result<SingularEval> {
        let basis = orthonormal_basis();
        let qm = q.matrix();
        let target = SVector::<f64, 5>::from_fn(|a, _| (basis[a] * qm).trace());
        let mut y = match guess {
            Some(b) => to_orthonormal(b),
            None => SVector::<f64, 5>::zeros(),
        };
        let mut st = self.full_moments(&y, &target, &basis);
        let mut iters = 0;
        while st.grad.norm() >= self.tol {
            if iters >= self.max_iters {
                return Err(Error::ConvergenceFailure { iterations: iters, residual: st.grad.norm() });
            }
            iters += 1;
            let step = match Cholesky::new(st.cov) {
                Some(c) => c.solve(&(-st.grad)),
                None => -st.grad,
            };
            let r0 = st.grad.norm();
            let mut t = 1.0;
            loop {
                let trial = self.full_moments(&(y + step * t), &target, &basis);
                let r = trial.grad.norm();
                if r.is_finite() && r <= (1.0 - 1e-4 * t) * r0 {
                    y += step * t;
                    st = trial;
                    break;
                }
                t *= 0.5;
                if t < 1e-12 {
                    return Err(Error::ConvergenceFailure { iterations: iters, residual: r0 });
                }
            }
        }
        let bmat = (0..5).fold(Matrix3::zeros(), |acc, a| acc + basis[a] * y[a]);
        let multipliers = QTensor::from_matrix(&bmat)?;
        let value = y.dot(&target) + bmat.trace() / 3.0 - st.log_z;
        Ok(SingularEval {
            value,
            grad: grad_from_multipliers(&multipliers),
            multipliers,
            log_z: st.log_z,
            newton_iters: iters,
            residual: st.grad.norm(),
            frame: Matrix3::identity(),
            spectral_hessian: None,
        })
    }

    fn full_moments(&self, y: &SVector<f64, 5>, target: &SVector<f64, 5>, basis: &[Matrix3<f64>; 5]) -> FullState {
        let feats: Vec<SVector<f64, 5>> = self
            .rule
            .nodes()
            .iter()
            .map(|p| {
                let v = Vector3::from(*p);
                SVector::<f64, 5>::from_fn(|a, _| v.dot(&(basis[a] * v)))
            })
            .collect();
        let expo: Vec<f64> = feats.iter().map(|f| f.dot(y)).collect();
        let shift = expo.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        let mut m1 = SVector::<f64, 5>::zeros();
        let mut m2 = SMatrix::<f64, 5, 5>::zeros();
        for ((f, e), w) in feats.iter().zip(&expo).zip(self.rule.weights()) {
            let e = w * (e - shift).exp();
            z += e;
            m1 += f * e;
            m2 += f * f.transpose() * e;
        }
        let m1 = m1 / z;
        let m2 = m2 / z;
        FullState { log_z: shift + z.ln(), grad: m1 - target, cov: m2 - m1 * m1.transpose() }
    }

    /// `∫ (p⊗p − I/3) ρ̂ dp` and `∫ ρ̂ ln ρ̂ dp` on the full rule placed in the
    /// solver's frame. Used to audit a returned evaluation independently of
    /// the folded rule the solve ran on.
    pub fn audit(&self, eval: &SingularEval) -> (QTensor, f64) {
        let b = eval.frame.transpose() * eval.multipliers.matrix() * eval.frame;
        let expo: Vec<f64> = self
            .rule
            .nodes()
            .iter()
            .map(|p| {
                let v = Vector3::from(*p);
                v.dot(&(b * v))
            })
            .collect();
        let shift = expo.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = expo.iter().zip(self.rule.weights()).map(|(e, w)| w * (e - shift).exp()).sum();
        let log_z = shift + z.ln();
        let mut m = Matrix3::zeros();
        let mut ent = 0.0;
        for ((p, e), w) in self.rule.nodes().iter().zip(&expo).zip(self.rule.weights()) {
            let v = Vector3::from(*p);
            let ln_rho = e - log_z;
            let rho = ln_rho.exp();
            m += v * v.transpose() * (w * rho);
            ent += w * rho * ln_rho;
        }
        let m = eval.frame * m * eval.frame.transpose() - Matrix3::identity() / 3.0;
        (QTensor::from_matrix(&m).unwrap_or(QTensor::ZERO), ent)
    }
}

/// Log-partition, moment mismatch and covariance of `p_k²` under
/// `exp(Σ b_k p_k²)`, on a folded rule.
fn diag_moments(octant: &SphereRule, b: &Vector3<f64>, target: &Vector3<f64>) -> DiagState {
    let shift = b.max();
    let mut z = 0.0;
    let mut m1 = Vector3::zeros();
    let mut m2 = Matrix3::zeros();
    for (p, w) in octant.nodes().iter().zip(octant.weights()) {
        let sq = Vector3::new(p[0] * p[0], p[1] * p[1], p[2] * p[2]);
        let e = w * (b.dot(&sq) - shift).exp();
        z += e;
        m1 += sq * e;
        m2 += sq * sq.transpose() * e;
    }
    let m1 = m1 / z;
    let m2 = m2 / z;
    DiagState { log_z: shift + z.ln(), grad: m1 - target, cov: m2 - m1 * m1.transpose() }
}

struct DiagState {
    log_z: f64,
    grad: Vector3<f64>,
    cov: Matrix3<f64>,
}

struct FullState {
    log_z: f64,
    grad: SVector<f64, 5>,
    cov: SMatrix<f64, 5, 5>,
}

/// Solves the dual problem with the eigenframe strategy.
pub fn solve_dual(q: &QTensor, rule: &SphereRule, tol: f64, max_iters: usize) -> Result<SingularEval> {
    MaierSaupe::new(rule.clone()).with_tolerance(tol, max_iters)?.solve(q)
}

/// `∂f_ms/∂z` of a converged evaluation.
pub fn grad_fms(eval: &SingularEval) -> [f64; 5] {
    eval.grad
}

/// Chain rule through `z ↦ Q`: `∂f/∂z_m = tr(B ∂Q/∂z_m)`.
pub fn grad_from_multipliers(b: &QTensor) -> [f64; 5] {
    let m = b.matrix();
    [m[(0, 0)] - m[(2, 2)], 2.0 * m[(0, 1)], 2.0 * m[(0, 2)], m[(1, 1)] - m[(2, 2)], 2.0 * m[(1, 2)]]
}

/// Frobenius-orthonormal basis of the traceless symmetric matrices.
pub fn orthonormal_basis() -> [Matrix3<f64>; 5] {
    let r2 = std::f64::consts::FRAC_1_SQRT_2;
    let r6 = 1.0 / 6f64.sqrt();
    [
        Matrix3::new(r2, 0.0, 0.0, 0.0, -r2, 0.0, 0.0, 0.0, 0.0),
        Matrix3::new(r6, 0.0, 0.0, 0.0, r6, 0.0, 0.0, 0.0, -2.0 * r6),
        Matrix3::new(0.0, r2, 0.0, r2, 0.0, 0.0, 0.0, 0.0, 0.0),
        Matrix3::new(0.0, 0.0, r2, 0.0, 0.0, 0.0, r2, 0.0, 0.0),
        Matrix3::new(0.0, 0.0, 0.0, 0.0, 0.0, r2, 0.0, r2, 0.0),
    ]
}

/// Coordinates of a tensor in [`orthonormal_basis`]; `|p| = |Q|_F`.
pub fn to_orthonormal(q: &QTensor) -> SVector<f64, 5> {
    let m = q.matrix();
    let basis = orthonormal_basis();
    SVector::<f64, 5>::from_fn(|a, _| (basis[a] * m).trace())
}

pub fn from_orthonormal(p: &[f64]) -> QTensor {
    let basis = orthonormal_basis();
    let m = (0..5).fold(Matrix3::zeros(), |acc, a| acc + basis[a] * p[a]);
    QTensor::from_matrix(&m).unwrap_or(QTensor::ZERO)
}

/// `κ` and the normalization `b0` of the bulk density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BulkParams {
    pub kappa: f64,
    pub b0: f64,
    /// Eigenvalues of the minimizer of `f_ms − κ|Q|²` found while computing `b0`.
    pub argmin: [f64; 3],
}

/// Minimizes `f_ms(Q) − κ|Q|²` over diagonal tensors and returns `b0` as
/// minus the minimum.
///
/// Both terms depend on `Q` only through its eigenvalues, so the search runs
/// over the eigenvalue triangle: a coarse scan followed by Newton refinement
/// on the analytic gradient.
pub fn compute_b0(kappa: f64, potential: &MaierSaupe) -> Result<BulkParams> {
    compute_b0_with_resolution(kappa, potential, 24)
}

pub fn compute_b0_with_resolution(kappa: f64, potential: &MaierSaupe, resolution: usize) -> Result<BulkParams> {
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(invalid(format!("kappa must be finite and >= 0, got {kappa}")));
    }
    if resolution < 4 {
        return Err(invalid("simplex scan resolution must be >= 4"));
    }
    let objective = |x: f64, y: f64| -> Option<(f64, [f64; 2])> {
        let q = QTensor::from_z([x, 0.0, 0.0, y, 0.0]).ok()?;
        let ev = potential.solve(&q).ok()?;
        let g = ev.grad;
        let val = ev.value - kappa * q.norm_sq();
        Some((val, [g[0] - kappa * (4.0 * x + 2.0 * y), g[3] - kappa * (4.0 * y + 2.0 * x)]))
    };

    // coarse scan on the sorted wedge λ1 <= λ2 <= λ3 written as (x, y) = (λ1, λ2)
    let scan_floor = 0.02;
    let mut best: Option<(f64, f64, f64)> = None;
    let n = resolution;
    for i in 0..=n {
        for j in 0..=n {
            let x = -1.0 / 3.0 + (i as f64 / n as f64);
            let y = -1.0 / 3.0 + (j as f64 / n as f64);
            let l3 = -x - y;
            if !(x <= y && y <= l3) {
                continue;
            }
            if (x + 1.0 / 3.0).min(2.0 / 3.0 - l3) < scan_floor {
                continue;
            }
            if let Some((v, _)) = objective(x, y) {
                if best.is_none_or(|b| v < b.0) {
                    best = Some((v, x, y));
                }
            }
        }
    }
    let (mut val, mut x, mut y) = best.ok_or_else(|| invalid("no admissible point in simplex scan"))?;

    let margin_of = |x: f64, y: f64| (x.min(y).min(-x - y) + 1.0 / 3.0).min(2.0 / 3.0 - x.max(y).max(-x - y));
    let delta = 1e-5;
    for _ in 0..100 {
        let (_, g) = objective(x, y).ok_or(Error::ConvergenceFailure { iterations: 0, residual: f64::NAN })?;
        let gnorm = (g[0] * g[0] + g[1] * g[1]).sqrt();
        if gnorm < 1e-11 {
            break;
        }
        let (_, gxp) = objective(x + delta, y).ok_or(Error::BoundaryMinimum { margin: margin_of(x, y) })?;
        let (_, gxm) = objective(x - delta, y).ok_or(Error::BoundaryMinimum { margin: margin_of(x, y) })?;
        let (_, gyp) = objective(x, y + delta).ok_or(Error::BoundaryMinimum { margin: margin_of(x, y) })?;
        let (_, gym) = objective(x, y - delta).ok_or(Error::BoundaryMinimum { margin: margin_of(x, y) })?;
        let hxy = 0.25 * ((gxp[1] - gxm[1]) + (gyp[0] - gym[0])) / delta;
        let h = Matrix2::new((gxp[0] - gxm[0]) / (2.0 * delta), hxy, hxy, (gyp[1] - gym[1]) / (2.0 * delta));
        let gv = Vector2::new(g[0], g[1]);
        let dir = match Cholesky::new(h) {
            Some(c) => c.solve(&(-gv)),
            None => -gv,
        };
        let mut t = 1.0;
        let mut moved = false;
        while t > 1e-12 {
            let (nx, ny) = (x + t * dir[0], y + t * dir[1]);
            if margin_of(nx, ny) > SOLVE_MARGIN_FLOOR {
                if let Some((nv, _)) = objective(nx, ny) {
                    if nv <= val + 1e-14 * val.abs().max(1.0) {
                        x = nx;
                        y = ny;
                        val = nv;
                        moved = true;
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let margin = margin_of(x, y);
    if margin < 1e-3 {
        return Err(Error::BoundaryMinimum { margin });
    }
    let mut argmin = [x, y, -x - y];
    argmin.sort_by(f64::total_cmp);
    Ok(BulkParams { kappa, b0: -val, argmin })
}

/// Bulk density `f_ms − κ|Q|² + b0` with its `z`-gradient.
#[derive(Debug, Clone)]
pub struct BulkModel {
    pub potential: MaierSaupe,
    pub params: BulkParams,
}

impl BulkModel {
    pub fn new(potential: MaierSaupe, kappa: f64) -> Result<Self> {
        let params = compute_b0(kappa, &potential)?;
        Ok(BulkModel { potential, params })
    }

    /// Default rule order, `b0` computed for `kappa`.
    pub fn with_kappa(kappa: f64) -> Result<Self> {
        BulkModel::new(MaierSaupe::with_order(DEFAULT_ORDER)?, kappa)
    }

    /// `+∞` at or beyond the solve floor and wherever the dual problem cannot
    /// be solved on the rule.
    pub fn density(&self, q: &QTensor) -> f64 {
        f_bulk(q, &self.params, &self.potential)
    }

    pub fn density_and_grad(&self, q: &QTensor) -> Result<(f64, [f64; 5])> {
        let ev = self.potential.solve(q)?;
        let kappa = self.params.kappa;
        let z = q.z();
        let mut g = ev.grad;
        for (m, gm) in g.iter_mut().enumerate() {
            let gz: f64 = (0..5).map(|n| GRAM[m][n] * z[n]).sum();
            *gm -= 2.0 * kappa * gz;
        }
        Ok((ev.value - kappa * q.norm_sq() + self.params.b0, g))
    }
}

/// `f_ms(Q) − κ|Q|² + b0` inside the physical set, `+∞` otherwise.
pub fn f_bulk(q: &QTensor, params: &BulkParams, potential: &MaierSaupe) -> f64 {
    match potential.solve(q) {
        Ok(ev) => ev.value - params.kappa * q.norm_sq() + params.b0,
        Err(_) => f64::INFINITY,
    }
}

/// A smooth convex potential on a bounded open convex set `K ⊂ Rᵐ` that blows
/// up at `∂K`, together with an optional concave quadratic offset `−κ|p|²`.
pub trait ConvexPotential: Sync {
    fn dim(&self) -> usize;
    /// Positive inside `K`, zero on `∂K`.
    fn margin(&self, p: &[f64]) -> f64;
    /// The convex part `f̃`; `+∞` outside `K`.
    fn value(&self, p: &[f64]) -> f64;
    fn gradient(&self, p: &[f64], out: &mut [f64]) -> Result<()>;
    fn kappa(&self) -> f64 {
        0.0
    }
    /// `f̃(p) − κ|p|²`.
    fn offset_value(&self, p: &[f64]) -> f64 {
        self.value(p) - self.kappa() * p.iter().map(|v| v * v).sum::<f64>()
    }
}

/// `K = (−1, 1)`, `f̃(p) = −ln(1 − p²)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LogBarrierInterval {
    pub kappa: f64,
}

impl ConvexPotential for LogBarrierInterval {
    fn dim(&self) -> usize {
        1
    }

    fn margin(&self, p: &[f64]) -> f64 {
        1.0 - p[0].abs()
    }

    fn value(&self, p: &[f64]) -> f64 {
        let s = 1.0 - p[0] * p[0];
        if s > 0.0 {
            -s.ln()
        } else {
            f64::INFINITY
        }
    }

    fn gradient(&self, p: &[f64], out: &mut [f64]) -> Result<()> {
        let s = 1.0 - p[0] * p[0];
        if !(s > 0.0) {
            return Err(Error::OutOfDomain { margin: self.margin(p) });
        }
        out[0] = 2.0 * p[0] / s;
        Ok(())
    }

    fn kappa(&self) -> f64 {
        self.kappa
    }
}

/// `f_ms` seen as a convex potential on the physical set, in coordinates of
/// an orthonormal basis of the traceless symmetric matrices.
#[derive(Debug, Clone)]
pub struct MaierSaupeConvex {
    pub potential: MaierSaupe,
    pub kappa: f64,
}

impl ConvexPotential for MaierSaupeConvex {
    fn dim(&self) -> usize {
        5
    }

    fn margin(&self, p: &[f64]) -> f64 {
        from_orthonormal(p).margin()
    }

    fn value(&self, p: &[f64]) -> f64 {
        self.potential.value(&from_orthonormal(p)).unwrap_or(f64::INFINITY)
    }

    fn gradient(&self, p: &[f64], out: &mut [f64]) -> Result<()> {
        let ev = self.potential.solve(&from_orthonormal(p))?;
        let g = to_orthonormal(&ev.multipliers);
        out.copy_from_slice(g.as_slice());
        Ok(())
    }

    fn kappa(&self) -> f64 {
        self.kappa
    }
}
