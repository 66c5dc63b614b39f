//! Product quadrature on the unit sphere: Gauss–Legendre in cos θ times the
//! periodic trapezoid rule in φ.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};

/// Smallest accepted order.
pub const MIN_ORDER: usize = 4;
/// Order used for potential evaluations unless configured otherwise.
pub const DEFAULT_ORDER: usize = 20;

/// Nodes and positive weights on S². Weights sum to 4π.
#[derive(Debug, Clone)]
pub struct SphereRule {
    order: usize,
    nodes: Vec<[f64; 3]>,
    weights: Vec<f64>,
    gl: Vec<(f64, f64)>,
}

impl SphereRule {
    /// `order` Gauss–Legendre points in cos θ × `2·order` uniform points in φ.
    ///
    /// Integrates spherical polynomials of degree up to `2·order − 1` exactly.
    pub fn new(order: usize) -> Result<Self> {
        if order < MIN_ORDER {
            return Err(invalid(format!("quadrature order must be >= {MIN_ORDER}, got {order}")));
        }
        let gl = gauss_legendre(order);
        let nphi = 2 * order;
        let wphi = 2.0 * PI / nphi as f64;
        let mut nodes = Vec::with_capacity(order * nphi);
        let mut weights = Vec::with_capacity(order * nphi);
        for &(x, w) in &gl {
            let st = (1.0 - x * x).max(0.0).sqrt();
            for j in 0..nphi {
                let phi = PI * j as f64 / order as f64;
                nodes.push([st * phi.cos(), st * phi.sin(), x]);
                weights.push(w * wphi);
            }
        }
        Ok(SphereRule { order, nodes, weights, gl })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[[f64; 3]] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ w_k f(p_k)`; a non-finite sample is reported with its node index.
    pub fn integrate<F: Fn([f64; 3]) -> f64>(&self, f: F) -> Result<f64> {
        let mut acc = 0.0;
        for (k, (p, w)) in self.nodes.iter().zip(&self.weights).enumerate() {
            let v = f(*p);
            if !v.is_finite() {
                return Err(Error::NumericOverflow { node: k });
            }
            acc += w * v;
        }
        Ok(acc)
    }

    /// The same rule restricted to the closed positive octant, with weights
    /// multiplied by the size of each node's sign-flip orbit.
    ///
    /// For integrands even in every coordinate this reproduces the full rule,
    /// using roughly an eighth of the nodes.
    pub fn folded_octant(&self) -> SphereRule {
        fold(self.order, &self.gl)
    }

    /// The folded rule of [`SphereRule::new`]`(order)` built without the full
    /// node set.
    pub fn octant(order: usize) -> Result<Self> {
        if order < MIN_ORDER {
            return Err(invalid(format!("quadrature order must be >= {MIN_ORDER}, got {order}")));
        }
        Ok(fold(order, &gauss_legendre(order)))
    }
}

fn fold(n: usize, gl: &[(f64, f64)]) -> SphereRule {
    let wphi = 2.0 * PI / (2 * n) as f64;
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for &(x, w) in gl {
        if x < 0.0 {
            continue;
        }
        let wx = if x == 0.0 { w } else { 2.0 * w };
        let st = (1.0 - x * x).max(0.0).sqrt();
        for j in 0..=n / 2 {
            let mult = if j == 0 || 2 * j == n { 2.0 } else { 4.0 };
            let phi = PI * j as f64 / n as f64;
            nodes.push([st * phi.cos().abs(), st * phi.sin().abs(), x]);
            weights.push(wx * wphi * mult);
        }
    }
    SphereRule { order: n, nodes, weights, gl: Vec::new() }
}

/// Builds a product rule; see [`SphereRule::new`].
pub fn build_rule(order: usize) -> Result<SphereRule> {
    SphereRule::new(order)
}

/// Gauss–Legendre nodes and weights on [−1, 1], ascending, exactly
/// antisymmetric nodes and symmetric weights.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = vec![(0.0, 0.0); n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..20 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-15 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out[n - 1 - i] = (x, w);
        out[i] = (-x, w);
    }
    if n % 2 == 1 {
        let (_, d) = legendre(n, 0.0);
        out[n / 2] = (0.0, 2.0 / (d * d));
    }
    out
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
