//! Physicality scans, local energy decay and Hölder estimates on fields.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::field::{central_gradient, NodeKind, QField};
use crate::par;
use crate::potential::BulkModel;

/// Number of histogram bins over `[0, 1/3]`, the range of the margin.
pub const HISTOGRAM_BINS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    StrictlyPhysical(f64),
    /// Nodes with margin at or below the tolerance, in row-major order.
    BoundaryTouching(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalityReport {
    pub min_margin: f64,
    pub argmin: usize,
    /// Counts per bin of width `1/(3·HISTOGRAM_BINS)`; margins below zero
    /// fall in the first bin.
    pub histogram: [usize; HISTOGRAM_BINS],
    pub verdict: Verdict,
}

/// Margin scan over every in-domain node; ties resolve to the first node in
/// row-major order.
pub fn physicality(field: &QField, tol: f64) -> PhysicalityReport {
    let g = field.grid();
    let margins = par::map_range(g.len(), |k| if g.in_domain(k) { Some(field.q(k).margin()) } else { None });
    let mut min_margin = f64::INFINITY;
    let mut argmin = 0;
    let mut histogram = [0; HISTOGRAM_BINS];
    let mut touching = Vec::new();
    for (k, m) in margins.iter().enumerate() {
        let Some(m) = *m else { continue };
        if m < min_margin {
            min_margin = m;
            argmin = k;
        }
        let bin = ((m * 3.0 * HISTOGRAM_BINS as f64).floor().max(0.0) as usize).min(HISTOGRAM_BINS - 1);
        histogram[bin] += 1;
        if m <= tol {
            touching.push(k);
        }
    }
    let verdict = if touching.is_empty() { Verdict::StrictlyPhysical(min_margin) } else { Verdict::BoundaryTouching(touching) };
    PhysicalityReport { min_margin, argmin, histogram, verdict }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MorreyReport {
    pub center: usize,
    pub radii: Vec<f64>,
    pub w: Vec<f64>,
    /// Half the least-squares slope of `log w` against `log ρ` over the
    /// radii used in the fit.
    pub fitted_sigma: f64,
    pub fit_r2: f64,
    /// Number of radii entering the fit.
    pub fit_count: usize,
}

/// Radii below this many grid spacings are left out of the fit.
pub const MORREY_MIN_RADIUS_CELLS: f64 = 8.0;
/// Subsamples per cell side when weighting nodes by disk coverage.
const COVERAGE_SUBSAMPLES: usize = 8;

/// Fraction of the cell `[x ± h/2]²` inside the disk.
fn coverage(p: [f64; 2], c: [f64; 2], r: f64, h: f64) -> f64 {
    let d = (p[0] - c[0]).hypot(p[1] - c[1]);
    let half_diag = h * std::f64::consts::FRAC_1_SQRT_2;
    if d + half_diag <= r {
        return 1.0;
    }
    if d - half_diag >= r {
        return 0.0;
    }
    let n = COVERAGE_SUBSAMPLES;
    let mut inside = 0;
    for a in 0..n {
        for b in 0..n {
            let x = p[0] - 0.5 * h + (a as f64 + 0.5) * h / n as f64;
            let y = p[1] - 0.5 * h + (b as f64 + 0.5) * h / n as f64;
            if (x - c[0]).hypot(y - c[1]) < r {
                inside += 1;
            }
        }
    }
    inside as f64 / (n * n) as f64
}

/// `w(ρ) = Σ_{B_ρ} (|∇Q|² + f_b) h²` around `center` for increasing radii,
/// nodes weighted by the fraction of their cell inside the disk.
pub fn morrey_scan(field: &QField, center: usize, radii: &[f64], bulk: Option<&BulkModel>) -> Result<MorreyReport> {
    let g = field.grid();
    if radii.windows(2).any(|w| !(w[1] > w[0])) || radii.iter().any(|r| !(*r > 0.0)) {
        return Err(invalid("radii must be positive and increasing"));
    }
    let h = g.h();
    let c = g.position(center);
    let rmax = radii.last().copied().unwrap_or(0.0);
    let reach = rmax + h;
    let nodes: Vec<usize> = (0..g.len())
        .filter(|&k| {
            let p = g.position(k);
            (p[0] - c[0]).hypot(p[1] - c[1]) < reach && coverage(p, c, rmax, h) > 0.0
        })
        .collect();
    if nodes.iter().any(|&k| g.kind(k) != NodeKind::Interior) {
        return Err(invalid("largest Morrey disk leaves the interior"));
    }
    let dens = par::try_map_range(nodes.len(), |i| -> Result<f64> {
        let k = nodes[i];
        let grad = central_gradient(field, k)?.norm_sq();
        let fb = bulk.map_or(0.0, |b| b.density(&field.q(k)));
        Ok(grad + fb)
    })?;
    let w: Vec<f64> = radii.iter().map(|&r| nodes.iter().zip(&dens).map(|(&k, d)| coverage(g.position(k), c, r, h) * d).sum::<f64>() * h * h).collect();
    let fit: Vec<(f64, f64)> = radii.iter().zip(&w).filter(|(r, w)| **r >= MORREY_MIN_RADIUS_CELLS * h && **w > 0.0).map(|(r, w)| (r.ln(), w.ln())).collect();
    if fit.len() < 4 {
        return Err(invalid(format!("need at least 4 radii >= {MORREY_MIN_RADIUS_CELLS}h with positive energy, got {}", fit.len())));
    }
    let (slope, r2) = linear_fit(&fit);
    Ok(MorreyReport { center, radii: radii.to_vec(), w, fitted_sigma: 0.5 * slope, fit_r2: r2, fit_count: fit.len() })
}

/// Least-squares slope and coefficient of determination.
pub fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    (slope, r2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderEstimate {
    pub sigmas: Vec<f64>,
    /// `max |Q(x) − Q(y)| / |x − y|^σ` over the pairs examined, per σ.
    pub seminorms: Vec<f64>,
    /// Slope of the largest increment against distance over dyadic offsets;
    /// the exponent where the seminorm stops being bounded under refinement.
    pub alpha: f64,
    pub pairs: usize,
    pub exhaustive: bool,
}

impl HolderEstimate {
    /// Seminorm at the candidate closest to `sigma`.
    pub fn seminorm_at(&self, sigma: f64) -> f64 {
        let i = self.sigmas.iter().enumerate().min_by(|a, b| (a.1 - sigma).abs().total_cmp(&(b.1 - sigma).abs())).map_or(0, |(i, _)| i);
        self.seminorms.get(i).copied().unwrap_or(f64::NAN)
    }
}

/// Pair counts up to which all pairs are examined.
pub const EXHAUSTIVE_LIMIT: usize = 20_000;
pub const SAMPLED_PAIRS: usize = 1_000_000;
const HOLDER_SEED: u64 = 0x5eed_401d;

fn frob_dist(a: &[f64; 5], b: &[f64; 5]) -> f64 {
    let d: Vec<f64> = (0..5).map(|m| a[m] - b[m]).collect();
    let mut s = 0.0;
    for m in 0..5 {
        for n in 0..5 {
            s += crate::tensor::GRAM[m][n] * d[m] * d[n];
        }
    }
    s.max(0.0).sqrt()
}

/// Pairwise Hölder quotients over `nodes`, plus a dyadic estimate of the
/// exponent.
pub fn holder_estimate(field: &QField, nodes: &[usize], sigmas: &[f64]) -> Result<HolderEstimate> {
    if nodes.len() < 2 {
        return Err(invalid("Hölder estimate needs at least two nodes"));
    }
    if sigmas.iter().any(|s| !(*s > 0.0 && *s <= 1.0)) {
        return Err(invalid("candidate exponents must lie in (0, 1]"));
    }
    let g = field.grid();
    let pos: Vec<[f64; 2]> = nodes.iter().map(|&k| g.position(k)).collect();
    let val: Vec<[f64; 5]> = nodes.iter().map(|&k| field.z(k)).collect();
    let quot = |i: usize, j: usize, out: &mut [f64]| {
        let d = (pos[i][0] - pos[j][0]).hypot(pos[i][1] - pos[j][1]);
        if d == 0.0 {
            return;
        }
        let dq = frob_dist(&val[i], &val[j]);
        let ld = d.ln();
        for (o, s) in out.iter_mut().zip(sigmas) {
            *o = o.max(dq * (-s * ld).exp());
        }
    };
    let n = nodes.len();
    let exhaustive = n <= EXHAUSTIVE_LIMIT;
    let (seminorms, pairs) = if exhaustive {
        let rows = par::map_range(n, |i| {
            let mut out = vec![0.0; sigmas.len()];
            for j in i + 1..n {
                quot(i, j, &mut out);
            }
            out
        });
        let mut best = vec![0.0f64; sigmas.len()];
        for r in rows {
            for (b, v) in best.iter_mut().zip(r) {
                *b = b.max(v);
            }
        }
        (best, n * (n - 1) / 2)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(HOLDER_SEED);
        let mut best = vec![0.0; sigmas.len()];
        for _ in 0..SAMPLED_PAIRS {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            quot(i, j, &mut best);
        }
        (best, SAMPLED_PAIRS)
    };
    let alpha = dyadic_exponent(field, nodes);
    Ok(HolderEstimate { sigmas: sigmas.to_vec(), seminorms, alpha, pairs, exhaustive })
}

/// Fits `log max|Q(x+2ʲe) − Q(x)|` against `log 2ʲh` over axis and diagonal
/// offsets `e` with both ends in `nodes`. Returns 1 for a constant field.
pub fn dyadic_exponent(field: &QField, nodes: &[usize]) -> f64 {
    let g = field.grid();
    let mut member = vec![false; g.len()];
    for &k in nodes {
        member[k] = true;
    }
    let mut pts = Vec::new();
    let mut step = 1i64;
    loop {
        let mut best: f64 = 0.0;
        let mut found = false;
        for &k in nodes {
            for (di, dj) in [(1, 0), (0, 1), (1, 1), (1, -1)] {
                if let Some(nb) = g.offset(k, di * step, dj * step) {
                    if member[nb] {
                        found = true;
                        best = best.max(frob_dist(&field.z(k), &field.z(nb)));
                    }
                }
            }
        }
        if !found {
            break;
        }
        if best > 0.0 {
            pts.push(((step as f64 * g.h()).ln(), best.ln()));
        }
        step *= 2;
    }
    // the largest offsets see too few pairs to be representative
    if pts.len() > 3 {
        pts.truncate(pts.len() - 1);
    }
    if pts.len() < 2 {
        return 1.0;
    }
    linear_fit(&pts).0
}

/// `c` in `seminorm = c·√(E + 1)/r^σ`.
pub fn holder_constant(seminorm: f64, radius: f64, sigma: f64, energy: f64) -> f64 {
    seminorm * radius.powf(sigma) / (energy + 1.0).sqrt()
}

/// Interior nodes within `radius` of a point.
pub fn nodes_within(field: &QField, center: [f64; 2], radius: f64) -> Vec<usize> {
    let g = field.grid();
    g.interior()
        .iter()
        .copied()
        .filter(|&k| {
            let p = g.position(k);
            (p[0] - center[0]).hypot(p[1] - center[1]) <= radius
        })
        .collect()
}

/// Node closest to a point.
pub fn nearest_node(field: &QField, p: [f64; 2]) -> usize {
    let g = field.grid();
    let o = g.origin();
    let i = (((p[0] - o[0]) / g.h()).round().max(0.0) as usize).min(g.nx() - 1);
    let j = (((p[1] - o[1]) / g.h()).round().max(0.0) as usize).min(g.ny() - 1);
    g.index(i, j)
}
