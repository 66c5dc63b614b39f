//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Adaptive Simpson quadrature of `f` on `[a, b]` to relative tolerance `rtol`.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rtol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let coarse: f64 = (0..=64).map(|k| f(a + (b - a) * k as f64 / 64.0).abs()).sum::<f64>() * (b - a) / 65.0;
    rec(f, a, b, fa, fm, fb, whole, rtol * coarse.max(f64::MIN_POSITIVE), 40)
}

/// Axisymmetric reduction of the dual problem for `Q = s(e3⊗e3 − I/3)`:
/// the density is `∝ exp(b t²)` with `t = p·e3`, and `b` is found by
/// bisection on `⟨t²⟩ = (2s + 1)/3`. Returns `(b, f_ms)`.
pub fn uniaxial_oracle(s: f64) -> (f64, f64) {
    let target = (2.0 * s + 1.0) / 3.0;
    let moments = |b: f64| {
        let shift = b.max(0.0);
        let z = simpson(&|t: f64| (b * t * t - shift).exp(), 0.0, 1.0, 1e-13);
        let m = simpson(&|t: f64| t * t * (b * t * t - shift).exp(), 0.0, 1.0, 1e-13) / z;
        (m, shift + (4.0 * PI * z).ln())
    };
    let (mut lo, mut hi) = (-1e3, 1e6);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if moments(mid).0 < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi.abs().max(1.0) {
            break;
        }
    }
    let b = 0.5 * (lo + hi);
    let (m, log_z) = moments(b);
    (b, b * m - log_z)
}
