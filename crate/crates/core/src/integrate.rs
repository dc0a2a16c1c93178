//! Adaptive Gauss-Kronrod (G7/K15) integration with divergence detection
//! for improper integrals.
//!
//! Finite intervals go through a classic QUADPACK-style bisection driven by
//! the largest local error estimate. Infinite ends and endpoints carrying a
//! possible singularity are handled by summing a sequence of pieces that
//! grow geometrically (outward doubling, or dyadic shrinking toward a finite
//! end); the decay of those pieces decides convergence.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            abs_tol: 1e-10,
            rel_tol: 1e-12,
            max_subdivisions: 10_000,
        }
    }
}

impl QuadConfig {
    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    /// Tight settings used for per-cell distortion integrals.
    pub fn tight() -> Self {
        QuadConfig {
            abs_tol: 1e-16,
            rel_tol: 1e-13,
            max_subdivisions: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
    pub converged: bool,
    pub evaluations: usize,
}

impl Integral {
    fn zero() -> Self {
        Integral {
            value: 0.0,
            abs_error: 0.0,
            converged: true,
            evaluations: 0,
        }
    }

    fn add(&mut self, other: &Integral) {
        self.value += other.value;
        self.abs_error += other.abs_error;
        self.converged &= other.converged;
        self.evaluations += other.evaluations;
    }
}

/// Outcome of an improper integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Improper {
    Finite(Integral),
    Divergent,
}

impl Improper {
    pub fn value(&self) -> f64 {
        match self {
            Improper::Finite(i) => i.value,
            Improper::Divergent => f64::INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Improper::Finite(_))
    }
}

/// One G7/K15 panel: returns (kronrod value, error estimate).
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = res_k * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Adaptive integration over a finite interval.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadConfig) -> Integral {
    if a == b {
        return Integral::zero();
    }
    if a > b {
        let mut r = integrate(f, b, a, cfg);
        r.value = -r.value;
        return r;
    }
    let (v, e) = gk15(&f, a, b);
    let mut evaluations = 15;
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value: v, err: e });
    let mut total = v;
    let mut total_err = e;
    let mut splits = 0;
    loop {
        let tol = cfg.abs_tol.max(cfg.rel_tol * total.abs());
        if total_err <= tol {
            return Integral {
                value: total,
                abs_error: total_err,
                converged: true,
                evaluations,
            };
        }
        if splits >= cfg.max_subdivisions || !total.is_finite() {
            break;
        }
        let worst = heap.pop().expect("heap never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval can no longer be split in floating point
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        evaluations += 30;
        splits += 1;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        heap.push(Panel { a: worst.a, b: mid, value: v1, err: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, err: e2 });
    }
    // recompute the sum from scratch to drop accumulated cancellation
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let abs_error: f64 = heap.iter().map(|p| p.err).sum();
    let tol = cfg.abs_tol.max(cfg.rel_tol * value.abs());
    Integral {
        value,
        abs_error,
        converged: abs_error <= tol && value.is_finite(),
        evaluations,
    }
}

/// Minimum number of pieces summed before a series may stop early.
const MIN_PIECES: usize = 6;
/// Maximum number of outward doublings for an infinite end.
const MAX_OUTWARD: usize = 90;
/// Maximum number of dyadic pieces toward a finite end.
const MAX_INWARD: usize = 64;
/// Ratio of successive pieces at or above which a series is declared
/// divergent.
pub const DIVERGENCE_RATIO: f64 = 0.98;

fn sum_pieces<P: FnMut(usize) -> Integral>(mut piece: P, max_pieces: usize, cfg: &QuadConfig) -> Improper {
    let mut total = Integral::zero();
    let mut prev = f64::NAN;
    let mut last = f64::NAN;
    let mut negligible_run = 0;
    for k in 0..max_pieces {
        let p = piece(k);
        if !p.value.is_finite() {
            return Improper::Divergent;
        }
        total.add(&p);
        prev = last;
        last = p.value.abs();
        let small = last <= 1e-17 * total.value.abs() + 1e-3 * cfg.abs_tol.min(1e-12);
        negligible_run = if small { negligible_run + 1 } else { 0 };
        if k + 1 >= MIN_PIECES && negligible_run >= 2 {
            return Improper::Finite(total);
        }
    }
    let ratio = last / prev;
    if ratio.is_finite() && ratio < DIVERGENCE_RATIO {
        let remainder = last * ratio / (1.0 - ratio);
        total.value += remainder.copysign(total.value);
        total.abs_error += remainder;
        Improper::Finite(total)
    } else {
        Improper::Divergent
    }
}

/// ∫_center^∞ g by outward doubling pieces of initial width `scale`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(g: &F, center: f64, scale: f64, cfg: &QuadConfig) -> Improper {
    sum_pieces(
        |k| {
            let lo = center + scale * ((1u128 << k) as f64 - 1.0);
            let hi = center + scale * ((1u128 << (k + 1)) as f64 - 1.0);
            integrate(g, lo, hi, cfg)
        },
        MAX_OUTWARD,
        cfg,
    )
}

/// ∫_{-∞}^center g by outward doubling pieces of initial width `scale`.
pub fn integrate_from_neg_infinity<F: Fn(f64) -> f64>(
    g: &F,
    center: f64,
    scale: f64,
    cfg: &QuadConfig,
) -> Improper {
    sum_pieces(
        |k| {
            let hi = center - scale * ((1u128 << k) as f64 - 1.0);
            let lo = center - scale * ((1u128 << (k + 1)) as f64 - 1.0);
            integrate(g, lo, hi, cfg)
        },
        MAX_OUTWARD,
        cfg,
    )
}

/// ∫ over [end, start] (or [start, end]) by dyadic pieces shrinking toward
/// the finite `end`, which may carry a singularity.
pub fn integrate_toward_endpoint<F: Fn(f64) -> f64>(g: &F, start: f64, end: f64, cfg: &QuadConfig) -> Improper {
    let width = end - start;
    sum_pieces(
        |k| {
            let x0 = start + width * (1.0 - 0.5f64.powi(k as i32));
            let x1 = start + width * (1.0 - 0.5f64.powi(k as i32 + 1));
            integrate(g, x0, x1, cfg)
        },
        MAX_INWARD,
        cfg,
    )
}

/// Integrate `g` over `[a, b]` (either end may be infinite). Finite ends
/// listed in `probe_ends` are approached dyadically so that non-integrable
/// endpoint singularities are reported as divergence. `center` must lie in
/// `[a, b]`; `scale` sets the width of the first outward piece.
pub fn integrate_improper<F: Fn(f64) -> f64>(
    g: F,
    a: f64,
    b: f64,
    center: f64,
    scale: f64,
    probe_ends: bool,
    cfg: &QuadConfig,
) -> Improper {
    if a >= b {
        return Improper::Finite(Integral::zero());
    }
    let c = center.clamp(a, b);
    let c = if c.is_finite() {
        c
    } else if a.is_finite() {
        a
    } else if b.is_finite() {
        b
    } else {
        0.0
    };
    let mut total = Integral::zero();
    let left = if a == c {
        Improper::Finite(Integral::zero())
    } else if a.is_infinite() {
        integrate_from_neg_infinity(&g, c, scale, cfg)
    } else if probe_ends {
        integrate_toward_endpoint(&g, c, a, cfg).negated()
    } else {
        Improper::Finite(integrate(&g, a, c, cfg))
    };
    let right = if b == c {
        Improper::Finite(Integral::zero())
    } else if b.is_infinite() {
        integrate_to_infinity(&g, c, scale, cfg)
    } else if probe_ends {
        integrate_toward_endpoint(&g, c, b, cfg)
    } else {
        Improper::Finite(integrate(&g, c, b, cfg))
    };
    match (left, right) {
        (Improper::Finite(l), Improper::Finite(r)) => {
            total.add(&l);
            total.add(&r);
            Improper::Finite(total)
        }
        _ => Improper::Divergent,
    }
}

impl Improper {
    fn negated(self) -> Self {
        match self {
            Improper::Finite(i) => Improper::Finite(Integral { value: -i.value, ..i }),
            d => d,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, &QuadConfig::default());
        assert!((r.value - 0.0).abs() < 1e-14);
        let r = integrate(|x| x.powi(6), -1.0, 1.0, &QuadConfig::default());
        assert!((r.value - 2.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn reversed_interval_negates() {
        let cfg = QuadConfig::default();
        let a = integrate(f64::exp, 0.0, 1.0, &cfg).value;
        let b = integrate(f64::exp, 1.0, 0.0, &cfg).value;
        assert_eq!(a, -b);
        assert!((a - (std::f64::consts::E - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn endpoint_singularity_integrable() {
        // ∫_0^1 x^{-1/2} = 2
        let r = integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, &QuadConfig::default());
        assert!(r.converged);
        assert!((r.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn gaussian_whole_line() {
        let cfg = QuadConfig::default();
        let g = |x: f64| (-0.5 * x * x).exp();
        let r = integrate_improper(g, f64::NEG_INFINITY, f64::INFINITY, 0.0, 1.0, false, &cfg);
        let want = (2.0 * std::f64::consts::PI).sqrt();
        assert!((r.value() - want).abs() < 1e-10);
    }

    #[test]
    fn power_tails() {
        let cfg = QuadConfig::default();
        // ∫_1^∞ x^{-2} = 1
        let r = integrate_improper(|x: f64| x.powi(-2), 1.0, f64::INFINITY, 1.0, 1.0, false, &cfg);
        assert!((r.value() - 1.0).abs() < 1e-8, "{r:?}");
        // ∫_1^∞ x^{-0.8} diverges
        let r = integrate_improper(|x: f64| x.powf(-0.8), 1.0, f64::INFINITY, 1.0, 1.0, false, &cfg);
        assert_eq!(r, Improper::Divergent);
        // ∫_1^∞ x^{-1} diverges (borderline)
        let r = integrate_improper(|x: f64| 1.0 / x, 1.0, f64::INFINITY, 1.0, 1.0, false, &cfg);
        assert_eq!(r, Improper::Divergent);
        // growing exponential diverges
        let r = integrate_improper(|x: f64| (0.004 * x * x).exp() * (-x.abs()).exp(), 0.0, f64::INFINITY, 0.0, 1.0, false, &cfg);
        assert_eq!(r, Improper::Divergent);
    }

    #[test]
    fn endpoint_probe() {
        let cfg = QuadConfig::default();
        let r = integrate_improper(|x: f64| 1.0 / x, 0.0, 1.0, 0.5, 1.0, true, &cfg);
        assert_eq!(r, Improper::Divergent);
        let r = integrate_improper(|x: f64| x.powf(-0.5), 0.0, 1.0, 0.5, 1.0, true, &cfg);
        assert!((r.value() - 2.0).abs() < 1e-8, "{r:?}");
    }
}
