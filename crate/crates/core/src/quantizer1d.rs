//! Scalar L^r-optimal quantizers.
//!
//! [`lloyd1d`] solves the cell-wise stationarity equations
//! ∫_{V_k} sign(a_k − x)|a_k − x|^{r−1} f(x) dx = 0 by a damped Newton
//! iteration on the full system (its Jacobian is tridiagonal), falling back
//! to plain Lloyd sweeps whenever a Newton step fails to decrease the
//! distortion. Distortions are exact per-cell quadratures.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::PointDensity;
use crate::distributions::{Density, TailClass};
use crate::error::{Error, Result};
use crate::integrate::{integrate_improper, Improper, QuadConfig};
use crate::rng;

/// Provenance block stored with every codebook file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodebookMeta {
    #[serde(rename = "tool-version")]
    pub tool_version: String,
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
}

impl Default for CodebookMeta {
    fn default() -> Self {
        CodebookMeta { tool_version: crate::VERSION.to_string(), seed: None, iterations: None, converged: None }
    }
}

/// An ordered scalar quantizer α¹ < … < αⁿ with its cell probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook1D {
    pub density: String,
    pub r: f64,
    pub n: usize,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub residual: f64,
    pub meta: CodebookMeta,
}

impl Codebook1D {
    /// Build a codebook for `density`; weights are the exact Voronoi cell
    /// masses.
    pub fn new(points: Vec<f64>, density: &Density, r: f64) -> Result<Self> {
        require_1d(density)?;
        check_points(&points)?;
        let (lo, hi) = density.support().interval();
        if points.iter().any(|&p| p < lo || p > hi) {
            return Err(Error::InvalidCodebook(format!("points must lie in the support hull [{lo}, {hi}]")));
        }
        let weights = cell_masses(&points, density);
        let cb = Codebook1D {
            density: density.id().to_string(),
            r,
            n: points.len(),
            points,
            weights,
            residual: f64::NAN,
            meta: CodebookMeta::default(),
        };
        Ok(cb)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Voronoi boundaries: the n − 1 midpoints between consecutive points.
    pub fn boundaries(&self) -> Vec<f64> {
        self.points.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Index of the nearest point (ties go to the lower index).
    pub fn nearest(&self, x: f64) -> usize {
        let i = self.points.partition_point(|&p| p < x);
        if i == 0 {
            return 0;
        }
        if i == self.points.len() {
            return i - 1;
        }
        if x - self.points[i - 1] <= self.points[i] - x {
            i - 1
        } else {
            i
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_points(&self.points)?;
        if self.n != self.points.len() || self.weights.len() != self.points.len() {
            return Err(Error::InvalidCodebook("n, points and weights disagree in length".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidCodebook(format!("weights sum to {total}, expected 1")));
        }
        if let Some(w) = self.weights.iter().find(|&&w| !(w > 0.0)) {
            return Err(Error::InvalidCodebook(format!("cell weight {w} is not positive")));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cb: Codebook1D = serde_json::from_str(s)?;
        cb.validate()?;
        Ok(cb)
    }
}

fn check_points(points: &[f64]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::InvalidCodebook("codebook is empty".into()));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidCodebook("non-finite point".into()));
    }
    if points.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidCodebook("points must be strictly increasing".into()));
    }
    Ok(())
}

fn require_1d(density: &Density) -> Result<()> {
    if density.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: density.dim() });
    }
    Ok(())
}

fn cell_masses(points: &[f64], density: &Density) -> Vec<f64> {
    let n = points.len();
    let mut w = Vec::with_capacity(n);
    for k in 0..n {
        let lo = if k == 0 { f64::NEG_INFINITY } else { 0.5 * (points[k - 1] + points[k]) };
        let hi = if k + 1 == n { f64::INFINITY } else { 0.5 * (points[k] + points[k + 1]) };
        w.push(density.mass1(lo, hi));
    }
    // the cells partition the line; absorb rounding in the largest cell
    let total: f64 = w.iter().sum();
    let imax = (0..n).max_by(|&i, &j| w[i].total_cmp(&w[j])).unwrap_or(0);
    w[imax] += 1.0 - total;
    w
}

/// The grid {(2k − 1)/(2n)}, optimal for U([0,1]) in every L^r.
pub fn midpoint_grid(n: usize) -> Result<Codebook1D> {
    if n == 0 {
        return Err(Error::invalid("midpoint grid needs n >= 1"));
    }
    let points: Vec<f64> = (1..=n).map(|k| (2 * k - 1) as f64 / (2 * n) as f64).collect();
    Ok(Codebook1D {
        density: Density::uniform01().id().to_string(),
        r: 2.0,
        n,
        points,
        weights: vec![1.0 / n as f64; n],
        residual: 0.0,
        meta: CodebookMeta::default(),
    })
}

// ---- cell integrals -------------------------------------------------------------

fn cell_cfg() -> QuadConfig {
    QuadConfig { abs_tol: 1e-300, rel_tol: 1e-13, max_subdivisions: 400 }
}

/// ∫_lo^hi |x − a|^s f(x) dx with lo ≤ a ≤ hi; divergent outer tails give
/// `Improper::Divergent`.
fn cell_moment(density: &Density, a: f64, lo: f64, hi: f64, s: f64, cfg: &QuadConfig) -> Improper {
    if let Some((ulo, uhi)) = uniform_bounds(density) {
        let l = lo.max(ulo).min(a);
        let h = hi.min(uhi).max(a);
        let v = ((a - l).max(0.0).powf(s + 1.0) + (h - a).max(0.0).powf(s + 1.0)) / ((s + 1.0) * (uhi - ulo));
        return Improper::Finite(crate::integrate::Integral { value: v, abs_error: 0.0, converged: true, evaluations: 0 });
    }
    if let crate::distributions::Family::Normal { mu, sigma } = density.family {
        if s == 2.0 {
            let value = sigma * sigma * normal_quadratic_moment((a - mu) / sigma, (lo - mu) / sigma, (hi - mu) / sigma, density.mass1(lo, hi));
            return Improper::Finite(crate::integrate::Integral { value, abs_error: 0.0, converged: true, evaluations: 0 });
        }
    }
    let left = density.integrate_over(|x| (a - x).powf(s) * density.pdf1(x), lo, a, lo.is_infinite(), cfg);
    let right = density.integrate_over(|x| (x - a).powf(s) * density.pdf1(x), a, hi, hi.is_infinite(), cfg);
    match (left, right) {
        (Improper::Finite(mut l), Improper::Finite(r)) => {
            l.value += r.value;
            l.abs_error += r.abs_error;
            l.converged &= r.converged;
            Improper::Finite(l)
        }
        _ => Improper::Divergent,
    }
}

/// ∫_l^h (z − b)² φ(z) dz given the mass of [l, h].
fn normal_quadratic_moment(b: f64, l: f64, h: f64, mass: f64) -> f64 {
    let phi = crate::special::normal_pdf;
    let edge = |z: f64| if z.is_finite() { phi(z) } else { 0.0 };
    let lin = |z: f64| if z.is_finite() { (z - b) * phi(z) } else { 0.0 };
    ((1.0 + b * b) * mass + lin(l) - lin(h) - b * (edge(l) - edge(h))).max(0.0)
}

fn uniform_bounds(density: &Density) -> Option<(f64, f64)> {
    match density.family {
        crate::distributions::Family::Uniform { lo, hi } => Some((lo, hi)),
        _ => None,
    }
}

/// Signed stationarity integral G(a) = ∫_lo^hi sign(a − x)|a − x|^{r−1} f(x) dx.
fn stationarity_integral(density: &Density, a: f64, lo: f64, hi: f64, r: f64, cfg: &QuadConfig) -> f64 {
    if r == 1.0 {
        return density.mass1(lo, a) - density.mass1(a, hi);
    }
    if let Some((ulo, uhi)) = uniform_bounds(density) {
        let l = lo.max(ulo).min(a);
        let h = hi.min(uhi).max(a);
        return ((a - l).powf(r) - (h - a).powf(r)) / (r * (uhi - ulo));
    }
    if let (crate::distributions::Family::Normal { mu, sigma }, true) = (&density.family, r == 2.0) {
        let edge = |x: f64| if x.is_finite() { crate::special::normal_pdf((x - mu) / sigma) } else { 0.0 };
        return (a - mu) * density.mass1(lo, hi) - sigma * (edge(lo) - edge(hi));
    }
    let e = r - 1.0;
    let left = density.integrate_over(|x| (a - x).powf(e) * density.pdf1(x), lo, a, false, cfg).value();
    let right = density.integrate_over(|x| (x - a).powf(e) * density.pdf1(x), a, hi, false, cfg).value();
    left - right
}

/// dG/da with the cell fixed: (r − 1)∫|a − x|^{r−2} f, or 2f(a) when r = 1.
fn stationarity_slope(density: &Density, a: f64, lo: f64, hi: f64, r: f64, cfg: &QuadConfig) -> f64 {
    if r == 1.0 {
        return 2.0 * density.pdf1(a);
    }
    if let Some((ulo, uhi)) = uniform_bounds(density) {
        let l = lo.max(ulo).min(a);
        let h = hi.min(uhi).max(a);
        return ((a - l).powf(r - 1.0) + (h - a).powf(r - 1.0)) / (uhi - ulo);
    }
    if r == 2.0 {
        if let crate::distributions::Family::Normal { .. } = density.family {
            return density.mass1(lo, hi);
        }
    }
    let e = r - 1.0;
    if r >= 2.0 {
        let left = density.integrate_over(|x| e * (a - x).powf(e - 1.0) * density.pdf1(x), lo, a, false, cfg).value();
        let right = density.integrate_over(|x| e * (x - a).powf(e - 1.0) * density.pdf1(x), a, hi, false, cfg).value();
        return left + right;
    }
    // v = |a − x|^{r−1} removes the integrable singularity at x = a
    let inv = 1.0 / e;
    let side = |h: f64, dir: f64| {
        let vmax = if h.is_finite() { h.powf(e) } else { f64::INFINITY };
        integrate_improper(|v: f64| density.pdf1(a + dir * v.powf(inv)), 0.0, vmax, 0.0, density.scale().powf(e), false, cfg).value()
    };
    side(a - lo, -1.0) + side(hi - a, 1.0)
}

fn bounds(points: &[f64], k: usize) -> (f64, f64) {
    let n = points.len();
    let lo = if k == 0 { f64::NEG_INFINITY } else { 0.5 * (points[k - 1] + points[k]) };
    let hi = if k + 1 == n { f64::INFINITY } else { 0.5 * (points[k] + points[k + 1]) };
    (lo, hi)
}

/// Per-cell stationarity integrals of a point set.
fn residual_vector(density: &Density, points: &[f64], r: f64) -> Vec<f64> {
    let cfg = cell_cfg();
    (0..points.len())
        .into_par_iter()
        .map(|k| {
            let (lo, hi) = bounds(points, k);
            stationarity_integral(density, points[k], lo, hi, r, &cfg)
        })
        .collect()
}

fn distortion_of(density: &Density, points: &[f64], s: f64) -> f64 {
    let cfg = cell_cfg();
    let parts: Vec<f64> = (0..points.len())
        .into_par_iter()
        .map(|k| {
            let (lo, hi) = bounds(points, k);
            cell_moment(density, points[k], lo, hi, s, &cfg).value()
        })
        .collect();
    parts.iter().sum()
}

// ---- public evaluation ----------------------------------------------------------

/// ∫ min_k |x − α^k|^s f(x) dx; +∞ when an outer tail integral diverges.
pub fn distortion1d(codebook: &Codebook1D, density: &Density, s: f64) -> Result<f64> {
    require_1d(density)?;
    check_points(&codebook.points)?;
    if !(s > 0.0) {
        return Err(Error::invalid(format!("distortion exponent must be > 0 (got {s})")));
    }
    Ok(distortion_of(density, &codebook.points, s))
}

/// Per-cell stationarity integrals ∫_{V_k} sign(α^k − x)|α^k − x|^{r−1} dP.
pub fn stationarity_residual(codebook: &Codebook1D, density: &Density, r: f64) -> Result<Vec<f64>> {
    require_1d(density)?;
    check_points(&codebook.points)?;
    if r < 1.0 {
        return Err(Error::unsupported("stationarity residual needs r >= 1"));
    }
    Ok(residual_vector(density, &codebook.points, r))
}

/// max_k Δα^k / min_k Δα^k including the edge gaps α¹ − a and b − αⁿ.
pub fn cell_spread(codebook: &Codebook1D, a: f64, b: f64) -> Result<f64> {
    check_points(&codebook.points)?;
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::invalid("cell spread needs a compact interval a < b"));
    }
    let p = &codebook.points;
    if p[0] <= a || p[p.len() - 1] >= b {
        return Err(Error::invalid("codebook must lie inside (a, b)"));
    }
    let mut gaps = vec![p[0] - a];
    gaps.extend(p.windows(2).map(|w| w[1] - w[0]));
    gaps.push(b - p[p.len() - 1]);
    let max = gaps.iter().cloned().fold(f64::MIN, f64::max);
    let min = gaps.iter().cloned().fold(f64::MAX, f64::min);
    Ok(max / min)
}

// ---- Lloyd / Newton ---------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct LloydConfig {
    /// Stop once the largest point move falls below `tol` (in units of the
    /// law's scale).
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Number of starts; `None` picks 1 for log-concave laws and 5 otherwise.
    pub restarts: Option<usize>,
    pub newton: bool,
}

impl Default for LloydConfig {
    fn default() -> Self {
        LloydConfig { tol: 1e-10, max_iter: 100_000, seed: 0, restarts: None, newton: true }
    }
}

#[derive(Debug, Clone)]
pub struct LloydReport {
    pub codebook: Codebook1D,
    /// Final L^r distortion.
    pub distortion: f64,
    pub iterations: usize,
    pub converged: bool,
    /// L^r distortion after every iteration of the retained run.
    pub history: Vec<f64>,
    pub starts: usize,
}

/// L^r-stationary n-point quantizer of a 1-D law.
pub fn lloyd1d(density: &Density, n: usize, r: f64, cfg: &LloydConfig) -> Result<Codebook1D> {
    lloyd1d_report(density, n, r, cfg).map(|rep| rep.codebook)
}

pub fn lloyd1d_report(density: &Density, n: usize, r: f64, cfg: &LloydConfig) -> Result<LloydReport> {
    require_1d(density)?;
    if n == 0 {
        return Err(Error::invalid("n must be >= 1"));
    }
    if !(r >= 1.0) {
        return Err(Error::unsupported(format!("lloyd1d needs r >= 1 (got {r}); use the stochastic quantizer for r < 1")));
    }
    if let TailClass::PowerLaw { index } = density.tail_class() {
        if index <= r {
            return Err(Error::invalid(format!(
                "{density} has no finite moment of order > r = {r} (tail index {index})"
            )));
        }
    }
    let pd = PointDensity::new(density, r)?;
    let starts = cfg.restarts.unwrap_or(if density.is_log_concave() { 1 } else { 5 }).max(1);
    let mut best: Option<LloydReport> = None;
    let mut rng = rng::seeded(cfg.seed);
    for start in 0..starts {
        let levels: Vec<f64> = if start == 0 {
            (1..=n).map(|k| (2 * k - 1) as f64 / (2 * n) as f64).collect()
        } else {
            let mut u: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            u.sort_by(f64::total_cmp);
            u
        };
        let mut init: Vec<f64> = levels.iter().map(|&p| pd.quantile(p)).collect();
        make_strictly_increasing(&mut init, density);
        let rep = run(density, init, r, cfg)?;
        if best.as_ref().is_none_or(|b| rep.distortion < b.distortion) {
            best = Some(rep);
        }
    }
    let mut rep = best.expect("at least one start");
    rep.starts = starts;
    rep.codebook.meta.seed = Some(cfg.seed);
    Ok(rep)
}

fn make_strictly_increasing(p: &mut [f64], density: &Density) {
    let (lo, hi) = density.support().interval();
    for i in 0..p.len() {
        p[i] = p[i].clamp(lo, hi);
        if i > 0 && p[i] <= p[i - 1] {
            p[i] = p[i - 1] + 1e-9 * density.scale().max(p[i - 1].abs());
        }
    }
}

fn inside_hull(p: &[f64], density: &Density) -> bool {
    let (lo, hi) = density.support().interval();
    p.iter().all(|x| x.is_finite() && *x > lo && *x < hi) && p.windows(2).all(|w| w[0] < w[1])
}

fn run(density: &Density, mut a: Vec<f64>, r: f64, cfg: &LloydConfig) -> Result<LloydReport> {
    let scale = density.scale().max(1e-300);
    let mut dist = distortion_of(density, &a, r);
    let mut history = vec![dist];
    let mut converged = false;
    let mut iterations = 0;
    let mut g = residual_vector(density, &a, r);
    while iterations < cfg.max_iter {
        iterations += 1;
        let res = max_abs(&g);
        let mut step: Option<(Vec<f64>, f64, Vec<f64>)> = None;
        if cfg.newton && a.len() > 1 {
            step = newton_step(density, &a, &g, r, dist, res);
        }
        let polished = step.is_some();
        let (next, next_dist, next_g) = match step {
            Some(s) => s,
            None => {
                let next = lloyd_sweep(density, &a, r);
                let d = distortion_of(density, &next, r);
                let gn = residual_vector(density, &next, r);
                (next, d, gn)
            }
        };
        let moved = a.iter().zip(&next).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        // keep the distortion sequence monotone: a sweep that can no longer
        // improve (rounding level) ends the iteration
        if next_dist > dist * (1.0 + 1e-14) && moved < 1e3 * cfg.tol * scale {
            if polished && max_abs(&next_g) < 0.5 * res {
                a = next;
                dist = next_dist;
                g = next_g;
                history.push(dist);
            }
            converged = true;
            break;
        }
        a = next;
        dist = next_dist;
        g = next_g;
        history.push(dist);
        if moved < cfg.tol * scale {
            converged = true;
            break;
        }
    }
    let mut cb = Codebook1D::new(a, density, r)?;
    cb.residual = max_abs(&g);
    cb.meta.iterations = Some(iterations);
    cb.meta.converged = Some(converged);
    Ok(LloydReport { codebook: cb, distortion: dist, iterations, converged, history, starts: 1 })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// One damped Newton step on the full stationarity system. Returns `None`
/// when no step length decreases the distortion.
fn newton_step(density: &Density, a: &[f64], g: &[f64], r: f64, dist: f64, res: f64) -> Option<(Vec<f64>, f64, Vec<f64>)> {
    let n = a.len();
    let cfg = cell_cfg();
    let e = r - 1.0;
    let mids: Vec<f64> = a.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    // coupling through boundary k (between cells k and k+1)
    let coupling: Vec<f64> = mids
        .iter()
        .enumerate()
        .map(|(k, &m)| {
            let h = m - a[k];
            0.5 * if r == 1.0 { 1.0 } else { h.powf(e) } * density.pdf1(m)
        })
        .collect();
    let slopes: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|k| {
            let (lo, hi) = bounds(a, k);
            stationarity_slope(density, a[k], lo, hi, r, &cfg)
        })
        .collect();
    let mut diag = vec![0.0; n];
    for k in 0..n {
        diag[k] = slopes[k] - if k > 0 { coupling[k - 1] } else { 0.0 } - if k + 1 < n { coupling[k] } else { 0.0 };
    }
    let off: Vec<f64> = coupling.iter().map(|c| -c).collect();
    let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
    let delta = solve_tridiagonal(&diag, &off, &rhs)?;
    let polish = res < 1e-8 * density.scale().powf(r);
    let mut t = 1.0;
    for _ in 0..30 {
        let cand: Vec<f64> = a.iter().zip(&delta).map(|(x, d)| x + t * d).collect();
        if inside_hull(&cand, density) {
            let d = distortion_of(density, &cand, r);
            let slack = if polish { 1e-12 } else { 1e-14 };
            if d <= dist * (1.0 + slack) {
                let gn = residual_vector(density, &cand, r);
                let gres = max_abs(&gn);
                if d < dist || gres < 0.99 * res && (d <= dist * (1.0 + 1e-14) || gres < 0.5 * res) {
                    return Some((cand, d, gn));
                }
            }
        }
        t *= 0.5;
    }
    None
}

/// Symmetric tridiagonal solve (Thomas algorithm).
fn solve_tridiagonal(diag: &[f64], off: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if denom.abs() < 1e-300 || !denom.is_finite() {
        return None;
    }
    c[0] = if n > 1 { off[0] / denom } else { 0.0 };
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - off[i - 1] * c[i - 1];
        if denom.abs() < 1e-300 || !denom.is_finite() {
            return None;
        }
        c[i] = if i + 1 < n { off[i] / denom } else { 0.0 };
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Lloyd sweep: each point moves to the root of its cell's stationarity
/// equation with the current Voronoi boundaries held fixed.
fn lloyd_sweep(density: &Density, a: &[f64], r: f64) -> Vec<f64> {
    let cfg = cell_cfg();
    (0..a.len())
        .into_par_iter()
        .map(|k| {
            let (lo, hi) = bounds(a, k);
            cell_root(density, a[k], lo, hi, r, &cfg)
        })
        .collect()
}

/// Root of G(x) = 0 on the cell [lo, hi]; G is nondecreasing in x.
fn cell_root(density: &Density, start: f64, lo: f64, hi: f64, r: f64, cfg: &QuadConfig) -> f64 {
    let (slo, shi) = density.support().interval();
    let g = |x: f64| stationarity_integral(density, x, lo, hi, r, cfg);
    let mut a = lo.max(slo);
    let mut b = hi.min(shi);
    let scale = density.scale();
    if !a.is_finite() {
        let mut w = scale;
        a = start - w;
        while g(a) > 0.0 {
            w *= 2.0;
            a = start - w;
        }
    }
    if !b.is_finite() {
        let mut w = scale;
        b = start + w;
        while g(b) < 0.0 {
            w *= 2.0;
            b = start + w;
        }
    }
    let width = b - a;
    let mut x = start.clamp(a, b);
    for _ in 0..200 {
        let gx = g(x);
        if gx == 0.0 {
            return x;
        }
        if gx < 0.0 {
            a = x;
        } else {
            b = x;
        }
        let step = gx / stationarity_slope(density, x, lo, hi, r, cfg);
        let newton = x - step;
        if newton.is_finite() && newton >= a && newton <= b {
            if step.abs() <= 1e-14 * width {
                return newton;
            }
            x = newton;
        } else {
            x = 0.5 * (a + b);
        }
        if b - a <= 1e-15 * width {
            break;
        }
    }
    x
}
