//! High-resolution constants: J_{r,d}, Q_r(P), the mismatch constant
//! Q_{r,s}(P) and the point density P_r ∝ f^{d/(d+r)}.

use serde::{Deserialize, Serialize};

use crate::distributions::{Density, TailClass};
use crate::error::{Error, Result};
use crate::integrate::{Improper, QuadConfig};
use crate::norm::Norm;
use crate::quantizer_nd::{mc_distortion, train_nd, Method, TrainConfig};

/// Exponent ϑ added to the moment order in the finiteness test.
pub const MOMENT_BUMP: f64 = 0.01;

/// Known value of J_{2,2} for the Euclidean norm (hexagonal lattice).
pub const J22_HEXAGONAL: f64 = 0.160_375_074_774_896_05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    Exact1d,
    ExternalReference,
    Estimated { std_error: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JConstant {
    pub value: f64,
    pub provenance: Provenance,
}

impl JConstant {
    /// (value − 2σ, value + 2σ) for estimates, a point interval otherwise.
    pub fn interval(&self) -> (f64, f64) {
        match self.provenance {
            Provenance::Estimated { std_error } => (self.value - 2.0 * std_error, self.value + 2.0 * std_error),
            _ => (self.value, self.value),
        }
    }
}

/// How J_{r,d} is obtained in dimension d ≥ 2.
#[derive(Debug, Clone, PartialEq)]
pub struct JOptions {
    pub norm: Norm,
    pub seed: u64,
    pub n_list: Vec<usize>,
    /// Training samples per codepoint.
    pub budget_per_point: usize,
    /// Monte-Carlo samples for each distortion estimate.
    pub eval_samples: usize,
    /// Return the lattice value for (r, d) = (2, 2), Euclidean.
    pub allow_external: bool,
}

impl Default for JOptions {
    fn default() -> Self {
        JOptions {
            norm: Norm::Euclidean,
            seed: 0,
            n_list: vec![64, 128, 256, 512, 1024],
            budget_per_point: 1000,
            eval_samples: 400_000,
            allow_external: false,
        }
    }
}

/// J_{r,d}: exact 1/(2^r(r+1)) in dimension one.
pub fn j_constant(r: f64, d: usize) -> Result<JConstant> {
    j_constant_with(r, d, &JOptions::default())
}

pub fn j_constant_with(r: f64, d: usize, opts: &JOptions) -> Result<JConstant> {
    if !(r > 0.0) || d == 0 {
        return Err(Error::invalid("J_{r,d} needs r > 0 and d >= 1"));
    }
    if d == 1 {
        return Ok(JConstant { value: 1.0 / (2f64.powf(r) * (r + 1.0)), provenance: Provenance::Exact1d });
    }
    if opts.allow_external && d == 2 && r == 2.0 && opts.norm == Norm::Euclidean {
        return Ok(JConstant { value: J22_HEXAGONAL, provenance: Provenance::ExternalReference });
    }
    estimate_j(r, d, opts)
}

/// Extrapolate n^{r/d}·e_{n,r}(U([0,1]^d))^r to n → ∞ with the model
/// J + c·n^{−1/d}.
fn estimate_j(r: f64, d: usize, opts: &JOptions) -> Result<JConstant> {
    if opts.n_list.is_empty() {
        return Err(Error::invalid("J estimation needs a non-empty n list"));
    }
    let cube = Density::uniform_box(d, 0.0, 1.0)?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut ses = Vec::new();
    for (i, &n) in opts.n_list.iter().enumerate() {
        let method = if r == 2.0 { Method::LloydMc } else { Method::Clvq };
        let cfg = TrainConfig {
            seed: opts.seed.wrapping_add(i as u64),
            budget: opts.budget_per_point * n,
            norm: opts.norm,
            ..TrainConfig::default()
        };
        let cb = train_nd(&cube, n, r, method, &cfg)?;
        let est = mc_distortion(&cb, &cube, r, opts.eval_samples, opts.seed.wrapping_add(1000 + i as u64))?;
        let f = (n as f64).powf(r / d as f64);
        xs.push((n as f64).powf(-1.0 / d as f64));
        ys.push(f * est.value);
        ses.push(f * est.std_error);
    }
    if xs.len() == 1 {
        return Ok(JConstant { value: ys[0], provenance: Provenance::Estimated { std_error: ses[0] } });
    }
    let fit = linear_fit(&xs, &ys);
    let mc = ses.iter().map(|s| s * s).sum::<f64>().sqrt() / (ses.len() as f64).sqrt();
    let std_error = (fit.intercept_se * fit.intercept_se + mc * mc).sqrt();
    Ok(JConstant { value: fit.intercept, provenance: Provenance::Estimated { std_error } })
}

/// Ordinary least squares y = a + b x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub intercept_se: f64,
    pub slope_se: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let (intercept_se, slope_se) = if x.len() > 2 {
        let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        let s2 = rss / (n - 2.0);
        ((s2 * (1.0 / n + mx * mx / sxx)).sqrt(), (s2 / sxx).sqrt())
    } else {
        (0.0, 0.0)
    };
    LinearFit { intercept, slope, intercept_se, slope_se }
}

// ---- finiteness ----------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FinitenessClass {
    FiniteByMoment,
    InfiniteSGeDPlusR,
    FiniteNumeric,
    InfiniteNumeric,
}

impl FinitenessClass {
    pub fn is_finite(&self) -> bool {
        matches!(self, FinitenessClass::FiniteByMoment | FinitenessClass::FiniteNumeric)
    }
}

/// Decide whether ∫_{f>0} f^{1−s/(d+r)} dλ_d is finite.
pub fn finiteness_class(density: &Density, r: f64, s: f64) -> Result<FinitenessClass> {
    check_rs(r, s)?;
    let d = density.dim() as f64;
    let unbounded = !density.support().is_bounded();
    if unbounded && s >= d + r {
        return Ok(FinitenessClass::InfiniteSGeDPlusR);
    }
    if s < d + r {
        let p = d * s / (d + r - s) + MOMENT_BUMP;
        let finite_moment = match density.tail_class() {
            TailClass::Compact | TailClass::Light => true,
            TailClass::PowerLaw { index } => p < index,
        };
        if finite_moment {
            return Ok(FinitenessClass::FiniteByMoment);
        }
    }
    let v = density.power_integral_any(1.0 - s / (d + r))?;
    Ok(if v.is_finite() { FinitenessClass::FiniteNumeric } else { FinitenessClass::InfiniteNumeric })
}

fn check_rs(r: f64, s: f64) -> Result<()> {
    if !(r > 0.0 && s > 0.0) {
        return Err(Error::invalid(format!("need r > 0 and s > 0 (got r={r}, s={s})")));
    }
    Ok(())
}

// ---- constants ------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticConstants {
    pub density: String,
    pub d: usize,
    pub r: f64,
    pub s: f64,
    pub j_r: JConstant,
    pub j_s: JConstant,
    /// ∫ f^{d/(d+r)} dλ_d
    pub point_integral: f64,
    /// ∫_{f>0} f^{1−s/(d+r)} dλ_d
    pub mismatch_integral: f64,
    /// Q_r(P) = J_{r,d}(∫f^{d/(d+r)})^{(d+r)/d}
    pub qr: f64,
    /// Q_s(P)
    pub qs: f64,
    /// Q_{r,s}(P) = J_{s,d}(∫f^{d/(d+r)})^{s/d}∫f^{1−s/(d+r)}; +∞ allowed.
    pub qrs: f64,
    /// Range of Q_{r,s} induced by the uncertainty of an estimated J_{s,d}.
    pub qrs_interval: Option<(f64, f64)>,
    pub finiteness: FinitenessClass,
}

/// Q_{r,s}(P); the special case s = r is Q_r(P).
pub fn q_rs(density: &Density, r: f64, s: f64) -> Result<f64> {
    Ok(constants(density, r, s)?.qrs)
}

pub fn q_r(density: &Density, r: f64) -> Result<f64> {
    q_rs(density, r, r)
}

pub fn constants(density: &Density, r: f64, s: f64) -> Result<AsymptoticConstants> {
    constants_with(density, r, s, &JOptions::default())
}

pub fn constants_with(density: &Density, r: f64, s: f64, opts: &JOptions) -> Result<AsymptoticConstants> {
    check_rs(r, s)?;
    let dim = density.dim();
    let d = dim as f64;
    if let TailClass::PowerLaw { index } = density.tail_class() {
        if index <= r {
            return Err(Error::invalid(format!("{density}: no finite moment of order > r = {r}")));
        }
    }
    let j_r = j_constant_with(r, dim, opts)?;
    let j_s = if s == r { j_r } else { j_constant_with(s, dim, opts)? };
    let point_integral = density.power_integral(d / (d + r))?;
    let point_integral_s = density.power_integral(d / (d + s))?;
    let finiteness = finiteness_class(density, r, s)?;
    let mismatch_integral = if finiteness == FinitenessClass::InfiniteSGeDPlusR {
        f64::INFINITY
    } else {
        density.power_integral_any(1.0 - s / (d + r))?
    };
    let qr = j_r.value * point_integral.powf((d + r) / d);
    let qs = j_s.value * point_integral_s.powf((d + s) / d);
    let factor = point_integral.powf(s / d) * mismatch_integral;
    let qrs = j_s.value * factor;
    let qrs_interval = match j_s.provenance {
        Provenance::Estimated { .. } => {
            let (lo, hi) = j_s.interval();
            Some((lo * factor, hi * factor))
        }
        _ => None,
    };
    Ok(AsymptoticConstants {
        density: density.id().to_string(),
        d: dim,
        r,
        s,
        j_r,
        j_s,
        point_integral,
        mismatch_integral,
        qr,
        qs,
        qrs,
        qrs_interval,
        finiteness,
    })
}

// ---- point density -----------------------------------------------------------------------

/// The normalised density f_r = f^{d/(d+r)}/∫f^{d/(d+r)} with its
/// distribution function in dimension one.
#[derive(Debug, Clone)]
pub struct PointDensity {
    density: Density,
    pub r: f64,
    pub theta: f64,
    /// ∫ f^θ dλ_d
    pub normalizer: f64,
    knots: Vec<f64>,
    /// ∫_{−∞}^{knots[i]} f^θ
    cum: Vec<f64>,
}

const KNOTS: usize = 256;

fn point_cfg() -> QuadConfig {
    QuadConfig { abs_tol: 1e-300, rel_tol: 1e-13, max_subdivisions: 2000 }
}

impl PointDensity {
    pub fn new(density: &Density, r: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::invalid("point density needs r > 0"));
        }
        let d = density.dim() as f64;
        let theta = d / (d + r);
        let normalizer = density.power_integral(theta)?;
        if !normalizer.is_finite() {
            return Err(Error::invalid(format!("{density}: ∫f^{theta} diverges, no point density")));
        }
        let mut pd = PointDensity { density: density.clone(), r, theta, normalizer, knots: Vec::new(), cum: Vec::new() };
        if density.dim() == 1 {
            pd.build_table();
        }
        Ok(pd)
    }

    fn g(&self, x: f64) -> f64 {
        let l = self.density.ln_pdf1(x);
        if l == f64::NEG_INFINITY {
            0.0
        } else {
            (self.theta * l).exp()
        }
    }

    fn piece(&self, a: f64, b: f64) -> f64 {
        let probe = a.is_infinite() || b.is_infinite();
        match self.density.integrate_over(|x| self.g(x), a, b, probe, &point_cfg()) {
            Improper::Finite(i) => i.value,
            Improper::Divergent => f64::INFINITY,
        }
    }

    fn build_table(&mut self) {
        let dens = &self.density;
        let (slo, shi) = dens.support().interval();
        let mut knots: Vec<f64> = (1..KNOTS).map(|i| dens.family.quantile1(i as f64 / KNOTS as f64)).collect();
        // extend outward: the tails of f^θ are heavier than those of f
        let spread = (knots[KNOTS - 2] - knots[0]).max(1e-12);
        let mut right = Vec::new();
        let mut x = knots[KNOTS - 2];
        let mut w = spread / KNOTS as f64;
        while shi.is_infinite() && right.len() < 80 {
            x += w;
            w *= 1.5;
            right.push(x);
            if self.piece(x, f64::INFINITY) <= 1e-16 * self.normalizer {
                break;
            }
        }
        let mut left = Vec::new();
        let mut x = knots[0];
        let mut w = spread / KNOTS as f64;
        while slo.is_infinite() && left.len() < 80 {
            x -= w;
            w *= 1.5;
            left.push(x);
            if self.piece(f64::NEG_INFINITY, x) <= 1e-16 * self.normalizer {
                break;
            }
        }
        left.reverse();
        let mut all = left;
        all.append(&mut knots);
        all.append(&mut right);
        all.dedup();
        let first = self.piece(f64::NEG_INFINITY, all[0]);
        let mut cum = vec![first];
        for w in all.windows(2) {
            let next = cum[cum.len() - 1] + self.piece(w[0], w[1]);
            cum.push(next);
        }
        self.knots = all;
        self.cum = cum;
    }

    /// f_r(x).
    pub fn pdf(&self, x: &[f64]) -> Result<f64> {
        let l = self.density.ln_pdf(x)?;
        Ok(if l == f64::NEG_INFINITY { 0.0 } else { (self.theta * l).exp() / self.normalizer })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if self.knots.is_empty() {
            return f64::NAN;
        }
        let k = &self.knots;
        if x <= k[0] {
            return self.piece(f64::NEG_INFINITY, x) / self.normalizer;
        }
        if x >= k[k.len() - 1] {
            return (1.0 - self.piece(x, f64::INFINITY) / self.normalizer).max(0.0);
        }
        let i = k.partition_point(|&v| v <= x) - 1;
        ((self.cum[i] + self.piece(k[i], x)) / self.normalizer).min(1.0)
    }

    /// Inverse of [`cdf`](Self::cdf), by safeguarded Newton iteration.
    pub fn quantile(&self, p: f64) -> f64 {
        let (slo, shi) = self.density.support().interval();
        if p <= 0.0 {
            return slo;
        }
        if p >= 1.0 {
            return shi;
        }
        let target = p * self.normalizer;
        let k = &self.knots;
        let last = self.cum.len() - 1;
        let (mut a, mut b, base, anchor) = if target < self.cum[0] {
            let mut lo = k[0] - 1.0;
            let mut w = 1.0;
            while self.piece(f64::NEG_INFINITY, lo) > target {
                w *= 2.0;
                lo = k[0] - w;
            }
            let base = self.piece(f64::NEG_INFINITY, lo);
            (lo.max(slo), k[0], base, lo.max(slo))
        } else if target >= self.cum[last] {
            let mut hi = k[last] + 1.0;
            let mut w = 1.0;
            while self.cum[last] + self.piece(k[last], hi) < target && hi < shi {
                w *= 2.0;
                hi = (k[last] + w).min(shi);
            }
            (k[last], hi, self.cum[last], k[last])
        } else {
            let i = self.cum.partition_point(|&c| c <= target) - 1;
            (k[i], k[i + 1], self.cum[i], k[i])
        };
        let resid = |x: f64| base + self.piece(anchor, x) - target;
        let width = b - a;
        let mut x = 0.5 * (a + b);
        for _ in 0..200 {
            let fx = resid(x);
            if fx == 0.0 {
                return x;
            }
            if fx < 0.0 {
                a = x;
            } else {
                b = x;
            }
            let gx = self.g(x);
            let step = if gx > 0.0 { fx / gx } else { f64::NAN };
            let nx = x - step;
            if nx.is_finite() && nx > a && nx < b {
                x = nx;
                if step.abs() <= 1e-15 * width.max(x.abs()) {
                    return x;
                }
            } else {
                x = 0.5 * (a + b);
            }
            if b - a <= 1e-15 * width {
                break;
            }
        }
        x
    }
}

#[cfg(test)]
mod tests;
