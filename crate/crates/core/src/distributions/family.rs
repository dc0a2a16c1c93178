use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Gamma as GammaDist, Poisson, StandardNormal};

use super::{Density, GrowthControl, ProfileNorm, RadialProfile, Stable, Support, TailClass, TailCriterion};
use crate::error::{Error, Result};
use crate::special::{gamma_lr, gamma_ur, ln_gamma, normal_cdf, normal_quantile, normal_sf, unit_sphere_area};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone)]
pub(crate) enum Family {
    Uniform { lo: f64, hi: f64 },
    Linear { lo: f64, hi: f64, c0: f64, c1: f64, z: f64 },
    Normal { mu: f64, sigma: f64 },
    Gamma { rate: f64, shape: f64 },
    DoubleGamma { rate: f64, shape: f64 },
    Weibull { shape: f64 },
    LogNormal { mu: f64, sigma: f64 },
    Logistic,
    Pareto { b: f64 },
    PoissonComb { lambda: f64, growth: GrowthControl },
    Stable(Stable),
    HyperExp { d: usize, a: f64, b: f64, c: f64, ln_k: f64 },
    NormalNd { d: usize, chol: Vec<f64>, inv_chol: Vec<f64>, ln_det_chol: f64, sigma: f64 },
    UniformBox { lo: Vec<f64>, hi: Vec<f64> },
}

pub(crate) fn normal_nd(d: usize, sigma: f64, rho: f64) -> Result<Density> {
    if d == 0 || !(sigma > 0.0) {
        return Err(Error::invalid("normal: need d >= 1 and sigma > 0"));
    }
    if d == 1 {
        return Density::normal(0.0, sigma);
    }
    let lower = -1.0 / (d as f64 - 1.0);
    if !(rho > lower && rho < 1.0) {
        return Err(Error::invalid(format!("normal: rho must lie in ({lower}, 1) for a positive definite covariance")));
    }
    let mut cov = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            cov[i * d + j] = sigma * sigma * if i == j { 1.0 } else { rho };
        }
    }
    let chol = cholesky(&cov, d)?;
    let inv_chol = invert_lower(&chol, d);
    let ln_det_chol = (0..d).map(|i| chol[i * d + i].ln()).sum();
    Ok(Density::from_family(
        format!("normal(d={d},sigma={sigma},rho={rho})"),
        Family::NormalNd { d, chol, inv_chol, ln_det_chol, sigma },
    ))
}

pub(crate) fn hyper_exponential(d: usize, a: f64, b: f64, c: f64) -> Result<Density> {
    if d == 0 || !(a > 0.0 && b > 0.0) || !(c > -(d as f64)) {
        return Err(Error::invalid("hyperexp: need d >= 1, a > 0, b > 0, c > -d"));
    }
    let k = (c + d as f64) / b;
    let ln_k = b.ln() + k * a.ln() - unit_sphere_area(d).ln() - ln_gamma(k);
    Ok(Density::from_family(format!("hyperexp(d={d},a={a},b={b},c={c})"), Family::HyperExp { d, a, b, c, ln_k }))
}

pub(crate) fn poisson_comb(lambda: f64) -> Result<Density> {
    if !(lambda > 1.0) {
        return Err(Error::invalid("poissoncomb: lambda must be > 1"));
    }
    let epsilon = 0.1;
    let eta = 0.05;
    let m = ((1.0 + eta) * lambda.floor() + 1.0).ceil();
    let ln_ratio = growth_ratio_min(lambda, epsilon, eta, m);
    let growth = GrowthControl { epsilon, eta, m, c: ln_ratio.exp() };
    Ok(Density::from_family(format!("poissoncomb(lambda={lambda})"), Family::PoissonComb { lambda, growth }))
}

fn ln_poisson(lambda: f64, k: f64) -> f64 {
    -lambda + k * lambda.ln() - ln_gamma(k + 1.0)
}

/// min over a grid of ln f(y) − (1+ε) ln f(x) for x ≥ m, |y − x| ≤ 2η x.
pub(crate) fn growth_ratio_min(lambda: f64, epsilon: f64, eta: f64, m: f64) -> f64 {
    let mut best = f64::INFINITY;
    let mut x = m;
    while x <= 400.0 {
        let lfx = ln_poisson(lambda, x.floor());
        let j0 = (x * (1.0 - 2.0 * eta)).floor().max(0.0) as i64;
        let j1 = (x * (1.0 + 2.0 * eta)).floor() as i64;
        let min_fy = (j0..=j1).map(|j| ln_poisson(lambda, j as f64)).fold(f64::INFINITY, f64::min);
        best = best.min(min_fy - (1.0 + epsilon) * lfx);
        x += 0.05;
    }
    best
}

fn cholesky(a: &[f64], d: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::invalid("covariance is not positive definite"));
                }
                l[i * d + i] = s.sqrt();
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    Ok(l)
}

fn invert_lower(l: &[f64], d: usize) -> Vec<f64> {
    let mut inv = vec![0.0; d * d];
    for col in 0..d {
        for i in col..d {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for k in col..i {
                s -= l[i * d + k] * inv[k * d + col];
            }
            inv[i * d + col] = s / l[i * d + i];
        }
    }
    inv
}

fn logistic_ln_pdf(x: f64) -> f64 {
    let t = -x.abs();
    t - 2.0 * t.exp().ln_1p()
}

impl Family {
    pub fn support(&self) -> Support {
        match self {
            Family::Uniform { lo, hi } | Family::Linear { lo, hi, .. } => Support::CompactInterval { a: *lo, b: *hi },
            Family::Normal { .. } | Family::DoubleGamma { .. } | Family::Logistic | Family::Stable(_) => {
                Support::FullSpace { dim: 1 }
            }
            Family::HyperExp { d, .. } | Family::NormalNd { d, .. } => Support::FullSpace { dim: *d },
            Family::Gamma { .. } | Family::Weibull { .. } | Family::LogNormal { .. } | Family::PoissonComb { .. } => {
                Support::HalfLine { r0: 0.0 }
            }
            Family::Pareto { .. } => Support::HalfLine { r0: 1.0 },
            Family::UniformBox { lo, hi } => Support::Box { lo: lo.clone(), hi: hi.clone() },
        }
    }

    pub fn tail_class(&self) -> TailClass {
        match self {
            Family::Uniform { .. } | Family::Linear { .. } | Family::UniformBox { .. } => TailClass::Compact,
            Family::Pareto { b } => TailClass::PowerLaw { index: *b },
            Family::Stable(s) => TailClass::PowerLaw { index: s.rho },
            _ => TailClass::Light,
        }
    }

    pub fn is_log_concave(&self) -> bool {
        match self {
            Family::Uniform { .. } | Family::Linear { .. } | Family::Normal { .. } | Family::Logistic => true,
            Family::NormalNd { .. } | Family::UniformBox { .. } => true,
            Family::Gamma { shape, .. } => *shape >= 1.0,
            Family::DoubleGamma { shape, .. } => *shape == 1.0,
            Family::Weibull { shape } => *shape >= 1.0,
            Family::HyperExp { b, c, .. } => *c == 0.0 && *b >= 1.0,
            Family::LogNormal { .. } | Family::Pareto { .. } | Family::PoissonComb { .. } | Family::Stable(_) => false,
        }
    }

    pub fn tail_criterion(&self) -> TailCriterion {
        let mut t = TailCriterion::default();
        match self {
            Family::Normal { mu, .. } => {
                if *mu == 0.0 {
                    t.radial_profile = Some(RadialProfile { norm: ProfileNorm::Mahalanobis, radius: 0.0 });
                }
                t.peak_constant = Some(1.0);
            }
            Family::NormalNd { .. } => {
                t.radial_profile = Some(RadialProfile { norm: ProfileNorm::Mahalanobis, radius: 0.0 });
                t.peak_constant = Some(1.0);
            }
            Family::Logistic | Family::Stable(_) => {
                t.radial_profile = Some(RadialProfile { norm: ProfileNorm::Euclidean, radius: 0.0 });
                t.peak_constant = Some(1.0);
            }
            Family::DoubleGamma { rate, shape } => {
                let radius = ((shape - 1.0) / rate).max(0.0);
                t.radial_profile = Some(RadialProfile { norm: ProfileNorm::Euclidean, radius });
                t.peak_constant = Some(1.0);
            }
            Family::HyperExp { a, b, c, .. } => {
                let radius = if *c > 0.0 { (c / (a * b)).powf(1.0 / b) } else { 0.0 };
                t.radial_profile = Some(RadialProfile { norm: ProfileNorm::Euclidean, radius });
                t.peak_constant = Some(1.0);
            }
            Family::Gamma { rate, shape } => {
                t.half_line_monotone_from = Some(((shape - 1.0) / rate).max(0.0));
                t.peak_constant = Some(0.5);
            }
            Family::Weibull { shape } => {
                let m = if *shape > 1.0 { ((shape - 1.0) / shape).powf(1.0 / shape) } else { 0.0 };
                t.half_line_monotone_from = Some(m);
                t.peak_constant = Some(0.5);
            }
            Family::LogNormal { mu, sigma } => {
                t.half_line_monotone_from = Some((mu - sigma * sigma).exp());
                t.peak_constant = Some(0.5);
            }
            Family::Pareto { .. } => {
                t.half_line_monotone_from = Some(1.0);
                t.peak_constant = Some(0.5);
            }
            Family::PoissonComb { growth, .. } => {
                t.growth_control = Some(*growth);
                t.peak_constant = Some(0.5);
            }
            Family::Uniform { .. } | Family::Linear { .. } | Family::UniformBox { .. } => {}
        }
        t
    }

    pub fn pdf(&self, x: &[f64]) -> f64 {
        match self {
            Family::UniformBox { lo, hi } => {
                let inside = x.iter().zip(lo.iter().zip(hi)).all(|(v, (l, h))| v >= l && v <= h);
                if inside {
                    1.0 / lo.iter().zip(hi).map(|(l, h)| h - l).product::<f64>()
                } else {
                    0.0
                }
            }
            _ => self.ln_pdf(x).exp(),
        }
    }

    pub fn ln_pdf(&self, x: &[f64]) -> f64 {
        match self {
            Family::NormalNd { d, inv_chol, ln_det_chol, .. } => {
                let q = mahalanobis_sq(inv_chol, *d, x);
                -0.5 * q - *d as f64 * LN_SQRT_2PI - ln_det_chol
            }
            Family::HyperExp { d, .. } if *d > 1 => {
                let u = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                self.radial_ln_h(u)
            }
            Family::UniformBox { .. } => self.pdf(x).ln(),
            _ => self.ln_pdf1(x[0]),
        }
    }

    pub fn mahalanobis(&self, x: &[f64]) -> f64 {
        match self {
            Family::NormalNd { d, inv_chol, .. } => mahalanobis_sq(inv_chol, *d, x).sqrt(),
            Family::Normal { mu, sigma } => (x[0] - mu).abs() / sigma,
            _ => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
        }
    }

    #[inline]
    pub fn pdf1(&self, x: f64) -> f64 {
        match self {
            Family::Uniform { lo, hi } => {
                if x >= *lo && x <= *hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            Family::Linear { lo, hi, c0, c1, z } => {
                if x >= *lo && x <= *hi {
                    (c0 + c1 * x) / z
                } else {
                    0.0
                }
            }
            Family::Normal { mu, sigma } => {
                let t = (x - mu) / sigma;
                crate::special::normal_pdf(t) / sigma
            }
            Family::Stable(s) => s.pdf(x),
            Family::PoissonComb { lambda, .. } => {
                if x < 0.0 {
                    0.0
                } else {
                    ln_poisson(*lambda, x.floor()).exp()
                }
            }
            _ => self.ln_pdf1(x).exp(),
        }
    }

    pub fn ln_pdf1(&self, x: f64) -> f64 {
        match self {
            Family::Uniform { .. } | Family::Linear { .. } | Family::Stable(_) => self.pdf1(x).ln(),
            Family::Normal { mu, sigma } => {
                let t = (x - mu) / sigma;
                -0.5 * t * t - LN_SQRT_2PI - sigma.ln()
            }
            Family::Gamma { rate, shape } => {
                if x <= 0.0 {
                    if x == 0.0 && *shape == 1.0 {
                        return rate.ln();
                    }
                    return if x == 0.0 && *shape < 1.0 { f64::INFINITY } else { f64::NEG_INFINITY };
                }
                shape * rate.ln() - ln_gamma(*shape) + (shape - 1.0) * x.ln() - rate * x
            }
            Family::DoubleGamma { rate, shape } => {
                let t = x.abs();
                shape * rate.ln() - (2.0f64).ln() - ln_gamma(*shape) + (shape - 1.0) * t.ln() - rate * t
            }
            Family::Weibull { shape } => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                shape.ln() + (shape - 1.0) * x.ln() - x.powf(*shape)
            }
            Family::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let t = (x.ln() - mu) / sigma;
                -0.5 * t * t - x.ln() - sigma.ln() - LN_SQRT_2PI
            }
            Family::Logistic => logistic_ln_pdf(x),
            Family::Pareto { b } => {
                if x < 1.0 {
                    return f64::NEG_INFINITY;
                }
                b.ln() - (b + 1.0) * x.ln()
            }
            Family::PoissonComb { lambda, .. } => {
                if x < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    ln_poisson(*lambda, x.floor())
                }
            }
            Family::HyperExp { .. } => self.radial_ln_h(x.abs()),
            Family::NormalNd { .. } | Family::UniformBox { .. } => self.ln_pdf(&[x]),
        }
    }

    pub fn radial_ln_h(&self, u: f64) -> f64 {
        match self {
            Family::HyperExp { a, b, c, ln_k, .. } => {
                if u == 0.0 && *c != 0.0 {
                    return if *c > 0.0 { f64::NEG_INFINITY } else { f64::INFINITY };
                }
                ln_k + c * u.ln() - a * u.powf(*b)
            }
            Family::Normal { sigma, .. } => -0.5 * u * u - LN_SQRT_2PI - sigma.ln(),
            Family::NormalNd { d, ln_det_chol, .. } => -0.5 * u * u - *d as f64 * LN_SQRT_2PI - ln_det_chol,
            _ => self.ln_pdf1(u),
        }
    }

    pub fn radial_h(&self, u: f64) -> f64 {
        self.radial_ln_h(u).exp()
    }

    /// Jacobian factor J with ∫ g(‖x‖₀) dx = J ∫_0^∞ u^{d−1} g(u) du.
    pub fn radial_jacobian(&self) -> Option<f64> {
        match self {
            Family::Normal { mu, sigma } if *mu == 0.0 => Some(2.0 * sigma),
            Family::NormalNd { d, ln_det_chol, .. } => Some(ln_det_chol.exp() * unit_sphere_area(*d)),
            Family::Logistic | Family::Stable(_) | Family::DoubleGamma { .. } => Some(2.0),
            Family::HyperExp { d, .. } => Some(unit_sphere_area(*d)),
            _ => None,
        }
    }

    pub fn cdf1(&self, x: f64) -> f64 {
        match self {
            Family::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Family::Linear { lo, hi, c0, c1, z } => {
                let t = x.clamp(*lo, *hi);
                ((c0 * (t - lo) + 0.5 * c1 * (t * t - lo * lo)) / z).clamp(0.0, 1.0)
            }
            Family::Normal { mu, sigma } => normal_cdf((x - mu) / sigma),
            Family::Gamma { rate, shape } => {
                if x <= 0.0 {
                    0.0
                } else {
                    gamma_lr(*shape, rate * x)
                }
            }
            Family::DoubleGamma { rate, shape } => {
                let h = 0.5 * gamma_ur(*shape, rate * x.abs());
                if x >= 0.0 {
                    1.0 - h
                } else {
                    h
                }
            }
            Family::Weibull { shape } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x.powf(*shape)).exp_m1()
                }
            }
            Family::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    normal_cdf((x.ln() - mu) / sigma)
                }
            }
            Family::Logistic => 1.0 / (1.0 + (-x).exp()),
            Family::Pareto { b } => {
                if x <= 1.0 {
                    0.0
                } else {
                    -(-b * x.ln()).exp_m1()
                }
            }
            Family::PoissonComb { lambda, .. } => {
                if x <= 0.0 {
                    return 0.0;
                }
                if x > *lambda + 1.0 {
                    return 1.0 - self.sf1(x);
                }
                let k = x.floor();
                let below: f64 = (0..k as u64).map(|j| ln_poisson(*lambda, j as f64).exp()).sum();
                (below + ln_poisson(*lambda, k).exp() * (x - k)).min(1.0)
            }
            Family::Stable(s) => s.cdf(x),
            Family::HyperExp { a, b, c, .. } => {
                let h = 0.5 * gamma_ur((c + 1.0) / b, a * x.abs().powf(*b));
                if x >= 0.0 {
                    1.0 - h
                } else {
                    h
                }
            }
            Family::NormalNd { .. } | Family::UniformBox { .. } => f64::NAN,
        }
    }

    pub fn sf1(&self, x: f64) -> f64 {
        match self {
            Family::Normal { mu, sigma } => normal_sf((x - mu) / sigma),
            Family::Gamma { rate, shape } => {
                if x <= 0.0 {
                    1.0
                } else {
                    gamma_ur(*shape, rate * x)
                }
            }
            Family::DoubleGamma { rate, shape } => {
                let h = 0.5 * gamma_ur(*shape, rate * x.abs());
                if x >= 0.0 {
                    h
                } else {
                    1.0 - h
                }
            }
            Family::Weibull { shape } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-x.powf(*shape)).exp()
                }
            }
            Family::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    1.0
                } else {
                    normal_sf((x.ln() - mu) / sigma)
                }
            }
            Family::Logistic => 1.0 / (1.0 + x.exp()),
            Family::Pareto { b } => {
                if x <= 1.0 {
                    1.0
                } else {
                    (-b * x.ln()).exp()
                }
            }
            Family::PoissonComb { lambda, .. } => {
                if x <= 0.0 {
                    return 1.0;
                }
                if x == f64::INFINITY {
                    return 0.0;
                }
                let k = x.floor();
                let pk = ln_poisson(*lambda, k).exp();
                let mut above = 0.0;
                let mut j = k + 1.0;
                loop {
                    let t = ln_poisson(*lambda, j).exp();
                    above += t;
                    if j > *lambda && t < 1e-18 * above.max(f64::MIN_POSITIVE) {
                        break;
                    }
                    if t == 0.0 && j > *lambda {
                        break;
                    }
                    j += 1.0;
                }
                above + pk * (k + 1.0 - x)
            }
            Family::Stable(s) => s.sf(x),
            Family::HyperExp { a, b, c, .. } => {
                let h = 0.5 * gamma_ur((c + 1.0) / b, a * x.abs().powf(*b));
                if x >= 0.0 {
                    h
                } else {
                    1.0 - h
                }
            }
            _ => 1.0 - self.cdf1(x),
        }
    }

    pub fn quantile1(&self, p: f64) -> f64 {
        match self {
            Family::Uniform { lo, hi } => lo + p * (hi - lo),
            Family::Linear { lo, c0, c1, z, .. } => {
                // c1/2 t² + c0 t − (p z + c0 lo + c1 lo²/2) = 0
                let rhs = p * z + c0 * lo + 0.5 * c1 * lo * lo;
                if c1.abs() < 1e-300 {
                    rhs / c0
                } else {
                    let disc = (c0 * c0 + 2.0 * c1 * rhs).max(0.0).sqrt();
                    // numerically stable root selection
                    2.0 * rhs / (c0 + disc)
                }
            }
            Family::Normal { mu, sigma } => mu + sigma * normal_quantile(p),
            Family::Weibull { shape } => (-(-p).ln_1p()).powf(1.0 / shape),
            Family::LogNormal { mu, sigma } => (mu + sigma * normal_quantile(p)).exp(),
            Family::Logistic => (p / (1.0 - p)).ln(),
            Family::Pareto { b } => (-(-p).ln_1p() / b).exp(),
            Family::Stable(s) if (s.rho - 1.0).abs() < 1e-12 => (PI * (p - 0.5)).tan(),
            Family::PoissonComb { lambda, .. } => {
                if p <= 0.0 {
                    return 0.0;
                }
                if p >= 1.0 {
                    return f64::INFINITY;
                }
                let mut acc = 0.0;
                let mut k = 0.0;
                loop {
                    let pk = ln_poisson(*lambda, k).exp();
                    if acc + pk >= p || pk == 0.0 && k > *lambda {
                        return k + ((p - acc) / pk).clamp(0.0, 1.0);
                    }
                    acc += pk;
                    k += 1.0;
                }
            }
            _ => self.numeric_quantile(p),
        }
    }

    /// Bisection on the cdf (or survival function in the upper half),
    /// polished by Newton steps.
    fn numeric_quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return self.support().interval().0;
        }
        if p >= 1.0 {
            return self.support().interval().1;
        }
        let upper = p > 0.5;
        let target = if upper { 1.0 - p } else { p };
        // residual is increasing in x
        let resid = |x: f64| if upper { target - self.sf1(x) } else { self.cdf1(x) - target };
        let (slo, shi) = self.support().interval();
        let c = self.center1();
        let s = self.scale();
        let mut lo = if slo.is_finite() { slo } else { c - s };
        let mut hi = if shi.is_finite() { shi } else { c + s };
        let mut step = s;
        while resid(lo) > 0.0 && !slo.is_finite() {
            step *= 2.0;
            lo = c - step;
        }
        step = s;
        while resid(hi) < 0.0 && !shi.is_finite() {
            step *= 2.0;
            hi = c + step;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if resid(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * (1.0 + mid.abs()) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn mean1(&self) -> Option<f64> {
        match self {
            Family::Uniform { lo, hi } => Some(0.5 * (lo + hi)),
            Family::Linear { lo, hi, c0, c1, z } => {
                Some((0.5 * c0 * (hi * hi - lo * lo) + c1 * (hi.powi(3) - lo.powi(3)) / 3.0) / z)
            }
            Family::Normal { mu, .. } => Some(*mu),
            Family::Gamma { rate, shape } => Some(shape / rate),
            Family::DoubleGamma { .. } | Family::Logistic => Some(0.0),
            Family::Weibull { shape } => Some(ln_gamma(1.0 + 1.0 / shape).exp()),
            Family::LogNormal { mu, sigma } => Some((mu + 0.5 * sigma * sigma).exp()),
            Family::Pareto { b } => Some(if *b > 1.0 { b / (b - 1.0) } else { f64::INFINITY }),
            Family::PoissonComb { lambda, .. } => Some(lambda + 0.5),
            Family::Stable(s) => {
                if s.rho > 1.0 {
                    Some(0.0)
                } else {
                    None
                }
            }
            Family::HyperExp { d, .. } => (*d == 1).then_some(0.0),
            Family::NormalNd { .. } | Family::UniformBox { .. } => None,
        }
    }

    pub fn center1(&self) -> f64 {
        match self {
            Family::Uniform { lo, hi } | Family::Linear { lo, hi, .. } => 0.5 * (lo + hi),
            Family::Normal { mu, .. } => *mu,
            Family::Gamma { rate, shape } => shape / rate,
            Family::Weibull { .. } | Family::Pareto { .. } => 1.0,
            Family::LogNormal { mu, .. } => mu.exp(),
            Family::PoissonComb { lambda, .. } => *lambda,
            _ => 0.0,
        }
    }

    pub fn scale(&self) -> f64 {
        match self {
            Family::Uniform { lo, hi } | Family::Linear { lo, hi, .. } => hi - lo,
            Family::Normal { sigma, .. } => *sigma,
            Family::Gamma { rate, shape } => shape.sqrt() / rate,
            Family::DoubleGamma { rate, shape } => shape.sqrt() / rate,
            Family::LogNormal { mu, .. } => mu.exp(),
            Family::PoissonComb { lambda, .. } => lambda.sqrt().max(1.0),
            Family::HyperExp { a, b, .. } => a.powf(-1.0 / b),
            Family::NormalNd { sigma, .. } => *sigma,
            Family::UniformBox { lo, hi } => lo.iter().zip(hi).map(|(l, h)| h - l).fold(0.0, f64::max),
            _ => 1.0,
        }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Family::DoubleGamma { .. } | Family::HyperExp { .. } => vec![0.0],
            Family::PoissonComb { lambda, .. } => {
                let kmax = (lambda + 12.0 * lambda.sqrt() + 30.0).ceil() as u64;
                (1..=kmax).map(|k| k as f64).collect()
            }
            _ => Vec::new(),
        }
    }

    pub fn singular_at(&self, x: f64) -> bool {
        if x != 0.0 {
            return false;
        }
        match self {
            Family::Gamma { shape, .. } | Family::DoubleGamma { shape, .. } => *shape < 1.0,
            Family::Weibull { shape } => *shape < 1.0,
            Family::HyperExp { c, .. } => *c < 0.0,
            _ => false,
        }
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) {
        match self {
            Family::Gamma { rate, shape } => {
                let g = GammaDist::new(*shape, 1.0 / rate).expect("validated parameters");
                out.push(g.sample(rng));
            }
            Family::DoubleGamma { rate, shape } => {
                let g = GammaDist::new(*shape, 1.0 / rate).expect("validated parameters");
                let v: f64 = g.sample(rng);
                out.push(if rng.random::<bool>() { v } else { -v });
            }
            Family::PoissonComb { lambda, .. } => {
                let n: f64 = Poisson::new(*lambda).expect("validated parameters").sample(rng);
                out.push(n + rng.random::<f64>());
            }
            Family::Stable(s) if (s.rho - 1.0).abs() > 1e-12 => out.push(s.sample(rng)),
            Family::HyperExp { d, a, b, c, .. } => {
                let g = GammaDist::new((c + *d as f64) / b, 1.0).expect("validated parameters");
                let radius = (g.sample(rng) / a).powf(1.0 / b);
                if *d == 1 {
                    out.push(if rng.random::<bool>() { radius } else { -radius });
                } else {
                    let dir: Vec<f64> = (0..*d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                    let n = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
                    out.extend(dir.iter().map(|v| radius * v / n));
                }
            }
            Family::NormalNd { d, chol, .. } => {
                let z: Vec<f64> = (0..*d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                for i in 0..*d {
                    out.push((0..=i).map(|k| chol[i * d + k] * z[k]).sum());
                }
            }
            Family::UniformBox { lo, hi } => {
                for (l, h) in lo.iter().zip(hi) {
                    out.push(l + (h - l) * rng.random::<f64>());
                }
            }
            // inverse-cdf method
            _ => {
                let mut u: f64 = rng.random();
                while u == 0.0 {
                    u = rng.random();
                }
                out.push(self.quantile1(u));
            }
        }
    }

    /// Closed-form ∫ f^θ dλ_d for the multi-dimensional families.
    pub fn power_integral_nd(&self, theta: f64) -> Result<f64> {
        match self {
            Family::NormalNd { d, ln_det_chol, .. } => {
                let d = *d as f64;
                Ok((-0.5 * d * theta.ln() + d * (1.0 - theta) * LN_SQRT_2PI + (1.0 - theta) * ln_det_chol).exp())
            }
            Family::UniformBox { lo, hi } => {
                let vol: f64 = lo.iter().zip(hi).map(|(l, h)| h - l).product();
                Ok(vol.powf(1.0 - theta))
            }
            Family::HyperExp { d, a, b, c, ln_k } => {
                let k = (theta * c + *d as f64) / b;
                if k <= 0.0 {
                    return Ok(f64::INFINITY);
                }
                Ok((theta * ln_k + unit_sphere_area(*d).ln() + ln_gamma(k) - b.ln() - k * (a * theta).ln()).exp())
            }
            _ => Err(Error::unsupported("closed-form power integral only for d >= 2 families")),
        }
    }
}

fn mahalanobis_sq(inv_chol: &[f64], d: usize, x: &[f64]) -> f64 {
    let mut q = 0.0;
    for i in 0..d {
        let y: f64 = (0..=i).map(|k| inv_chol[i * d + k] * x[k]).sum();
        q += y * y;
    }
    q
}
