//! Catalog of absolutely continuous probability laws.
//!
//! Every [`Density`] carries its pdf, support descriptor, a seeded sampler
//! and the tail metadata consumed by the rate criteria in
//! [`crate::mismatch`]. One-dimensional members also expose cdf, survival
//! function and quantile.

mod family;
mod spec;
mod stable;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{integrate_improper, Improper, Integral, QuadConfig};
use crate::rng;

pub(crate) use family::Family;
pub use spec::{catalog_listing, parse_density, CATALOG};
pub use stable::Stable;

/// Where the law lives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Support {
    CompactInterval { a: f64, b: f64 },
    HalfLine { r0: f64 },
    FullSpace { dim: usize },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl Support {
    pub fn compact_interval(a: f64, b: f64) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::invalid(format!("compact interval requires finite a < b, got [{a}, {b}]")));
        }
        Ok(Support::CompactInterval { a, b })
    }

    pub fn dim(&self) -> usize {
        match self {
            Support::CompactInterval { .. } | Support::HalfLine { .. } => 1,
            Support::FullSpace { dim } => *dim,
            Support::Box { lo, .. } => lo.len(),
            Support::Ball { center, .. } => center.len(),
        }
    }

    /// Hull of a one-dimensional support.
    pub fn interval(&self) -> (f64, f64) {
        match self {
            Support::CompactInterval { a, b } => (*a, *b),
            Support::HalfLine { r0 } => (*r0, f64::INFINITY),
            Support::FullSpace { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Support::Box { lo, hi } => (lo[0], hi[0]),
            Support::Ball { center, radius } => (center[0] - radius, center[0] + radius),
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, Support::CompactInterval { .. } | Support::Box { .. } | Support::Ball { .. })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Support::CompactInterval { .. } => "compact-interval",
            Support::HalfLine { .. } => "half-line",
            Support::FullSpace { .. } => "full-space",
            Support::Box { .. } => "box",
            Support::Ball { .. } => "ball",
        }
    }
}

/// Norm in which a radial tail profile is expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileNorm {
    Euclidean,
    /// ‖Σ^{-1/2}x‖ for a Gaussian with covariance Σ.
    Mahalanobis,
}

/// f(x) = h(‖x‖₀) outside the ball of radius `radius`, with h nonincreasing
/// there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub norm: ProfileNorm,
    pub radius: f64,
}

/// Local growth control: f(y) ≥ C f(x)^{1+ε} whenever ‖x‖ ≥ M and
/// ‖y − x‖ ≤ 2η‖x‖.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthControl {
    pub epsilon: f64,
    pub eta: f64,
    pub m: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TailCriterion {
    pub radial_profile: Option<RadialProfile>,
    /// Support is a half-line [R₀, ∞) and f is nonincreasing on (R₀', ∞).
    pub half_line_monotone_from: Option<f64>,
    pub peak_constant: Option<f64>,
    pub growth_control: Option<GrowthControl>,
}

/// Coarse tail class used for symbolic finiteness decisions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailClass {
    Compact,
    /// Every polynomial moment and every power integral ∫f^θ (θ > 0) is finite.
    Light,
    /// f(x) ≍ |x|^{-(index+1)} at infinity.
    PowerLaw { index: f64 },
}

/// Value of a moment: exact quadrature in 1-D, Monte-Carlo in higher
/// dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moment {
    pub value: f64,
    /// Monte-Carlo standard error; `None` for quadrature results.
    pub std_error: Option<f64>,
    pub converged: bool,
}

/// A probability law P = f·λ_d. Immutable once built.
#[derive(Debug, Clone)]
pub struct Density {
    id: String,
    pub(crate) family: Family,
    support: Support,
    tail: TailCriterion,
}

impl Density {
    pub(crate) fn from_family(id: String, family: Family) -> Self {
        let support = family.support();
        let tail = family.tail_criterion();
        Density { id, family, support, tail }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.support.dim()
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    pub fn tail(&self) -> &TailCriterion {
        &self.tail
    }

    pub fn tail_class(&self) -> TailClass {
        self.family.tail_class()
    }

    /// The density is Lipschitz on a compact interval and bounded away from
    /// zero there.
    pub fn is_lipschitz_compact(&self) -> bool {
        matches!(self.family, Family::Uniform { .. } | Family::Linear { .. })
    }

    /// Log-concave laws have a unique stationary quantizer in 1-D.
    pub fn is_log_concave(&self) -> bool {
        self.family.is_log_concave()
    }

    // ---- catalog constructors -------------------------------------------------

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        Support::compact_interval(a, b)?;
        Ok(Self::from_family(format!("uniform(a={},b={})", a, b), Family::Uniform { lo: a, hi: b }))
    }

    pub fn uniform01() -> Self {
        Self::from_family("uniform(a=0,b=1)".into(), Family::Uniform { lo: 0.0, hi: 1.0 })
    }

    pub fn normal(mu: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::invalid("normal: sigma must be > 0"));
        }
        Ok(Self::from_family(format!("normal(d=1,mu={mu},sigma={sigma})"), Family::Normal { mu, sigma }))
    }

    pub fn std_normal() -> Self {
        Self::from_family("normal(d=1,mu=0,sigma=1)".into(), Family::Normal { mu: 0.0, sigma: 1.0 })
    }

    /// Centered Gaussian in R^d with covariance σ²((1−ρ)I + ρ𝟙𝟙ᵀ).
    pub fn normal_nd(d: usize, sigma: f64, rho: f64) -> Result<Self> {
        family::normal_nd(d, sigma, rho)
    }

    pub fn uniform_box(d: usize, a: f64, b: f64) -> Result<Self> {
        if d == 0 || !(a < b) {
            return Err(Error::invalid("uniformbox: need d >= 1 and a < b"));
        }
        if d == 1 {
            return Self::uniform(a, b);
        }
        Ok(Self::from_family(
            format!("uniformbox(d={d},a={a},b={b})"),
            Family::UniformBox { lo: vec![a; d], hi: vec![b; d] },
        ))
    }

    /// f(x) ∝ ‖x‖^c exp(−a‖x‖^b) on R^d, Euclidean norm.
    pub fn hyper_exponential(d: usize, a: f64, b: f64, c: f64) -> Result<Self> {
        family::hyper_exponential(d, a, b, c)
    }

    /// f(x) = a^b/Γ(b) x^{b−1} e^{−ax} on (0, ∞): `a` is the rate, `b` the shape.
    pub fn gamma(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::invalid("gamma: a, b must be > 0"));
        }
        Ok(Self::from_family(format!("gamma(a={a},b={b})"), Family::Gamma { rate: a, shape: b }))
    }

    /// f(x) = a^c/(2Γ(c)) |x|^{c−1} e^{−a|x|}.
    pub fn double_gamma(a: f64, c: f64) -> Result<Self> {
        if !(a > 0.0 && c > 0.0) {
            return Err(Error::invalid("doublegamma: a, c must be > 0"));
        }
        Ok(Self::from_family(format!("doublegamma(a={a},c={c})"), Family::DoubleGamma { rate: a, shape: c }))
    }

    /// f(x) = b x^{b−1} exp(−x^b) on (0, ∞).
    pub fn weibull(b: f64) -> Result<Self> {
        if !(b > 0.0) {
            return Err(Error::invalid("weibull: b must be > 0"));
        }
        Ok(Self::from_family(format!("weibull(b={b})"), Family::Weibull { shape: b }))
    }

    pub fn lognormal(a: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::invalid("lognormal: sigma must be > 0"));
        }
        Ok(Self::from_family(format!("lognormal(a={a},sigma={sigma})"), Family::LogNormal { mu: a, sigma }))
    }

    pub fn logistic() -> Self {
        Self::from_family("logistic()".into(), Family::Logistic)
    }

    /// f(x) = b x^{−(b+1)} on (1, ∞).
    pub fn pareto(b: f64) -> Result<Self> {
        if !(b > 0.0) {
            return Err(Error::invalid("pareto: b must be > 0"));
        }
        Ok(Self::from_family(format!("pareto(b={b})"), Family::Pareto { b }))
    }

    /// Law of N + Y_N with N ~ Poisson(λ) and Y ~ U([0,1]).
    pub fn poisson_comb(lambda: f64) -> Result<Self> {
        family::poisson_comb(lambda)
    }

    /// Symmetric ρ-stable law, ρ ∈ {0.5, 1, 1.5}.
    pub fn stable(rho: f64) -> Result<Self> {
        if ![0.5, 1.0, 1.5].iter().any(|r| (r - rho).abs() < 1e-12) {
            return Err(Error::invalid(format!("stable: rho must be one of 0.5, 1, 1.5 (got {rho})")));
        }
        Ok(Self::from_family(format!("stable(rho={rho})"), Family::Stable(Stable::new(rho))))
    }

    /// Density proportional to c0 + c1·x on [a, b].
    pub fn linear(a: f64, b: f64, c0: f64, c1: f64) -> Result<Self> {
        Support::compact_interval(a, b)?;
        let (fa, fb) = (c0 + c1 * a, c0 + c1 * b);
        if !(fa > 0.0 && fb > 0.0) {
            return Err(Error::invalid("linear: c0 + c1·x must be positive on [a, b]"));
        }
        let z = c0 * (b - a) + 0.5 * c1 * (b * b - a * a);
        Ok(Self::from_family(
            format!("linear(a={a},b={b},c0={c0},c1={c1})"),
            Family::Linear { lo: a, hi: b, c0, c1, z },
        ))
    }

    // ---- evaluation -----------------------------------------------------------

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    /// f(x).
    pub fn pdf(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.family.pdf(x))
    }

    /// ln f(x) (−∞ outside the support).
    pub fn ln_pdf(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.family.ln_pdf(x))
    }

    /// Fast path for 1-D laws; callers guarantee `dim() == 1`.
    #[inline]
    pub(crate) fn pdf1(&self, x: f64) -> f64 {
        self.family.pdf1(x)
    }

    #[inline]
    pub(crate) fn ln_pdf1(&self, x: f64) -> f64 {
        self.family.ln_pdf1(x)
    }

    fn require_1d(&self, what: &str) -> Result<()> {
        if self.dim() != 1 {
            return Err(Error::unsupported(format!("{what} is only available for 1-D laws (dim = {})", self.dim())));
        }
        Ok(())
    }

    /// P((−∞, x]).
    pub fn cdf(&self, x: f64) -> Result<f64> {
        self.require_1d("cdf")?;
        Ok(self.family.cdf1(x))
    }

    /// P((x, ∞)), accurate in the upper tail.
    pub fn sf(&self, x: f64) -> Result<f64> {
        self.require_1d("sf")?;
        Ok(self.family.sf1(x))
    }

    /// Mass of the interval [lo, hi], computed from whichever tail is
    /// smaller to avoid cancellation.
    pub fn interval_mass(&self, lo: f64, hi: f64) -> Result<f64> {
        self.require_1d("interval mass")?;
        Ok(self.mass1(lo, hi))
    }

    pub(crate) fn mass1(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let (cl, ch) = (self.family.cdf1(lo), self.family.cdf1(hi));
        if ch < 0.5 {
            (ch - cl).max(0.0)
        } else {
            (self.family.sf1(lo) - self.family.sf1(hi)).max(0.0)
        }
    }

    /// Inverse distribution function.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        self.require_1d("quantile")?;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("quantile level {p} outside [0, 1]")));
        }
        Ok(self.family.quantile1(p))
    }

    /// E X for 1-D laws when it exists in closed form.
    pub fn mean(&self) -> Option<f64> {
        self.family.mean1()
    }

    /// A location inside the bulk of the law (1-D), used to anchor
    /// integration.
    pub(crate) fn center1(&self) -> f64 {
        self.family.center1()
    }

    /// Characteristic length of the law.
    pub fn scale(&self) -> f64 {
        self.family.scale()
    }

    /// Evaluate the radial tail profile h(u) if one is declared.
    pub fn radial_profile_value(&self, u: f64) -> Option<f64> {
        self.tail.radial_profile.map(|_| self.family.radial_h(u))
    }

    /// ‖x‖₀ for the declared radial profile norm.
    pub fn profile_norm(&self, x: &[f64]) -> Option<f64> {
        let p = self.tail.radial_profile?;
        Some(match p.norm {
            ProfileNorm::Euclidean => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            ProfileNorm::Mahalanobis => self.family.mahalanobis(x),
        })
    }

    // ---- sampling -------------------------------------------------------------

    /// `count` i.i.d. draws, deterministic given `seed`. Points are returned
    /// flat in row-major order (`count × dim`).
    pub fn sample(&self, seed: u64, count: usize) -> Result<Vec<f64>> {
        if count == 0 {
            return Err(Error::invalid("sample count must be >= 1"));
        }
        let mut rng = rng::seeded(seed);
        Ok(self.sample_with(&mut rng, count))
    }

    /// Draw `count` points from an externally managed stream.
    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<f64> {
        let d = self.dim();
        let mut out = Vec::with_capacity(count * d);
        for _ in 0..count {
            self.family.sample_into(rng, &mut out);
        }
        out
    }

    // ---- integrals ------------------------------------------------------------

    /// Breakpoints of a 1-D pdf strictly inside (a, b).
    fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        self.family.breakpoints().into_iter().filter(|&x| x > a && x < b).collect()
    }

    /// ∫_a^b g(x) dx restricted to the support hull, split at the pdf's
    /// breakpoints. `probe_ends` approaches finite ends dyadically so that
    /// endpoint singularities of `g` are detected.
    pub(crate) fn integrate_over<G: Fn(f64) -> f64>(
        &self,
        g: G,
        a: f64,
        b: f64,
        probe_ends: bool,
        cfg: &QuadConfig,
    ) -> Improper {
        let (slo, shi) = self.support.interval();
        let lo = a.max(slo);
        let hi = b.min(shi);
        if !(lo < hi) {
            return Improper::Finite(Integral { value: 0.0, abs_error: 0.0, converged: true, evaluations: 0 });
        }
        let mut cuts = vec![lo];
        cuts.extend(self.breakpoints(lo, hi));
        cuts.push(hi);
        let scale = self.scale();
        let center = self.center1();
        let mut total = Integral { value: 0.0, abs_error: 0.0, converged: true, evaluations: 0 };
        let n_seg = cuts.len() - 1;
        for (i, w) in cuts.windows(2).enumerate() {
            let (s0, s1) = (w[0], w[1]);
            // only the outermost segments may be unbounded or carry a
            // singular endpoint of the support
            let probe = probe_ends && (i == 0 || i + 1 == n_seg || self.family.singular_at(s0) || self.family.singular_at(s1));
            let c = if s0.is_finite() && s1.is_finite() {
                0.5 * (s0 + s1)
            } else if s0.is_finite() {
                s0.max(center)
            } else if s1.is_finite() {
                s1.min(center)
            } else {
                center
            };
            let piece = integrate_improper(&g, s0, s1, c, scale, probe, cfg);
            match piece {
                Improper::Finite(p) => {
                    total.value += p.value;
                    total.abs_error += p.abs_error;
                    total.converged &= p.converged;
                    total.evaluations += p.evaluations;
                }
                Improper::Divergent => return Improper::Divergent,
            }
        }
        Improper::Finite(total)
    }

    /// ∫_a^b h(x) f(x) dx for a 1-D law.
    pub(crate) fn expect_over<H: Fn(f64) -> f64>(&self, h: H, a: f64, b: f64, cfg: &QuadConfig) -> Integral {
        match self.integrate_over(|x| h(x) * self.pdf1(x), a, b, false, cfg) {
            Improper::Finite(i) => i,
            Improper::Divergent => Integral { value: f64::INFINITY, abs_error: f64::INFINITY, converged: false, evaluations: 0 },
        }
    }

    /// ∫ f dλ_d (should be 1).
    pub fn total_mass(&self) -> Result<f64> {
        if self.dim() == 1 {
            let cfg = QuadConfig::default();
            return Ok(self.integrate_over(|x| self.pdf1(x), f64::NEG_INFINITY, f64::INFINITY, true, &cfg).value());
        }
        self.family.power_integral_nd(1.0)
    }

    /// E‖X‖^p. Returns +∞ when the tail makes the moment diverge.
    pub fn moment(&self, p: f64) -> Result<Moment> {
        if !(p > 0.0) {
            return Err(Error::invalid(format!("moment order must be > 0 (got {p})")));
        }
        if let TailClass::PowerLaw { index } = self.tail_class() {
            if p >= index {
                return Ok(Moment { value: f64::INFINITY, std_error: None, converged: true });
            }
        }
        if self.dim() == 1 {
            let cfg = QuadConfig::default();
            let r = self.integrate_over(|x| x.abs().powf(p) * self.pdf1(x), f64::NEG_INFINITY, f64::INFINITY, true, &cfg);
            return Ok(match r {
                Improper::Finite(i) => Moment { value: i.value, std_error: None, converged: i.converged },
                Improper::Divergent => Moment { value: f64::INFINITY, std_error: None, converged: true },
            });
        }
        Ok(self.mc_moment(p, 200_000, 0x6d6f6d))
    }

    /// Monte-Carlo estimate of E‖X‖^p (Euclidean norm) with its standard
    /// error.
    pub fn mc_moment(&self, p: f64, samples: usize, seed: u64) -> Moment {
        use rayon::prelude::*;
        let d = self.dim();
        let parts: Vec<(f64, f64, usize)> = rng::batches(samples)
            .into_par_iter()
            .map(|(k, m)| {
                let mut r = rng::stream(seed, k);
                let pts = self.sample_with(&mut r, m);
                let mut s = 0.0;
                let mut s2 = 0.0;
                for x in pts.chunks_exact(d) {
                    let v = x.iter().map(|t| t * t).sum::<f64>().sqrt().powf(p);
                    s += v;
                    s2 += v * v;
                }
                (s, s2, m)
            })
            .collect();
        let (s, s2, m) = parts.iter().fold((0.0, 0.0, 0usize), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
        let mean = s / m as f64;
        let var = (s2 / m as f64 - mean * mean).max(0.0);
        Moment { value: mean, std_error: Some((var / m as f64).sqrt()), converged: true }
    }

    /// ∫_{f>0} f^θ dλ_d for θ ∈ (0, 1]; +∞ when the integral diverges.
    pub fn power_integral(&self, theta: f64) -> Result<f64> {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::invalid(format!("power integral exponent must lie in (0, 1] (got {theta})")));
        }
        self.power_integral_any(theta)
    }

    /// ∫_{f>0} f^θ dλ_d for any real θ (θ ≤ 0 is finite only on supports of
    /// finite Lebesgue measure).
    pub fn power_integral_any(&self, theta: f64) -> Result<f64> {
        if theta <= 0.0 && !self.support.is_bounded() {
            return Ok(f64::INFINITY);
        }
        if let TailClass::PowerLaw { index } = self.tail_class() {
            if theta * (index + 1.0) <= 1.0 {
                return Ok(f64::INFINITY);
            }
        }
        if self.dim() > 1 {
            return self.family.power_integral_nd(theta);
        }
        let cfg = QuadConfig::default();
        let r = self.integrate_over(
            |x| {
                let l = self.ln_pdf1(x);
                if l == f64::NEG_INFINITY {
                    0.0
                } else {
                    (theta * l).exp()
                }
            },
            f64::NEG_INFINITY,
            f64::INFINITY,
            true,
            &cfg,
        );
        Ok(r.value())
    }

    /// ∫ g(x) dP(x) for a nonnegative integrand given through its logarithm
    /// (1-D), with divergence detection. Used by the tail criteria, whose
    /// integrands overflow in linear scale.
    pub fn log_space_expectation<G: Fn(f64) -> f64>(&self, ln_g: G) -> Improper {
        let cfg = QuadConfig::default().with_abs_tol(1e-12).with_rel_tol(1e-9);
        self.integrate_over(
            |x| {
                let lf = self.ln_pdf1(x);
                if lf == f64::NEG_INFINITY {
                    0.0
                } else {
                    (ln_g(x) + lf).exp()
                }
            },
            f64::NEG_INFINITY,
            f64::INFINITY,
            true,
            &cfg,
        )
    }

    /// Radial integral ∫ g(‖x‖₀) dλ_d for laws with a radial profile in
    /// d ≥ 1: reduces to a 1-D integral over the radius.
    pub(crate) fn radial_integral<G: Fn(f64) -> f64>(&self, g: G) -> Option<Improper> {
        let jac = self.family.radial_jacobian()?;
        let d = self.dim() as i32;
        let cfg = QuadConfig::default().with_abs_tol(1e-12).with_rel_tol(1e-9);
        Some(
            match integrate_improper(|u: f64| if u <= 0.0 { 0.0 } else { jac * u.powi(d - 1) * g(u) }, 0.0, f64::INFINITY, 1.0, 1.0, true, &cfg) {
                Improper::Finite(i) => Improper::Finite(i),
                Improper::Divergent => Improper::Divergent,
            },
        )
    }

    /// ln f as a function of the profile radius u (radial laws only).
    pub(crate) fn radial_ln_h(&self, u: f64) -> f64 {
        self.family.radial_ln_h(u)
    }

    /// P(B(x, ρ)) for 1-D laws.
    pub fn ball_mass1(&self, x: f64, radius: f64) -> f64 {
        self.mass1(x - radius, x + radius)
    }
}

impl std::fmt::Display for Density {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.id)
    }
}

#[cfg(test)]
mod tests;
