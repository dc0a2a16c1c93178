use serde::{Deserialize, Serialize};

use crate::distributions::{Density, TailClass};
use crate::error::{Error, Result};
use crate::integrate::Improper;

/// Dilations c > 1 tried in the radial-tail test.
pub const C_GRID: [f64; 6] = [1.01, 1.05, 1.09, 1.1, 1.25, 1.5];

const THETA_STEPS: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    /// s ≤ r: the L^s rate follows from the L^r rate.
    NotRequired,
    /// Compact support.
    Cor1Applies,
    /// ∫f(cx)^{−s/(d+r)}dP < ∞; `c` is the largest dilation that passed.
    Cor3Applies { c: f64, half_line: bool },
    Cor4Applies { epsilon: f64 },
    /// s ≥ d + r: ϑ range for which the weighted integral is finite and
    /// the best rate exponent (s − ϑ)/d it yields.
    Supercritical { theta_min: f64, theta_max: f64, rate_exponent: f64 },
    None { reason: String },
}

impl Verdict {
    pub fn id(&self) -> &'static str {
        match self {
            Verdict::NotRequired => "not-required",
            Verdict::Cor1Applies => "cor1-applies",
            Verdict::Cor3Applies { .. } => "cor3-applies",
            Verdict::Cor4Applies { .. } => "cor4-applies",
            Verdict::Supercritical { .. } => "supercritical",
            Verdict::None { .. } => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub density: String,
    pub d: usize,
    pub r: f64,
    pub s: f64,
    pub verdict: Verdict,
    /// (c, integral) pairs of the dilation test; +∞ marks divergence.
    pub c_tests: Vec<(f64, f64)>,
    /// (ϑ, integral) pairs of the super-critical search.
    pub theta_tests: Vec<(f64, f64)>,
}

/// Decide which sufficient condition gives the n^{−s/d} rate in L^s for
/// L^r-optimal quantizers of `density`.
pub fn criterion_check(density: &Density, r: f64, s: f64) -> Result<CriterionReport> {
    if !(r > 0.0 && s > 0.0) {
        return Err(Error::invalid("r and s must be > 0"));
    }
    let d = density.dim();
    let df = d as f64;
    let mut rep = CriterionReport {
        density: density.id().to_string(),
        d,
        r,
        s,
        verdict: Verdict::NotRequired,
        c_tests: Vec::new(),
        theta_tests: Vec::new(),
    };
    if s <= r {
        return Ok(rep);
    }
    if let TailClass::PowerLaw { index } = density.tail_class() {
        if index <= r {
            rep.verdict = none(format!("no moment of order > r (tail index {index})"));
            return Ok(rep);
        }
    }
    let tail = density.tail().clone();
    if density.support().is_bounded() {
        rep.verdict = if s < df + r || density.is_lipschitz_compact() {
            Verdict::Cor1Applies
        } else {
            match density.power_integral_any(1.0 - s / (df + r)) {
                Ok(v) if v.is_finite() => Verdict::Cor1Applies,
                _ => none("∫f^{−s/(d+r)}dP diverges on the compact support".into()),
            }
        };
        return Ok(rep);
    }

    let radial = tail.radial_profile.is_some();
    let half_line = d == 1 && tail.half_line_monotone_from.is_some();
    if s >= df + r {
        let lo = s - (df + r);
        let mut finite = Vec::new();
        for k in 1..THETA_STEPS {
            let theta = lo + (s - lo) * k as f64 / THETA_STEPS as f64;
            let a = (s - theta) / (df + r);
            let v = if radial {
                C_GRID.iter().map(|&c| dilation_integral(density, c, a, theta)).fold(f64::INFINITY, f64::min)
            } else if let (Some(g), 1) = (tail.growth_control, d) {
                growth_integral(density, a * (1.0 + g.epsilon), theta)
            } else {
                rep.verdict = none("super-critical case needs a radial tail or growth control".into());
                return Ok(rep);
            };
            rep.theta_tests.push((theta, v));
            if v.is_finite() {
                finite.push(theta);
            }
        }
        rep.verdict = match (finite.first(), finite.last()) {
            (Some(&a), Some(&b)) => Verdict::Supercritical { theta_min: a, theta_max: b, rate_exponent: (s - a) / df },
            _ => none("the weighted integral diverges for every ϑ tried".into()),
        };
        return Ok(rep);
    }

    let a = s / (df + r);
    if radial || (half_line && s > 1.0 && s < 1.0 + r) {
        rep.c_tests = C_GRID.iter().map(|&c| (c, dilation_integral(density, c, a, 0.0))).collect();
        // finiteness for c implies finiteness for every c' in (1, c]
        if let Some(&(c, _)) = rep.c_tests.iter().rev().find(|t| t.1.is_finite()) {
            rep.verdict = Verdict::Cor3Applies { c, half_line: !radial };
            return Ok(rep);
        }
    }
    if let Some(g) = tail.growth_control {
        if d == 1 && s < (df + r) / (1.0 + g.epsilon) && growth_integral(density, a * (1.0 + g.epsilon), 0.0).is_finite() {
            rep.verdict = Verdict::Cor4Applies { epsilon: g.epsilon };
            return Ok(rep);
        }
    }
    rep.verdict = if radial || half_line || tail.growth_control.is_some() {
        none("the tail integrals diverge".into())
    } else {
        none("no tail metadata for this density".into())
    };
    Ok(rep)
}

fn none(reason: String) -> Verdict {
    Verdict::None { reason }
}

/// ∫ f(cx)^{−a}‖x‖^ϑ dP(x)
fn dilation_integral(density: &Density, c: f64, a: f64, theta: f64) -> f64 {
    if density.dim() == 1 {
        density
            .log_space_expectation(|x| -a * density.ln_pdf1(c * x) + ln_weight(theta, x.abs()))
            .value()
    } else {
        let g = |u: f64| (density.radial_ln_h(u) - a * density.radial_ln_h(c * u) + ln_weight(theta, u)).exp();
        density.radial_integral(g).map(|i: Improper| i.value()).unwrap_or(f64::INFINITY)
    }
}

/// ∫ f(x)^{−a}|x|^ϑ dP(x), 1-D.
fn growth_integral(density: &Density, a: f64, theta: f64) -> f64 {
    density
        .log_space_expectation(|x| -a * density.ln_pdf1(x) + ln_weight(theta, x.abs()))
        .value()
}

fn ln_weight(theta: f64, u: f64) -> f64 {
    if theta == 0.0 {
        0.0
    } else {
        theta * u.ln()
    }
}
